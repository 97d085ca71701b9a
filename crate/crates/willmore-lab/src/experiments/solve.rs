//! The `solve` command: a single constrained-flow solve, or a continuation
//! sweep when the config carries at least three radii.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, surface_to_json, CsvTable};
use crate::solver::{continuation, solve_acw, SolverConfig};
use crate::sphere::{build_chart, harmonic_field, ScalarField};
use crate::surface::GraphSurface;
use crate::svg::{line_plot, Series};

use super::{ArtifactWriter, Command, ExperimentConfig, RunArtifact};

/// Default initial data: a 2 percent l = 2 bump.
pub fn l2_bump(chart: &std::sync::Arc<crate::sphere::SphereChart>, rel: f64) -> ScalarField {
    let y20 = harmonic_field(chart, 2, 0);
    let scale = rel * chart.lambda() / y20.max_abs();
    ScalarField::new(
        chart.clone(),
        y20.values.iter().map(|v| v * scale).collect(),
    )
}

pub fn cmd_solve(config: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifact> {
    let solver_cfg: SolverConfig = config
        .solver
        .clone()
        .ok_or_else(|| Error::Config("solve needs a [solver] block".into()))?;
    let mut writer = ArtifactWriter::new(Command::Solve, config, out_dir)?;

    if config.sweep.radii.len() >= 3 {
        writer.document_table(
            "continuation.csv",
            &[
                ("chart_radius", "Euclidean radius of the centered chart"),
                ("area_radius", "sqrt(|Sigma| / 4 pi) in the ambient metric"),
                ("kappa", "Lagrange parameter of the converged surface"),
                ("hawking_mass", "Hawking mass"),
                ("energy", "int H^2 dmu"),
                ("residual_max", "max |W| at convergence"),
                ("proj0_h", "mean of H over the chart sphere"),
                ("proj_perp_h_max", "max norm of the mean-free part of H"),
                ("iterations", "accepted flow steps"),
            ],
        );
        writer.write_manifest()?;

        let rows = continuation(
            &config.metric,
            &config.sweep.radii,
            config.band_limit,
            &solver_cfg,
            |chart| l2_bump(chart, 0.02),
        )?;
        let mut table = CsvTable::new(
            "continuation",
            &[
                "chart_radius",
                "area_radius",
                "kappa",
                "hawking_mass",
                "energy",
                "residual_max",
                "proj0_h",
                "proj_perp_h_max",
                "iterations",
            ],
        );
        let mut failures = 0;
        let mut kappa_points = Vec::new();
        for (k, row) in rows.iter().enumerate() {
            match row {
                Ok(r) => {
                    table.push_row(vec![
                        fmt_f64(r.chart_radius),
                        fmt_f64(r.area_radius),
                        fmt_f64(r.kappa),
                        fmt_f64(r.hawking_mass),
                        fmt_f64(r.energy),
                        fmt_f64(r.residual_max),
                        fmt_f64(r.proj0_h),
                        fmt_f64(r.proj_perp_h_max),
                        r.iterations.to_string(),
                    ]);
                    kappa_points.push((r.chart_radius, r.kappa));
                }
                Err(e) => {
                    failures += 1;
                    writer.note(format!(
                        "entry {k} (radius {}) failed: {e}",
                        config.sweep.radii[k]
                    ));
                }
            }
        }
        writer.write_table(&table)?;
        let plot = writer.plot_path("kappa_vs_radius.svg");
        line_plot(
            &plot,
            "Lagrange parameter along the sweep",
            "chart radius",
            "kappa",
            &[Series {
                label: "kappa",
                points: kappa_points,
            }],
            true,
            true,
        )?;
        writer.finish(failures)
    } else {
        writer.document_table(
            "bundle.csv",
            &[
                ("node", "grid node index (theta-major)"),
                ("mean_curvature", "H at the node"),
                ("tracefree_sq", "|hring|^2 at the node"),
                ("dmu", "quadrature weight of the node"),
            ],
        );
        writer.document_table(
            "solve_trace.csv",
            &[
                ("iteration", "accepted step index"),
                ("residual", "max |W| before the step"),
                ("energy", "int H^2 dmu after the step"),
                ("area", "|Sigma| after the area projection"),
                ("kappa", "Lagrange estimate at the step"),
                ("max_slope", "max |u|/lambda + |grad u|"),
                ("dt", "time step used"),
            ],
        );
        writer.write_manifest()?;

        let radius = match solver_cfg.target {
            crate::solver::AreaTarget::Radius(r) => r,
            crate::solver::AreaTarget::Area(a) => (a / (4.0 * std::f64::consts::PI)).sqrt(),
        };
        let chart = build_chart(nalgebra::Vector3::zeros(), radius, config.band_limit)?;
        let initial = GraphSurface::new(chart.clone(), l2_bump(&chart, 0.02));
        let (sol, failures) = match solve_acw(&config.metric, &initial, &solver_cfg) {
            Ok(sol) => (sol, 0),
            Err(Error::MaxIterations { best, residual, .. }) => {
                writer.note(format!(
                    "solver hit the iteration cap with residual {residual:.3e}; best-so-far recorded"
                ));
                (*best, 1)
            }
            Err(e) => return Err(e),
        };
        let mut table = CsvTable::new(
            "solve_trace",
            &[
                "iteration",
                "residual",
                "energy",
                "area",
                "kappa",
                "max_slope",
                "dt",
            ],
        );
        for row in &sol.trace.rows {
            table.push_row(vec![
                row.iteration.to_string(),
                fmt_f64(row.residual),
                fmt_f64(row.energy),
                fmt_f64(row.area),
                fmt_f64(row.kappa),
                fmt_f64(row.max_slope),
                fmt_f64(row.dt),
            ]);
        }
        writer.write_table(&table)?;
        let bundle = crate::surface::geometry_bundle(&sol.surface, &config.metric)?;
        let mut bundle_table = crate::io::bundle_to_csv(&bundle);
        bundle_table.name = "bundle".into();
        writer.write_table(&bundle_table)?;
        let json = serde_json::to_string_pretty(&surface_to_json(&sol.surface))
            .map_err(|e| Error::Config(format!("surface dump: {e}")))?;
        writer.write_text("surface.json", &json)?;
        let report = serde_json::to_string_pretty(&sol.report)
            .map_err(|e| Error::Config(format!("report dump: {e}")))?;
        writer.write_text("report.json", &report)?;
        let plot = writer.plot_path("residual_vs_iteration.svg");
        line_plot(
            &plot,
            "flow residual",
            "iteration",
            "max |W|",
            &[Series {
                label: "residual",
                points: sol
                    .trace
                    .rows
                    .iter()
                    .map(|r| (r.iteration as f64, r.residual))
                    .collect(),
            }],
            false,
            true,
        )?;
        writer.finish(failures)
    }
}
