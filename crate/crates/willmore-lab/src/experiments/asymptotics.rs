//! The `asymptotics` command: decompose the mean curvature of a family of
//! translated spheres into its chart mean and mean-free part, regress the
//! mean-free part against `lambda^{-1} |x|^{-1}`, and record the Lagrange
//! parameter decay.

use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::functionals::lagrange_estimate;
use crate::io::{fmt_f64, CsvTable};
use crate::metrics::MetricSpec;
use crate::solver::{solve_acw, AreaTarget, SolverConfig};
use crate::sphere::build_chart;
use crate::surface::{geometry_bundle, GraphSurface};
use crate::svg::{line_plot, Series};

use super::{ArtifactWriter, Command, ExperimentConfig, RunArtifact, SurfaceFamily};

#[derive(Clone, Copy, Debug)]
pub struct FitRow {
    pub lambda: f64,
    pub rho: f64,
    /// least-squares coefficient of `lambda^{-1} |x|^{-1}` in the mean-free
    /// part of H over the chart sphere
    pub fitted_coefficient: f64,
    /// relative L2 residual of that one-basis fit
    pub fit_residual_rel: f64,
    pub proj0_h: f64,
    pub proj_perp_h_max: f64,
    pub kappa: f64,
    pub degenerate: bool,
}

/// Build the surface for one sweep entry and fit its mean-free H.
pub fn h_expansion_fit(
    spec: &MetricSpec,
    offset: f64,
    lambda: f64,
    band_limit: usize,
    family: SurfaceFamily,
    solver: Option<&SolverConfig>,
) -> Result<FitRow> {
    let xi = Vector3::new(0.0, 0.0, offset);
    let surface = match family {
        SurfaceFamily::Round => {
            let chart = build_chart(xi, lambda, band_limit)?;
            GraphSurface::round(&chart)
        }
        SurfaceFamily::Solved => {
            let chart = build_chart(xi, lambda, band_limit)?;
            let mut cfg = solver.cloned().unwrap_or(SolverConfig {
                target: AreaTarget::Radius(lambda),
                dt: 1.0,
                c_bi: 2.0,
                max_iterations: 400,
                tolerance: 1e-8,
                trust_region: 0.9,
            });
            cfg.target = AreaTarget::Radius(lambda);
            let initial = GraphSurface::round(&chart);
            match solve_acw(spec, &initial, &cfg) {
                Ok(sol) => sol.surface,
                Err(Error::MaxIterations { best, .. }) => best.surface,
                Err(e) => return Err(e),
            }
        }
    };
    let bundle = geometry_bundle(&surface, spec)?;
    let kappa = lagrange_estimate(&bundle)?;
    let chart = &surface.chart;

    // chart-measure statistics
    let mut area = 0.0;
    let mut mean_h = 0.0;
    let mut mean_b = 0.0;
    for i in 0..chart.n_theta() {
        let w = chart.weight(i);
        for j in 0..chart.n_phi() {
            let n = chart.node(i, j);
            area += w;
            mean_h += w * bundle.mean_h[n];
            mean_b += w / (lambda * bundle.pos[n].norm());
        }
    }
    mean_h /= area;
    mean_b /= area;
    let mut hb = 0.0;
    let mut bb = 0.0;
    let mut hh = 0.0;
    let mut perp_max = 0.0f64;
    for i in 0..chart.n_theta() {
        let w = chart.weight(i);
        for j in 0..chart.n_phi() {
            let n = chart.node(i, j);
            let dh = bundle.mean_h[n] - mean_h;
            let db = 1.0 / (lambda * bundle.pos[n].norm()) - mean_b;
            hb += w * dh * db;
            bb += w * db * db;
            hh += w * dh * dh;
            perp_max = perp_max.max(dh.abs());
        }
    }
    // mean-free content below a part per million of the mean is noise
    // (e.g. convergence leftovers of centered solves), not a signal to fit
    let degenerate = hh.sqrt() <= 1e-6 * mean_h.abs() * area.sqrt();
    let beta = if degenerate { f64::NAN } else { hb / bb };
    let resid_rel = if degenerate {
        f64::NAN
    } else {
        ((hh - beta * beta * bb).max(0.0) / hh).sqrt()
    };
    Ok(FitRow {
        lambda,
        rho: lambda * (1.0 - offset).abs(),
        fitted_coefficient: beta,
        fit_residual_rel: resid_rel,
        proj0_h: mean_h,
        proj_perp_h_max: perp_max,
        kappa,
        degenerate,
    })
}

/// Least-squares slope of log|kappa| against log(lambda).
pub fn kappa_decay_rate(rows: &[FitRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.kappa.abs() > 0.0)
        .map(|r| (r.lambda.ln(), r.kappa.abs().ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    num / den
}

pub fn cmd_asymptotics(config: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifact> {
    if config.sweep.radii.len() < 3 {
        return Err(Error::InsufficientSweep(config.sweep.radii.len()));
    }
    let mut writer = ArtifactWriter::new(Command::Asymptotics, config, out_dir)?;
    writer.document_table(
        "asymptotics.csv",
        &[
            ("lambda", "chart radius"),
            ("rho", "inner radius lambda (1 - |xi|)"),
            (
                "fitted_coefficient",
                "coefficient of lambda^-1 |x|^-1 in proj-perp H",
            ),
            ("coeff_error_vs_minus4", "|fitted_coefficient + 4|"),
            (
                "fit_residual_rel",
                "relative L2 residual of the one-basis fit",
            ),
            ("proj0_h", "chart mean of H"),
            ("proj_perp_h_max", "max norm of the mean-free part of H"),
            ("kappa", "Lagrange estimate"),
            (
                "degenerate",
                "1 when proj-perp H vanishes and the fit is undefined",
            ),
        ],
    );
    writer.write_manifest()?;

    let mut table = CsvTable::new(
        "asymptotics",
        &[
            "lambda",
            "rho",
            "fitted_coefficient",
            "coeff_error_vs_minus4",
            "fit_residual_rel",
            "proj0_h",
            "proj_perp_h_max",
            "kappa",
            "degenerate",
        ],
    );
    let mut rows = Vec::new();
    for &lambda in &config.sweep.radii {
        let row = h_expansion_fit(
            &config.metric,
            config.asymptotics.offset,
            lambda,
            config.band_limit,
            config.asymptotics.family,
            config.solver.as_ref(),
        )?;
        table.push_row(vec![
            fmt_f64(row.lambda),
            fmt_f64(row.rho),
            fmt_f64(row.fitted_coefficient),
            fmt_f64((row.fitted_coefficient + 4.0).abs()),
            fmt_f64(row.fit_residual_rel),
            fmt_f64(row.proj0_h),
            fmt_f64(row.proj_perp_h_max),
            fmt_f64(row.kappa),
            if row.degenerate { "1" } else { "0" }.to_string(),
        ]);
        rows.push(row);
    }
    writer.write_table(&table)?;
    writer.note(format!(
        "empirical kappa decay rate d log|kappa| / d log lambda = {}",
        fmt_f64(kappa_decay_rate(&rows))
    ));
    if rows.iter().any(|r| r.degenerate) {
        writer.note("some entries have vanishing proj-perp H; their fits are degenerate".into());
    }
    let plot = writer.plot_path("fitted_coefficient_vs_lambda.svg");
    line_plot(
        &plot,
        "mean-free H fit",
        "lambda",
        "fitted coefficient",
        &[Series {
            label: "coefficient",
            points: rows
                .iter()
                .filter(|r| !r.degenerate)
                .map(|r| (r.lambda, r.fitted_coefficient))
                .collect(),
        }],
        true,
        false,
    )?;
    writer.finish(0)
}
