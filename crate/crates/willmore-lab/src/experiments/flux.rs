//! The `flux` command: evaluate the leading flux term of the translation
//! variation on a sweep of translated spheres, compare against
//! `-8 pi lambda^{-1} rho^{-2}`, and cross-check the radial moment
//! combination against its closed form by high-order quadrature.

use std::path::Path;

use nalgebra::Vector3;

use crate::error::Result;
use crate::functionals::{lagrange_estimate, translation_variation_decomposed};
use crate::io::{fmt_f64, CsvTable};
use crate::metrics::MetricKind;
use crate::oracles::radial4_leading;
use crate::sphere::build_chart;
use crate::surface::{geometry_bundle, scalar_curvature_at, GraphSurface};
use crate::svg::{line_plot, Series};

use super::{ArtifactWriter, Command, ExperimentConfig, RunArtifact};

/// Band limit adequate for quadrature of integrands with a pole at
/// Euclidean distance `(1 - offset)` from the sphere.
pub fn band_for_offset(offset: f64, floor: usize) -> usize {
    if offset >= 1.0 {
        return floor.max(64);
    }
    let need = (20.0 / (1.0 - offset)).ceil() as usize;
    need.clamp(floor, 2048)
}

#[derive(Clone, Copy, Debug)]
pub struct FluxRow {
    pub lambda: f64,
    pub offset: f64,
    pub term_d2: f64,
    pub prediction: f64,
    pub ratio: f64,
    pub relative_defect: f64,
    /// subleading terms measured on the scale |prediction|
    pub term_div_ratio: f64,
    pub term_zeta_ratio: f64,
    pub term_kappa_ratio: f64,
    pub kernel_flux: f64,
    pub normal_flux: f64,
    pub scalar_flux: f64,
}

/// Flux decomposition of the `u = 0` sphere `S_lambda(lambda xi)` with
/// direction `a = xi`.
pub fn flux_case(config: &ExperimentConfig, lambda: f64, offset: f64) -> Result<FluxRow> {
    let band = band_for_offset(offset, config.band_limit);
    let xi = Vector3::new(0.0, 0.0, offset);
    let chart = build_chart(xi, lambda, band)?;
    let surface = GraphSurface::round(&chart);
    let bundle = geometry_bundle(&surface, &config.metric)?;
    let kappa = lagrange_estimate(&bundle)?;
    let rep = translation_variation_decomposed(&bundle, xi, kappa)?;
    let rho = lambda * (1.0 - offset).abs();
    let prediction = -8.0 * std::f64::consts::PI / (lambda * rho * rho);
    let scalar_flux = if config.metric.kind == MetricKind::Perturbed {
        let mut acc = 0.0;
        for n in 0..bundle.node_count() {
            let (nubar, wbar) = bundle.euclidean_normal_weight(n);
            let r = scalar_curvature_at(&config.metric, bundle.pos[n])?;
            acc += xi.dot(&nubar) * r * wbar;
        }
        acc / lambda
    } else {
        0.0
    };
    Ok(FluxRow {
        lambda,
        offset,
        term_d2: rep.term_d2,
        prediction,
        ratio: rep.term_d2 / prediction,
        relative_defect: rep.relative_defect(),
        term_div_ratio: rep.term_div / prediction.abs(),
        term_zeta_ratio: rep.term_zeta / prediction.abs(),
        term_kappa_ratio: rep.term_kappa / prediction.abs(),
        kernel_flux: rep.euclid_kernel_flux,
        normal_flux: rep.euclid_normal_flux,
        scalar_flux,
    })
}

/// Identity defect of a fixed rough graph at one band limit; used by the
/// band-limit convergence table.
pub fn defect_at_band(config: &ExperimentConfig, band: usize) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let lam = 25.0;
    let xi = Vector3::new(0.15, 0.0, 0.25);
    let chart = build_chart(xi, lam, band)?;
    let mut c = crate::sphere::HarmonicCoeffs::zeros(band);
    for l in 0..=10usize.min(band) {
        for m in -(l as i64)..=(l as i64) {
            c.set(l, m, rng.gen_range(-1.0..1.0) / (1.0 + (l * l) as f64));
        }
    }
    let f = crate::sphere::synthesize(&c, &chart);
    let scale = 0.1 * lam / f.max_abs();
    let u = crate::sphere::ScalarField::new(
        chart.clone(),
        f.values.iter().map(|v| v * scale).collect(),
    );
    let surface = GraphSurface::new(chart, u);
    let bundle = geometry_bundle(&surface, &config.metric)?;
    let kappa = lagrange_estimate(&bundle)?;
    let a = Vector3::new(0.3, -0.5, 0.8);
    Ok(translation_variation_decomposed(&bundle, a, kappa)?.relative_defect())
}

/// Quadrature cross-check of the radial moment combination at one offset.
pub fn radial4_quadrature_check(offset: f64, floor: usize) -> Result<(f64, f64, f64)> {
    let band = band_for_offset(offset, floor.max(64));
    let chart = build_chart(Vector3::new(0.0, 0.0, offset), 1.0, band)?;
    let xi = Vector3::new(0.0, 0.0, offset);
    let quad = chart.integrate(|i, j, p| {
        let r = p.norm();
        let nubar = chart.radial_dir(i, j);
        xi.dot(&nubar) / r.powi(4) - 4.0 / r.powi(6) * p.dot(&xi) * p.dot(&nubar)
    });
    let (exact, _) = radial4_leading(offset, 1.0)?;
    Ok((exact, quad, (quad - exact).abs() / exact.abs()))
}

pub fn cmd_flux(config: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifact> {
    let mut writer = ArtifactWriter::new(Command::Flux, config, out_dir)?;
    writer.document_table(
        "flux.csv",
        &[
            ("lambda", "chart radius"),
            ("offset", "|xi|"),
            ("term_d2", "int [g(tr D^2 xi, nu) + Ric(xi, nu)] H dmu"),
            (
                "prediction",
                "-8 pi lambda^-1 rho^-2 with rho = lambda (1 - |xi|)",
            ),
            ("ratio", "term_d2 / prediction"),
            ("relative_defect", "flux decomposition identity defect"),
            ("term_div_ratio", "divergence term over |prediction|"),
            ("term_zeta_ratio", "zeta-contraction term over |prediction|"),
            ("term_kappa_ratio", "kappa term over |prediction|"),
            ("kernel_flux", "divergence-theorem kernel flux (vanishes)"),
            ("normal_flux", "int g(xi, nubar) dmubar (vanishes)"),
            (
                "scalar_flux",
                "lambda^-1 int g(xi, nubar) R dmubar (perturbed only)",
            ),
        ],
    );
    if !config.sweep.band_limits.is_empty() {
        writer.document_table(
            "defect_vs_band.csv",
            &[
                ("band_limit", "spectral band limit of the test graph"),
                ("relative_defect", "flux decomposition identity defect"),
            ],
        );
    }
    writer.document_table(
        "radial4_check.csv",
        &[
            ("offset", "|xi|"),
            ("closed_form", "exact moment combination"),
            ("quadrature", "high-order quadrature of the same integrand"),
            ("relative_error", "agreement between the two routes"),
        ],
    );
    writer.write_manifest()?;

    let offsets = if config.sweep.offsets.is_empty() {
        vec![0.9]
    } else {
        config.sweep.offsets.clone()
    };
    let radii = if config.sweep.radii.is_empty() {
        vec![50.0, 100.0, 200.0]
    } else {
        config.sweep.radii.clone()
    };

    let mut table = CsvTable::new(
        "flux",
        &[
            "lambda",
            "offset",
            "term_d2",
            "prediction",
            "ratio",
            "relative_defect",
            "term_div_ratio",
            "term_zeta_ratio",
            "term_kappa_ratio",
            "kernel_flux",
            "normal_flux",
            "scalar_flux",
        ],
    );
    let mut ratio_points = Vec::new();
    let mut failures = 0;
    for &offset in &offsets {
        for &lambda in &radii {
            match flux_case(config, lambda, offset) {
                Ok(row) => {
                    table.push_floats(&[
                        row.lambda,
                        row.offset,
                        row.term_d2,
                        row.prediction,
                        row.ratio,
                        row.relative_defect,
                        row.term_div_ratio,
                        row.term_zeta_ratio,
                        row.term_kappa_ratio,
                        row.kernel_flux,
                        row.normal_flux,
                        row.scalar_flux,
                    ]);
                    ratio_points.push((lambda, row.ratio));
                }
                Err(e) => {
                    failures += 1;
                    writer.note(format!(
                        "flux case (lambda {lambda}, offset {offset}) failed: {e}"
                    ));
                }
            }
        }
    }
    writer.write_table(&table)?;

    if !config.sweep.band_limits.is_empty() {
        let mut conv = CsvTable::new("defect_vs_band", &["band_limit", "relative_defect"]);
        for &band in &config.sweep.band_limits {
            let defect = defect_at_band(config, band.max(crate::sphere::MIN_BAND_LIMIT))?;
            conv.push_row(vec![band.to_string(), crate::io::fmt_f64(defect)]);
        }
        writer.write_table(&conv)?;
    }

    let mut check = CsvTable::new(
        "radial4_check",
        &["offset", "closed_form", "quadrature", "relative_error"],
    );
    for &offset in &config.flux.check_offsets {
        let (exact, quad, rel) = radial4_quadrature_check(offset, config.band_limit)?;
        check.push_floats(&[offset, exact, quad, rel]);
        if rel > 1e-9 {
            failures += 1;
            writer.note(format!(
                "radial4 quadrature disagrees with the closed form at offset {offset}: {}",
                fmt_f64(rel)
            ));
        }
    }
    writer.write_table(&check)?;

    let plot = writer.plot_path("flux_ratio_vs_lambda.svg");
    line_plot(
        &plot,
        "leading flux term vs prediction",
        "lambda",
        "term_d2 / (-8 pi / (lambda rho^2))",
        &[Series {
            label: "ratio",
            points: ratio_points,
        }],
        true,
        false,
    )?;
    writer.finish(failures)
}
