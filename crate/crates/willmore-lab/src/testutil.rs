//! Shared helpers for unit tests.

use std::sync::Arc;

use nalgebra::Vector3;
use rand::Rng;

use crate::sphere::{synthesize, HarmonicCoeffs, ScalarField, SphereChart};
use crate::surface::GraphSurface;

/// Random band-limited graph with a prescribed max amplitude.
pub fn random_graph(
    chart: &Arc<SphereChart>,
    amplitude: f64,
    band: usize,
    rng: &mut impl Rng,
) -> GraphSurface {
    let mut c = HarmonicCoeffs::zeros(chart.band_limit());
    for l in 0..=band.min(chart.band_limit()) {
        for m in -(l as i64)..=(l as i64) {
            c.set(l, m, rng.gen_range(-1.0..1.0) / (1.0 + (l * l) as f64));
        }
    }
    let f = synthesize(&c, chart);
    let scale = amplitude / f.max_abs().max(1e-12);
    let u = ScalarField::new(chart.clone(), f.values.iter().map(|v| v * scale).collect());
    GraphSurface::new(chart.clone(), u)
}

/// Random direction in the unit ball, bounded away from zero.
pub fn random_direction(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if v.norm() > 0.2 {
            return v;
        }
    }
}
