//! Spectral machinery on coordinate spheres `S_lambda(lambda*xi)`.
//!
//! Grid: Gauss-Legendre colatitudes (poles excluded) times uniform
//! longitudes, with real orthonormal spherical harmonics. Differential
//! operators act in harmonic space; the Laplacian eigenvalue on degree-l
//! harmonics is `-l(l+1)/lambda^2`.

pub mod legendre;

use std::sync::{Arc, OnceLock};

use nalgebra::Vector3;

use crate::error::{Error, Result};
use legendre::{gauss_legendre, AssocLegendre};

pub const MIN_BAND_LIMIT: usize = 8;

/// Coordinate sphere `S_lambda(lambda*xi)` with its spectral grid.
pub struct SphereChart {
    xi: Vector3<f64>,
    lambda: f64,
    band_limit: usize,
    n_theta: usize,
    n_phi: usize,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    gl_w: Vec<f64>,
    cos_phi: Vec<f64>,
    sin_phi: Vec<f64>,
    tables: OnceLock<Tables>,
}

struct Tables {
    leg: AssocLegendre,
    // cos(m*phi_j), sin(m*phi_j) flattened as m*n_phi + j
    cos_m: Vec<f64>,
    sin_m: Vec<f64>,
}

/// Function sampled on the nodes of a chart.
#[derive(Clone)]
pub struct ScalarField {
    pub chart: Arc<SphereChart>,
    pub values: Vec<f64>,
}

/// Real spherical-harmonic coefficients `a_{lm}`, `0 <= l <= L`, `|m| <= l`.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicCoeffs {
    pub band_limit: usize,
    pub a: Vec<f64>,
}

impl HarmonicCoeffs {
    pub fn zeros(band_limit: usize) -> Self {
        Self {
            band_limit,
            a: vec![0.0; (band_limit + 1) * (band_limit + 1)],
        }
    }

    #[inline]
    pub fn idx(l: usize, m: i64) -> usize {
        l * l + (m + l as i64) as usize
    }

    #[inline]
    pub fn get(&self, l: usize, m: i64) -> f64 {
        self.a[Self::idx(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, v: f64) {
        self.a[Self::idx(l, m)] = v;
    }
}

/// Values and chart-coordinate derivatives of a synthesized field.
///
/// Subscripts t/p are theta/phi; third derivatives feed the surface
/// Christoffel symbols downstream.
pub struct FieldJet3 {
    pub f: Vec<f64>,
    pub ft: Vec<f64>,
    pub fp: Vec<f64>,
    pub ftt: Vec<f64>,
    pub ftp: Vec<f64>,
    pub fpp: Vec<f64>,
    pub fttt: Vec<f64>,
    pub fttp: Vec<f64>,
    pub ftpp: Vec<f64>,
    pub fppp: Vec<f64>,
}

pub fn build_chart(xi: Vector3<f64>, lambda: f64, band_limit: usize) -> Result<Arc<SphereChart>> {
    if band_limit < MIN_BAND_LIMIT {
        return Err(Error::InvalidBandLimit(band_limit));
    }
    assert!(lambda > 0.0, "chart radius must be positive");
    let n_theta = band_limit + 1;
    let n_phi = 2 * band_limit + 1;
    let (x, w) = gauss_legendre(n_theta);
    let sin_theta: Vec<f64> = x.iter().map(|x| (1.0 - x * x).sqrt()).collect();
    let (cos_phi, sin_phi): (Vec<f64>, Vec<f64>) = (0..n_phi)
        .map(|j| {
            let p = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
            (p.cos(), p.sin())
        })
        .unzip();
    Ok(Arc::new(SphereChart {
        xi,
        lambda,
        band_limit,
        n_theta,
        n_phi,
        cos_theta: x,
        sin_theta,
        gl_w: w,
        cos_phi,
        sin_phi,
        tables: OnceLock::new(),
    }))
}

impl SphereChart {
    pub fn xi(&self) -> Vector3<f64> {
        self.xi
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn band_limit(&self) -> usize {
        self.band_limit
    }
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }
    pub fn n_phi(&self) -> usize {
        self.n_phi
    }
    pub fn node_count(&self) -> usize {
        self.n_theta * self.n_phi
    }
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        i * self.n_phi + j
    }
    #[inline]
    pub fn cos_theta(&self, i: usize) -> f64 {
        self.cos_theta[i]
    }
    #[inline]
    pub fn sin_theta(&self, i: usize) -> f64 {
        self.sin_theta[i]
    }
    #[inline]
    pub fn cos_phi(&self, j: usize) -> f64 {
        self.cos_phi[j]
    }
    #[inline]
    pub fn sin_phi(&self, j: usize) -> f64 {
        self.sin_phi[j]
    }
    pub fn theta(&self, i: usize) -> f64 {
        self.cos_theta[i].acos()
    }
    pub fn phi(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.n_phi as f64
    }

    /// Euclidean unit vector from the chart center to node (i, j).
    #[inline]
    pub fn radial_dir(&self, i: usize, j: usize) -> Vector3<f64> {
        Vector3::new(
            self.sin_theta[i] * self.cos_phi[j],
            self.sin_theta[i] * self.sin_phi[j],
            self.cos_theta[i],
        )
    }

    /// Node position `lambda*xi + lambda*rhat`.
    #[inline]
    pub fn position(&self, i: usize, j: usize) -> Vector3<f64> {
        self.lambda * self.xi + self.lambda * self.radial_dir(i, j)
    }

    /// Quadrature weight of node (i, j) for the area measure of `S_lambda`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.lambda * self.lambda * self.gl_w[i] * 2.0 * std::f64::consts::PI / self.n_phi as f64
    }

    pub fn total_weight(&self) -> f64 {
        (0..self.n_theta)
            .map(|i| self.weight(i) * self.n_phi as f64)
            .sum()
    }

    /// Stream an integrand over the chart nodes against the sphere measure.
    pub fn integrate(&self, mut f: impl FnMut(usize, usize, Vector3<f64>) -> f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n_theta {
            let w = self.weight(i);
            let mut ring = 0.0;
            for j in 0..self.n_phi {
                ring += f(i, j, self.position(i, j));
            }
            acc += w * ring;
        }
        acc
    }

    pub fn same_grid(&self, other: &SphereChart) -> bool {
        self.xi == other.xi && self.lambda == other.lambda && self.band_limit == other.band_limit
    }

    fn tables(&self) -> &Tables {
        self.tables.get_or_init(|| {
            let leg = AssocLegendre::build(self.band_limit, &self.cos_theta, &self.sin_theta);
            let mut cos_m = vec![0.0; (self.band_limit + 1) * self.n_phi];
            let mut sin_m = vec![0.0; (self.band_limit + 1) * self.n_phi];
            for m in 0..=self.band_limit {
                for j in 0..self.n_phi {
                    let p = 2.0 * std::f64::consts::PI * (m * j % self.n_phi) as f64
                        / self.n_phi as f64;
                    cos_m[m * self.n_phi + j] = p.cos();
                    sin_m[m * self.n_phi + j] = p.sin();
                }
            }
            Tables { leg, cos_m, sin_m }
        })
    }

    /// Forward transform: harmonic coefficients of the node values.
    pub fn analyze_values(&self, values: &[f64]) -> HarmonicCoeffs {
        assert_eq!(values.len(), self.node_count());
        let t = self.tables();
        let lmax = self.band_limit;
        let nphi = self.n_phi;
        let dphi = 2.0 * std::f64::consts::PI / nphi as f64;
        // ring Fourier coefficients
        let mut ring_c = vec![0.0; (lmax + 1) * self.n_theta];
        let mut ring_s = vec![0.0; (lmax + 1) * self.n_theta];
        for i in 0..self.n_theta {
            let row = &values[i * nphi..(i + 1) * nphi];
            for m in 0..=lmax {
                let cm = &t.cos_m[m * nphi..(m + 1) * nphi];
                let sm = &t.sin_m[m * nphi..(m + 1) * nphi];
                let mut ac = 0.0;
                let mut as_ = 0.0;
                for j in 0..nphi {
                    ac += row[j] * cm[j];
                    as_ += row[j] * sm[j];
                }
                ring_c[m * self.n_theta + i] = ac * dphi;
                ring_s[m * self.n_theta + i] = as_ * dphi;
            }
        }
        let mut out = HarmonicCoeffs::zeros(lmax);
        let sqrt2 = std::f64::consts::SQRT_2;
        for m in 0..=lmax {
            let fac = if m == 0 { 1.0 } else { sqrt2 };
            for l in m..=lmax {
                let q = t.leg.row_q(l, m);
                let mut ac = 0.0;
                let mut as_ = 0.0;
                for i in 0..self.n_theta {
                    let base = self.gl_w[i] * q[i];
                    ac += base * ring_c[m * self.n_theta + i];
                    as_ += base * ring_s[m * self.n_theta + i];
                }
                out.set(l, m as i64, fac * ac);
                if m > 0 {
                    out.set(l, -(m as i64), fac * as_);
                }
            }
        }
        out
    }

    /// Inverse transform at the chart nodes.
    pub fn synthesize_values(&self, coeffs: &HarmonicCoeffs) -> Vec<f64> {
        self.synthesize_jet3(coeffs).f
    }

    /// Inverse transform together with all chart-coordinate derivatives
    /// up to third order.
    pub fn synthesize_jet3(&self, coeffs: &HarmonicCoeffs) -> FieldJet3 {
        let lmax = self.band_limit.min(coeffs.band_limit);
        let t = self.tables();
        let nt = self.n_theta;
        let nphi = self.n_phi;
        let nn = nt * nphi;
        let mut jet = FieldJet3 {
            f: vec![0.0; nn],
            ft: vec![0.0; nn],
            fp: vec![0.0; nn],
            ftt: vec![0.0; nn],
            ftp: vec![0.0; nn],
            fpp: vec![0.0; nn],
            fttt: vec![0.0; nn],
            fttp: vec![0.0; nn],
            ftpp: vec![0.0; nn],
            fppp: vec![0.0; nn],
        };
        let sqrt2 = std::f64::consts::SQRT_2;
        // per-ring accumulators for the cos (u*) and sin (v*) branches
        let mut u = vec![0.0; nt];
        let mut ud = vec![0.0; nt];
        let mut u2 = vec![0.0; nt]; // sum of l(l+1) a Q
        let mut u2d = vec![0.0; nt]; // sum of l(l+1) a dQ
        let mut v = vec![0.0; nt];
        let mut vd = vec![0.0; nt];
        let mut v2 = vec![0.0; nt];
        let mut v2d = vec![0.0; nt];
        for m in 0..=lmax {
            for a in [
                &mut u, &mut ud, &mut u2, &mut u2d, &mut v, &mut vd, &mut v2, &mut v2d,
            ] {
                a.iter_mut().for_each(|x| *x = 0.0);
            }
            let fac = if m == 0 { 1.0 } else { sqrt2 };
            for l in m..=lmax {
                let ac = fac * coeffs.get(l, m as i64);
                let as_ = if m > 0 {
                    fac * coeffs.get(l, -(m as i64))
                } else {
                    0.0
                };
                if ac == 0.0 && as_ == 0.0 {
                    continue;
                }
                let ll1 = (l * (l + 1)) as f64;
                let q = t.leg.row_q(l, m);
                let dq = t.leg.row_dq(l, m);
                for i in 0..nt {
                    u[i] += ac * q[i];
                    ud[i] += ac * dq[i];
                    u2[i] += ac * ll1 * q[i];
                    u2d[i] += ac * ll1 * dq[i];
                    if m > 0 {
                        v[i] += as_ * q[i];
                        vd[i] += as_ * dq[i];
                        v2[i] += as_ * ll1 * q[i];
                        v2d[i] += as_ * ll1 * dq[i];
                    }
                }
            }
            let mf = m as f64;
            let m2 = mf * mf;
            let cm = &t.cos_m[m * nphi..(m + 1) * nphi];
            let sm = &t.sin_m[m * nphi..(m + 1) * nphi];
            for i in 0..nt {
                let ct = self.cos_theta[i] / self.sin_theta[i];
                let is2 = 1.0 / (self.sin_theta[i] * self.sin_theta[i]);
                // second/third theta derivatives via the Legendre ODE
                let udd = -ct * ud[i] - u2[i] + m2 * is2 * u[i];
                let vdd = -ct * vd[i] - v2[i] + m2 * is2 * v[i];
                let ud3 = is2 * ud[i]
                    - ct * udd
                    - (u2d[i] - m2 * is2 * ud[i])
                    - 2.0 * m2 * self.cos_theta[i] * is2 / self.sin_theta[i] * u[i];
                let vd3 = is2 * vd[i]
                    - ct * vdd
                    - (v2d[i] - m2 * is2 * vd[i])
                    - 2.0 * m2 * self.cos_theta[i] * is2 / self.sin_theta[i] * v[i];
                let row = i * nphi;
                for j in 0..nphi {
                    let c = cm[j];
                    let s = sm[j];
                    jet.f[row + j] += u[i] * c + v[i] * s;
                    jet.ft[row + j] += ud[i] * c + vd[i] * s;
                    jet.fp[row + j] += mf * (v[i] * c - u[i] * s);
                    jet.ftt[row + j] += udd * c + vdd * s;
                    jet.ftp[row + j] += mf * (vd[i] * c - ud[i] * s);
                    jet.fpp[row + j] += -m2 * (u[i] * c + v[i] * s);
                    jet.fttt[row + j] += ud3 * c + vd3 * s;
                    jet.fttp[row + j] += mf * (vdd * c - udd * s);
                    jet.ftpp[row + j] += -m2 * (ud[i] * c + vd[i] * s);
                    jet.fppp[row + j] += m2 * mf * (u[i] * s - v[i] * c);
                }
            }
        }
        jet
    }
}

impl ScalarField {
    pub fn new(chart: Arc<SphereChart>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), chart.node_count());
        Self { chart, values }
    }

    pub fn from_fn(chart: &Arc<SphereChart>, mut f: impl FnMut(Vector3<f64>) -> f64) -> Self {
        let mut values = Vec::with_capacity(chart.node_count());
        for i in 0..chart.n_theta() {
            for j in 0..chart.n_phi() {
                values.push(f(chart.position(i, j)));
            }
        }
        Self::new(chart.clone(), values)
    }

    pub fn constant(chart: &Arc<SphereChart>, c: f64) -> Self {
        Self::new(chart.clone(), vec![c; chart.node_count()])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Harmonic analysis of a sampled field.
pub fn analyze(field: &ScalarField) -> HarmonicCoeffs {
    field.chart.analyze_values(&field.values)
}

/// Harmonic synthesis onto a chart.
pub fn synthesize(coeffs: &HarmonicCoeffs, chart: &Arc<SphereChart>) -> ScalarField {
    ScalarField::new(chart.clone(), chart.synthesize_values(coeffs))
}

/// Tangential gradient of the field on `S_lambda` as Euclidean 3-vectors.
pub fn sphere_grad(field: &ScalarField) -> Vec<Vector3<f64>> {
    let chart = &field.chart;
    let jet = chart.synthesize_jet3(&analyze(field));
    let mut out = Vec::with_capacity(chart.node_count());
    for i in 0..chart.n_theta() {
        let (x, s) = (chart.cos_theta(i), chart.sin_theta(i));
        for j in 0..chart.n_phi() {
            let (cp, sp) = (chart.cos_phi(j), chart.sin_phi(j));
            let e_t = Vector3::new(x * cp, x * sp, -s);
            let e_p = Vector3::new(-sp, cp, 0.0);
            let n = chart.node(i, j);
            out.push((jet.ft[n] * e_t + jet.fp[n] / s * e_p) / chart.lambda());
        }
    }
    out
}

/// Laplace-Beltrami operator of the round sphere, applied in harmonic space.
pub fn sphere_laplacian(field: &ScalarField) -> ScalarField {
    let chart = &field.chart;
    let mut coeffs = analyze(field);
    let lam2 = chart.lambda() * chart.lambda();
    for l in 0..=coeffs.band_limit {
        let eig = -((l * (l + 1)) as f64) / lam2;
        for m in -(l as i64)..=(l as i64) {
            let idx = HarmonicCoeffs::idx(l, m);
            coeffs.a[idx] *= eig;
        }
    }
    synthesize(&coeffs, chart)
}

/// Split a field into its mean over the chart sphere and the mean-free part.
pub fn project_mean(field: &ScalarField) -> (f64, ScalarField) {
    let chart = &field.chart;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..chart.n_theta() {
        let w = chart.weight(i);
        for j in 0..chart.n_phi() {
            num += w * field.values[chart.node(i, j)];
            den += w;
        }
    }
    let mean = num / den;
    let perp = ScalarField::new(
        chart.clone(),
        field.values.iter().map(|v| v - mean).collect(),
    );
    (mean, perp)
}

/// Solve `lap u = f` on the chart sphere for mean-free `f`, returning the
/// mean-free solution.
pub fn poisson_solve(field: &ScalarField) -> Result<ScalarField> {
    let chart = &field.chart;
    let (mean, _) = project_mean(field);
    if mean.abs() > 1e-10 * (1.0 + field.max_abs()) {
        return Err(Error::NonzeroMean { mean });
    }
    let mut coeffs = analyze(field);
    let lam2 = chart.lambda() * chart.lambda();
    coeffs.a[HarmonicCoeffs::idx(0, 0)] = 0.0;
    for l in 1..=coeffs.band_limit {
        let eig = -((l * (l + 1)) as f64) / lam2;
        for m in -(l as i64)..=(l as i64) {
            let idx = HarmonicCoeffs::idx(l, m);
            coeffs.a[idx] /= eig;
        }
    }
    Ok(synthesize(&coeffs, chart))
}

/// Real orthonormal spherical harmonic `Y_{lm}` sampled on a chart.
pub fn harmonic_field(chart: &Arc<SphereChart>, l: usize, m: i64) -> ScalarField {
    let mut c = HarmonicCoeffs::zeros(chart.band_limit());
    c.set(l, m, 1.0);
    synthesize(&c, chart)
}
