//! Ambient metric family `g = (1 + m/(2|x|))^4 gbar + sigma` and its
//! pointwise curvature objects.
//!
//! Everything is evaluated from exact analytic derivatives; curvature always
//! goes through the generic coordinate formulas so that the same code path
//! serves the Euclidean, Schwarzschild, and perturbed kinds. Closed forms
//! are kept for tests.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `Gamma^k_{ij}` indexed as `[k][i][j]`.
pub type Rank3 = [[[f64; 3]; 3]; 3];
/// `d_m Gamma^k_{ij}` indexed as `[m][k][i][j]`.
pub type Rank4 = [[[[f64; 3]; 3]; 3]; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    Schwarzschild,
    Perturbed,
}

/// One real spherical-harmonic term of the angular profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularTerm {
    pub l: usize,
    pub m: i64,
    pub coeff: f64,
}

/// Diagonal perturbation `sigma_ij = A chi(|x|) Y(x/|x|) |x|^{-p} delta_ij`.
///
/// `chi` is a smooth cutoff vanishing for `|x| <= r_cut` and equal to one
/// for `|x| >= 2 r_cut`; the angular profile is a finite harmonic sum with
/// degree at most 3 so that all Cartesian derivatives stay closed-form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationFamily {
    pub amplitude: f64,
    pub angular: Vec<AngularTerm>,
    pub r_cut: f64,
    pub decay_p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub kind: MetricKind,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationFamily>,
}

fn default_mass() -> f64 {
    2.0
}

impl MetricSpec {
    pub fn euclidean() -> Self {
        Self {
            kind: MetricKind::Euclidean,
            mass: 2.0,
            perturbation: None,
        }
    }

    pub fn schwarzschild(mass: f64) -> Self {
        Self {
            kind: MetricKind::Schwarzschild,
            mass,
            perturbation: None,
        }
    }

    pub fn perturbed(mass: f64, p: PerturbationFamily) -> Self {
        Self {
            kind: MetricKind::Perturbed,
            mass,
            perturbation: Some(p),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            MetricKind::Euclidean => "euclidean",
            MetricKind::Schwarzschild => "schwarzschild",
            MetricKind::Perturbed => "perturbed",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            MetricKind::Euclidean => Ok(()),
            MetricKind::Schwarzschild => {
                if self.mass > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "mass must be positive, got {}",
                        self.mass
                    )))
                }
            }
            MetricKind::Perturbed => {
                if !(self.mass.is_finite() && self.mass > 0.0) {
                    return Err(Error::Config(format!(
                        "mass must be positive, got {}",
                        self.mass
                    )));
                }
                let p = self.perturbation.as_ref().ok_or_else(|| {
                    Error::Config("perturbed metric needs a perturbation block".into())
                })?;
                if !p.amplitude.is_finite() {
                    return Err(Error::Config(format!(
                        "amplitude must be finite, got {}",
                        p.amplitude
                    )));
                }
                if !(p.r_cut.is_finite() && p.r_cut >= 2.0) {
                    return Err(Error::Config(format!(
                        "r_cut must be >= 2, got {}",
                        p.r_cut
                    )));
                }
                if !(p.decay_p.is_finite() && p.decay_p >= 2.0) {
                    return Err(Error::Config(format!(
                        "decay exponent must be >= 2, got {}",
                        p.decay_p
                    )));
                }
                for t in &p.angular {
                    if t.l > 3 || t.m.unsigned_abs() as usize > t.l {
                        return Err(Error::Config(format!(
                            "angular profile term (l={}, m={}) outside the supported range l <= 3",
                            t.l, t.m
                        )));
                    }
                    if !t.coeff.is_finite() {
                        return Err(Error::Config("angular coefficients must be finite".into()));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Pointwise 2-jet of the metric, with the inverse cached.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub point: Vector3<f64>,
    pub g: Matrix3<f64>,
    pub ginv: Matrix3<f64>,
    pub dg: [Matrix3<f64>; 3],
    pub d2g: [[Matrix3<f64>; 3]; 3],
}

/// Christoffel symbols and their first derivatives at a point.
#[derive(Clone, Debug)]
pub struct Connection {
    pub gamma: Rank3,
    pub dgamma: Rank4,
}

#[derive(Clone, Debug)]
pub struct CurvatureData {
    pub point: Vector3<f64>,
    pub gamma: Rank3,
    pub ric: Matrix3<f64>,
    pub scalar: f64,
}

/// Value, gradient, and covariant Hessian of the static potential.
#[derive(Clone, Copy, Debug)]
pub struct PotentialJet {
    pub n: f64,
    pub dn: Vector3<f64>,
    pub d2n: Matrix3<f64>,
}

// ---------------------------------------------------------------------------
// scalar 2-jets with product/chain rules

#[derive(Clone, Copy, Debug)]
struct Jet2 {
    v: f64,
    d: Vector3<f64>,
    h: Matrix3<f64>,
}

impl Jet2 {
    fn product(a: Jet2, b: Jet2) -> Jet2 {
        Jet2 {
            v: a.v * b.v,
            d: a.v * b.d + b.v * a.d,
            h: a.v * b.h + b.v * a.h + a.d * b.d.transpose() + b.d * a.d.transpose(),
        }
    }

    fn scale(self, c: f64) -> Jet2 {
        Jet2 {
            v: c * self.v,
            d: c * self.d,
            h: c * self.h,
        }
    }

    fn add(a: Jet2, b: Jet2) -> Jet2 {
        Jet2 {
            v: a.v + b.v,
            d: a.d + b.d,
            h: a.h + b.h,
        }
    }

    fn zero() -> Jet2 {
        Jet2 {
            v: 0.0,
            d: Vector3::zeros(),
            h: Matrix3::zeros(),
        }
    }
}

/// `|x|^{-q}` with its first two derivatives.
fn jet_inv_power(x: Vector3<f64>, q: f64) -> Jet2 {
    let r2 = x.norm_squared();
    let r = r2.sqrt();
    let v = r.powf(-q);
    let d = -q * v / r2 * x;
    let h = -q * v / r2 * Matrix3::identity() + q * (q + 2.0) * v / (r2 * r2) * x * x.transpose();
    Jet2 { v, d, h }
}

// C-infinity step: psi(t) = q(t)/(q(t)+q(1-t)) with q(t) = exp(-1/t).
fn smoothstep_jets(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let q = |u: f64| (-1.0 / u).exp();
    let a = q(t);
    let b = q(1.0 - t);
    let ap = a / (t * t);
    let bp = -b / ((1.0 - t) * (1.0 - t));
    let app = a * (1.0 / t.powi(4) - 2.0 / t.powi(3));
    let bpp = b * (1.0 / (1.0 - t).powi(4) - 2.0 / (1.0 - t).powi(3));
    let s = a + b;
    let psi = a / s;
    let dpsi = (ap * b - a * bp) / (s * s);
    let d2psi = (app * b - a * bpp) / (s * s) - 2.0 * (ap * b - a * bp) * (ap + bp) / (s * s * s);
    (psi, dpsi, d2psi)
}

fn jet_cutoff(x: Vector3<f64>, r_cut: f64) -> Jet2 {
    let r = x.norm();
    let t = (r - r_cut) / r_cut;
    let (psi, dpsi, d2psi) = smoothstep_jets(t);
    if dpsi == 0.0 && d2psi == 0.0 {
        return Jet2 {
            v: psi,
            d: Vector3::zeros(),
            h: Matrix3::zeros(),
        };
    }
    let dr = x / r;
    let hr = (Matrix3::identity() - dr * dr.transpose()) / r;
    Jet2 {
        v: psi,
        d: dpsi / r_cut * dr,
        h: d2psi / (r_cut * r_cut) * dr * dr.transpose() + dpsi / r_cut * hr,
    }
}

/// Real solid harmonic `r^l Y_lm(x/|x|)` as a polynomial jet, orthonormal
/// convention, degrees up to 3.
fn jet_solid_harmonic(x: Vector3<f64>, l: usize, m: i64) -> Jet2 {
    // monomial list (px, py, pz, coeff)
    let pi = std::f64::consts::PI;
    let mono: Vec<(u32, u32, u32, f64)> = match (l, m) {
        (0, 0) => vec![(0, 0, 0, 0.5 / pi.sqrt())],
        (1, -1) => vec![(0, 1, 0, (3.0 / (4.0 * pi)).sqrt())],
        (1, 0) => vec![(0, 0, 1, (3.0 / (4.0 * pi)).sqrt())],
        (1, 1) => vec![(1, 0, 0, (3.0 / (4.0 * pi)).sqrt())],
        (2, -2) => vec![(1, 1, 0, (15.0 / (4.0 * pi)).sqrt())],
        (2, -1) => vec![(0, 1, 1, (15.0 / (4.0 * pi)).sqrt())],
        (2, 0) => {
            let c = (5.0 / (16.0 * pi)).sqrt();
            vec![(0, 0, 2, 2.0 * c), (2, 0, 0, -c), (0, 2, 0, -c)]
        }
        (2, 1) => vec![(1, 0, 1, (15.0 / (4.0 * pi)).sqrt())],
        (2, 2) => {
            let c = 0.5 * (15.0 / (4.0 * pi)).sqrt();
            vec![(2, 0, 0, c), (0, 2, 0, -c)]
        }
        (3, -3) => {
            let c = (35.0 / (32.0 * pi)).sqrt();
            vec![(2, 1, 0, 3.0 * c), (0, 3, 0, -c)]
        }
        (3, -2) => vec![(1, 1, 1, (105.0 / (4.0 * pi)).sqrt())],
        (3, -1) => {
            let c = (21.0 / (32.0 * pi)).sqrt();
            vec![(0, 1, 2, 4.0 * c), (2, 1, 0, -c), (0, 3, 0, -c)]
        }
        (3, 0) => {
            let c = (7.0 / (16.0 * pi)).sqrt();
            vec![(0, 0, 3, 2.0 * c), (2, 0, 1, -3.0 * c), (0, 2, 1, -3.0 * c)]
        }
        (3, 1) => {
            let c = (21.0 / (32.0 * pi)).sqrt();
            vec![(1, 0, 2, 4.0 * c), (3, 0, 0, -c), (1, 2, 0, -c)]
        }
        (3, 2) => {
            let c = 0.5 * (105.0 / (16.0 * pi)).sqrt();
            vec![(2, 0, 1, 2.0 * c), (0, 2, 1, -2.0 * c)]
        }
        (3, 3) => {
            let c = (35.0 / (32.0 * pi)).sqrt();
            vec![(3, 0, 0, c), (1, 2, 0, -3.0 * c)]
        }
        _ => panic!("solid harmonic (l={l}, m={m}) outside the supported table"),
    };
    let mut out = Jet2::zero();
    for (px, py, pz, c) in mono {
        out = Jet2::add(out, jet_monomial(x, px, py, pz).scale(c));
    }
    out
}

fn jet_monomial(x: Vector3<f64>, px: u32, py: u32, pz: u32) -> Jet2 {
    let p = [px, py, pz];
    let pow = |v: f64, e: i64| -> f64 {
        if e < 0 {
            0.0
        } else {
            v.powi(e as i32)
        }
    };
    let v = pow(x.x, px as i64) * pow(x.y, py as i64) * pow(x.z, pz as i64);
    let mut d = Vector3::zeros();
    let mut h = Matrix3::zeros();
    for i in 0..3 {
        if p[i] == 0 {
            continue;
        }
        let mut grad = p[i] as f64;
        for k in 0..3 {
            let e = p[k] as i64 - if k == i { 1 } else { 0 };
            grad *= pow(x[k], e);
        }
        d[i] = grad;
    }
    for i in 0..3 {
        for j in 0..3 {
            let fac = if i == j {
                if p[i] < 2 {
                    continue;
                }
                (p[i] * (p[i] - 1)) as f64
            } else {
                if p[i] == 0 || p[j] == 0 {
                    continue;
                }
                (p[i] * p[j]) as f64
            };
            let mut v2 = fac;
            for k in 0..3 {
                let mut e = p[k] as i64;
                if k == i {
                    e -= 1;
                }
                if k == j {
                    e -= 1;
                }
                v2 *= pow(x[k], e);
            }
            h[(i, j)] = v2;
        }
    }
    Jet2 { v, d, h }
}

impl PerturbationFamily {
    /// Scalar factor `P(x)` of `sigma = P delta` with two derivatives.
    fn scalar_jet(&self, x: Vector3<f64>) -> Jet2 {
        let chi = jet_cutoff(x, self.r_cut);
        if chi.v == 0.0 && chi.d == Vector3::zeros() {
            return Jet2::zero();
        }
        let mut sum = Jet2::zero();
        for t in &self.angular {
            let s = jet_solid_harmonic(x, t.l, t.m);
            let rad = jet_inv_power(x, self.decay_p + t.l as f64);
            sum = Jet2::add(sum, Jet2::product(s, rad).scale(t.coeff));
        }
        Jet2::product(chi, sum).scale(self.amplitude)
    }

    /// Sampled decay bounds: sup of `|sigma| r^2`, `|d sigma| r^3`,
    /// `|d2 sigma| r^4` over a log-spaced radial probe set.
    pub fn decay_check(&self, probes: usize) -> (f64, f64, f64) {
        let dirs = [
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::new(0.6, -0.48, 0.64),
            Vector3::new(-0.57735, 0.57735, 0.57735),
        ];
        let (mut s0, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);
        for k in 0..probes {
            let r = self.r_cut * (1000.0f64 / 1.0).powf(k as f64 / (probes - 1) as f64);
            for d in dirs {
                let x = r * d.normalize();
                let j = self.scalar_jet(x);
                s0 = s0.max(j.v.abs() * r * r);
                s1 = s1.max(j.d.norm() * r.powi(3));
                s2 = s2.max(j.h.norm() * r.powi(4));
            }
        }
        (s0, s1, s2)
    }
}

// ---------------------------------------------------------------------------
// metric jets

/// Evaluate the metric and its first two derivative tensors at `x`.
pub fn metric_jet(spec: &MetricSpec, x: Vector3<f64>) -> Result<MetricJet> {
    let mut g = Matrix3::identity();
    let mut dg = [Matrix3::zeros(); 3];
    let mut d2g = [[Matrix3::zeros(); 3]; 3];

    if spec.kind != MetricKind::Euclidean {
        if x.norm_squared() == 0.0 {
            return Err(Error::PointAtOrigin {
                kind: spec.kind_name(),
            });
        }
        // conformal factor phi^4, phi = 1 + m/(2r)
        let mu = 0.5 * spec.mass;
        let r2 = x.norm_squared();
        let r = r2.sqrt();
        let phi = 1.0 + mu / r;
        let dphi = -mu / (r2 * r) * x;
        let hphi =
            -mu / (r2 * r) * Matrix3::identity() + 3.0 * mu / (r2 * r2 * r) * x * x.transpose();
        let p3 = phi.powi(3);
        let p4 = phi * p3;
        g = p4 * Matrix3::identity();
        for k in 0..3 {
            dg[k] = 4.0 * p3 * dphi[k] * Matrix3::identity();
        }
        for k in 0..3 {
            for l in 0..3 {
                d2g[k][l] = (12.0 * phi * phi * dphi[k] * dphi[l] + 4.0 * p3 * hphi[(k, l)])
                    * Matrix3::identity();
            }
        }
        if spec.kind == MetricKind::Perturbed {
            let fam = spec
                .perturbation
                .as_ref()
                .expect("validated perturbed spec carries a family");
            let p = fam.scalar_jet(x);
            g += p.v * Matrix3::identity();
            for k in 0..3 {
                dg[k] += p.d[k] * Matrix3::identity();
            }
            for k in 0..3 {
                for l in 0..3 {
                    d2g[k][l] += p.h[(k, l)] * Matrix3::identity();
                }
            }
        }
    }

    let ginv = g.try_inverse().expect("metric is positive definite");
    Ok(MetricJet {
        point: x,
        g,
        ginv,
        dg,
        d2g,
    })
}

/// Christoffel symbols and their first derivatives from a metric jet.
pub fn connection(jet: &MetricJet) -> Connection {
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for l in 0..3 {
                    acc += jet.ginv[(k, l)]
                        * (jet.dg[i][(j, l)] + jet.dg[j][(i, l)] - jet.dg[l][(i, j)]);
                }
                gamma[k][i][j] = 0.5 * acc;
            }
        }
    }
    // d_m g^{kl} = -g^{ka} g^{lb} d_m g_{ab}
    let mut dginv = [Matrix3::zeros(); 3];
    for m in 0..3 {
        dginv[m] = -jet.ginv * jet.dg[m] * jet.ginv;
    }
    let mut dgamma = [[[[0.0; 3]; 3]; 3]; 3];
    for m in 0..3 {
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut acc = 0.0;
                    for l in 0..3 {
                        acc += dginv[m][(k, l)]
                            * (jet.dg[i][(j, l)] + jet.dg[j][(i, l)] - jet.dg[l][(i, j)]);
                        acc += jet.ginv[(k, l)]
                            * (jet.d2g[m][i][(j, l)] + jet.d2g[m][j][(i, l)]
                                - jet.d2g[m][l][(i, j)]);
                    }
                    dgamma[m][k][i][j] = 0.5 * acc;
                }
            }
        }
    }
    Connection { gamma, dgamma }
}

/// Ricci and scalar curvature by the coordinate formula
/// `Ric_ij = d_k Gamma^k_ij - d_i Gamma^k_kj + Gamma^k_kl Gamma^l_ij - Gamma^k_il Gamma^l_kj`.
pub fn curvature(spec: &MetricSpec, x: Vector3<f64>) -> Result<CurvatureData> {
    let jet = metric_jet(spec, x)?;
    let conn = connection(&jet);
    let (gamma, dgamma) = (&conn.gamma, &conn.dgamma);
    let mut ric = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = 0.0;
            for k in 0..3 {
                acc += dgamma[k][k][i][j] - dgamma[i][k][k][j];
                for l in 0..3 {
                    acc += gamma[k][k][l] * gamma[l][i][j] - gamma[k][i][l] * gamma[l][k][j];
                }
            }
            ric[(i, j)] = acc;
        }
    }
    // enforce the symmetry that holds analytically
    ric = 0.5 * (ric + ric.transpose());
    let mut scalar = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            scalar += jet.ginv[(i, j)] * ric[(i, j)];
        }
    }
    Ok(CurvatureData {
        point: x,
        gamma: conn.gamma,
        ric,
        scalar,
    })
}

/// Static potential of the mass-2 Schwarzschild slice:
/// `N = (1 + 1/|x|)^{-1} (1 - 1/|x|)` with gradient and covariant Hessian.
pub fn potential_jet(x: Vector3<f64>) -> Result<PotentialJet> {
    if x.norm_squared() == 0.0 {
        return Err(Error::PointAtOrigin {
            kind: "schwarzschild",
        });
    }
    let r = x.norm();
    let n = (r - 1.0) / (r + 1.0);
    let np = 2.0 / ((r + 1.0) * (r + 1.0));
    let npp = -4.0 / ((r + 1.0).powi(3));
    let xhat = x / r;
    let dn = np * xhat;
    let hess_e =
        npp * xhat * xhat.transpose() + np / r * (Matrix3::identity() - xhat * xhat.transpose());
    let jet = metric_jet(&MetricSpec::schwarzschild(2.0), x)?;
    let conn = connection(&jet);
    let mut d2n = hess_e;
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = 0.0;
            for k in 0..3 {
                acc += conn.gamma[k][i][j] * dn[k];
            }
            d2n[(i, j)] -= acc;
        }
    }
    Ok(PotentialJet { n, dn, d2n })
}

/// `(D_{e_i} a)^k` for a constant vector `a`, as `out[k][i]`.
pub fn covariant_of_constant(conn: &Connection, a: Vector3<f64>) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for k in 0..3 {
        for i in 0..3 {
            let mut acc = 0.0;
            for m in 0..3 {
                acc += conn.gamma[k][i][m] * a[m];
            }
            out[k][i] = acc;
        }
    }
    out
}

/// `(D^2_{i,j} a)^k` for a constant vector `a`, as `out[k][i][j]`.
pub fn second_covariant_of_constant(conn: &Connection, a: Vector3<f64>) -> Rank3 {
    let t = covariant_of_constant(conn, a);
    let mut out = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for m in 0..3 {
                    acc += conn.dgamma[i][k][j][m] * a[m];
                }
                for l in 0..3 {
                    acc += conn.gamma[k][i][l] * t[l][j] - conn.gamma[l][i][j] * t[k][l];
                }
                out[k][i][j] = acc;
            }
        }
    }
    out
}
