//! Closed-form evaluations of the sphere integrals and inner-product
//! identities used as ground truth by the other modules' tests.
//!
//! Implemented independently of the quadrature machinery so that each side
//! can serve as the other's oracle.

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Query for `int_{S_lambda(lambda xi)} |x|^{-k} dmu_bar`.
#[derive(Clone, Copy, Debug)]
pub struct MomentQuery {
    pub exponent: u32,
    pub offset: f64,
    pub lambda: f64,
}

/// Closed-form moment; the unit-radius value scales by `lambda^{2-k}`.
pub fn sphere_moment(q: MomentQuery) -> Result<f64> {
    let xi = q.offset;
    if xi < 0.0 {
        return Err(Error::InvalidDomain(format!("offset {xi} must be >= 0")));
    }
    if (xi - 1.0).abs() < 1e-14 {
        return Err(Error::InvalidDomain(
            "offset magnitude 1 is singular".into(),
        ));
    }
    let pi = std::f64::consts::PI;
    let e = xi * xi;
    let base = match q.exponent {
        1 => {
            if xi < 1.0 {
                4.0 * pi
            } else {
                4.0 * pi / xi
            }
        }
        2 => {
            if xi < 1e-3 {
                // series of 2 pi log((1+s)/(1-s))/s, cancellation-safe
                4.0 * pi * (1.0 + e / 3.0 + e * e / 5.0 + e * e * e / 7.0)
            } else {
                2.0 * pi / xi * ((1.0 + xi) / (1.0 - xi).abs()).ln()
            }
        }
        3 => {
            if xi < 1.0 {
                4.0 * pi / (1.0 - e)
            } else {
                4.0 * pi / (xi * (e - 1.0))
            }
        }
        4 => 4.0 * pi / ((1.0 - e) * (1.0 - e)),
        5 => {
            if xi < 1.0 {
                4.0 * pi / 3.0 * (3.0 + e) / (1.0 - e).powi(3)
            } else {
                4.0 * pi / 3.0 / xi * (1.0 + 3.0 * e) / (e - 1.0).powi(3)
            }
        }
        6 => 4.0 * pi * (1.0 + e) / (1.0 - e).powi(4),
        k => {
            return Err(Error::InvalidDomain(format!(
                "exponent {k} outside the tabulated range 1..=6"
            )))
        }
    };
    Ok(base * q.lambda.powi(2 - q.exponent as i32))
}

/// The three inner products on the unit offset sphere `S_1(xi)`:
/// `(g(x,nu), g(x,xi), g(xi,nu))` from `|x|` and `|xi|` alone.
pub fn inner_product_values(x_norm_sq: f64, xi_norm_sq: f64) -> (f64, f64, f64) {
    let s = x_norm_sq;
    let e = xi_norm_sq;
    (
        0.5 * (s + 1.0 - e),
        0.5 * (s + e - 1.0),
        0.5 * (s - 1.0 - e),
    )
}

/// Same identities evaluated from an actual point and offset, for tests.
pub fn inner_products_at(x: Vector3<f64>, xi: Vector3<f64>) -> (f64, f64, f64) {
    inner_product_values(x.norm_squared(), xi.norm_squared())
}

/// Exact data for a centered round sphere of Euclidean radius `r` in the
/// Schwarzschild slice of mass `m`.
#[derive(Clone, Copy, Debug)]
pub struct SchwarzschildSphere {
    pub mean_curvature: f64,
    pub area: f64,
    pub hawking_mass: f64,
    pub kappa: f64,
}

pub fn schwarzschild_round_sphere(m: f64, r: f64) -> SchwarzschildSphere {
    assert!(r > 0.5 * m, "sphere must sit outside the horizon");
    let phi = 1.0 + 0.5 * m / r;
    SchwarzschildSphere {
        mean_curvature: 2.0 * (1.0 - 0.5 * m / r) / (r * phi.powi(3)),
        area: 4.0 * std::f64::consts::PI * r * r * phi.powi(4),
        hawking_mass: m,
        kappa: 2.0 * m * phi.powi(-6) / r.powi(3),
    }
}

/// Exact value and leading-order prediction of
/// `lambda^{-1} int [ |x|^{-4} g(xi,nu) - 4 |x|^{-6} g(x,xi) g(x,nu) ] dmu`
/// on `S_lambda(lambda xi)`.
///
/// Reduction on the unit sphere: with e = |xi|^2 and s = |x|^2, the
/// integrand equals `-s^{-1}/2 - (1+e) s^{-2}/2 + (1-e)^2 s^{-3}`, so the
/// integral is `-M2/2 - (1+e) M4/2 + (1-e)^2 M6`, which collapses to
/// `2 pi (1+e)/(1-e)^2 - (pi/|xi|) log((1+|xi|)/(1-|xi|))`.
pub fn radial4_leading(offset: f64, lambda: f64) -> Result<(f64, f64)> {
    if !(0.0 < offset && offset < 1.0) {
        return Err(Error::InvalidDomain(format!(
            "radial4 leading term needs 0 < |xi| < 1, got {offset}"
        )));
    }
    let pi = std::f64::consts::PI;
    let e = offset * offset;
    let unit = 2.0 * pi * (1.0 + e) / ((1.0 - e) * (1.0 - e))
        - pi / offset * ((1.0 + offset) / (1.0 - offset)).ln();
    let exact = unit / lambda.powi(3);
    let asymptotic = pi / (lambda.powi(3) * (1.0 - offset) * (1.0 - offset));
    Ok((exact, asymptotic))
}

/// The standard offsets used by the golden table.
pub const GOLDEN_OFFSETS: [f64; 7] = [0.0, 0.3, 0.5, 0.9, 0.99, 1.5, 2.0];

/// Entry in the golden JSON table of closed-form values.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize, PartialEq)]
pub struct GoldenEntry {
    pub identity: String,
    pub offset: f64,
    pub value: f64,
}

/// All tabulated moments at the golden offsets (unit radius), skipping
/// combinations outside the domain of validity.
pub fn golden_table() -> Vec<GoldenEntry> {
    let mut out = Vec::new();
    for &xi in &GOLDEN_OFFSETS {
        for k in 1..=6u32 {
            let q = MomentQuery {
                exponent: k,
                offset: xi,
                lambda: 1.0,
            };
            if let Ok(v) = sphere_moment(q) {
                out.push(GoldenEntry {
                    identity: format!("moment_k{k}"),
                    offset: xi,
                    value: v,
                });
            }
        }
    }
    for &xi in &GOLDEN_OFFSETS {
        if 0.0 < xi && xi < 1.0 {
            let (exact, _) = radial4_leading(xi, 1.0).unwrap();
            out.push(GoldenEntry {
                identity: "radial4_exact".into(),
                offset: xi,
                value: exact,
            });
        }
    }
    out
}
