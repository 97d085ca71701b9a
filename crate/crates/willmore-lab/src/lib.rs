//! Numerical laboratory for area-constrained Willmore spheres in
//! asymptotically Schwarzschild 3-manifolds.
//!
//! The crate computes curvature functionals (Willmore energy, Hawking mass)
//! of radial-graph surfaces over coordinate spheres, solves the
//! area-constrained Willmore equation by semi-implicit constrained gradient
//! flow, and cross-checks a family of exact integral identities against
//! closed forms.

pub mod error;
pub mod experiments;
pub mod functionals;
pub mod io;
pub mod metrics;
pub mod oracles;
pub mod solver;
pub mod sphere;
pub mod surface;
pub mod svg;
#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};

/// Assert two floats agree within an absolute tolerance.
#[macro_export]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b, tol) = ($a, $b, $tol);
        assert!(
            (a - b).abs() <= tol,
            "{} = {a:.15e} vs {} = {b:.15e} (|diff| = {:.3e} > {tol:.1e})",
            stringify!($a),
            stringify!($b),
            (a - b).abs()
        );
    }};
}
