//! Gauss-Legendre quadrature and normalized associated Legendre tables.
//!
//! The normalization is the real orthonormal spherical-harmonic convention:
//! with `Q_l^m` as produced here, the basis functions
//! `Y_{l0} = Q_l^0(cos t)`, `Y_{lm} = sqrt(2) Q_l^m(cos t) cos(m p)` and
//! `Y_{l,-m} = sqrt(2) Q_l^m(cos t) sin(m p)` satisfy `int Y^2 dOmega = 1`
//! on the unit sphere.

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; nodes are returned in
/// increasing order and converge to ~1e-15 for the sizes used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        // Tricomi-style initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_poly_and_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_poly_and_deriv(n, x);
        nodes[n - 1 - k] = x;
        weights[n - 1 - k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_poly_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for l in 1..n {
        let p2 = ((2 * l + 1) as f64 * x * p1 - l as f64 * p0) / (l + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Tables of `Q_l^m` and `dQ_l^m/dtheta` at a fixed set of colatitude nodes.
///
/// Layout: for each order `m` the block holds rows `l = m..=lmax`, each row
/// of length `n_theta`. Poles are excluded by construction of the grid, so
/// the `1/sin` factors in the derivative recurrence stay bounded.
pub struct AssocLegendre {
    pub lmax: usize,
    pub n_theta: usize,
    q: Vec<f64>,
    dq: Vec<f64>,
    block_offset: Vec<usize>,
}

impl AssocLegendre {
    pub fn build(lmax: usize, cos_t: &[f64], sin_t: &[f64]) -> Self {
        let n = cos_t.len();
        let mut block_offset = Vec::with_capacity(lmax + 2);
        let mut total = 0usize;
        for m in 0..=lmax {
            block_offset.push(total);
            total += (lmax + 1 - m) * n;
        }
        block_offset.push(total);
        let mut q = vec![0.0; total];
        let mut dq = vec![0.0; total];

        let y00 = 0.5 / std::f64::consts::PI.sqrt();
        // Q_m^m seeds, then upward recurrence in l for each m.
        let mut qmm: Vec<f64> = vec![y00; n];
        for m in 0..=lmax {
            if m > 0 {
                let fac = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
                for i in 0..n {
                    qmm[i] *= fac * sin_t[i];
                }
            }
            let base = block_offset[m];
            q[base..base + n].copy_from_slice(&qmm);
            if m < lmax {
                let fac = (2.0 * m as f64 + 3.0).sqrt();
                for i in 0..n {
                    q[base + n + i] = fac * cos_t[i] * qmm[i];
                }
            }
            for l in (m + 2)..=lmax {
                let lf = l as f64;
                let mf = m as f64;
                let alpha = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let beta = ((2.0 * lf + 1.0) / (2.0 * lf - 3.0)
                    * ((lf - 1.0) * (lf - 1.0) - mf * mf)
                    / (lf * lf - mf * mf))
                    .sqrt();
                let row = base + (l - m) * n;
                let row1 = base + (l - 1 - m) * n;
                let row2 = base + (l - 2 - m) * n;
                for i in 0..n {
                    q[row + i] = alpha * cos_t[i] * q[row1 + i] - beta * q[row2 + i];
                }
            }
            // dQ_l^m/dtheta = (l x Q_l^m - c_l^m Q_{l-1}^m)/sin
            for l in m..=lmax {
                let lf = l as f64;
                let mf = m as f64;
                let row = base + (l - m) * n;
                if l == m {
                    for i in 0..n {
                        dq[row + i] = lf * cos_t[i] / sin_t[i] * q[row + i];
                    }
                } else {
                    let c = ((lf * lf - mf * mf) * (2.0 * lf + 1.0) / (2.0 * lf - 1.0)).sqrt();
                    let row1 = base + (l - 1 - m) * n;
                    for i in 0..n {
                        dq[row + i] = (lf * cos_t[i] * q[row + i] - c * q[row1 + i]) / sin_t[i];
                    }
                }
            }
        }
        Self {
            lmax,
            n_theta: n,
            q,
            dq,
            block_offset,
        }
    }

    #[inline]
    pub fn row_q(&self, l: usize, m: usize) -> &[f64] {
        let base = self.block_offset[m] + (l - m) * self.n_theta;
        &self.q[base..base + self.n_theta]
    }

    #[inline]
    pub fn row_dq(&self, l: usize, m: usize) -> &[f64] {
        let base = self.block_offset[m] + (l - m) * self.n_theta;
        &self.dq[base..base + self.n_theta]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(9);
        // degree 16 is integrated exactly by a 9-point rule
        let quad: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(16)).sum();
        assert!((quad - 2.0 / 17.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn associated_legendre_orthonormal() {
        let n = 40;
        let (x, w) = gauss_legendre(n);
        let s: Vec<f64> = x.iter().map(|x| (1.0 - x * x).sqrt()).collect();
        let tab = AssocLegendre::build(20, &x, &s);
        // 2*pi * int Q_l^m Q_l'^m dx = delta_{ll'}
        for m in [0usize, 1, 3, 7] {
            for l in m..=12 {
                for lp in m..=12 {
                    let a = tab.row_q(l, m);
                    let b = tab.row_q(lp, m);
                    let mut acc = 0.0;
                    for i in 0..n {
                        acc += w[i] * a[i] * b[i];
                    }
                    acc *= 2.0 * std::f64::consts::PI;
                    let want = if l == lp { 1.0 } else { 0.0 };
                    assert!((acc - want).abs() < 1e-12, "l={l} lp={lp} m={m}: {acc}");
                }
            }
        }
    }

    #[test]
    fn theta_derivative_matches_finite_difference() {
        let lmax = 10;
        let thetas: Vec<f64> = (1..20).map(|k| 0.15 * k as f64).collect();
        let h = 1e-6;
        for &t in &thetas {
            if t >= std::f64::consts::PI {
                break;
            }
            let build = |t: f64| {
                let x = [t.cos()];
                let s = [t.sin()];
                AssocLegendre::build(lmax, &x, &s)
            };
            let tab = build(t);
            let plus = build(t + h);
            let minus = build(t - h);
            for (l, m) in [(3usize, 0usize), (5, 3), (8, 8), (10, 1)] {
                let fd = (plus.row_q(l, m)[0] - minus.row_q(l, m)[0]) / (2.0 * h);
                let an = tab.row_dq(l, m)[0];
                assert!(
                    (fd - an).abs() < 1e-7 * (1.0 + an.abs()),
                    "l={l} m={m} t={t}: fd={fd} an={an}"
                );
            }
        }
    }
}
