//! The `verify` command: one pass/fail line per module invariant, with
//! measured errors. Convergence-sensitive checks are skipped (not failed)
//! when the configured band limit cannot resolve them.

use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functionals::{
    hawking_mass, lagrange_estimate, newtonian_flux, translation_variation_decomposed,
    willmore_energy,
};
use crate::io::{fmt_f64, CsvTable};
use crate::metrics::{
    connection, covariant_of_constant, curvature, metric_jet, potential_jet, AngularTerm,
    MetricSpec, PerturbationFamily,
};
use crate::oracles::{golden_table, radial4_leading, sphere_moment, GoldenEntry, MomentQuery};
use crate::solver::{flow_step, AreaTarget, SolverConfig};
use crate::sphere::{
    analyze, build_chart, harmonic_field, poisson_solve, project_mean, sphere_grad,
    sphere_laplacian, synthesize, HarmonicCoeffs, ScalarField,
};
use crate::surface::{
    conformal_relations_check, gauss_codazzi_residual, geometry_bundle, masked_ball_area,
    GraphSurface,
};

use super::{ArtifactWriter, Command, ExperimentConfig, RunArtifact};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    SkippedUnderresolved,
}

impl CheckStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::SkippedUnderresolved => "SKIPPED-UNDERRESOLVED",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub status: CheckStatus,
    pub note: String,
}

fn pass_if(name: &str, measured: f64, tolerance: f64, note: &str) -> CheckResult {
    CheckResult {
        name: name.into(),
        measured,
        tolerance,
        status: if measured <= tolerance {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        note: note.into(),
    }
}

fn skipped(name: &str, need: usize, have: usize) -> CheckResult {
    CheckResult {
        name: name.into(),
        measured: f64::NAN,
        tolerance: f64::NAN,
        status: CheckStatus::SkippedUnderresolved,
        note: format!("needs band limit >= {need}, have {have}"),
    }
}

fn random_graph(
    chart: &std::sync::Arc<crate::sphere::SphereChart>,
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

/// Run the whole invariant suite at the configured band limit.
pub fn run_checks(config: &ExperimentConfig) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let l = config.band_limit;
    let mut out = Vec::new();

    // -- sphere domain ------------------------------------------------------
    {
        let chart = build_chart(Vector3::new(0.1, 0.0, -0.2), 2.5, l)?;
        let area = chart.total_weight();
        let expect = 4.0 * std::f64::consts::PI * 2.5 * 2.5;
        out.push(pass_if(
            "sphere.quadrature_area",
            (area - expect).abs() / expect,
            1e-12,
            "sum of weights vs 4 pi lambda^2",
        ));

        let y = harmonic_field(&chart, 3, 2);
        let mut sq = 0.0;
        for i in 0..chart.n_theta() {
            for j in 0..chart.n_phi() {
                sq += chart.weight(i) * y.values[chart.node(i, j)].powi(2);
            }
        }
        out.push(pass_if(
            "sphere.orthonormality_y32",
            (sq / (2.5 * 2.5) - 1.0).abs(),
            1e-12,
            "self-quadrature of Y_32",
        ));

        let mut c = HarmonicCoeffs::zeros(l);
        for ll in 0..=l {
            for m in -(ll as i64)..=(ll as i64) {
                c.set(ll, m, rng.gen_range(-1.0..1.0));
            }
        }
        let f = synthesize(&c, &chart);
        let c2 = analyze(&f);
        let rt =
            c.a.iter()
                .zip(&c2.a)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        out.push(pass_if(
            "sphere.transform_round_trip",
            rt,
            1e-11,
            "analysis o synthesis on band-limited data",
        ));

        let mut cz = HarmonicCoeffs::zeros(l);
        for ll in 1..=l {
            for m in -(ll as i64)..=(ll as i64) {
                cz.set(ll, m, rng.gen_range(-1.0..1.0) / (1.0 + (ll * ll) as f64));
            }
        }
        let u = synthesize(&cz, &chart);
        let back = poisson_solve(&sphere_laplacian(&u))?;
        let green = u
            .values
            .iter()
            .zip(&back.values)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        out.push(pass_if(
            "sphere.green_identity",
            green,
            1e-9,
            "poisson_solve o laplacian = identity on mean-free fields",
        ));

        let g = synthesize(&cz, &chart);
        let lap_g = sphere_laplacian(&g);
        let gu = sphere_grad(&u);
        let gg = sphere_grad(&g);
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for i in 0..chart.n_theta() {
            let w = chart.weight(i);
            for j in 0..chart.n_phi() {
                let n = chart.node(i, j);
                lhs += w * u.values[n] * lap_g.values[n];
                rhs -= w * gu[n].dot(&gg[n]);
            }
        }
        out.push(pass_if(
            "sphere.gradient_compatibility",
            (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-12),
            1e-9,
            "int f lap g = -int grad f . grad g",
        ));
    }

    // gradient-estimate spot check for the poisson solve
    if l >= 32 {
        let mut constants = Vec::new();
        for &xi in &[0.5, 0.9, 0.99] {
            let ll = if xi > 0.95 { l.max(64) } else { l };
            let chart = build_chart(Vector3::new(0.0, 0.0, xi), 1.0, ll)?;
            let f_raw = ScalarField::from_fn(&chart, |x| x.norm_squared().recip());
            // band-limit the source, then apply the estimate to that source
            let f = synthesize(&analyze(&f_raw), &chart);
            let (_, perp) = project_mean(&f);
            let u = poisson_solve(&perp)?;
            let grad = sphere_grad(&u);
            let mut lhs = 0.0f64;
            let mut l1 = 0.0;
            let mut sup = 0.0f64;
            for i in 0..chart.n_theta() {
                let w = chart.weight(i);
                for j in 0..chart.n_phi() {
                    let n = chart.node(i, j);
                    let r = chart.position(i, j).norm();
                    lhs = lhs.max(r * grad[n].norm());
                    l1 += w * perp.values[n].abs();
                    sup = sup.max(r * r * perp.values[n].abs());
                }
            }
            constants.push(lhs / (l1 + sup));
        }
        let worst = constants.iter().fold(0.0f64, |a, c| a.max(*c));
        out.push(pass_if(
            "sphere.poisson_gradient_estimate",
            worst,
            10.0,
            &format!(
                "empirical constants at offsets 0.5/0.9/0.99: {} / {} / {}",
                fmt_f64(constants[0]),
                fmt_f64(constants[1]),
                fmt_f64(constants[2])
            ),
        ));
    } else {
        out.push(skipped("sphere.poisson_gradient_estimate", 32, l));
    }

    // -- metrics ------------------------------------------------------------
    {
        let fam = PerturbationFamily {
            amplitude: 0.03,
            angular: vec![AngularTerm {
                l: 2,
                m: 0,
                coeff: 1.0,
            }],
            r_cut: 2.0,
            decay_p: 2.0,
        };
        let specs = [
            MetricSpec::schwarzschild(2.0),
            MetricSpec::perturbed(2.0, fam.clone()),
        ];
        let mut worst = 0.0f64;
        for spec in &specs {
            for _ in 0..20 {
                let dir = Vector3::new(
                    rng.gen_range(-1.0f64..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
                .normalize();
                let x = rng.gen_range(2.0..100.0) * dir;
                let h = 1e-4 * x.norm();
                let jet = metric_jet(spec, x)?;
                for k in 0..3 {
                    let mut e = Vector3::zeros();
                    e[k] = 1.0;
                    let gp = metric_jet(spec, x + h * e)?.g;
                    let gm = metric_jet(spec, x - h * e)?.g;
                    let gp2 = metric_jet(spec, x + 2.0 * h * e)?.g;
                    let gm2 = metric_jet(spec, x - 2.0 * h * e)?.g;
                    let fd = (8.0 * (gp - gm) - (gp2 - gm2)) / (12.0 * h);
                    worst = worst.max((fd - jet.dg[k]).norm() / jet.dg[k].norm().max(1e-12));
                }
            }
        }
        out.push(pass_if(
            "metrics.fd_consistency",
            worst,
            1e-7,
            "analytic dg vs 4th-order central differences",
        ));

        let spec = MetricSpec::schwarzschild(2.0);
        let mut worst_ric = 0.0f64;
        let mut worst_r = 0.0f64;
        for _ in 0..20 {
            let dir = Vector3::new(
                rng.gen_range(-1.0f64..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalize();
            let x = rng.gen_range(2.0..50.0) * dir;
            let r = x.norm();
            let curv = curvature(&spec, x)?;
            let pref = 2.0 * (1.0 + 1.0 / r).powi(-2) / r.powi(3);
            let closed = pref * (nalgebra::Matrix3::identity() - 3.0 / (r * r) * x * x.transpose());
            worst_ric = worst_ric.max((curv.ric - closed).norm() / closed.norm());
            worst_r = worst_r.max(curv.scalar.abs() / pref);
        }
        out.push(pass_if(
            "metrics.vacuum_ricci",
            worst_ric.max(worst_r),
            1e-9,
            "jet-based Ricci and R = 0 vs the closed form",
        ));

        let mut worst = 0.0f64;
        for _ in 0..200 {
            let dir = Vector3::new(
                rng.gen_range(-1.0f64..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalize();
            let r = 2.0 * (250.0f64).powf(rng.gen_range(0.0..1.0));
            let x = r * dir;
            let pj = potential_jet(x)?;
            let ric = curvature(&spec, x)?.ric;
            worst = worst.max((pj.d2n - pj.n * ric).norm() / (1.0 + ric.norm()));
        }
        out.push(pass_if(
            "metrics.static_equation",
            worst,
            1e-8,
            "|D^2 N - N Ric| over 200 points, 2 <= |x| <= 500",
        ));

        let x = Vector3::new(1.5, -2.0, 4.0);
        let xi = Vector3::new(0.3, 0.7, -0.2);
        let jet = metric_jet(&spec, x)?;
        let conn = connection(&jet);
        let t = covariant_of_constant(&conn, xi);
        let r = x.norm();
        let pref = 2.0 / (1.0 + 1.0 / r) / r.powi(3);
        let mut worst = 0.0f64;
        for i in 0..3 {
            let mut e = Vector3::zeros();
            e[i] = 1.0;
            let closed = pref * (xi.dot(&e) * x - xi.dot(&x) * e - e.dot(&x) * xi);
            for k in 0..3 {
                worst = worst.max((t[k][i] - closed[k]).abs());
            }
        }
        out.push(pass_if(
            "metrics.covariant_closed_form",
            worst,
            1e-10,
            "covariant derivative of a constant field vs the closed form",
        ));

        let (s0, s1, s2) = fam.decay_check(40);
        let c = 10.0 * fam.amplitude;
        let measured = (s0 / c).max(s1 / (10.0 * c)).max(s2 / (100.0 * c));
        out.push(pass_if(
            "metrics.perturbation_decay",
            measured,
            1.0,
            "sampled |sigma| r^2, |d sigma| r^3, |d2 sigma| r^4 envelopes",
        ));
    }

    // -- surface geometry ---------------------------------------------------
    {
        let band = (l / 3).clamp(3, 8);
        let chart = build_chart(Vector3::new(0.2, 0.0, -0.1), 1.8, l)?;
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let s = random_graph(&chart, 0.05 * 1.8, band, &mut rng);
            let b = geometry_bundle(&s, &MetricSpec::euclidean())?;
            let ujet = chart.synthesize_jet3(&analyze(&s.u));
            for i in (0..chart.n_theta()).step_by(4) {
                let st = chart.sin_theta(i);
                for j in (0..chart.n_phi()).step_by(7) {
                    let n = chart.node(i, j);
                    let w = 1.0 + ujet.f[n] / 1.8;
                    let g_s = nalgebra::Matrix2::new(1.8 * 1.8, 0.0, 0.0, 1.8 * 1.8 * st * st);
                    let du = nalgebra::Vector2::new(ujet.ft[n], ujet.fp[n]);
                    let closed = w * w * g_s + du * du.transpose();
                    worst = worst.max((b.gamma[n] - closed).norm() / closed.norm());
                }
            }
        }
        out.push(pass_if(
            "surface.euclidean_closed_forms",
            worst,
            1e-9,
            "general-metric path vs graph closed forms",
        ));

        let s = random_graph(&chart, 0.1, band, &mut rng);
        let b = geometry_bundle(&s, &MetricSpec::euclidean())?;
        let mut energy = 0.0;
        for n in 0..b.node_count() {
            let (_, w) = b.euclidean_normal_weight(n);
            energy += b.mean_h[n] * b.mean_h[n] * w;
        }
        let lower = 16.0 * std::f64::consts::PI;
        out.push(pass_if(
            "surface.willmore_lower_bound",
            (lower - energy).max(0.0) / lower,
            1e-9,
            "int Hbar^2 >= 16 pi on closed graphs",
        ));

        if l >= 16 {
            let area_const = (3.0 + 2.0 * 2.0f64.sqrt()) / 16.0;
            let diam_const =
                17.0f64.powi(2) * 3.0f64.powi(4) / (2.0f64.powi(6) * std::f64::consts::PI.powi(2));
            let mut worst_area = 0.0f64;
            let mut worst_diam = 0.0f64;
            for _ in 0..3 {
                let s = random_graph(&chart, 0.08 * 1.8, 5, &mut rng);
                let b = geometry_bundle(&s, &MetricSpec::euclidean())?;
                let mut energy = 0.0;
                for n in 0..b.node_count() {
                    let (_, w) = b.euclidean_normal_weight(n);
                    energy += b.mean_h[n] * b.mean_h[n] * w;
                }
                for _ in 0..10 {
                    let k = rng.gen_range(0..b.node_count());
                    let x0 = b.pos[k]
                        + Vector3::new(
                            rng.gen_range(-0.5..0.5),
                            rng.gen_range(-0.5..0.5),
                            rng.gen_range(-0.5..0.5),
                        );
                    let r = rng.gen_range(0.5..3.0);
                    let ratio = masked_ball_area(&b, x0, r) / (r * r);
                    worst_area = worst_area.max(ratio / (area_const * energy));
                }
                let d = crate::surface::diameter(&b);
                worst_diam = worst_diam.max(d * d / (diam_const * b.area() * energy));
            }
            out.push(pass_if(
                "surface.simon_area_inequality",
                worst_area,
                1.0,
                "masked ball area ratio vs (3+2sqrt2)/16 energy",
            ));
            out.push(pass_if(
                "surface.simon_diameter_inequality",
                worst_diam,
                1.0,
                "diam^2 vs 17^2 3^4 / (2^6 pi^2) |Sigma| energy",
            ));
        } else {
            out.push(skipped("surface.simon_area_inequality", 16, l));
            out.push(skipped("surface.simon_diameter_inequality", 16, l));
        }

        if l >= 24 {
            let s = random_graph(&chart, 0.05 * 1.8, band, &mut rng);
            let r = gauss_codazzi_residual(&s, &MetricSpec::euclidean())?;
            out.push(pass_if(
                "surface.gauss_codazzi_random",
                r,
                1e-6,
                "div h - grad H - Ric(nu,.) on a random graph",
            ));
        } else {
            out.push(skipped("surface.gauss_codazzi_random", 24, l));
        }
        let round = GraphSurface::round(&build_chart(Vector3::zeros(), 10.0, l)?);
        let r = gauss_codazzi_residual(&round, &MetricSpec::schwarzschild(2.0))?;
        out.push(pass_if(
            "surface.gauss_codazzi_symmetric",
            r,
            1e-8,
            "centered Schwarzschild sphere",
        ));

        let rep = conformal_relations_check(&GraphSurface::round(&build_chart(
            Vector3::new(0.0, 0.0, 0.5),
            20.0,
            l,
        )?))?;
        out.push(pass_if(
            "surface.conformal_relations",
            rep.worst(),
            1e-9,
            "tilde quantities vs conformal transforms of Euclidean ones",
        ));
    }

    // -- functionals --------------------------------------------------------
    {
        let mut worst = 0.0f64;
        for r in [5.0, 10.0, 50.0, 100.0, 500.0] {
            let chart = build_chart(Vector3::zeros(), r, l)?;
            let b = geometry_bundle(
                &GraphSurface::round(&chart),
                &MetricSpec::schwarzschild(2.0),
            )?;
            worst = worst.max((hawking_mass(&b) - 2.0).abs());
        }
        out.push(pass_if(
            "functionals.hawking_conformal",
            worst,
            1e-6,
            "m_H = m for centered spheres across three decades",
        ));

        let mut worst = 0.0f64;
        for s in [1.0, 4.0] {
            let chart = build_chart(Vector3::zeros(), 3.0 * s, l)?;
            let b = geometry_bundle(&GraphSurface::round(&chart), &MetricSpec::euclidean())?;
            worst = worst
                .max((willmore_energy(&b) - 16.0 * std::f64::consts::PI).abs())
                .max(hawking_mass(&b).abs() / s);
        }
        out.push(pass_if(
            "functionals.scaling_covariance",
            worst,
            1e-9,
            "energy scale-invariant, m_H scales linearly",
        ));

        if l >= 24 {
            let fam = PerturbationFamily {
                amplitude: 0.02,
                angular: vec![AngularTerm {
                    l: 2,
                    m: 0,
                    coeff: 1.0,
                }],
                r_cut: 2.0,
                decay_p: 2.0,
            };
            let specs = [
                MetricSpec::euclidean(),
                MetricSpec::schwarzschild(2.0),
                MetricSpec::perturbed(2.0, fam),
            ];
            let mut worst_defect = 0.0f64;
            let mut worst_flux = 0.0f64;
            let mut worst_ortho = 0.0f64;
            for spec in &specs {
                for _ in 0..2 {
                    let lam = rng.gen_range(15.0..40.0);
                    let xi = Vector3::new(rng.gen_range(-0.3..0.3), 0.0, rng.gen_range(-0.3..0.3));
                    let chart = build_chart(xi, lam, l)?;
                    let s = random_graph(&chart, 0.02 * lam, 8, &mut rng);
                    let b = geometry_bundle(&s, spec)?;
                    let kappa = lagrange_estimate(&b)?;
                    let w = crate::functionals::acw_operator(&b, kappa);
                    let mut ortho = 0.0;
                    let mut scale = 0.0;
                    for n in 0..b.node_count() {
                        ortho += b.mean_h[n] * w[n] * b.dmu[n];
                        scale += (b.mean_h[n] * w[n]).abs() * b.dmu[n];
                    }
                    worst_ortho = worst_ortho.max(ortho.abs() / scale.max(1e-300));
                    for _ in 0..3 {
                        let a = Vector3::new(
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                        );
                        let rep = translation_variation_decomposed(&b, a, kappa)?;
                        worst_defect = worst_defect.max(rep.relative_defect());
                        let fscale = (4.0 * std::f64::consts::PI).max(a.norm() * b.area());
                        worst_flux = worst_flux
                            .max(rep.euclid_normal_flux.abs() / fscale)
                            .max(rep.euclid_kernel_flux.abs());
                    }
                }
            }
            out.push(pass_if(
                "functionals.radial1_defect",
                worst_defect,
                1e-7,
                "flux decomposition identity over the random corpus",
            ));
            out.push(pass_if(
                "functionals.divergence_fluxes",
                worst_flux,
                1e-9,
                "int g(a,nubar) dmubar and the kernel flux vanish",
            ));
            out.push(pass_if(
                "functionals.acw_orthogonality",
                worst_ortho,
                1e-10,
                "int H W dmu = 0 after the Lagrange estimate",
            ));
        } else {
            out.push(skipped("functionals.radial1_defect", 24, l));
            out.push(skipped("functionals.divergence_fluxes", 24, l));
            out.push(skipped("functionals.acw_orthogonality", 24, l));
        }

        let b = geometry_bundle(
            &GraphSurface::round(&build_chart(Vector3::new(0.5, 0.0, 0.0), 1.0, l.max(32))?),
            &MetricSpec::euclidean(),
        )?;
        let f_in = newtonian_flux(&b)?;
        let b = geometry_bundle(
            &GraphSurface::round(&build_chart(Vector3::new(0.0, 1.5, 0.0), 1.0, l.max(32))?),
            &MetricSpec::euclidean(),
        )?;
        let f_out = newtonian_flux(&b)?;
        let ok = f_in.encloses_origin && !f_out.encloses_origin;
        out.push(CheckResult {
            name: "functionals.newtonian_flux".into(),
            measured: (f_in.value - 4.0 * std::f64::consts::PI)
                .abs()
                .max(f_out.value.abs()),
            tolerance: 1e-8,
            status: if ok
                && (f_in.value - 4.0 * std::f64::consts::PI).abs() < 1e-8
                && f_out.value.abs() < 1e-8
            {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            note: "4 pi vs 0 for enclosing vs non-enclosing spheres".into(),
        });
    }

    // -- closed-form oracles -------------------------------------------------
    {
        let embedded = golden_table();
        let stored: Vec<GoldenEntry> = match &config.verify.golden_path {
            None => crate::io::parse_golden_json(include_str!("../../data/golden_moments.json"))?,
            Some(path) => crate::io::parse_golden_json(&std::fs::read_to_string(path)?)?,
        };
        let mut golden_err: Option<Error> = None;
        if stored.len() != embedded.len() {
            golden_err = Some(Error::Config(format!(
                "golden table has {} entries, expected {}",
                stored.len(),
                embedded.len()
            )));
        } else {
            for (s, e) in stored.iter().zip(&embedded) {
                if s.identity != e.identity || (s.offset - e.offset).abs() > 1e-15 {
                    golden_err = Some(Error::GoldenMismatch {
                        identity: format!("{} @ offset {}", e.identity, e.offset),
                        stored: s.value,
                        computed: e.value,
                    });
                    break;
                }
                if (s.value - e.value).abs() > 1e-12 * e.value.abs().max(1.0) {
                    golden_err = Some(Error::GoldenMismatch {
                        identity: format!("{} @ offset {}", e.identity, e.offset),
                        stored: s.value,
                        computed: e.value,
                    });
                    break;
                }
            }
        }
        out.push(CheckResult {
            name: "oracles.golden_table".into(),
            measured: if golden_err.is_some() { 1.0 } else { 0.0 },
            tolerance: 0.5,
            status: if golden_err.is_none() {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            note: golden_err
                .map(|e| e.to_string())
                .unwrap_or_else(|| "stored closed-form values match recomputation".into()),
        });

        // quadrature agreement at resolutions where Gauss quadrature of the
        // near-singular integrands converges (pole distance sets the rate)
        let mut worst = 0.0f64;
        for &xi in &[0.0, 0.3, 0.5, 0.9, 0.99, 1.5, 2.0] {
            let need = match xi {
                x if x <= 0.5 => 32,
                x if x <= 0.9 => 160,
                x if x < 1.0 => 1600,
                _ => 64,
            };
            let chart = build_chart(Vector3::new(0.0, 0.0, xi), 1.0, need)?;
            for k in 1..=6u32 {
                let q = MomentQuery {
                    exponent: k,
                    offset: xi,
                    lambda: 1.0,
                };
                let Ok(closed) = sphere_moment(q) else {
                    continue;
                };
                let quad = chart.integrate(|_, _, p| p.norm().powi(-(k as i32)));
                worst = worst.max((quad - closed).abs() / closed.abs());
            }
        }
        out.push(pass_if(
            "oracles.quadrature_agreement",
            worst,
            1e-10,
            "moments vs quadrature at convergence-adequate band limits",
        ));

        let mut worst = 0.0f64;
        for k in 1..=6u32 {
            for lam in [0.5, 3.0, 20.0] {
                let a = sphere_moment(MomentQuery {
                    exponent: k,
                    offset: 0.5,
                    lambda: lam,
                })?;
                let b = sphere_moment(MomentQuery {
                    exponent: k,
                    offset: 0.5,
                    lambda: 1.0,
                })?;
                worst = worst.max((a - b * lam.powi(2 - k as i32)).abs() / a.abs());
            }
        }
        out.push(pass_if(
            "oracles.lambda_scaling",
            worst,
            1e-12,
            "moment(k, xi, lambda) = lambda^{2-k} moment(k, xi, 1)",
        ));

        let ratio = |xi: f64| -> Result<f64> {
            let (i, _) = radial4_leading(xi, 1.0)?;
            Ok(i * (1.0 - xi) * (1.0 - xi) / std::f64::consts::PI)
        };
        let (r1, r2, r3) = (ratio(0.5)?, ratio(0.9)?, ratio(0.99)?);
        let monotone = r1 < r2 && r2 < r3 && r3 < 1.0;
        out.push(CheckResult {
            name: "oracles.radial4_ratio".into(),
            measured: (r2 - 0.9701).abs().max((r3 - 0.99949).abs()),
            tolerance: 1e-3,
            status: if monotone && (r2 - 0.9701).abs() < 1e-3 && (r3 - 0.99949).abs() < 1e-4 {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            note: format!(
                "ratios {} / {} / {}, monotone = {monotone}",
                fmt_f64(r1),
                fmt_f64(r2),
                fmt_f64(r3)
            ),
        });
    }

    // -- solver -------------------------------------------------------------
    {
        let r = 10.0;
        let spec = MetricSpec::schwarzschild(2.0);
        let chart = build_chart(Vector3::zeros(), r, l.min(16))?;
        let s = GraphSurface::round(&chart);
        let area = geometry_bundle(&s, &spec)?.area();
        let cfg = SolverConfig {
            target: AreaTarget::Area(area),
            dt: 1.0,
            c_bi: 2.0,
            max_iterations: 10,
            tolerance: 1e-9,
            trust_region: 0.9,
        };
        let (stepped, _, residual) = flow_step(&s, &spec, &cfg, 1.0, area)?;
        let drift = stepped
            .u
            .values
            .iter()
            .zip(&s.u.values)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        out.push(pass_if(
            "solver.fixed_point",
            drift.max(residual),
            1e-10,
            "exact solution is stationary under one flow step",
        ));

        let chart = build_chart(Vector3::zeros(), 1.0, l.min(16))?;
        let y20 = harmonic_field(&chart, 2, 0);
        let scale = 0.05 / y20.max_abs();
        let bump = ScalarField::new(
            chart.clone(),
            y20.values.iter().map(|v| v * scale).collect(),
        );
        let s = GraphSurface::new(chart.clone(), bump);
        let spec = MetricSpec::euclidean();
        let b0 = geometry_bundle(&s, &spec)?;
        let e0 = willmore_energy(&b0);
        let cfg = SolverConfig {
            target: AreaTarget::Area(b0.area()),
            ..cfg
        };
        let (stepped, _, _) = flow_step(&s, &spec, &cfg, 0.02, b0.area())?;
        let e1 = willmore_energy(&geometry_bundle(&stepped, &spec)?);
        out.push(pass_if(
            "solver.energy_descent",
            (e1 - e0) / e0,
            0.0,
            "one accepted step does not increase the energy",
        ));
    }

    Ok(out)
}

pub fn cmd_verify(config: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifact> {
    let mut writer = ArtifactWriter::new(Command::Verify, config, out_dir)?;
    writer.document_table(
        "verify_results.csv",
        &[
            ("check", "invariant identifier, module.name"),
            ("measured", "measured error or normalized margin"),
            ("tolerance", "pass threshold"),
            ("status", "PASS, FAIL, or SKIPPED-UNDERRESOLVED"),
            ("note", "what was measured"),
        ],
    );
    writer.write_manifest()?;

    let checks = run_checks(config)?;
    let mut table = CsvTable::new(
        "verify_results",
        &["check", "measured", "tolerance", "status", "note"],
    );
    let mut failures = 0;
    for c in &checks {
        if c.status == CheckStatus::Fail {
            failures += 1;
        }
        table.push_row(vec![
            c.name.clone(),
            fmt_f64(c.measured),
            fmt_f64(c.tolerance),
            c.status.as_str().to_string(),
            c.note.clone(),
        ]);
    }
    writer.write_table(&table)?;
    writer.note(format!("{} checks, {failures} failures", checks.len()));
    writer.finish(failures)
}
