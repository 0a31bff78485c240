//! Seeded self-checks, reported as `suite,check,value,tolerance,status` rows.

use nalgebra::{Matrix2, Matrix3, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ribbonlim::frames::{integrate_frame, orthogonality_defect, Profile};
use ribbonlim::geometry::{
    adapted_coefficients, builtin_chart, uniform_grid, ChartKind, FrameCoefficients, NaturalCurvature,
};
use ribbonlim::quadratic_forms::{alpha_constants, orthotropic_alphas, Rigidity, SymMat2, Voigt3};
use ribbonlim::reduced_density::{orthotropic_qbar, qbar, sadowsky_corrected, DensityContext, RibbonModel};
use ribbonlim::relaxation::{brute_force_biconjugate, relaxed_integrand, two_point_decomposition, RelaxationProblem};
use ribbonlim::surface::{corrugate, rank_one_field, ruled_surface, transverse_grid, width_bound};
use ribbonlim::variational::{minimize_pointwise, search_radius, spontaneous_profile, DEFAULT_TOLERANCE};

use crate::commands::linspace;
use crate::error::CliError;
use crate::table::{num, Report};

pub const SUITES: [&str; 6] = ["constants", "relaxation", "density", "frames", "surface", "spontaneous"];

#[derive(Debug, Clone)]
pub struct Check {
    pub suite: &'static str,
    pub check: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Passes when `value ≤ tolerance`.
fn at_most(suite: &'static str, check: &'static str, value: f64, tolerance: f64) -> Check {
    Check {
        suite,
        check,
        value,
        tolerance,
        pass: value <= tolerance,
    }
}

/// Passes when `value ≥ tolerance`.
fn at_least(suite: &'static str, check: &'static str, value: f64, tolerance: f64) -> Check {
    Check {
        suite,
        check,
        value,
        tolerance,
        pass: value >= tolerance,
    }
}

pub struct SuiteOutput {
    pub checks: Vec<Check>,
    /// Extra CSV section: column line followed by rows.
    pub detail: Option<(String, Vec<Vec<f64>>)>,
}

fn rng(seed: u64, suite: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(suite as u64))
}

fn random_spd(rng: &mut ChaCha8Rng) -> Rigidity {
    let a = Matrix3::from_fn(|_, _| rng.gen_range(-2.0..2.0));
    let delta = rng.gen_range(0.05..1.0);
    Rigidity::from_matrix(a.transpose() * a + Matrix3::identity() * delta).expect("positive definite")
}

fn random_orthotropic(rng: &mut ChaCha8Rng) -> [f64; 4] {
    let k11: f64 = rng.gen_range(0.2..3.0);
    let k22 = rng.gen_range(0.2..3.0);
    let g = (k11 * k22).sqrt();
    let k12 = rng.gen_range(-0.9..0.9) * g;
    let k33 = rng.gen_range(1.0..2.0) * 0.5 * (g - k12);
    [k11, k12, k22, k33]
}

fn random_context(rng: &mut ChaCha8Rng) -> Result<DensityContext, CliError> {
    let c = random_spd(rng);
    let angle = rng.gen_range(-0.9..0.9f64);
    let (s, co) = angle.sin_cos();
    let d1 = Vector2::new(co, s);
    let d2 = Vector2::new(-s, co) * rng.gen_range(0.5..2.0) + d1 * rng.gen_range(-0.4..0.4);
    let a0 = SymMat2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    Ok(DensityContext::new(c, Matrix2::from_columns(&[d1, d2]), a0)?)
}

fn constants(seed: u64) -> Result<SuiteOutput, CliError> {
    const S: &str = "constants";
    let sad = alpha_constants(&Rigidity::sadowsky())?;
    let iso = alpha_constants(&Rigidity::isotropic(1.0, 1.0)?)?;
    let mut r = rng(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let [k11, k12, k22, k33] = random_orthotropic(&mut r);
        let closed = orthotropic_alphas(k11, k12, k22, k33)?;
        let bisected = alpha_constants(&Rigidity::orthotropic(k11, k12, k22, k33)?)?;
        worst = worst.max((closed.plus - bisected.plus).abs()).max((closed.minus - bisected.minus).abs());
    }
    Ok(SuiteOutput {
        checks: vec![
            at_most(S, "sadowsky", (sad.plus - 2.0).abs().max((sad.minus - 2.0).abs()), 1e-9),
            at_most(S, "isotropic", (iso.plus - 2.0).abs().max((iso.minus - 6.0).abs()), 1e-9),
            at_most(S, "orthotropic_closed_form", worst, 1e-9),
        ],
        detail: None,
    })
}

fn relaxation(seed: u64) -> Result<SuiteOutput, CliError> {
    const S: &str = "relaxation";
    const CASES: usize = 6;
    const RADIUS: f64 = 6.0;
    let mut r = rng(seed, 1);
    let cases: Vec<(Rigidity, f64, Voigt3)> = (0..CASES)
        .map(|_| {
            let c = random_spd(&mut r);
            let z = r.gen_range(-1.0..1.0);
            let m = Voigt3::new(r.gen_range(-1.5..1.5), r.gen_range(-1.5..1.5), r.gen_range(-1.5..1.5));
            (c, z, m)
        })
        .collect();
    let mut rows = Vec::new();
    let (mut decomposition, mut below, mut oracle_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (i, (c, z, m)) in cases.into_iter().enumerate() {
        let p = RelaxationProblem::new(c, z)?;
        let formula = relaxed_integrand(&p, m);
        let d = two_point_decomposition(&p, m)?;
        let oracle = brute_force_biconjugate(&p, m, RADIUS, 32)?;
        let scale = formula.abs().max(1.0);
        let rel = (oracle - formula) / scale;
        decomposition = decomposition.max((d.value - formula).abs() / scale);
        below = below.max(formula - oracle);
        oracle_err = oracle_err.max(rel.abs());
        let detm = ribbonlim::quadratic_forms::det_form(m);
        rows.push(vec![(seed * CASES as u64 + i as u64) as f64, detm, z, formula, d.value, oracle, rel]);
    }
    Ok(SuiteOutput {
        checks: vec![
            at_most(S, "decomposition_rel_err", decomposition, 1e-8),
            at_most(S, "oracle_below_formula", below, 1e-9),
            at_most(S, "oracle_rel_err_n32", oracle_err, 0.1),
        ],
        detail: Some(("seed,detm,z,formula,decomposition,oracle,rel_err".into(), rows)),
    })
}

fn density(seed: u64) -> Result<SuiteOutput, CliError> {
    const S: &str = "density";
    let flat = DensityContext::flat(Rigidity::sadowsky())?;
    let grid = linspace(-3.0, 3.0, 61);
    let sadowsky = grid
        .par_iter()
        .map(|&mu| {
            grid.iter()
                .map(|&tau| (qbar(&flat, mu, tau).value - sadowsky_corrected(mu, tau)).abs())
                .fold(0.0, f64::max)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max);
    let spots = [((1.0, 0.0), 1.0), ((0.0, 1.0), 4.0), ((1.0, 1.0), 4.0), ((2.0, 1.0), 6.25)]
        .iter()
        .map(|&((mu, tau), v)| (qbar(&flat, mu, tau).value - v).abs())
        .fold(0.0, f64::max);
    let mut r = rng(seed, 2);
    let coarse = linspace(-3.0, 3.0, 21);
    let mut ortho: f64 = 0.0;
    for _ in 0..5 {
        let [k11, k12, k22, k33] = random_orthotropic(&mut r);
        let ctx = DensityContext::flat(Rigidity::orthotropic(k11, k12, k22, k33)?)?;
        for &mu in &coarse {
            for &tau in &coarse {
                let closed = orthotropic_qbar(k11, k12, k22, k33, mu, tau)?;
                ortho = ortho.max((qbar(&ctx, mu, tau).value - closed).abs() / closed.abs().max(1.0));
            }
        }
    }
    Ok(SuiteOutput {
        checks: vec![
            at_most(S, "sadowsky_grid", sadowsky, 1e-8),
            at_most(S, "sadowsky_spots", spots, 1e-10),
            at_most(S, "orthotropic_grid", ortho, 1e-8),
        ],
        detail: None,
    })
}

fn frames(seed: u64) -> Result<SuiteOutput, CliError> {
    const S: &str = "frames";
    let n = 10_000;
    let mut r = rng(seed, 3);
    let grid = uniform_grid(1.0, n);
    let coeffs = FrameCoefficients {
        kappa: (0..=n).map(|_| r.gen_range(-2.0..2.0)).collect(),
        mu: (0..=n).map(|_| r.gen_range(-2.0..2.0)).collect(),
        tau: (0..=n).map(|_| r.gen_range(-2.0..2.0)).collect(),
    };
    let path = integrate_frame(&coeffs, &Matrix3::identity(), &grid)?;
    let drift = path.rotations().iter().map(orthogonality_defect).fold(0.0, f64::max);
    let circle = uniform_grid(std::f64::consts::PI, n);
    let loop_path = integrate_frame(&FrameCoefficients::constant(n + 1, 0.0, 2.0, 0.0), &Matrix3::identity(), &circle)?;
    let closure = (loop_path.point(n) - loop_path.point(0)).norm();
    let run = |n: usize| -> Result<(Matrix3<f64>, nalgebra::Vector3<f64>), CliError> {
        let g = uniform_grid(2.0, n);
        let coeffs = FrameCoefficients {
            kappa: g.iter().map(|t| 0.5 * t.cos()).collect(),
            mu: g.iter().map(|t| 1.0 + t * t).collect(),
            tau: g.iter().map(|t| (3.0 * t).sin()).collect(),
        };
        let p = integrate_frame(&coeffs, &Matrix3::identity(), &g)?;
        Ok((*p.rotation(n), p.point(n)))
    };
    let (r_ref, y_ref) = run(1 << 13)?;
    let errors = [64, 128, 256]
        .iter()
        .map(|&n| run(n).map(|(r, y)| (r - r_ref).amax().max((y - y_ref).amax())))
        .collect::<Result<Vec<_>, _>>()?;
    let order = errors.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    Ok(SuiteOutput {
        checks: vec![
            at_most(S, "so3_drift", drift, 1e-12),
            at_most(S, "circle_closure", closure, 1e-6),
            at_least(S, "convergence_order", order, 1.9),
        ],
        detail: None,
    })
}

fn surface() -> Result<SuiteOutput, CliError> {
    const S: &str = "surface";
    const KAPPA0: f64 = 0.4;
    const TURN: f64 = 0.3;
    let metric_error = |n: usize, ns: usize| -> Result<(f64, f64), CliError> {
        let chart = builtin_chart(ChartKind::Arc { kappa0: KAPPA0 }, 2.0, n)?;
        let m: Vec<SymMat2> = chart
            .nodes()
            .iter()
            .map(|&t| {
                let psi = (KAPPA0 + TURN) * t;
                SymMat2::outer(&Vector2::new(psi.cos(), psi.sin())) * (1.0 + 0.5 * t.sin())
            })
            .collect();
        let field = rank_one_field(&m, &chart)?;
        let coeffs = adapted_coefficients(&chart, &m)?;
        let path = integrate_frame(&coeffs, &Matrix3::identity(), chart.nodes())?;
        let eta = width_bound(&field, &chart, 0.5, 0.5)?;
        let mesh = ruled_surface(&path, &field, &chart, eta, &transverse_grid(eta, ns))?;
        let mut err: f64 = 0.0;
        for i in 0..mesh.t.len() - 1 {
            for j in 0..mesh.s.len() - 1 {
                err = err.max((mesh.surface_metric(i, j) - mesh.flat_metric(i, j)).amax());
            }
        }
        // |det ∇Φ| ≥ (1 - margin) min |p·B'| across the strip
        let along = (0..chart.len()).map(|i| field.p[i].dot(&chart.tangent(i)).abs()).fold(f64::INFINITY, f64::min);
        let jac = mesh.jacobian.iter().map(|j| j.abs()).fold(f64::INFINITY, f64::min) - 0.5 * along;
        Ok((err, jac))
    };
    let runs = [(100, 5), (200, 9), (400, 17)]
        .iter()
        .map(|&(n, ns)| metric_error(n, ns))
        .collect::<Result<Vec<_>, _>>()?;
    let order = runs.windows(2).map(|w| (w[0].0 / w[1].0).log2()).fold(f64::INFINITY, f64::min);
    let jac = runs.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);

    let chart = builtin_chart(ChartKind::Rectangle, 1.0, 256)?;
    let model = RibbonModel::new(Rigidity::sadowsky(), chart, NaturalCurvature::zero())?;
    let profile = Profile::constant(model.chart().nodes(), 0.5, 1.0);
    let c = corrugate(&model, &profile, 64)?;
    let target = qbar(&model.context(0)?, 0.5, 1.0).value;
    let gap = (c.mean_energy() - target).abs() / target;
    let det = c.nodal.iter().map(|m| m.det().abs()).fold(0.0, f64::max);
    Ok(SuiteOutput {
        checks: vec![
            at_least(S, "isometry_order", order, 1.0),
            at_least(S, "jacobian_margin", jac, -1e-12),
            at_most(S, "corrugation_energy_gap", gap, 0.02),
            at_most(S, "corrugation_det", det, 1e-9),
        ],
        detail: None,
    })
}

/// Best grid value over `[cx ± r] × [cy ± r]`, and its location.
fn grid_search(ctx: &DensityContext, cx: f64, cy: f64, r: f64, n: usize) -> (f64, f64, f64) {
    let g = linspace(-r, r, n);
    g.par_iter()
        .map(|&dx| {
            g.iter()
                .map(|&dy| (qbar(ctx, cx + dx, cy + dy).value, cx + dx, cy + dy))
                .fold((f64::INFINITY, 0.0, 0.0), |a, b| if b.0 < a.0 { b } else { a })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::INFINITY, 0.0, 0.0), |a, b| if b.0 < a.0 { b } else { a })
}

fn spontaneous(seed: u64) -> Result<SuiteOutput, CliError> {
    const S: &str = "spontaneous";
    const N: usize = 401;
    let mut r = rng(seed, 5);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let ctx = random_context(&mut r)?;
        let m = minimize_pointwise(&ctx, DEFAULT_TOLERANCE);
        let a0 = ctx.natural();
        let mut half = 1.5 * search_radius(&ctx);
        let mut best = grid_search(&ctx, a0.m11, a0.m12, half, N);
        for _ in 0..2 {
            half *= 4.0 / (N - 1) as f64;
            best = grid_search(&ctx, best.1, best.2, half, N);
        }
        worst = worst.max((m.value - best.0).abs());
    }
    let chart = builtin_chart(ChartKind::Sheared { d12: 0.3, d22: 1.2 }, 1.0, 100)?;
    let model = RibbonModel::new(random_spd(&mut r), chart, NaturalCurvature::zero())?;
    let zero = spontaneous_profile(&model, DEFAULT_TOLERANCE)?;
    let nonzero = zero.profile.mu.iter().chain(&zero.profile.tau).filter(|x| **x != 0.0).count();
    Ok(SuiteOutput {
        checks: vec![
            at_most(S, "grid_oracle", worst, 1e-6),
            at_most(S, "zero_natural_curvature", nonzero as f64, 0.0),
            at_most(S, "zero_energy", zero.energy.abs(), 0.0),
        ],
        detail: None,
    })
}

pub fn run_suite(name: &str, seed: u64) -> Result<SuiteOutput, CliError> {
    match name {
        "constants" => constants(seed),
        "relaxation" => relaxation(seed),
        "density" => density(seed),
        "frames" => frames(seed),
        "surface" => surface(),
        "spontaneous" => spontaneous(seed),
        other => Err(CliError::input(
            "validate.suite",
            format!("unknown suite '{other}' (one of {})", SUITES.join(", ")),
        )),
    }
}

/// Runs the named suites and appends their rows to `report`; returns the
/// failing checks.
pub fn run(names: &[String], seed: u64, report: &mut Report) -> Result<Vec<Check>, CliError> {
    let outputs = names
        .iter()
        .map(|n| run_suite(n, seed).map(|o| (n, o)))
        .collect::<Result<Vec<_>, _>>()?;
    report.line("suite,check,value,tolerance,status");
    let mut failed = Vec::new();
    for (_, o) in &outputs {
        for c in &o.checks {
            report.line(&format!(
                "{},{},{},{},{}",
                c.suite,
                c.check,
                num(c.value),
                num(c.tolerance),
                if c.pass { "pass" } else { "fail" }
            ));
            if !c.pass {
                failed.push(c.clone());
            }
        }
    }
    for (name, o) in &outputs {
        if let Some((columns, rows)) = &o.detail {
            report.comment("section", name);
            report.line(columns);
            for row in rows {
                report.row(row);
            }
        }
    }
    Ok(failed)
}
