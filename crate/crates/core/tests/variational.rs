mod common;

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use ribbonlim::frames::evaluate_j;
use ribbonlim::geometry::*;
use ribbonlim::quadratic_forms::{Rigidity, SymMat2};
use ribbonlim::reduced_density::{qbar, DensityContext, RibbonModel};
use ribbonlim::variational::*;

fn random_context(rng: &mut ChaCha8Rng) -> DensityContext {
    let c = common::random_spd(rng);
    let angle = rng.gen_range(-0.9..0.9f64);
    let (s, co) = angle.sin_cos();
    let d1 = Vector2::new(co, s);
    let d2 = Vector2::new(-s, co) * rng.gen_range(0.5..2.0) + d1 * rng.gen_range(-0.4..0.4);
    let a0 = SymMat2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    DensityContext::new(c, Matrix2::from_columns(&[d1, d2]), a0).unwrap()
}

/// Best value on a 2001² grid over `[cx ± r] × [cy ± r]`.
fn grid_search(ctx: &DensityContext, cx: f64, cy: f64, r: f64) -> (f64, f64, f64) {
    let n = 2001;
    let g = common::grid(-r, r, n);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::INFINITY, 0.0, 0.0);
            for &dy in &g {
                let (mu, tau) = (cx + g[i], cy + dy);
                let v = qbar(ctx, mu, tau).value;
                if v < best.0 {
                    best = (v, mu, tau);
                }
            }
            best
        })
        .reduce(|| (f64::INFINITY, 0.0, 0.0), |a, b| if b.0 < a.0 { b } else { a })
}

/// Dense grid, then a second dense grid zoomed on the best cell.
fn grid_oracle(ctx: &DensityContext, half_width: f64) -> f64 {
    let a0 = ctx.natural();
    let (_, mu, tau) = grid_search(ctx, a0.m11, a0.m12, half_width);
    let cell = 2.0 * half_width / 2000.0;
    grid_search(ctx, mu, tau, 2.0 * cell).0
}

#[test]
fn matches_the_grid_oracle_on_random_contexts() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let ctx = random_context(&mut rng);
        let m = minimize_pointwise(&ctx, DEFAULT_TOLERANCE);
        let oracle = grid_oracle(&ctx, 1.5 * search_radius(&ctx));
        assert!((m.value - oracle).abs() <= 1e-6, "{} vs oracle {}", m.value, oracle);
        assert!(m.value <= oracle + 1e-12);
    }
}

#[test]
fn sadowsky_with_natural_twist() {
    let ctx = DensityContext::new(Rigidity::sadowsky(), Matrix2::identity(), SymMat2::new(0.0, 1.0, 0.0)).unwrap();
    let m = minimize_pointwise(&ctx, DEFAULT_TOLERANCE);
    let oracle = grid_oracle(&ctx, 3.0);
    assert!((m.value - oracle).abs() <= 1e-6, "{} vs {}", m.value, oracle);
}

#[test]
fn no_probe_beats_the_minimizer() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let ctx = random_context(&mut rng);
        let m = minimize_pointwise(&ctx, DEFAULT_TOLERANCE);
        let r = 1.5 * search_radius(&ctx);
        let a0 = ctx.natural();
        for _ in 0..10_000 {
            let mu = a0.m11 + rng.gen_range(-r..r);
            let tau = a0.m12 + rng.gen_range(-r..r);
            assert!(qbar(&ctx, mu, tau).value >= m.value - 1e-6);
        }
    }
}

#[test]
fn free_energy_is_the_integrated_density() {
    let chart = builtin_chart(ChartKind::Arc { kappa0: 0.5 }, 2.0, 50).unwrap();
    let nodes = chart.nodes().to_vec();
    let natural = NaturalCurvature::table(
        nodes.clone(),
        nodes.iter().map(|t| SymMat2::new(0.5 * t, 0.8, -0.2)).collect(),
    )
    .unwrap();
    let model = RibbonModel::new(Rigidity::isotropic(1.0, 0.3).unwrap(), chart, natural).unwrap();
    let s = spontaneous_profile(&model, DEFAULT_TOLERANCE).unwrap();
    let j = evaluate_j(&s.profile, &model.contexts().unwrap()).unwrap();
    assert!((s.energy - j).abs() <= 1e-12);
    let w = ribbonlim::frames::trapezoid_weights(&nodes);
    let integrated: f64 = w.iter().zip(&s.density).map(|(w, q)| w * q).sum();
    assert!((integrated - j).abs() <= 1e-12);
    assert!(s.energy > 0.0);
}

#[test]
fn zero_natural_curvature_gives_exact_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let ctx = random_context(&mut rng);
        let flat = DensityContext::new(ctx.rigidity().clone(), *ctx.frame(), SymMat2::ZERO).unwrap();
        let m = minimize_pointwise(&flat, DEFAULT_TOLERANCE);
        assert_eq!((m.mu, m.tau, m.value), (0.0, 0.0, 0.0));
    }
}

fn rect_model(natural: SymMat2) -> RibbonModel {
    let chart = builtin_chart(ChartKind::Rectangle, 1.0, 100).unwrap();
    RibbonModel::new(Rigidity::sadowsky(), chart, NaturalCurvature::Constant(natural)).unwrap()
}

#[test]
fn consistent_targets_return_the_spontaneous_profile() {
    let model = rect_model(SymMat2::new(0.6, 0.3, 0.0));
    let free = spontaneous_profile(&model, DEFAULT_TOLERANCE).unwrap();
    let n = model.chart().len();
    let coeffs = frame_coefficients(model.chart(), &free.profile.mu, &free.profile.tau, &vec![0.0; n]).unwrap();
    let path = ribbonlim::frames::integrate_frame(&coeffs, &nalgebra::Matrix3::identity(), model.chart().nodes()).unwrap();
    let mut spec = ClampedSpec::straight(1.0);
    spec.y_target = path.point(n - 1);
    spec.r_target = *path.rotation(n - 1);
    spec.budget = 4000;
    let c = clamped_minimize(&model, &spec).unwrap();
    for i in 0..n {
        assert!((c.profile.mu[i] - free.profile.mu[i]).abs() < 1e-6);
        assert!((c.profile.tau[i] - free.profile.tau[i]).abs() < 1e-6);
    }
    assert!(c.position_residual < 1e-8);
}

#[test]
fn closed_loop_target() {
    let model = rect_model(SymMat2::ZERO);
    let mut spec = ClampedSpec::straight(1.0);
    spec.y_target = nalgebra::Vector3::zeros();
    let c = clamped_minimize(&model, &spec).unwrap();
    assert!(c.position_residual <= 1e-3, "residual {}", c.position_residual);
    for w in c.history.windows(2) {
        assert!(w[1] <= w[0]);
    }
}
