//! Acceptance criteria, one PASS/FAIL line each.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ribbonlim::frames::*;
use ribbonlim::geometry::*;
use ribbonlim::quadratic_forms::*;
use ribbonlim::reduced_density::*;
use ribbonlim::relaxation::*;
use ribbonlim::surface::*;
use ribbonlim::variational::*;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let d = (n - 1) as f64;
    (0..n).map(|i| (lo * (d - i as f64) + hi * i as f64) / d).collect()
}

fn random_spd(rng: &mut ChaCha8Rng) -> Rigidity {
    let a = Matrix3::from_fn(|_, _| rng.gen_range(-2.0..2.0));
    let delta = rng.gen_range(0.05..1.0);
    Rigidity::from_matrix(a.transpose() * a + Matrix3::identity() * delta).unwrap()
}

fn random_orthotropic(rng: &mut ChaCha8Rng, stiff_shear: bool) -> [f64; 4] {
    let k11: f64 = rng.gen_range(0.2..3.0);
    let k22 = rng.gen_range(0.2..3.0);
    let g = (k11 * k22).sqrt();
    let k12 = rng.gen_range(-0.95..0.95) * g;
    let k33 = if stiff_shear {
        rng.gen_range(1.0..2.0) * 0.5 * (g - k12)
    } else {
        rng.gen_range(0.05..2.0)
    };
    [k11, k12, k22, k33]
}

fn constants() -> Outcome {
    let s = alpha_constants(&Rigidity::sadowsky()).map_err(|e| e.to_string())?;
    ensure((s.plus - 2.0).abs() <= 1e-9 && (s.minus - 2.0).abs() <= 1e-9, || format!("sadowsky {s:?}"))?;
    let i = alpha_constants(&Rigidity::isotropic(1.0, 1.0).unwrap()).map_err(|e| e.to_string())?;
    ensure((i.plus - 2.0).abs() <= 1e-9 && (i.minus - 6.0).abs() <= 1e-9, || format!("isotropic {i:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let [k11, k12, k22, k33] = random_orthotropic(&mut rng, false);
        let c = orthotropic_alphas(k11, k12, k22, k33).map_err(|e| e.to_string())?;
        let b = alpha_constants(&Rigidity::orthotropic(k11, k12, k22, k33).unwrap()).map_err(|e| e.to_string())?;
        worst = worst.max((c.plus - b.plus).abs()).max((c.minus - b.minus).abs());
    }
    ensure(worst <= 1e-9, || format!("orthotropic deviation {worst:e}"))?;
    Ok(format!("sadowsky (2, 2), isotropic (2, 6), orthotropic max dev {worst:.1e}"))
}

fn sadowsky_density() -> Outcome {
    let ctx = DensityContext::flat(Rigidity::sadowsky()).unwrap();
    let g = grid(-3.0, 3.0, 61);
    let mut worst: f64 = 0.0;
    for &mu in &g {
        for &tau in &g {
            worst = worst.max((qbar(&ctx, mu, tau).value - sadowsky_corrected(mu, tau)).abs());
        }
    }
    ensure(worst <= 1e-8, || format!("grid deviation {worst:e}"))?;
    for ((mu, tau), v) in [((1.0, 0.0), 1.0), ((0.0, 1.0), 4.0), ((1.0, 1.0), 4.0), ((2.0, 1.0), 6.25)] {
        let q = qbar(&ctx, mu, tau).value;
        ensure((q - v).abs() <= 1e-10, || format!("qbar({mu}, {tau}) = {q}, expected {v}"))?;
    }
    Ok(format!("61x61 max dev {worst:.1e}, spot values exact to 1e-10"))
}

fn orthotropic_density() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = grid(-3.0, 3.0, 61);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let [k11, k12, k22, k33] = random_orthotropic(&mut rng, true);
        let ctx = DensityContext::flat(Rigidity::orthotropic(k11, k12, k22, k33).unwrap()).unwrap();
        for &mu in &g {
            for &tau in &g {
                let closed = orthotropic_qbar(k11, k12, k22, k33, mu, tau).map_err(|e| e.to_string())?;
                worst = worst.max((qbar(&ctx, mu, tau).value - closed).abs());
            }
        }
    }
    ensure(worst <= 1e-8, || format!("max dev {worst:e}"))?;
    Ok(format!("20 parameter sets, max dev {worst:.1e}"))
}

fn relaxation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let c = random_spd(&mut rng);
        let z = rng.gen_range(-2.0..2.0);
        let m = Voigt3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let p = RelaxationProblem::new(c, z).map_err(|e| e.to_string())?;
        let f = relaxed_integrand(&p, m);
        let d = two_point_decomposition(&p, m).map_err(|e| e.to_string())?;
        worst = worst.max((d.value - f).abs() / f.abs().max(1e-12));
    }
    ensure(worst <= 1e-8, || format!("decomposition rel err {worst:e}"))?;
    let points = [
        (Rigidity::sadowsky(), 0.0, Voigt3::new(1.0, 1.0, 0.0)),
        (Rigidity::sadowsky(), 0.0, Voigt3::new(1.0, -1.0, 0.0)),
        (Rigidity::isotropic(1.0, 1.0).unwrap(), 0.0, Voigt3::new(0.5, 1.0, 0.4)),
        (Rigidity::orthotropic(1.0, 0.2, 2.0, 0.4).unwrap(), 0.5, Voigt3::new(-0.8, 0.3, 1.0)),
        (Rigidity::from_voigt_entries([2.0, 0.4, 0.3, 1.5, -0.2, 0.6]).unwrap(), -0.5, Voigt3::new(0.2, 0.6, -0.7)),
    ];
    let mut at64: f64 = 0.0;
    for (c, z, m) in points {
        let p = RelaxationProblem::new(c, z).unwrap();
        let f = relaxed_integrand(&p, m);
        let errs = [32, 64, 128]
            .iter()
            .map(|&n| brute_force_biconjugate(&p, m, 6.0, n).map(|o| o - f))
            .collect::<ribbonlim::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        ensure(errs.iter().all(|&e| e >= -1e-9), || format!("oracle below formula: {errs:?}"))?;
        ensure(errs[1] <= 0.5, || format!("n=64 error {}", errs[1]))?;
        ensure(errs.windows(2).all(|w| w[1] <= 1.05 * w[0] + 1e-9), || format!("errors not decreasing: {errs:?}"))?;
        at64 = at64.max(errs[1]);
    }
    Ok(format!("decomposition rel err {worst:.1e}; oracle err at n=64 ≤ {at64:.1e}"))
}

fn frenet(y: &[Vector3<f64>], i: usize, h: f64) -> (f64, f64) {
    let d1 = (y[i + 1] - y[i - 1]) / (2.0 * h);
    let d2 = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h);
    let d3 = (y[i + 2] - 2.0 * y[i + 1] + 2.0 * y[i - 1] - y[i - 2]) / (2.0 * h * h * h);
    let c = d1.cross(&d2);
    (c.norm() / d1.norm().powi(3), c.dot(&d3) / c.norm_squared())
}

fn frame_ode() -> Outcome {
    let n = 100_000;
    let g = uniform_grid(10.0, n);
    let coeffs = FrameCoefficients {
        kappa: g.iter().map(|t| 0.3 * t.sin()).collect(),
        mu: g.iter().map(|t| 1.0 + 0.5 * (2.0 * t).cos()).collect(),
        tau: g.iter().map(|t| 0.7 - 0.2 * t).collect(),
    };
    let drift = integrate_frame(&coeffs, &Matrix3::identity(), &g).map_err(|e| e.to_string())?.max_orthogonality_defect();
    ensure(drift <= 1e-12, || format!("drift {drift:e}"))?;
    let n = 10_000;
    let g = uniform_grid(std::f64::consts::PI, n);
    let p = integrate_frame(&FrameCoefficients::constant(n + 1, 0.0, 2.0, 0.0), &Matrix3::identity(), &g).unwrap();
    let closure = (p.point(n) - p.point(0)).norm();
    ensure(closure <= 1e-6, || format!("circle closure {closure:e}"))?;
    let g = uniform_grid(4.0, n);
    let h = g[1] - g[0];
    let p = integrate_frame(&FrameCoefficients::constant(n + 1, 0.0, 1.0, 1.0), &Matrix3::identity(), &g).unwrap();
    let mut frenet_err: f64 = 0.0;
    for i in [100, 2500, 5000, 7500, 9800] {
        let (k, t) = frenet(p.points(), i, h);
        frenet_err = frenet_err.max((k - 1.0).abs()).max((t - 1.0).abs());
    }
    ensure(frenet_err <= 1e-5, || format!("frenet error {frenet_err:e}"))?;
    Ok(format!("drift {drift:.1e}, closure {closure:.1e}, frenet err {frenet_err:.1e}"))
}

const KAPPA0: f64 = 0.4;
const TURN: f64 = 0.3;

struct Strip {
    chart: ReferenceChart,
    field: RankOneField,
    path: FramePath,
    mesh: RibbonMesh,
}

fn strip(n: usize, ns: usize) -> ribbonlim::Result<Strip> {
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
    Ok(Strip { chart, field, path, mesh })
}

/// `∇Φᵀ∇Φ` of `Φ(s, t) = B(t) + s p⊥(t)` in `(s, t)`.
fn exact_metric(s: f64, t: f64) -> Matrix2<f64> {
    let psi = (KAPPA0 + TURN) * t;
    let q = Vector2::new(-psi.sin(), psi.cos());
    let dq = -Vector2::new(psi.cos(), psi.sin()) * (KAPPA0 + TURN);
    let pt = Vector2::new((KAPPA0 * t).cos(), (KAPPA0 * t).sin()) + dq * s;
    Matrix2::new(q.dot(&q), q.dot(&pt), q.dot(&pt), pt.dot(&pt))
}

fn reconstruction() -> Outcome {
    let mut errs = Vec::new();
    for (n, ns) in [(100, 5), (200, 9), (400, 17), (800, 33)] {
        let st = strip(n, ns).map_err(|e| e.to_string())?;
        let m = &st.mesh;
        let mut err: f64 = 0.0;
        for i in 0..m.t.len() - 1 {
            for j in 0..m.s.len() - 1 {
                let (s, t) = m.quad_centre(i, j);
                err = err.max((m.surface_metric(i, j) - exact_metric(s, t)).amax());
            }
        }
        let along = (0..st.chart.len()).map(|i| st.field.p[i].dot(&st.chart.tangent(i)).abs()).fold(f64::INFINITY, f64::min);
        let jac = m.jacobian.iter().map(|j| j.abs()).fold(f64::INFINITY, f64::min);
        ensure(jac >= 0.5 * along - 1e-12, || format!("|det ∇Φ| = {jac} below bound {}", 0.5 * along))?;
        errs.push(err);
    }
    let order = errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    ensure(order >= 1.0, || format!("metric errors {errs:?}"))?;
    let st = strip(1000, 9).map_err(|e| e.to_string())?;
    let m = &st.mesh;
    let j = m.s.len() / 2;
    let h = st.chart.spacing();
    let mut kn_err: f64 = 0.0;
    for i in (5..st.chart.len() - 5).step_by(10) {
        let y = |k: usize| st.path.point(k);
        let ypp = (y(i + 1) - 2.0 * y(i) + y(i - 1)) / (h * h);
        let xs = (m.vertex(i, j + 1) - m.vertex(i, j - 1)) / (m.s[j + 1] - m.s[j - 1]);
        let xt = (m.vertex(i + 1, j) - m.vertex(i - 1, j)) / (m.t[i + 1] - m.t[i - 1]);
        let normal = xs.cross(&xt).normalize() * m.jacobian[m.index(i, j)].signum();
        let pb = st.field.p[i].dot(&st.chart.tangent(i));
        kn_err = kn_err.max((ypp.dot(&normal) - st.field.lambda[i] * pb * pb).abs());
    }
    ensure(kn_err <= 5e-2, || format!("normal curvature error {kn_err}"))?;
    Ok(format!("metric order ≥ {order:.2} ({:.1e} → {:.1e}), normal curvature err {kn_err:.1e}", errs[0], errs[3]))
}

fn corrugation() -> Outcome {
    let chart = builtin_chart(ChartKind::Rectangle, 2.0, 4096).unwrap();
    let model = RibbonModel::new(Rigidity::sadowsky(), chart, NaturalCurvature::zero()).unwrap();
    let nodes = model.chart().nodes();
    let constant = Profile::constant(nodes, 1.0, 1.0);
    let c = corrugate(&model, &constant, 256).map_err(|e| e.to_string())?;
    let target = qbar(&model.context(0).unwrap(), 1.0, 1.0).value;
    let gap11 = (c.mean_energy() - target).abs() / target;
    ensure(gap11 <= 0.02, || format!("(1,1) energy gap {gap11}"))?;
    let varying = Profile::new(
        nodes.to_vec(),
        nodes.iter().map(|t| 1.0 + 0.5 * (2.0 * t).sin()).collect(),
        nodes.iter().map(|t| 0.8 * t.cos()).collect(),
        None,
    )
    .unwrap();
    let j = evaluate_j(&varying, &model.contexts().unwrap()).unwrap() / 2.0;
    let mut defects = Vec::new();
    let mut gap: f64 = 0.0;
    for n in [16, 32, 64, 128, 256] {
        let c = corrugate(&model, &varying, n).map_err(|e| e.to_string())?;
        let det = c.nodal.iter().map(|m| m.det().abs()).fold(0.0, f64::max);
        ensure(det <= 1e-9, || format!("n={n}: det {det:e}"))?;
        gap = (c.mean_energy() - j).abs() / j;
        defects.push(c.defect(|t| target_field(&model, &varying, t).unwrap()));
    }
    ensure(gap <= 0.02, || format!("varying target energy gap {gap}"))?;
    ensure(defects.windows(2).all(|w| w[1] <= 1.1 * w[0]), || format!("defects {defects:?}"))?;
    Ok(format!(
        "(1,1) gap {gap11:.1e}, varying target gap {gap:.1e}, defect {:.1e} → {:.1e}",
        defects[0], defects[4]
    ))
}

fn random_context(rng: &mut ChaCha8Rng) -> DensityContext {
    let c = random_spd(rng);
    let angle = rng.gen_range(-0.9..0.9f64);
    let (s, co) = angle.sin_cos();
    let d1 = Vector2::new(co, s);
    let d2 = Vector2::new(-s, co) * rng.gen_range(0.5..2.0) + d1 * rng.gen_range(-0.4..0.4);
    let a0 = SymMat2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    DensityContext::new(c, Matrix2::from_columns(&[d1, d2]), a0).unwrap()
}

fn grid_search(ctx: &DensityContext, cx: f64, cy: f64, r: f64) -> (f64, f64, f64) {
    let g = grid(-r, r, 2001);
    g.par_iter()
        .map(|&dx| {
            g.iter()
                .map(|&dy| (qbar(ctx, cx + dx, cy + dy).value, cx + dx, cy + dy))
                .fold((f64::INFINITY, 0.0, 0.0), |a, b| if b.0 < a.0 { b } else { a })
        })
        .reduce(|| (f64::INFINITY, 0.0, 0.0), |a, b| if b.0 < a.0 { b } else { a })
}

fn spontaneous() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let ctx = random_context(&mut rng);
        let m = minimize_pointwise(&ctx, DEFAULT_TOLERANCE);
        let half = 1.5 * search_radius(&ctx);
        let a0 = ctx.natural();
        let (_, mu, tau) = grid_search(&ctx, a0.m11, a0.m12, half);
        let oracle = grid_search(&ctx, mu, tau, 4.0 * half / 2000.0).0;
        worst = worst.max((m.value - oracle).abs());
    }
    ensure(worst <= 1e-6, || format!("grid oracle deviation {worst:e}"))?;
    let chart = builtin_chart(ChartKind::Sheared { d12: 0.3, d22: 1.2 }, 1.0, 100).unwrap();
    let model = RibbonModel::new(random_spd(&mut rng), chart, NaturalCurvature::zero()).unwrap();
    let s = spontaneous_profile(&model, DEFAULT_TOLERANCE).map_err(|e| e.to_string())?;
    let exact = s.profile.mu.iter().chain(&s.profile.tau).all(|x| *x == 0.0) && s.energy == 0.0;
    ensure(exact, || "A° = 0 did not give the zero profile".into())?;
    Ok(format!("10 contexts, max dev from 2001² oracle {worst:.1e}; A°=0 gives zero exactly"))
}

fn determinism() -> Outcome {
    let run = |threads: &str| -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_ribbonlim"))
            .args(["validate", "--all", "--seed", "7"])
            .env("RIBBONLIM_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.code() == Some(0), || {
            format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
        })?;
        Ok(out.stdout)
    };
    let a = run("1")?;
    let b = run("1")?;
    let c = run("4")?;
    let d = run("4")?;
    ensure(a == b && c == d, || "repeated runs differ".into())?;
    ensure(a == c, || "thread counts 1 and 4 differ".into())?;
    Ok(format!("4 runs byte-identical ({} bytes)", a.len()))
}

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("constants", constants),
        ("sadowsky density", sadowsky_density),
        ("orthotropic density", orthotropic_density),
        ("relaxation", relaxation),
        ("frame ODE", frame_ode),
        ("reconstruction", reconstruction),
        ("corrugation", corrugation),
        ("spontaneous profile", spontaneous),
        ("determinism", determinism),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{secs:.1}s]", k + 1),
            Err(reason) => {
                failures += 1;
                println!("criterion {} {name}: FAIL ({reason}) [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("{} of 9 criteria passed in {:.1}s", 9 - failures, start.elapsed().as_secs_f64());
    if failures > 0 {
        std::process::exit(1);
    }
}
