//! Spontaneous profiles of the free ribbon and a best-effort clamped mode.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{invalid, Result, RibbonError};
use crate::frames::{evaluate_j, integrate_frame, FramePath, Profile};
use crate::geometry::frame_coefficients;
use crate::reduced_density::{qbar, DensityContext, RibbonModel};

const GOLDEN: f64 = 0.618_033_988_749_894_8;
const SCAN: usize = 24;

/// Pointwise minimizer of `Q̄` at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMinimum {
    pub mu: f64,
    pub tau: f64,
    pub gamma_star: f64,
    pub value: f64,
}

fn prefer(a: (f64, f64), b: (f64, f64)) -> bool {
    // (value, |x|): b strictly better, or equal with smaller norm
    b.0 < a.0 || (b.0 == a.0 && b.1 < a.1)
}

/// Minimizes a convex function on `[lo, hi]`: a uniform scan brackets the
/// minimum, golden-section search refines it. Returns `(x, f(x))`.
fn minimize_1d(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..=SCAN)
        .map(|k| {
            let k = k as f64;
            let n = SCAN as f64;
            (lo * (n - k) + hi * k) / n
        })
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut best = 0;
    for k in 1..xs.len() {
        if prefer((fs[best], xs[best].abs()), (fs[k], xs[k].abs())) {
            best = k;
        }
    }
    let (mut a, mut b) = (xs[best.saturating_sub(1)], xs[(best + 1).min(SCAN)]);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 < f2 || (f1 == f2 && x1.abs() <= x2.abs()) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2);
        }
    }
    let mut out = (xs[best], fs[best]);
    for (x, v) in [(x1, f1), (x2, f2)] {
        if prefer((out.1, out.0.abs()), (v, x.abs())) {
            out = (x, v);
        }
    }
    out
}

/// Radius of a box around `(a°11, a°12)` that contains every minimizer.
pub fn search_radius(ctx: &DensityContext) -> f64 {
    let a0 = ctx.natural();
    let e0 = qbar(ctx, a0.m11, a0.m12).value;
    let inv = crate::geometry::frame_inverse(ctx.frame()).expect("frame checked at construction");
    let sigma_min = inv.singular_values().min();
    let c_low = ctx.rigidity().min_eigenvalue() * ctx.det_d() * sigma_min.powi(4);
    1.05 * (e0 / c_low).sqrt() + 1e-12
}

/// Argmin of `Q̄(μ, τ)` by nested golden-section search over a box that
/// provably contains the minimizer.
pub fn minimize_pointwise(ctx: &DensityContext, tol: f64) -> PointMinimum {
    let a0 = ctx.natural();
    let (cm, ct) = (a0.m11, a0.m12);
    let rho = search_radius(ctx);
    let f = |mu: f64, tau: f64| qbar(ctx, mu, tau).value;
    let inner = |mu: f64| minimize_1d(&|tau| f(mu, tau), ct - rho, ct + rho, tol);
    let (mu, _) = minimize_1d(&|mu| inner(mu).1, cm - rho, cm + rho, tol);
    let (tau, _) = inner(mu);

    let mut best = (mu, tau);
    let mut best_v = f(mu, tau);
    for cand in [(cm, ct), (0.0, 0.0)] {
        let v = f(cand.0, cand.1);
        let norm = |p: (f64, f64)| p.0.hypot(p.1);
        if prefer((best_v, norm(best)), (v, norm(cand))) {
            best = cand;
            best_v = v;
        }
    }
    let q = qbar(ctx, best.0, best.1);
    PointMinimum {
        mu: best.0 + 0.0,
        tau: best.1 + 0.0,
        gamma_star: q.gamma_star,
        value: q.value,
    }
}

/// Result of the free minimization.
#[derive(Debug, Clone)]
pub struct Spontaneous {
    pub profile: Profile,
    pub density: Vec<f64>,
    pub energy: f64,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Nodewise minimizer of `J` over free profiles.
pub fn spontaneous_profile(model: &RibbonModel, tol: f64) -> Result<Spontaneous> {
    if !(tol > 0.0) {
        return Err(invalid("tolerance", format!("must be positive, got {tol}")));
    }
    let contexts = model.contexts()?;
    let minima: Vec<PointMinimum> = contexts.par_iter().map(|c| minimize_pointwise(c, tol)).collect();
    let nodes = model.chart().nodes().to_vec();
    let profile = Profile::new(
        nodes,
        minima.iter().map(|m| m.mu).collect(),
        minima.iter().map(|m| m.tau).collect(),
        Some(minima.iter().map(|m| m.gamma_star).collect()),
    )?;
    let energy = evaluate_j(&profile, &contexts)?;
    Ok(Spontaneous {
        profile,
        density: minima.iter().map(|m| m.value).collect(),
        energy,
    })
}

/// End conditions for the clamped mode.
#[derive(Debug, Clone)]
pub struct ClampedSpec {
    /// Frame at the first node.
    pub r0: Matrix3<f64>,
    /// Target position of the last node, with `y = 0` at the first.
    pub y_target: Vector3<f64>,
    pub r_target: Matrix3<f64>,
    pub penalty: f64,
    /// Number of control knots for each of `μ` and `τ`.
    pub knots: usize,
    /// Objective evaluations allowed in total.
    pub budget: usize,
    pub initial_step: f64,
    pub tolerance: f64,
}

impl ClampedSpec {
    /// Straight-strip targets for a chart of the given length.
    pub fn straight(length: f64) -> Self {
        ClampedSpec {
            r0: Matrix3::identity(),
            y_target: Vector3::new(length, 0.0, 0.0),
            r_target: Matrix3::identity(),
            penalty: 1e6,
            knots: 4,
            budget: 40_000,
            initial_step: std::f64::consts::PI / length,
            tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Clamped {
    pub profile: Profile,
    pub objective: f64,
    pub energy: f64,
    pub position_residual: f64,
    pub rotation_residual: f64,
    pub evaluations: usize,
    /// Best objective after each accepted simplex update of the final stage.
    pub history: Vec<f64>,
    pub warning: Option<String>,
}

struct ClampedProblem<'a> {
    model: &'a RibbonModel,
    contexts: Vec<DensityContext>,
    spec: &'a ClampedSpec,
    knot_t: Vec<f64>,
}

impl ClampedProblem<'_> {
    fn profile(&self, x: &[f64]) -> Profile {
        let k = self.spec.knots;
        let nodes = self.model.chart().nodes();
        let interp = |vals: &[f64], t: f64| {
            if k == 1 {
                return vals[0];
            }
            let (i, w) = crate::geometry::locate(&self.knot_t, t);
            vals[i] * (1.0 - w) + vals[i + 1] * w
        };
        Profile {
            nodes: nodes.to_vec(),
            mu: nodes.iter().map(|&t| interp(&x[..k], t)).collect(),
            tau: nodes.iter().map(|&t| interp(&x[k..], t)).collect(),
            gamma: None,
        }
    }

    fn path(&self, profile: &Profile) -> Result<FramePath> {
        let n = profile.len();
        let coeffs = frame_coefficients(self.model.chart(), &profile.mu, &profile.tau, &vec![0.0; n])?;
        integrate_frame(&coeffs, &self.spec.r0, &profile.nodes)
    }

    fn residuals(&self, path: &FramePath) -> (f64, f64) {
        let last = path.len() - 1;
        (
            (path.point(last) - self.spec.y_target).norm(),
            (path.rotation(last) - self.spec.r_target).norm(),
        )
    }

    fn objective(&self, x: &[f64], weight: f64) -> f64 {
        let profile = self.profile(x);
        let path = match self.path(&profile) {
            Ok(p) => p,
            Err(_) => return f64::INFINITY,
        };
        let (dy, dr) = self.residuals(&path);
        let j = evaluate_j(&profile, &self.contexts).unwrap_or(f64::INFINITY);
        j + weight * (dy * dy + dr * dr)
    }
}

struct NelderMead {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl NelderMead {
    fn new(start: &[f64], step: f64, f: &dyn Fn(&[f64]) -> f64) -> Self {
        let mut points = vec![start.to_vec()];
        for i in 0..start.len() {
            let mut p = start.to_vec();
            p[i] += step;
            points.push(p);
        }
        let values = points.iter().map(|p| f(p)).collect();
        NelderMead { points, values }
    }

    fn order(&mut self) {
        let mut idx: Vec<usize> = (0..self.points.len()).collect();
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]).then(a.cmp(&b)));
        self.points = idx.iter().map(|&i| self.points[i].clone()).collect();
        self.values = idx.iter().map(|&i| self.values[i]).collect();
    }

    /// Runs until the value spread falls below `tol` or `budget` is spent.
    /// Returns evaluations used; `history` receives the best value after
    /// every iteration.
    fn run(&mut self, f: &dyn Fn(&[f64]) -> f64, budget: usize, tol: f64, history: &mut Vec<f64>) -> (usize, bool) {
        let n = self.points.len() - 1;
        let mut evals = 0;
        self.order();
        while evals < budget {
            let spread = self.values[n] - self.values[0];
            if spread <= tol * (1.0 + self.values[0].abs()) {
                return (evals, true);
            }
            let centroid: Vec<f64> = (0..n).map(|d| self.points[..n].iter().map(|p| p[d]).sum::<f64>() / n as f64).collect();
            let along = |c: f64| -> Vec<f64> { (0..n).map(|d| centroid[d] + c * (self.points[n][d] - centroid[d])).collect() };
            let xr = along(-1.0);
            let fr = f(&xr);
            evals += 1;
            if fr < self.values[0] {
                let xe = along(-2.0);
                let fe = f(&xe);
                evals += 1;
                if fe < fr {
                    self.points[n] = xe;
                    self.values[n] = fe;
                } else {
                    self.points[n] = xr;
                    self.values[n] = fr;
                }
            } else if fr < self.values[n - 1] {
                self.points[n] = xr;
                self.values[n] = fr;
            } else {
                let (xc, fc) = if fr < self.values[n] {
                    let x = along(-0.5);
                    let v = f(&x);
                    (x, v)
                } else {
                    let x = along(0.5);
                    let v = f(&x);
                    (x, v)
                };
                evals += 1;
                if fc < self.values[n].min(fr) {
                    self.points[n] = xc;
                    self.values[n] = fc;
                } else {
                    let best = self.points[0].clone();
                    for i in 1..=n {
                        let p: Vec<f64> = (0..n).map(|d| best[d] + 0.5 * (self.points[i][d] - best[d])).collect();
                        self.values[i] = f(&p);
                        self.points[i] = p;
                    }
                    evals += n;
                }
            }
            self.order();
            history.push(self.values[0]);
        }
        (evals, false)
    }
}

/// Best-effort minimization of `J` plus an end-state penalty over
/// piecewise-linear profiles on `spec.knots` control knots.
pub fn clamped_minimize(model: &RibbonModel, spec: &ClampedSpec) -> Result<Clamped> {
    if !(spec.penalty > 0.0) {
        return Err(invalid("clamped.penalty", format!("must be positive, got {}", spec.penalty)));
    }
    if spec.knots < 1 {
        return Err(invalid("clamped.knots", "need at least one knot"));
    }
    let chart = model.chart();
    let lo = chart.nodes()[0];
    let hi = chart.nodes()[chart.len() - 1];
    let k = spec.knots;
    let knot_t: Vec<f64> = if k == 1 {
        vec![lo, hi]
    } else {
        (0..k)
            .map(|i| {
                let (i, n) = (i as f64, (k - 1) as f64);
                (lo * (n - i) + hi * i) / n
            })
            .collect()
    };
    let problem = ClampedProblem {
        model,
        contexts: model.contexts()?,
        spec,
        knot_t: knot_t.clone(),
    };

    let free = spontaneous_profile(model, DEFAULT_TOLERANCE)?;
    let sample = |v: &[f64]| -> Vec<f64> {
        knot_t[..k]
            .iter()
            .map(|&t| {
                let (i, w) = crate::geometry::locate(chart.nodes(), t);
                v[i] * (1.0 - w) + v[i + 1] * w
            })
            .collect()
    };
    let mut starts = vec![[sample(&free.profile.mu), sample(&free.profile.tau)].concat()];
    let zero = vec![0.0; 2 * k];
    if starts[0] != zero {
        starts.push(zero);
    }

    let stages: Vec<f64> = {
        let mut w = vec![spec.penalty];
        while w.len() < 4 && w[w.len() - 1] > 1.0 {
            let next = w[w.len() - 1] * 1e-2;
            w.push(next);
        }
        w.reverse();
        w
    };
    let per_run = (spec.budget / (starts.len() * stages.len())).max(1);
    let mut evaluations = 0;
    let mut converged = true;
    let mut best: Option<(Vec<f64>, f64, Vec<f64>)> = None;
    for start in &starts {
        let mut x = start.clone();
        let mut step = spec.initial_step;
        let mut history = Vec::new();
        let mut value = f64::INFINITY;
        for &w in &stages {
            let f = |p: &[f64]| problem.objective(p, w);
            let mut nm = NelderMead::new(&x, step, &f);
            evaluations += nm.points.len();
            history.clear();
            let (used, ok) = nm.run(&f, per_run, spec.tolerance, &mut history);
            evaluations += used;
            if w == spec.penalty {
                converged &= ok;
            }
            x = nm.points[0].clone();
            value = nm.values[0];
            step = (0.25 * step).max(1e-6);
        }
        if best.as_ref().is_none_or(|b| value < b.1) {
            best = Some((x, value, history));
        }
    }
    let (x, objective, history) = best.ok_or_else(|| RibbonError::OracleFailure("no start".into()))?;
    let profile = problem.profile(&x);
    let path = problem.path(&profile)?;
    let (dy, dr) = problem.residuals(&path);
    let energy = evaluate_j(&profile, &problem.contexts)?;
    Ok(Clamped {
        profile,
        objective,
        energy,
        position_residual: dy,
        rotation_residual: dr,
        evaluations,
        history,
        warning: (!converged).then(|| format!("simplex search stopped at the evaluation budget ({})", spec.budget)),
    })
}
