//! Developable strips from rank-one curvature fields, and corrugated
//! det-zero fields realizing relaxed targets.

use std::io::{self, Write};

use nalgebra::{Matrix2, Vector2, Vector3};
use rayon::prelude::*;

use crate::error::{invalid, Result, RibbonError};
use crate::frames::{FramePath, Profile};
use crate::geometry::{contravariant_assembly, locate, perp, ReferenceChart};
use crate::quadratic_forms::{quad, unvoigt, voigt, SymMat2};
use crate::reduced_density::{qbar, RibbonModel};
use crate::relaxation::{relaxed_integrand, two_point_decomposition, RelaxationProblem};

/// `M = λ p⊗p` at every node, with `p·B' ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneField {
    pub lambda: Vec<f64>,
    pub p: Vec<Vector2<f64>>,
    /// Nodes where `p·B' = 0`.
    pub non_transversal: Vec<usize>,
}

impl RankOneField {
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn matrix(&self, i: usize) -> SymMat2 {
        SymMat2::outer(&self.p[i]) * self.lambda[i]
    }
}

pub const RANK_ONE_TOLERANCE: f64 = 1e-9;

pub fn rank_one_field(field: &[SymMat2], chart: &ReferenceChart) -> Result<RankOneField> {
    if field.len() != chart.len() {
        return Err(RibbonError::GridMismatch {
            expected: chart.len(),
            got: field.len(),
        });
    }
    let mut out = RankOneField {
        lambda: Vec::with_capacity(field.len()),
        p: Vec::with_capacity(field.len()),
        non_transversal: Vec::new(),
    };
    for (i, m) in field.iter().enumerate() {
        let det = m.det();
        if !(det.abs() <= RANK_ONE_TOLERANCE) {
            return Err(RibbonError::NotRankOne { node: i, det });
        }
        let b1 = chart.tangent(i);
        let mb = m.apply(&b1);
        let nm = mb.norm();
        let mut p = if nm > 0.0 { mb / nm } else { chart.normal(i) };
        let along = p.dot(&b1);
        if along < 0.0 {
            p = -p;
        }
        if along.abs() <= 1e-12 {
            out.non_transversal.push(i);
        }
        out.lambda.push(m.trace());
        out.p.push(p);
    }
    Ok(out)
}

fn derivative(values: &[Vector2<f64>], h: f64, i: usize) -> Vector2<f64> {
    let n = values.len();
    if n < 3 {
        return (values[n - 1] - values[0]) / h;
    }
    if i == 0 {
        (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
    } else if i == n - 1 {
        (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h)
    } else {
        (values[i + 1] - values[i - 1]) / (2.0 * h)
    }
}

/// Finite-difference `p'` at every node.
pub fn direction_derivative(field: &RankOneField, chart: &ReferenceChart) -> Vec<Vector2<f64>> {
    let h = chart.spacing();
    (0..field.len()).map(|i| derivative(&field.p, h, i)).collect()
}

fn transversality(field: &RankOneField, chart: &ReferenceChart) -> Result<(f64, f64)> {
    if let Some(&node) = field.non_transversal.first() {
        return Err(RibbonError::NonTransversal { node });
    }
    let dp = direction_derivative(field, chart);
    let mut min_along = f64::INFINITY;
    let mut max_turn: f64 = 0.0;
    for (i, (p, dp)) in field.p.iter().zip(&dp).enumerate() {
        let along = p.dot(&chart.tangent(i)).abs();
        if along == 0.0 {
            return Err(RibbonError::NonTransversal { node: i });
        }
        min_along = min_along.min(along);
        max_turn = max_turn.max(perp(p).dot(dp).abs());
    }
    Ok((min_along, max_turn))
}

/// Half-width `η` keeping `|det ∇Φ| ≥ (1 − margin) min |p·B'|`.
pub fn width_bound(field: &RankOneField, chart: &ReferenceChart, margin: f64, eta_max: f64) -> Result<f64> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(invalid("margin", format!("must lie in (0, 1), got {margin}")));
    }
    if !(eta_max > 0.0) {
        return Err(invalid("eta_max", format!("must be positive, got {eta_max}")));
    }
    let (min_along, max_turn) = transversality(field, chart)?;
    Ok((margin * min_along / (max_turn + 1e-12)).min(eta_max))
}

/// Ruled strip mesh with its flat-domain coordinates.
#[derive(Debug, Clone)]
pub struct RibbonMesh {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    /// Row-major in `t` then `s`.
    pub vertices: Vec<Vector3<f64>>,
    pub flat: Vec<Vector2<f64>>,
    /// Counter-clockwise in the `(t, s)` parameter plane, 0-based.
    pub faces: Vec<[usize; 3]>,
    pub eta: f64,
    /// `det ∇Φ` at every vertex.
    pub jacobian: Vec<f64>,
}

fn clean(x: f64) -> f64 {
    x + 0.0
}

impl RibbonMesh {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.s.len() + j
    }

    pub fn vertex(&self, i: usize, j: usize) -> Vector3<f64> {
        self.vertices[self.index(i, j)]
    }

    pub fn min_face_area(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let (a, b, c) = (self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// First fundamental form in `(s, t)` at the centre of quad `(i, j)`,
    /// from averaged edge differences of `points`.
    fn quad_metric<V>(&self, points: &[V], i: usize, j: usize) -> Matrix2<f64>
    where
        V: Copy + std::ops::Sub<Output = V> + std::ops::Add<Output = V> + std::ops::Mul<f64, Output = V> + Dot,
    {
        let p = |a: usize, b: usize| points[self.index(a, b)];
        let ds = self.s[j + 1] - self.s[j];
        let dt = self.t[i + 1] - self.t[i];
        let xs = ((p(i, j + 1) - p(i, j)) + (p(i + 1, j + 1) - p(i + 1, j))) * (0.5 / ds);
        let xt = ((p(i + 1, j) - p(i, j)) + (p(i + 1, j + 1) - p(i, j + 1))) * (0.5 / dt);
        Matrix2::new(xs.dot(&xs), xs.dot(&xt), xs.dot(&xt), xt.dot(&xt))
    }

    /// Discrete metric of the 3D mesh at quad `(i, j)`.
    pub fn surface_metric(&self, i: usize, j: usize) -> Matrix2<f64> {
        self.quad_metric(&self.vertices, i, j)
    }

    /// Same stencil applied to the flat coordinates `Φ`.
    pub fn flat_metric(&self, i: usize, j: usize) -> Matrix2<f64> {
        self.quad_metric(&self.flat, i, j)
    }

    /// Parameter point `(s, t)` at the centre of quad `(i, j)`.
    pub fn quad_centre(&self, i: usize, j: usize) -> (f64, f64) {
        (0.5 * (self.s[j] + self.s[j + 1]), 0.5 * (self.t[i] + self.t[i + 1]))
    }

    pub fn write_obj<W: Write>(&self, mut w: W) -> io::Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", clean(v.x), clean(v.y), clean(v.z))?;
        }
        for f in &self.faces {
            writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
        Ok(())
    }

    pub fn write_flat_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,s,Phi1,Phi2")?;
        for (i, &t) in self.t.iter().enumerate() {
            for (j, &s) in self.s.iter().enumerate() {
                let phi = self.flat[self.index(i, j)];
                writeln!(w, "{},{},{},{}", clean(t), clean(s), clean(phi.x), clean(phi.y))?;
            }
        }
        Ok(())
    }
}

pub trait Dot {
    fn dot(&self, o: &Self) -> f64;
}

impl Dot for Vector3<f64> {
    fn dot(&self, o: &Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }
}

impl Dot for Vector2<f64> {
    fn dot(&self, o: &Self) -> f64 {
        self.x * o.x + self.y * o.y
    }
}

/// Uniform transverse grid on `[-η, η]` with `points` samples.
pub fn transverse_grid(eta: f64, points: usize) -> Vec<f64> {
    let n = (points.max(2) - 1) as f64;
    (0..points.max(2))
        .map(|j| {
            let j = j as f64;
            clean((-eta * (n - j) + eta * j) / n)
        })
        .collect()
}

/// `X(t, s) = y(t) + s [(p⊥·B') a1 + (p⊥·N) a2](t)` over `grid_s`.
pub fn ruled_surface(
    path: &FramePath,
    field: &RankOneField,
    chart: &ReferenceChart,
    eta: f64,
    grid_s: &[f64],
) -> Result<RibbonMesh> {
    let n = chart.len();
    for len in [path.len(), field.len()] {
        if len != n {
            return Err(RibbonError::GridMismatch { expected: n, got: len });
        }
    }
    if grid_s.len() < 2 || grid_s.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("grid_s", "needs at least 2 strictly increasing values"));
    }
    let s_max = grid_s.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    if s_max > eta * (1.0 + 1e-12) {
        return Err(invalid("grid_s", format!("|s| = {s_max} exceeds the half-width {eta}")));
    }
    let (min_along, max_turn) = transversality(field, chart)?;
    let bound = if max_turn > 0.0 { min_along / max_turn } else { f64::INFINITY };
    if !(eta < bound) {
        return Err(RibbonError::WidthExceeded { requested: eta, bound });
    }
    let dp = direction_derivative(field, chart);
    let ns = grid_s.len();
    type Row = (Vec<Vector3<f64>>, Vec<Vector2<f64>>, Vec<f64>);
    let rows: Vec<Row> = (0..n)
        .into_par_iter()
        .map(|i| {
            let b1 = chart.tangent(i);
            let nn = chart.normal(i);
            let q = perp(&field.p[i]);
            let ruling = path.row(i, 0) * q.dot(&b1) + path.row(i, 1) * q.dot(&nn);
            let y = path.point(i);
            let b = chart.centerline(i);
            let along = field.p[i].dot(&b1);
            let turn = q.dot(&dp[i]);
            let mut xs = Vec::with_capacity(ns);
            let mut phis = Vec::with_capacity(ns);
            let mut jac = Vec::with_capacity(ns);
            for &s in grid_s {
                xs.push(y + ruling * s);
                phis.push(b + q * s);
                jac.push(-along + s * turn);
            }
            (xs, phis, jac)
        })
        .collect();
    let mut vertices = Vec::with_capacity(n * ns);
    let mut flat = Vec::with_capacity(n * ns);
    let mut jacobian = Vec::with_capacity(n * ns);
    for (x, p, j) in rows {
        vertices.extend(x);
        flat.extend(p);
        jacobian.extend(j);
    }
    let mut faces = Vec::with_capacity(2 * (n - 1) * (ns - 1));
    for i in 0..n - 1 {
        for j in 0..ns - 1 {
            let v00 = i * ns + j;
            let v10 = (i + 1) * ns + j;
            let v11 = (i + 1) * ns + j + 1;
            let v01 = i * ns + j + 1;
            let d0 = (vertices[v11] - vertices[v00]).norm();
            let d1 = (vertices[v01] - vertices[v10]).norm();
            if d0 <= d1 {
                faces.push([v00, v10, v11]);
                faces.push([v00, v11, v01]);
            } else {
                faces.push([v00, v10, v01]);
                faces.push([v10, v11, v01]);
            }
        }
    }
    Ok(RibbonMesh {
        t: chart.nodes().to_vec(),
        s: grid_s.to_vec(),
        vertices,
        flat,
        faces,
        eta,
        jacobian,
    })
}

/// One oscillation cell of a corrugated field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrugationCell {
    pub start: f64,
    pub end: f64,
    /// The field equals `a` on `[start, split)` and `b` on `[split, end)`.
    pub split: f64,
    pub a: SymMat2,
    pub b: SymMat2,
    pub theta: f64,
    /// Target `M` at the cell midpoint.
    pub target: SymMat2,
    /// Stretched energies `det D·Q(· − M°)` of `a`, `b` and the relaxed
    /// density of the target at the midpoint.
    pub energy_a: f64,
    pub energy_b: f64,
    pub relaxed: f64,
}

#[derive(Debug, Clone)]
pub struct Corrugation {
    pub cells: Vec<CorrugationCell>,
    /// Piecewise-constant field sampled at the chart nodes.
    pub nodal: Vec<SymMat2>,
}

/// Linear interpolation of `(μ, τ, γ)` from a profile. `γ` falls back to
/// the minimizer of `Q̄` when the profile carries none.
fn target_at(model: &RibbonModel, profile: &Profile, t: f64) -> Result<(f64, f64, f64)> {
    let (i, w) = locate(&profile.nodes, t);
    let lerp = |v: &[f64]| v[i] * (1.0 - w) + v[i + 1] * w;
    let (mu, tau) = (lerp(&profile.mu), lerp(&profile.tau));
    let gamma = match &profile.gamma {
        Some(g) => lerp(g),
        None => qbar(&model.context_at(t)?, mu, tau).gamma_star,
    };
    Ok((mu, tau, gamma))
}

/// Target curvature `M(t)` in chart coordinates.
pub fn target_field(model: &RibbonModel, profile: &Profile, t: f64) -> Result<SymMat2> {
    let (mu, tau, gamma) = target_at(model, profile, t)?;
    contravariant_assembly(&model.chart().frame_at(t), mu, tau, gamma)
}

/// Splits each of `n` equal cells between the two det-zero endpoints of
/// the decomposition of the (√det D scaled) midpoint target.
pub fn corrugate(model: &RibbonModel, profile: &Profile, n: usize) -> Result<Corrugation> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(invalid("cells", format!("must be even and >= 2, got {n}")));
    }
    let chart = model.chart();
    if profile.len() != chart.len() {
        return Err(RibbonError::GridMismatch {
            expected: chart.len(),
            got: profile.len(),
        });
    }
    let problem = RelaxationProblem::with_alphas(model.rigidity().clone(), model.alphas(), 0.0);
    let lo = chart.nodes()[0];
    let hi = chart.nodes()[chart.len() - 1];
    let nf = n as f64;
    let edge = |k: usize| {
        let k = k as f64;
        (lo * (nf - k) + hi * k) / nf
    };
    let cells = (0..n)
        .into_par_iter()
        .map(|k| {
            let (start, end) = (edge(k), edge(k + 1));
            let mid = 0.5 * (start + end);
            let d = chart.frame_at(mid);
            let scale = d.determinant().sqrt();
            let target = target_field(model, profile, mid)?;
            let nat = model.natural().at(mid);
            let nat_m = contravariant_assembly(&d, nat.m11, nat.m12, nat.m22)?;
            let m = voigt(target * scale);
            let dec = two_point_decomposition(&problem, m)?;
            let m0 = voigt(nat_m * scale);
            let theta = dec.theta;
            Ok(CorrugationCell {
                start,
                end,
                split: start + (1.0 - theta) * (end - start),
                a: unvoigt(dec.a) * (1.0 / scale),
                b: unvoigt(dec.b) * (1.0 / scale),
                theta,
                target,
                energy_a: quad(model.rigidity(), dec.a - m0),
                energy_b: quad(model.rigidity(), dec.b - m0),
                relaxed: relaxed_integrand(&problem, m) - quad(model.rigidity(), m) + quad(model.rigidity(), m - m0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let nodal = chart
        .nodes()
        .iter()
        .map(|&t| {
            let k = (((t - lo) / (hi - lo) * nf).floor() as usize).min(n - 1);
            let c = &cells[k];
            if t < c.split {
                c.a
            } else {
                c.b
            }
        })
        .collect();
    Ok(Corrugation { cells, nodal })
}

impl Corrugation {
    fn length(&self) -> f64 {
        self.cells[self.cells.len() - 1].end - self.cells[0].start
    }

    /// Mean of the stretched energy of the corrugated field, integrated
    /// exactly cell by cell.
    pub fn mean_energy(&self) -> f64 {
        let total: f64 = self
            .cells
            .iter()
            .map(|c| (c.end - c.start) * ((1.0 - c.theta) * c.energy_a + c.theta * c.energy_b))
            .sum();
        total / self.length()
    }

    /// Mean relaxed density of the piecewise-constant midpoint target.
    pub fn mean_relaxed(&self) -> f64 {
        let total: f64 = self.cells.iter().map(|c| (c.end - c.start) * c.relaxed).sum();
        total / self.length()
    }

    /// Largest deviation, over windows of 4 consecutive cells, between the
    /// window average of the field and the target at the window centre.
    pub fn defect(&self, target: impl Fn(f64) -> SymMat2) -> f64 {
        self.cells
            .windows(4)
            .map(|w| {
                let len = w[3].end - w[0].start;
                let mut avg = SymMat2::ZERO;
                for c in w {
                    let h = c.end - c.start;
                    avg = avg + c.a * ((1.0 - c.theta) * h) + c.b * (c.theta * h);
                }
                let avg = avg * (1.0 / len);
                (avg - target(0.5 * (w[0].start + w[3].end))).norm()
            })
            .fold(0.0, f64::max)
    }
}
