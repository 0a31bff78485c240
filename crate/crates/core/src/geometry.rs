//! Reference charts of the flat strip along its centerline.
//!
//! A chart is sampled on a uniform grid of `I = [-ℓ/2, ℓ/2]`. At every node it
//! stores the covariant basis `D = (D1 | D2)` (columns), the geodesic
//! curvature of the centerline and the centerline point `B(t)` in the plane.
//! Planar vectors are identified with `(a1, a2, 0)`, so `e3∧a = (-a2, a1)`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};

use crate::error::{invalid, Result, RibbonError};
use crate::quadratic_forms::SymMat2;

/// `e3 ∧ a`, the counter-clockwise quarter turn.
pub fn perp(a: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-a.y, a.x)
}

/// Planar cross product `a1 b2 - a2 b1`.
pub fn cross2(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartKind {
    /// Straight strip, `D = I`.
    Rectangle,
    /// Annular strip whose centerline is an arc of curvature `kappa0`.
    Arc { kappa0: f64 },
    /// Constant sheared basis `D1 = e1`, `D2 = (d12, d22)`.
    Sheared { d12: f64, d22: f64 },
    /// Nodal data read from a table.
    Sampled,
}

/// One row of a sampled chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartSample {
    pub t: f64,
    pub frame: Matrix2<f64>,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ReferenceChart {
    length: f64,
    nodes: Vec<f64>,
    frames: Vec<Matrix2<f64>>,
    kappa: Vec<f64>,
    centerline: Vec<Vector2<f64>>,
    kind: ChartKind,
}

pub fn uniform_grid(length: f64, intervals: usize) -> Vec<f64> {
    let lo = -0.5 * length;
    let hi = 0.5 * length;
    let n = intervals as f64;
    (0..=intervals)
        .map(|i| {
            let i = i as f64;
            (lo * (n - i) + hi * i) / n + 0.0
        })
        .collect()
}

/// Builds one of the analytic charts on `intervals + 1` uniform nodes.
pub fn builtin_chart(kind: ChartKind, length: f64, intervals: usize) -> Result<ReferenceChart> {
    if !(length > 0.0) {
        return Err(invalid("length", format!("must be positive, got {length}")));
    }
    if intervals < 2 {
        return Err(invalid("intervals", format!("need at least 2, got {intervals}")));
    }
    match kind {
        ChartKind::Arc { kappa0 } if !(kappa0.abs() * length < 2.0 * PI) => {
            return Err(invalid(
                "chart.kappa0",
                format!("|kappa0|·length = {} must be < 2π for an embedded arc", kappa0.abs() * length),
            ))
        }
        ChartKind::Sheared { d22, .. } if !(d22 > 0.0) => {
            return Err(invalid("chart.d22", format!("must be positive, got {d22}")))
        }
        ChartKind::Sampled => {
            return Err(invalid("chart", "sampled charts are built with ReferenceChart::sampled"))
        }
        _ => {}
    }
    let nodes = uniform_grid(length, intervals);
    let frames = nodes.iter().map(|&t| analytic_frame(kind, t)).collect();
    let kappa = vec![analytic_kappa(kind); nodes.len()];
    let centerline = nodes.iter().map(|&t| analytic_centerline(kind, t)).collect();
    Ok(ReferenceChart {
        length,
        nodes,
        frames,
        kappa,
        centerline,
        kind,
    })
}

fn analytic_frame(kind: ChartKind, t: f64) -> Matrix2<f64> {
    match kind {
        ChartKind::Rectangle | ChartKind::Sampled => Matrix2::identity(),
        ChartKind::Arc { kappa0 } => {
            let (s, c) = (kappa0 * t).sin_cos();
            Matrix2::new(c, -s, s, c)
        }
        ChartKind::Sheared { d12, d22 } => Matrix2::new(1.0, d12, 0.0, d22),
    }
}

fn analytic_kappa(kind: ChartKind) -> f64 {
    match kind {
        ChartKind::Arc { kappa0 } => kappa0,
        _ => 0.0,
    }
}

fn analytic_centerline(kind: ChartKind, t: f64) -> Vector2<f64> {
    match kind {
        ChartKind::Arc { kappa0 } if kappa0 != 0.0 => {
            let (s, c) = (kappa0 * t).sin_cos();
            Vector2::new(s / kappa0, (1.0 - c) / kappa0)
        }
        _ => Vector2::new(t, 0.0),
    }
}

impl ReferenceChart {
    /// Chart from tabulated frames on a uniform grid. The centerline is
    /// integrated from `D1` by the trapezoid rule starting at the origin.
    pub fn sampled(samples: &[ChartSample]) -> Result<Self> {
        if samples.len() < 3 {
            return Err(invalid("chart.samples", "need at least 3 rows"));
        }
        let nodes: Vec<f64> = samples.iter().map(|s| s.t).collect();
        let h = nodes[1] - nodes[0];
        if !(h > 0.0) {
            return Err(invalid("chart.t", "nodes must be increasing"));
        }
        for (i, w) in nodes.windows(2).enumerate() {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * (1.0 + h) {
                return Err(invalid("chart.t", format!("grid is not uniform at row {}", i + 1)));
            }
        }
        let length = nodes[nodes.len() - 1] - nodes[0];
        for (i, s) in samples.iter().enumerate() {
            if s.frame.iter().any(|x| !x.is_finite()) {
                return Err(invalid("chart.D", format!("non-finite entry at row {i}")));
            }
            let n1 = s.frame.column(0).norm();
            if (n1 - 1.0).abs() > 1e-10 {
                return Err(invalid("chart.D", format!("|D1| = {n1} at row {i}, must be 1")));
            }
            let det = s.frame.determinant();
            if !(det > 0.0) {
                return Err(RibbonError::SingularFrame { node: i, det });
            }
        }
        let frames: Vec<Matrix2<f64>> = samples.iter().map(|s| s.frame).collect();
        let mut centerline = Vec::with_capacity(frames.len());
        let mut b = Vector2::zeros();
        centerline.push(b);
        for w in frames.windows(2) {
            b += 0.5 * h * (w[0].column(0) + w[1].column(0));
            centerline.push(b);
        }
        let mut chart = ReferenceChart {
            length,
            nodes,
            frames,
            kappa: Vec::new(),
            centerline,
            kind: ChartKind::Sampled,
        };
        let fd = chart.finite_difference_kappa();
        chart.kappa = samples
            .iter()
            .zip(fd)
            .map(|(s, k)| s.kappa.unwrap_or(k))
            .collect();
        Ok(chart)
    }

    pub fn kind(&self) -> ChartKind {
        self.kind
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    pub fn frame(&self, i: usize) -> &Matrix2<f64> {
        &self.frames[i]
    }

    pub fn frames(&self) -> &[Matrix2<f64>] {
        &self.frames
    }

    /// Tangent `B' = D1` at node `i`.
    pub fn tangent(&self, i: usize) -> Vector2<f64> {
        self.frames[i].column(0).into_owned()
    }

    /// `N = e3 ∧ B'`.
    pub fn normal(&self, i: usize) -> Vector2<f64> {
        perp(&self.tangent(i))
    }

    pub fn centerline(&self, i: usize) -> Vector2<f64> {
        self.centerline[i]
    }

    /// Tabulated geodesic curvature (exact for the analytic charts, as read
    /// or differenced for sampled ones).
    pub fn stored_kappa(&self, i: usize) -> f64 {
        self.kappa[i]
    }

    /// Geodesic curvature `D1'·(e3∧D1)` at node `i`.
    pub fn geodesic_curvature(&self, i: usize) -> f64 {
        match self.kind {
            ChartKind::Sampled => self.finite_difference_kappa_at(i),
            _ => self.kappa[i],
        }
    }

    pub fn finite_difference_kappa(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.finite_difference_kappa_at(i)).collect()
    }

    fn finite_difference_kappa_at(&self, i: usize) -> f64 {
        let d1 = |j: usize| self.tangent(j);
        let h = self.spacing();
        let n = self.len();
        let derivative = if i == 0 {
            (-3.0 * d1(0) + 4.0 * d1(1) - d1(2)) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * d1(n - 1) - 4.0 * d1(n - 2) + d1(n - 3)) / (2.0 * h)
        } else {
            (d1(i + 1) - d1(i - 1)) / (2.0 * h)
        };
        derivative.dot(&perp(&d1(i)))
    }

    /// Covariant basis at an arbitrary `t`: exact for analytic charts,
    /// linear interpolation (with `D1` renormalized) for sampled ones.
    pub fn frame_at(&self, t: f64) -> Matrix2<f64> {
        match self.kind {
            ChartKind::Sampled => {
                let (i, w) = locate(&self.nodes, t);
                let f = self.frames[i] * (1.0 - w) + self.frames[i + 1] * w;
                let d1 = f.column(0).normalize();
                Matrix2::from_columns(&[d1, f.column(1).into_owned()])
            }
            kind => analytic_frame(kind, t),
        }
    }

    /// A chart on the same geometry whose grid is refined to `intervals`.
    /// Only available for analytic charts.
    pub fn regrid(&self, intervals: usize) -> Result<ReferenceChart> {
        builtin_chart(self.kind, self.length, intervals)
    }
}

/// Index `i` and weight `w` with `t ≈ (1-w) nodes[i] + w nodes[i+1]`,
/// clamped to the grid.
pub(crate) fn locate(nodes: &[f64], t: f64) -> (usize, f64) {
    let n = nodes.len();
    let h = nodes[1] - nodes[0];
    let x = ((t - nodes[0]) / h).clamp(0.0, (n - 1) as f64);
    let i = (x.floor() as usize).min(n - 2);
    (i, x - i as f64)
}

/// Columns `(D¹, D²)` of `D⁻ᵀ`, so that `Dᵅ·D_β = δ`.
pub fn contravariant(d: &Matrix2<f64>) -> Result<(Vector2<f64>, Vector2<f64>)> {
    let det = d.determinant();
    if !(det > 0.0) {
        return Err(RibbonError::SingularFrame { node: 0, det });
    }
    let inv_t = Matrix2::new(d[(1, 1)], -d[(1, 0)], -d[(0, 1)], d[(0, 0)]) / det;
    Ok((inv_t.column(0).into_owned(), inv_t.column(1).into_owned()))
}

/// `D⁻¹`, rejecting singular or orientation-reversing frames.
pub fn frame_inverse(d: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    let det = d.determinant();
    if !(det > 0.0) {
        return Err(RibbonError::SingularFrame { node: 0, det });
    }
    Ok(Matrix2::new(d[(1, 1)], -d[(0, 1)], -d[(1, 0)], d[(0, 0)]) / det)
}

/// `μ D¹⊗D¹ + τ (D¹⊗D² + D²⊗D¹) + γ D²⊗D²`, i.e. `D⁻ᵀ A D⁻¹` for
/// `A = (μ, τ; τ, γ)`.
pub fn contravariant_assembly(d: &Matrix2<f64>, mu: f64, tau: f64, gamma: f64) -> Result<SymMat2> {
    let (c1, c2) = contravariant(d)?;
    Ok(SymMat2::outer(&c1) * mu
        + SymMat2::sym_outer(&c1, &c2) * (2.0 * tau)
        + SymMat2::outer(&c2) * gamma)
}

/// Natural curvature along the centerline, in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum NaturalCurvature {
    Constant(SymMat2),
    /// Nodal table on a uniform grid, linearly interpolated.
    Table { nodes: Vec<f64>, values: Vec<SymMat2> },
}

impl NaturalCurvature {
    pub fn zero() -> Self {
        NaturalCurvature::Constant(SymMat2::ZERO)
    }

    pub fn table(nodes: Vec<f64>, values: Vec<SymMat2>) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 2 {
            return Err(invalid("natural_curvature", "table needs matching t and value columns (>= 2 rows)"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("natural_curvature", "non-finite entry"));
        }
        let h = nodes[1] - nodes[0];
        if !(h > 0.0) || nodes.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * (1.0 + h)) {
            return Err(invalid("natural_curvature.t", "grid must be uniform and increasing"));
        }
        Ok(NaturalCurvature::Table { nodes, values })
    }

    pub fn at(&self, t: f64) -> SymMat2 {
        match self {
            NaturalCurvature::Constant(a) => *a,
            NaturalCurvature::Table { nodes, values } => {
                let (i, w) = locate(nodes, t);
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            NaturalCurvature::Constant(a) => *a == SymMat2::ZERO,
            NaturalCurvature::Table { values, .. } => values.iter().all(|v| *v == SymMat2::ZERO),
        }
    }
}

/// Coefficients `(κ, μ, τ)` of the adapted-frame generator at each node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameCoefficients {
    pub kappa: Vec<f64>,
    pub mu: Vec<f64>,
    pub tau: Vec<f64>,
}

impl FrameCoefficients {
    pub fn constant(nodes: usize, kappa: f64, mu: f64, tau: f64) -> Self {
        FrameCoefficients {
            kappa: vec![kappa; nodes],
            mu: vec![mu; nodes],
            tau: vec![tau; nodes],
        }
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }
}

/// Generator of a frame adapted to `(B, M)`: `κ = B''·N`, `μ = M B'·B'`,
/// `τ = M B'·N`, with `M` given in chart coordinates at every node.
pub fn adapted_coefficients(chart: &ReferenceChart, field: &[SymMat2]) -> Result<FrameCoefficients> {
    if field.len() != chart.len() {
        return Err(RibbonError::GridMismatch {
            expected: chart.len(),
            got: field.len(),
        });
    }
    let mut out = FrameCoefficients::default();
    for (i, m) in field.iter().enumerate() {
        let b1 = chart.tangent(i);
        let mb = m.apply(&b1);
        out.kappa.push(chart.geodesic_curvature(i));
        out.mu.push(mb.dot(&b1));
        out.tau.push(mb.dot(&perp(&b1)));
    }
    Ok(out)
}

/// Frame generator for a bending/twist profile: the curvature is assembled
/// in contravariant form and fed to [`adapted_coefficients`]. The result
/// satisfies `μ_M = μ` and `τ_M = (τ - μ D1·D2) / det D`; `γ` drops out.
pub fn frame_coefficients(
    chart: &ReferenceChart,
    mu: &[f64],
    tau: &[f64],
    gamma: &[f64],
) -> Result<FrameCoefficients> {
    let n = chart.len();
    for len in [mu.len(), tau.len(), gamma.len()] {
        if len != n {
            return Err(RibbonError::GridMismatch { expected: n, got: len });
        }
    }
    let field = (0..n)
        .map(|i| {
            contravariant_assembly(chart.frame(i), mu[i], tau[i], gamma[i]).map_err(|e| match e {
                RibbonError::SingularFrame { det, .. } => RibbonError::SingularFrame { node: i, det },
                e => e,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    adapted_coefficients(chart, &field)
}
