//! The reduced one-dimensional density `Q̄(x1, μ, τ)`.
//!
//! `Q̄` is the minimum over the transverse curvature `γ` of the relaxed
//! integrand evaluated at `A = (μ, τ; τ, γ)`, pulled back through the chart.

use nalgebra::{Matrix2, Vector2};

use crate::error::{invalid, Result, RibbonError};
use crate::geometry::{contravariant_assembly, frame_inverse, NaturalCurvature, ReferenceChart};
use crate::quadratic_forms::{
    alpha_constants, check_orthotropic, pencil, quad, quad_bilinear, voigt, Alphas, Rigidity, Sign,
    SymMat2,
};

/// Everything `Q̄` depends on at one point `x1`.
#[derive(Debug, Clone)]
pub struct DensityContext {
    rigidity: Rigidity,
    alphas: Alphas,
    frame: Matrix2<f64>,
    natural: SymMat2,
    det_d: f64,
    pullback: Matrix2<f64>,
}

impl DensityContext {
    pub fn new(rigidity: Rigidity, frame: Matrix2<f64>, natural: SymMat2) -> Result<Self> {
        let alphas = alpha_constants(&rigidity)?;
        Self::with_alphas(rigidity, alphas, frame, natural)
    }

    /// Reuses precomputed constants. They are checked against the rigidity:
    /// the pencil `C ± α𝔻` must be singular positive semidefinite.
    pub fn with_alphas(rigidity: Rigidity, alphas: Alphas, frame: Matrix2<f64>, natural: SymMat2) -> Result<Self> {
        let scale = rigidity.spectral_norm();
        for sign in [Sign::Plus, Sign::Minus] {
            let a = alphas.get(sign);
            let lmin = crate::quadratic_forms::min_eigenvalue(&pencil(&rigidity, sign, a));
            if !(a >= 0.0) || lmin.abs() > 1e-9 * scale {
                return Err(invalid(
                    "alphas",
                    format!("alpha_{} = {a} is inconsistent with the rigidity (pencil eigenvalue {lmin:e})", sign.name()),
                ));
            }
        }
        if !natural.is_finite() {
            return Err(invalid("natural_curvature", "non-finite entry"));
        }
        let det_d = frame.determinant();
        let pullback = frame_inverse(&frame)?;
        Ok(DensityContext {
            rigidity,
            alphas,
            frame,
            natural,
            det_d,
            pullback,
        })
    }

    /// Flat chart `D = I` with zero natural curvature.
    pub fn flat(rigidity: Rigidity) -> Result<Self> {
        Self::new(rigidity, Matrix2::identity(), SymMat2::ZERO)
    }

    pub fn rigidity(&self) -> &Rigidity {
        &self.rigidity
    }

    pub fn alphas(&self) -> Alphas {
        self.alphas
    }

    pub fn frame(&self) -> &Matrix2<f64> {
        &self.frame
    }

    pub fn natural(&self) -> SymMat2 {
        self.natural
    }

    pub fn det_d(&self) -> f64 {
        self.det_d
    }

    fn penalty(&self, det_a: f64) -> f64 {
        if det_a >= 0.0 {
            self.alphas.plus * det_a / self.det_d
        } else {
            -self.alphas.minus * det_a / self.det_d
        }
    }

    /// The unrelaxed-then-penalized objective `g(γ)` in primal form.
    pub fn objective(&self, mu: f64, tau: f64, gamma: f64) -> f64 {
        let a = SymMat2::new(mu, tau, gamma);
        let s = (a - self.natural).congruence(&self.pullback);
        quad(&self.rigidity, voigt(s)) * self.det_d + self.penalty(mu * gamma - tau * tau)
    }

    /// `g(γ)` through the contravariant assembly of `M`.
    pub fn objective_contravariant(&self, mu: f64, tau: f64, gamma: f64) -> f64 {
        let m = contravariant_assembly(&self.frame, mu, tau, gamma).expect("frame checked at construction");
        let m0 = contravariant_assembly(&self.frame, self.natural.m11, self.natural.m12, self.natural.m22)
            .expect("frame checked at construction");
        let det_m = m.det();
        let pen = if det_m >= 0.0 {
            self.alphas.plus * det_m
        } else {
            -self.alphas.minus * det_m
        };
        self.det_d * (quad(&self.rigidity, voigt(m - m0)) + pen)
    }
}

/// `(value, γ*)` of the exact minimization over `γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityValue {
    pub value: f64,
    pub gamma_star: f64,
}

/// Quadratic `c2 γ² + c1 γ + c0`.
#[derive(Debug, Clone, Copy)]
struct Parabola {
    c2: f64,
    c1: f64,
    c0: f64,
}

impl Parabola {
    fn eval(&self, g: f64) -> f64 {
        (self.c2 * g + self.c1) * g + self.c0
    }

    fn argmin_on(&self, lo: f64, hi: f64) -> f64 {
        (-self.c1 / (2.0 * self.c2)).clamp(lo, hi)
    }
}

fn better(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    // (value, gamma); ties go to the smaller |γ|
    if b.0 < a.0 || (b.0 == a.0 && b.1.abs() < a.1.abs()) {
        b
    } else {
        a
    }
}

fn plus_zero(x: f64) -> f64 {
    x + 0.0
}

/// Generic branchwise minimization. `eval` returns both branch parabolas for
/// the given `(μ, τ)`: `(minus side, plus side)` whose penalties are the
/// `det A < 0` and `det A ≥ 0` linear pieces.
fn minimize_branches(mu: f64, tau: f64, minus: Parabola, plus: Parabola) -> DensityValue {
    let (value, gamma) = if mu == 0.0 {
        // det A = -τ² for every γ
        let g = minus.argmin_on(f64::NEG_INFINITY, f64::INFINITY);
        (minus.eval(g), g)
    } else {
        let kink = tau * tau / mu;
        // det A = μγ - τ² ≥ 0 on the plus side
        let (plus_lo, plus_hi, minus_lo, minus_hi) = if mu > 0.0 {
            (kink, f64::INFINITY, f64::NEG_INFINITY, kink)
        } else {
            (f64::NEG_INFINITY, kink, kink, f64::INFINITY)
        };
        let gp = plus.argmin_on(plus_lo, plus_hi);
        let gm = minus.argmin_on(minus_lo, minus_hi);
        let mut best = (plus.eval(gp), gp);
        best = better(best, (minus.eval(gm), gm));
        best = better(best, (plus.eval(kink), kink));
        best
    };
    DensityValue {
        value: plus_zero(value.max(0.0)),
        gamma_star: plus_zero(gamma),
    }
}

/// `Q̄` by exact branchwise minimization of the primal objective.
pub fn qbar(ctx: &DensityContext, mu: f64, tau: f64) -> DensityValue {
    // S(γ) = S0 + γ E with E = D²⊗D²
    let s0 = (SymMat2::new(mu, tau, 0.0) - ctx.natural).congruence(&ctx.pullback);
    let e = SymMat2::new(0.0, 0.0, 1.0).congruence(&ctx.pullback);
    let c = &ctx.rigidity;
    let (vs, ve) = (voigt(s0), voigt(e));
    let base = Parabola {
        c2: quad(c, ve) * ctx.det_d,
        c1: 2.0 * quad_bilinear(c, vs, ve) * ctx.det_d,
        c0: quad(c, vs) * ctx.det_d,
    };
    let with_penalty = |alpha: f64| Parabola {
        c2: base.c2,
        c1: base.c1 + alpha * mu / ctx.det_d,
        c0: base.c0 - alpha * tau * tau / ctx.det_d,
    };
    minimize_branches(mu, tau, with_penalty(-ctx.alphas.minus), with_penalty(ctx.alphas.plus))
}

/// `Q̄` through the contravariant representation. Each branch parabola is
/// interpolated from three evaluations of the fixed-sign branch objective.
pub fn qbar_contravariant(ctx: &DensityContext, mu: f64, tau: f64) -> DensityValue {
    let m0 = contravariant_assembly(&ctx.frame, ctx.natural.m11, ctx.natural.m12, ctx.natural.m22)
        .expect("frame checked at construction");
    let branch = |alpha: f64| {
        let f = |g: f64| {
            let m = contravariant_assembly(&ctx.frame, mu, tau, g).expect("frame checked at construction");
            ctx.det_d * (quad(&ctx.rigidity, voigt(m - m0)) + alpha * m.det())
        };
        let (fm, f0, fp) = (f(-1.0), f(0.0), f(1.0));
        Parabola {
            c2: 0.5 * (fp + fm) - f0,
            c1: 0.5 * (fp - fm),
            c0: f0,
        }
    };
    minimize_branches(mu, tau, branch(-ctx.alphas.minus), branch(ctx.alphas.plus))
}

/// Closed form for the Sadowsky rigidity on a flat chart.
pub fn sadowsky_corrected(mu: f64, tau: f64) -> f64 {
    let (m2, t2) = (mu * mu, tau * tau);
    if m2 > t2 {
        (m2 + t2) * (m2 + t2) / m2
    } else {
        4.0 * t2
    }
}

/// Closed form for orthotropic rigidity on a flat chart with `A° = 0`.
///
/// The formula holds whenever `2K33 + K12 ≥ 0`, which contains the usual
/// assumption `4K33 ≥ 2(√(K11K22) − K12)`.
pub fn orthotropic_qbar(k11: f64, k12: f64, k22: f64, k33: f64, mu: f64, tau: f64) -> Result<f64> {
    check_orthotropic(k11, k12, k22, k33)?;
    if 2.0 * k33 + k12 < 0.0 {
        return Err(RibbonError::OrthotropicPrecondition(format!(
            "closed form needs 2·K33 + K12 ≥ 0, got {}",
            2.0 * k33 + k12
        )));
    }
    let g = (k11 * k22).sqrt();
    let (m2, t2) = (mu * mu, tau * tau);
    if k11.sqrt() * m2 > k22.sqrt() * t2 {
        Ok((k11 * m2 * m2 + (2.0 * k12 + 4.0 * k33) * m2 * t2 + k22 * t2 * t2) / m2)
    } else {
        Ok((4.0 * k33 + 2.0 * g + 2.0 * k12) * t2)
    }
}

/// Rigidity and chart data bundled per node.
#[derive(Debug, Clone)]
pub struct RibbonModel {
    rigidity: Rigidity,
    alphas: Alphas,
    chart: ReferenceChart,
    natural: NaturalCurvature,
}

impl RibbonModel {
    pub fn new(rigidity: Rigidity, chart: ReferenceChart, natural: NaturalCurvature) -> Result<Self> {
        let alphas = alpha_constants(&rigidity)?;
        Ok(RibbonModel {
            rigidity,
            alphas,
            chart,
            natural,
        })
    }

    pub fn rigidity(&self) -> &Rigidity {
        &self.rigidity
    }

    pub fn alphas(&self) -> Alphas {
        self.alphas
    }

    pub fn chart(&self) -> &ReferenceChart {
        &self.chart
    }

    pub fn natural(&self) -> &NaturalCurvature {
        &self.natural
    }

    pub fn context_at(&self, t: f64) -> Result<DensityContext> {
        DensityContext::with_alphas(self.rigidity.clone(), self.alphas, self.chart.frame_at(t), self.natural.at(t))
    }

    pub fn context(&self, node: usize) -> Result<DensityContext> {
        let t = self.chart.nodes()[node];
        DensityContext::with_alphas(self.rigidity.clone(), self.alphas, *self.chart.frame(node), self.natural.at(t))
            .map_err(|e| match e {
                RibbonError::SingularFrame { det, .. } => RibbonError::SingularFrame { node, det },
                e => e,
            })
    }

    pub fn contexts(&self) -> Result<Vec<DensityContext>> {
        (0..self.chart.len()).map(|i| self.context(i)).collect()
    }
}

/// `D²` column of `D⁻ᵀ` for the context's frame.
pub fn transverse_covector(ctx: &DensityContext) -> Vector2<f64> {
    ctx.pullback.row(1).transpose()
}
