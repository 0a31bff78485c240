//! Relaxation of a quadratic energy under a pointwise determinant constraint.
//!
//! The convex envelope of `f(m) = C m·m + χ{det m = z}` is
//! `C m·m + alpha+ (det m - z)⁺ + alpha- (det m - z)⁻`. Besides the closed
//! form this module builds the explicit two-point splitting that attains it,
//! and [`biconjugate`] evaluates the envelope from scratch on a grid.

mod biconjugate;

pub use biconjugate::brute_force_biconjugate;

use crate::error::{Result, RibbonError};
use crate::quadratic_forms::{
    alpha_constants, det_bilinear, det_form, kernel_direction, quad, Alphas, Rigidity, Sign,
    Voigt3,
};

/// A rigidity together with the determinant level `z` the constraint fixes.
#[derive(Debug, Clone)]
pub struct RelaxationProblem {
    rigidity: Rigidity,
    alphas: Alphas,
    z: f64,
}

impl RelaxationProblem {
    pub fn new(rigidity: Rigidity, z: f64) -> Result<Self> {
        let alphas = alpha_constants(&rigidity)?;
        Ok(RelaxationProblem { rigidity, alphas, z })
    }

    /// Reuses constants already computed for `rigidity`.
    pub fn with_alphas(rigidity: Rigidity, alphas: Alphas, z: f64) -> Self {
        RelaxationProblem { rigidity, alphas, z }
    }

    pub fn rigidity(&self) -> &Rigidity {
        &self.rigidity
    }

    pub fn alphas(&self) -> Alphas {
        self.alphas
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    /// The unrelaxed energy, `+∞` off the constraint.
    pub fn constrained_energy(&self, m: Voigt3, tol: f64) -> f64 {
        if (det_form(m) - self.z).abs() <= tol {
            quad(&self.rigidity, m)
        } else {
            f64::INFINITY
        }
    }
}

/// `m = (1 - theta) a + theta b` with `det a = det b = z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub a: Voigt3,
    pub b: Voigt3,
    pub theta: f64,
    pub value: f64,
    /// Kernel direction along which `a` and `b` were found; zero for the
    /// trivial on-constraint splitting.
    pub direction: Voigt3,
}

pub fn relaxed_integrand(p: &RelaxationProblem, m: Voigt3) -> f64 {
    let excess = det_form(m) - p.z;
    quad(&p.rigidity, m) + p.alphas.plus * excess.max(0.0) + p.alphas.minus * (-excess).max(0.0)
}

/// Splits `m` into two points on the constraint `det = z` whose weighted
/// energy equals the relaxed integrand at `m`.
///
/// Moving along a kernel vector `k` of `C ± alpha D` changes `C m·m` by
/// exactly `∓alpha` times the change in `det m`, so both roots of
/// `det(m + λk) = z` carry the same energy and any convex combination of them
/// returning to `m` attains the envelope.
pub fn two_point_decomposition(p: &RelaxationProblem, m: Voigt3) -> Result<Decomposition> {
    let excess = det_form(m) - p.z;
    if excess == 0.0 {
        return Ok(Decomposition {
            a: m,
            b: m,
            theta: 0.0,
            value: quad(&p.rigidity, m),
            direction: Voigt3::ZERO,
        });
    }
    let sign = if excess > 0.0 { Sign::Plus } else { Sign::Minus };
    let k = kernel_direction(&p.rigidity, &p.alphas, sign)?;

    // det(m + λk) - z = A λ² + 2B λ + excess
    let a2 = det_form(k);
    let b1 = det_bilinear(m, k);
    let disc = b1 * b1 - a2 * excess;
    if !(disc > 0.0) || a2 * excess >= 0.0 {
        return Err(RibbonError::RootsDoNotStraddle {
            lambda_lo: f64::NAN,
            lambda_hi: f64::NAN,
        });
    }
    let q = -(b1 + disc.sqrt().copysign(if b1 == 0.0 { 1.0 } else { b1 }));
    let (r1, r2) = {
        let x = q / a2;
        let y = excess / q;
        if x < y {
            (x, y)
        } else {
            (y, x)
        }
    };
    if !(r1 < 0.0 && r2 > 0.0) {
        return Err(RibbonError::RootsDoNotStraddle {
            lambda_lo: r1,
            lambda_hi: r2,
        });
    }
    let a = m + k * r1;
    let b = m + k * r2;
    let theta = -r1 / (r2 - r1);
    let value = (1.0 - theta) * quad(&p.rigidity, a) + theta * quad(&p.rigidity, b);
    Ok(Decomposition {
        a,
        b,
        theta,
        value,
        direction: k,
    })
}
