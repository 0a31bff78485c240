//! Adapted frames `r' = W(κ, μ, τ) r`, limit centerline and directors.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{invalid, Result, RibbonError};
use crate::geometry::{FrameCoefficients, ReferenceChart};
use crate::reduced_density::{qbar, DensityContext};

/// `W = (0, κ, μ; −κ, 0, τ; −μ, −τ, 0)`.
pub fn generator(kappa: f64, mu: f64, tau: f64) -> Matrix3<f64> {
    Matrix3::new(0.0, kappa, mu, -kappa, 0.0, tau, -mu, -tau, 0.0)
}

/// `exp(h W)` by the Rodrigues formula.
pub fn rotation_step(kappa: f64, mu: f64, tau: f64, h: f64) -> Matrix3<f64> {
    let w = generator(kappa, mu, tau) * h;
    let theta = h.abs() * (kappa * kappa + mu * mu + tau * tau).sqrt();
    let (a, b) = if theta < 1e-4 {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    Matrix3::identity() + w * a + w * w * b
}

/// `‖rᵀr − I‖` in the max-entry norm.
pub fn orthogonality_defect(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).amax()
}

fn check_rotation(r: &Matrix3<f64>) -> Result<()> {
    let defect = orthogonality_defect(r).max((r.determinant() - 1.0).abs());
    if !(defect <= 1e-12) {
        return Err(RibbonError::NotARotation { defect });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct FramePath {
    nodes: Vec<f64>,
    rotations: Vec<Matrix3<f64>>,
    points: Vec<Vector3<f64>>,
}

impl FramePath {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn rotation(&self, i: usize) -> &Matrix3<f64> {
        &self.rotations[i]
    }

    pub fn rotations(&self) -> &[Matrix3<f64>] {
        &self.rotations
    }

    pub fn point(&self, i: usize) -> Vector3<f64> {
        self.points[i]
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    /// Row `k` of `r_i` as a column vector: `a1`, `a2` or `a3`.
    pub fn row(&self, i: usize, k: usize) -> Vector3<f64> {
        self.rotations[i].row(k).transpose()
    }

    pub fn max_orthogonality_defect(&self) -> f64 {
        self.rotations.iter().map(orthogonality_defect).fold(0.0, f64::max)
    }
}

/// Integrates the frame ODE from `r0` at the first grid node, with `y = 0`
/// there. Coefficients are averaged to each step midpoint and each step is
/// an exact rotation.
pub fn integrate_frame(coeffs: &FrameCoefficients, r0: &Matrix3<f64>, grid: &[f64]) -> Result<FramePath> {
    check_rotation(r0)?;
    if grid.len() != coeffs.len() {
        return Err(RibbonError::GridMismatch {
            expected: grid.len(),
            got: coeffs.len(),
        });
    }
    if grid.len() < 2 {
        return Err(invalid("grid", "need at least 2 nodes"));
    }
    let mut rotations = Vec::with_capacity(grid.len());
    let mut points = Vec::with_capacity(grid.len());
    let mut r = *r0;
    let mut y = Vector3::zeros();
    rotations.push(r);
    points.push(y);
    for i in 0..grid.len() - 1 {
        let h = grid[i + 1] - grid[i];
        let k = 0.5 * (coeffs.kappa[i] + coeffs.kappa[i + 1]);
        let m = 0.5 * (coeffs.mu[i] + coeffs.mu[i + 1]);
        let t = 0.5 * (coeffs.tau[i] + coeffs.tau[i + 1]);
        let half = rotation_step(k, m, t, 0.5 * h) * r;
        y += half.row(0).transpose() * h;
        r = rotation_step(k, m, t, 0.5 * h) * half;
        // one Newton–Schulz sweep keeps rᵀr = I at rounding level
        r = r * 1.5 - r * r.transpose() * r * 0.5;
        rotations.push(r);
        points.push(y);
    }
    Ok(FramePath {
        nodes: grid.to_vec(),
        rotations,
        points,
    })
}

/// Centerline and directors of the limit deformation.
#[derive(Debug, Clone)]
pub struct Directors {
    pub y: Vec<Vector3<f64>>,
    pub d1: Vec<Vector3<f64>>,
    pub d2: Vec<Vector3<f64>>,
    pub d3: Vec<Vector3<f64>>,
}

/// `d1 = a1`, `d3 = a3`, `d2 = (D1·D2) d1 + det D (d3∧d1)`.
pub fn centerline_and_directors(path: &FramePath, chart: &ReferenceChart) -> Result<Directors> {
    if path.len() != chart.len() {
        return Err(RibbonError::GridMismatch {
            expected: chart.len(),
            got: path.len(),
        });
    }
    let mut out = Directors {
        y: path.points.clone(),
        d1: Vec::with_capacity(path.len()),
        d2: Vec::with_capacity(path.len()),
        d3: Vec::with_capacity(path.len()),
    };
    for i in 0..path.len() {
        let d = chart.frame(i);
        let a1 = path.row(i, 0);
        let a2 = path.row(i, 1);
        let a3 = path.row(i, 2);
        let g12 = d.column(0).dot(&d.column(1));
        out.d1.push(a1);
        out.d2.push(a1 * g12 + a2 * d.determinant());
        out.d3.push(a3);
    }
    Ok(out)
}

/// Bending/twist profile on the chart grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub nodes: Vec<f64>,
    pub mu: Vec<f64>,
    pub tau: Vec<f64>,
    pub gamma: Option<Vec<f64>>,
}

impl Profile {
    pub fn new(nodes: Vec<f64>, mu: Vec<f64>, tau: Vec<f64>, gamma: Option<Vec<f64>>) -> Result<Self> {
        let n = nodes.len();
        for (name, v) in [("mu", Some(&mu)), ("tau", Some(&tau)), ("gamma", gamma.as_ref())] {
            if let Some(v) = v {
                if v.len() != n {
                    return Err(RibbonError::GridMismatch { expected: n, got: v.len() });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(invalid(name, "non-finite profile value"));
                }
            }
        }
        Ok(Profile { nodes, mu, tau, gamma })
    }

    pub fn constant(nodes: &[f64], mu: f64, tau: f64) -> Self {
        Profile {
            nodes: nodes.to_vec(),
            mu: vec![mu; nodes.len()],
            tau: vec![tau; nodes.len()],
            gamma: None,
        }
    }

    pub fn zero(nodes: &[f64]) -> Self {
        Self::constant(nodes, 0.0, 0.0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Trapezoid weights of a grid.
pub fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { nodes[i] - nodes[i - 1] } else { 0.0 };
            let right = if i + 1 < n { nodes[i + 1] - nodes[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// `J = ∫ Q̄(x1, μ, τ) dx1` by the trapezoid rule over the nodes.
pub fn evaluate_j(profile: &Profile, contexts: &[DensityContext]) -> Result<f64> {
    if contexts.len() != profile.len() {
        return Err(RibbonError::GridMismatch {
            expected: profile.len(),
            got: contexts.len(),
        });
    }
    let density: Vec<f64> = (0..profile.len())
        .into_par_iter()
        .map(|i| qbar(&contexts[i], profile.mu[i], profile.tau[i]).value)
        .collect();
    Ok(trapezoid_weights(&profile.nodes)
        .iter()
        .zip(&density)
        .map(|(w, q)| w * q)
        .sum())
}
