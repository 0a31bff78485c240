//! Grid evaluation of the convex envelope, used as an independent check of
//! the closed-form relaxation.
//!
//! The constraint surface `det x = z` is rasterized on the cube
//! `[-radius, radius]³` (nodes within one spacing of the surface, then
//! projected onto it exactly), giving a finite set `S`. The biconjugate of
//! `f = C x·x` restricted to `S` at `m` is
//!
//! ```text
//!   sup_ξ  m·ξ - max_{x∈S} (ξ·x - f(x))
//! ```
//!
//! i.e. a double discrete Legendre transform. Its dual is the linear program
//! `min Σ θ_i f(x_i)` over convex weights with `Σ θ_i x_i = m`; it is solved
//! by a revised simplex on the 4×4 basis, where each pricing step is exactly
//! the inner Legendre maximization at the current dual slope `ξ`. Because
//! every point of `S` lies on the constraint, the result is an upper bound on
//! the true envelope and decreases as the grid is refined.

use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;

use super::RelaxationProblem;
use crate::error::{invalid, Result, RibbonError};
use crate::quadratic_forms::{det_form, quad, Voigt3};

pub fn brute_force_biconjugate(
    p: &RelaxationProblem,
    m: Voigt3,
    radius: f64,
    n: usize,
) -> Result<f64> {
    if n < 16 {
        return Err(invalid("n", format!("grid resolution must be at least 16, got {n}")));
    }
    if !(radius > 0.0) || !(m.norm() < 0.5 * radius) {
        return Err(invalid(
            "radius",
            format!("need |m| < radius/2 (|m| = {}, radius = {radius})", m.norm()),
        ));
    }
    let points = rasterize(p, radius, n);
    if points.is_empty() {
        return Err(RibbonError::EmptyConstraintSet { radius, n });
    }
    let costs: Vec<f64> = points.par_iter().map(|x| quad(p.rigidity(), *x)).collect();
    convex_combination_lp(&points, &costs, m)
}

/// Grid nodes `-radius + i·h`, `h = 2 radius / n`, `i = 0..=n`, lying within
/// about one spacing of the constraint surface, each moved onto it along the
/// determinant gradient.
fn rasterize(p: &RelaxationProblem, radius: f64, n: usize) -> Vec<Voigt3> {
    let h = 2.0 * radius / n as f64;
    let z = p.z();
    let node = |i: usize| -radius + h * i as f64;
    (0..=n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let x1 = node(i);
            (0..=n).flat_map(move |j| {
                let x2 = node(j);
                (0..=n).filter_map(move |k| project(Voigt3::new(x1, x2, node(k)), z, h))
            })
        })
        .collect()
}

fn project(x: Voigt3, z: f64, tol: f64) -> Option<Voigt3> {
    let d = det_form(x) - z;
    // ∇det = 2 D x
    let g = Voigt3::new(x.m2, x.m1, -0.5 * x.m3);
    let g2 = g.dot(&g);
    if g2 == 0.0 {
        return (d.abs() <= 1e-14).then_some(x);
    }
    if d.abs() > tol * g2.sqrt() {
        return None;
    }
    // det(x + t g) - z = det(g) t² + |g|² t + d; take the root nearest zero.
    let dg = det_form(g);
    let t = if dg == 0.0 {
        -d / g2
    } else {
        let disc = g2 * g2 - 4.0 * dg * d;
        if disc < 0.0 {
            return None;
        }
        -2.0 * d / (g2 + disc.sqrt())
    };
    let y = x + g * t;
    ((det_form(y) - z).abs() <= 1e-12 * (1.0 + y.dot(&y))).then_some(y)
}

const MAX_PIVOTS: usize = 20_000;
const STALL_LIMIT: usize = 50;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Column {
    Point(usize),
    Artificial(usize),
}

struct Simplex<'a> {
    points: &'a [Voigt3],
    costs: &'a [f64],
    rhs: Vector4<f64>,
    basis: [Column; 4],
}

impl<'a> Simplex<'a> {
    fn column(&self, c: Column) -> Vector4<f64> {
        match c {
            Column::Point(i) => {
                let x = self.points[i];
                Vector4::new(x.m1, x.m2, x.m3, 1.0)
            }
            Column::Artificial(j) => {
                let mut e = Vector4::zeros();
                e[j] = if self.rhs[j] < 0.0 { -1.0 } else { 1.0 };
                e
            }
        }
    }

    fn basis_inverse(&self) -> Result<Matrix4<f64>> {
        let b = Matrix4::from_columns(&self.basis.map(|c| self.column(c)));
        b.try_inverse()
            .ok_or_else(|| RibbonError::OracleFailure("singular simplex basis".into()))
    }

    fn cost(&self, c: Column, phase_one: bool) -> f64 {
        match (c, phase_one) {
            (Column::Artificial(_), true) => 1.0,
            (Column::Artificial(_), false) => 0.0,
            (Column::Point(_), true) => 0.0,
            (Column::Point(i), false) => self.costs[i],
        }
    }

    /// Runs simplex pivots for one phase; returns the final basic solution.
    fn optimize(&mut self, phase_one: bool, tol: f64) -> Result<Vector4<f64>> {
        let mut best = f64::INFINITY;
        let mut stalled = 0;
        for _ in 0..MAX_PIVOTS {
            let inv = self.basis_inverse()?;
            let xb = inv * self.rhs;
            let cb = Vector4::from_fn(|j, _| self.cost(self.basis[j], phase_one));
            let objective = cb.dot(&xb);
            if objective < best - tol {
                best = objective;
                stalled = 0;
            } else {
                stalled += 1;
            }
            // Dual slope: y = B⁻ᵀ c_B. The first three entries are ξ, the
            // last is the offset; the reduced cost of a point is
            // c_i - ξ·x_i - y₄, the negated inner Legendre objective.
            let y = inv.transpose() * cb;
            let reduced = |i: usize| {
                let x = self.points[i];
                let c = if phase_one { 0.0 } else { self.costs[i] };
                c - (y[0] * x.m1 + y[1] * x.m2 + y[2] * x.m3 + y[3])
            };
            let entering = if stalled < STALL_LIMIT {
                (0..self.points.len())
                    .into_par_iter()
                    .map(|i| (reduced(i), i))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                    .filter(|(r, _)| *r < -tol)
                    .map(|(_, i)| i)
            } else {
                // Bland's rule once the objective stops moving.
                (0..self.points.len())
                    .into_par_iter()
                    .find_first(|&i| reduced(i) < -tol)
            };
            let Some(e) = entering else {
                return Ok(xb);
            };
            let dir = inv * self.column(Column::Point(e));
            let mut leave: Option<(f64, usize)> = None;
            for j in 0..4 {
                if dir[j] > 1e-12 {
                    let ratio = xb[j].max(0.0) / dir[j];
                    if leave.is_none_or(|(r, _)| ratio < r) {
                        leave = Some((ratio, j));
                    }
                }
            }
            let Some((_, j)) = leave else {
                return Err(RibbonError::OracleFailure("unbounded linear program".into()));
            };
            self.basis[j] = Column::Point(e);
        }
        Err(RibbonError::OracleFailure(format!(
            "no convergence after {MAX_PIVOTS} pivots"
        )))
    }

    /// Replaces artificial columns left in the basis at level zero.
    fn purge_artificials(&mut self) -> Result<()> {
        for j in 0..4 {
            if let Column::Artificial(_) = self.basis[j] {
                let inv = self.basis_inverse()?;
                let row = inv.row(j).into_owned();
                let replacement = (0..self.points.len()).find(|&i| {
                    !self.basis.contains(&Column::Point(i))
                        && (row * self.column(Column::Point(i)))[0].abs() > 1e-9
                });
                match replacement {
                    Some(i) => self.basis[j] = Column::Point(i),
                    None => {
                        return Err(RibbonError::OracleFailure(
                            "rasterized points do not span the affine hull".into(),
                        ))
                    }
                }
            }
        }
        Ok(())
    }
}

/// `min Σ θ_i costs_i` subject to `Σ θ_i points_i = m`, `Σ θ_i = 1`, `θ ≥ 0`.
fn convex_combination_lp(points: &[Voigt3], costs: &[f64], m: Voigt3) -> Result<f64> {
    let rhs = Vector4::new(m.m1, m.m2, m.m3, 1.0);
    let mut lp = Simplex {
        points,
        costs,
        rhs,
        basis: [0, 1, 2, 3].map(Column::Artificial),
    };
    let scale = 1.0 + costs.iter().fold(0.0_f64, |a, &c| a.max(c.abs()));

    let xb = lp.optimize(true, 1e-12)?;
    let infeasibility: f64 = (0..4)
        .filter(|&j| matches!(lp.basis[j], Column::Artificial(_)))
        .map(|j| xb[j].abs())
        .sum();
    if infeasibility > 1e-9 {
        return Err(RibbonError::OracleFailure(format!(
            "target outside the convex hull of the rasterized set (residual {infeasibility:e})"
        )));
    }
    lp.purge_artificials()?;

    let xb = lp.optimize(false, 1e-11 * scale)?;
    Ok((0..4)
        .map(|j| match lp.basis[j] {
            Column::Point(i) => xb[j].max(0.0) * costs[i],
            Column::Artificial(_) => 0.0,
        })
        .sum())
}
