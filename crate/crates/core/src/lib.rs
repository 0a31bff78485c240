//! Limit model for thin anisotropic ribbons with a natural curvature.
//!
//! The pipeline runs from the plate rigidity to an explicit 3D strip:
//!
//! * [`quadratic_forms`]: Voigt curvatures, determinant form, `alpha±`.
//! * [`relaxation`]: closed-form envelope under a determinant constraint,
//!   its two-point realization and a grid biconjugate.
//! * [`geometry`]: reference charts along the centerline.
//! * [`reduced_density`]: the one-dimensional density in bending and twist.
//! * [`frames`]: adapted director frames and the limit energy.
//! * [`surface`]: developable strips from rank-one curvature fields.
//! * [`variational`]: spontaneous and clamped equilibrium profiles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod frames;
pub mod geometry;
pub mod quadratic_forms;
pub mod reduced_density;
pub mod relaxation;
pub mod surface;
pub mod variational;

pub use error::{Result, RibbonError};
