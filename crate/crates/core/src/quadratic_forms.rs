//! Quadratic bending energies on symmetric 2×2 curvature matrices.
//!
//! Curvatures are carried in Voigt form `m = (M11, M22, 2 M12)`, so that the
//! energy becomes `Q(M) = C m·m` for a symmetric 3×3 rigidity matrix `C` and
//! the determinant becomes `det M = D m·m` for the fixed indefinite form
//! [`DET_FORM`]. The constants `alpha±` are the largest multipliers keeping
//! `C ± alpha D` positive semidefinite.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix2, Matrix3, SymmetricEigen, Vector3};

use crate::error::{invalid, Result, RibbonError};

/// Symmetric 2×2 matrix stored by its three independent entries.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymMat2 {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

impl SymMat2 {
    pub const ZERO: SymMat2 = SymMat2 {
        m11: 0.0,
        m12: 0.0,
        m22: 0.0,
    };

    pub const fn new(m11: f64, m12: f64, m22: f64) -> Self {
        SymMat2 { m11, m12, m22 }
    }

    pub fn identity() -> Self {
        SymMat2::new(1.0, 0.0, 1.0)
    }

    /// Symmetric part of an arbitrary 2×2 matrix.
    pub fn from_matrix(m: &Matrix2<f64>) -> Self {
        SymMat2::new(m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)])
    }

    /// Symmetric tensor product `a⊗b + b⊗a` scaled by one half.
    pub fn sym_outer(a: &nalgebra::Vector2<f64>, b: &nalgebra::Vector2<f64>) -> Self {
        SymMat2::new(a.x * b.x, 0.5 * (a.x * b.y + a.y * b.x), a.y * b.y)
    }

    pub fn outer(a: &nalgebra::Vector2<f64>) -> Self {
        SymMat2::new(a.x * a.x, a.x * a.y, a.y * a.y)
    }

    pub fn to_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.m11, self.m12, self.m12, self.m22)
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m12
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.m11 * self.m11 + 2.0 * self.m12 * self.m12 + self.m22 * self.m22).sqrt()
    }

    /// `Pᵀ M P`.
    pub fn congruence(&self, p: &Matrix2<f64>) -> Self {
        SymMat2::from_matrix(&(p.transpose() * self.to_matrix() * p))
    }

    pub fn apply(&self, v: &nalgebra::Vector2<f64>) -> nalgebra::Vector2<f64> {
        self.to_matrix() * v
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m22.is_finite()
    }
}

impl Add for SymMat2 {
    type Output = SymMat2;
    fn add(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.m11 + o.m11, self.m12 + o.m12, self.m22 + o.m22)
    }
}

impl Sub for SymMat2 {
    type Output = SymMat2;
    fn sub(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.m11 - o.m11, self.m12 - o.m12, self.m22 - o.m22)
    }
}

impl Mul<f64> for SymMat2 {
    type Output = SymMat2;
    fn mul(self, s: f64) -> SymMat2 {
        SymMat2::new(self.m11 * s, self.m12 * s, self.m22 * s)
    }
}

/// Voigt image `(M11, M22, 2 M12)` of a [`SymMat2`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Voigt3 {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

impl Voigt3 {
    pub const ZERO: Voigt3 = Voigt3 {
        m1: 0.0,
        m2: 0.0,
        m3: 0.0,
    };

    pub const fn new(m1: f64, m2: f64, m3: f64) -> Self {
        Voigt3 { m1, m2, m3 }
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Voigt3::new(v.x, v.y, v.z)
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.m1, self.m2, self.m3)
    }

    pub fn dot(&self, o: &Voigt3) -> f64 {
        self.m1 * o.m1 + self.m2 * o.m2 + self.m3 * o.m3
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn unvoigt(&self) -> SymMat2 {
        unvoigt(*self)
    }
}

impl Add for Voigt3 {
    type Output = Voigt3;
    fn add(self, o: Voigt3) -> Voigt3 {
        Voigt3::new(self.m1 + o.m1, self.m2 + o.m2, self.m3 + o.m3)
    }
}

impl Sub for Voigt3 {
    type Output = Voigt3;
    fn sub(self, o: Voigt3) -> Voigt3 {
        Voigt3::new(self.m1 - o.m1, self.m2 - o.m2, self.m3 - o.m3)
    }
}

impl Mul<f64> for Voigt3 {
    type Output = Voigt3;
    fn mul(self, s: f64) -> Voigt3 {
        Voigt3::new(self.m1 * s, self.m2 * s, self.m3 * s)
    }
}

impl Neg for Voigt3 {
    type Output = Voigt3;
    fn neg(self) -> Voigt3 {
        Voigt3::new(-self.m1, -self.m2, -self.m3)
    }
}

pub fn voigt(m: SymMat2) -> Voigt3 {
    Voigt3::new(m.m11, m.m22, 2.0 * m.m12)
}

pub fn unvoigt(m: Voigt3) -> SymMat2 {
    SymMat2::new(m.m1, 0.5 * m.m3, m.m2)
}

/// The determinant as a quadratic form on Voigt vectors: `det m = D m·m`.
pub const DET_FORM: [[f64; 3]; 3] = [[0.0, 0.5, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, -0.25]];

pub fn det_form_matrix() -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| DET_FORM[i][j])
}

pub fn det_form(m: Voigt3) -> f64 {
    m.m1 * m.m2 - 0.25 * m.m3 * m.m3
}

/// Symmetric bilinear form associated with [`det_form`].
pub fn det_bilinear(a: Voigt3, b: Voigt3) -> f64 {
    0.5 * (a.m1 * b.m2 + a.m2 * b.m1) - 0.25 * a.m3 * b.m3
}

/// Where a rigidity matrix came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RigidityKind {
    General,
    Orthotropic { k11: f64, k12: f64, k22: f64, k33: f64 },
    Isotropic { k_mu: f64, k_lambda: f64 },
}

/// Bending rigidity in Voigt form; `Q(M) = C voigt(M)·voigt(M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rigidity {
    c: Matrix3<f64>,
    kind: RigidityKind,
}

impl Rigidity {
    /// Accepts any symmetric positive definite matrix.
    pub fn from_matrix(c: Matrix3<f64>) -> Result<Self> {
        Self::with_kind(c, RigidityKind::General)
    }

    /// Upper triangle `[c11, c12, c13, c22, c23, c33]`.
    pub fn from_voigt_entries(upper: [f64; 6]) -> Result<Self> {
        let [c11, c12, c13, c22, c23, c33] = upper;
        let c = Matrix3::new(c11, c12, c13, c12, c22, c23, c13, c23, c33);
        Self::from_matrix(c)
    }

    pub fn orthotropic(k11: f64, k12: f64, k22: f64, k33: f64) -> Result<Self> {
        let c = Matrix3::new(k11, k12, 0.0, k12, k22, 0.0, 0.0, 0.0, k33);
        Self::with_kind(c, RigidityKind::Orthotropic { k11, k12, k22, k33 })
    }

    /// `Q(M) = K_mu |M|² + K_lambda (tr M)²`.
    pub fn isotropic(k_mu: f64, k_lambda: f64) -> Result<Self> {
        let k11 = k_mu + k_lambda;
        let c = Matrix3::new(k11, k_lambda, 0.0, k_lambda, k11, 0.0, 0.0, 0.0, 0.5 * k_mu);
        Self::with_kind(c, RigidityKind::Isotropic { k_mu, k_lambda })
    }

    /// `Q(M) = |M|²`.
    pub fn sadowsky() -> Self {
        Self::orthotropic(1.0, 0.0, 1.0, 0.5).expect("identity rigidity is positive definite")
    }

    fn with_kind(c: Matrix3<f64>, kind: RigidityKind) -> Result<Self> {
        if c.iter().any(|x| !x.is_finite()) {
            return Err(invalid("rigidity", "entries must be finite"));
        }
        if (c - c.transpose()).abs().max() > 1e-12 * (1.0 + c.abs().max()) {
            return Err(invalid("rigidity", "matrix must be symmetric"));
        }
        let min_eigenvalue = min_eigenvalue(&c);
        if !(min_eigenvalue > 1e-12 * c.abs().max()) {
            return Err(RibbonError::NotPositiveDefinite { min_eigenvalue });
        }
        Ok(Rigidity { c, kind })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.c
    }

    pub fn kind(&self) -> RigidityKind {
        self.kind
    }

    /// Largest eigenvalue of `C`.
    pub fn spectral_norm(&self) -> f64 {
        self.c.symmetric_eigenvalues().max()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.c)
    }
}

pub(crate) fn min_eigenvalue(m: &Matrix3<f64>) -> f64 {
    m.symmetric_eigenvalues().min()
}

pub fn quad(c: &Rigidity, m: Voigt3) -> f64 {
    let v = m.to_vector();
    v.dot(&(c.c * v))
}

/// `C a·b`.
pub fn quad_bilinear(c: &Rigidity, a: Voigt3, b: Voigt3) -> f64 {
    a.to_vector().dot(&(c.c * b.to_vector()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sign::Plus => "C + alpha D",
            Sign::Minus => "C - alpha D",
        }
    }
}

/// The pair `(alpha+, alpha-)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alphas {
    pub plus: f64,
    pub minus: f64,
}

impl Alphas {
    pub fn get(&self, sign: Sign) -> f64 {
        match sign {
            Sign::Plus => self.plus,
            Sign::Minus => self.minus,
        }
    }
}

/// `C + s·alpha·D` with `s = ±1`.
pub fn pencil(c: &Rigidity, sign: Sign, alpha: f64) -> Matrix3<f64> {
    c.c + det_form_matrix() * (sign.factor() * alpha)
}

const MAX_DOUBLINGS: usize = 200;

/// Largest `alpha` with `C + s·alpha·D` positive semidefinite, by bisection on
/// the smallest eigenvalue. The smallest eigenvalue is concave in `alpha` and
/// positive at zero, so the feasible set is an interval `[0, alpha*]`.
fn bisect_alpha(c: &Rigidity, sign: Sign) -> Result<f64> {
    let feasible = |alpha: f64| min_eigenvalue(&pencil(c, sign, alpha)) >= 0.0;
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while feasible(hi) {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(RibbonError::BracketFailure { doublings });
        }
    }
    // Runs to full double precision; the interval is well below 1e-12 long.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

pub fn alpha_constants(c: &Rigidity) -> Result<Alphas> {
    Ok(Alphas {
        plus: bisect_alpha(c, Sign::Plus)?,
        minus: bisect_alpha(c, Sign::Minus)?,
    })
}

/// Closed-form constants for an orthotropic rigidity
/// `C = [[K11, K12, 0], [K12, K22, 0], [0, 0, K33]]`.
pub fn orthotropic_alphas(k11: f64, k12: f64, k22: f64, k33: f64) -> Result<Alphas> {
    check_orthotropic(k11, k12, k22, k33)?;
    let g = (k11 * k22).sqrt();
    Ok(Alphas {
        plus: (4.0 * k33).min(2.0 * (g - k12)),
        minus: 2.0 * (g + k12),
    })
}

pub(crate) fn check_orthotropic(k11: f64, k12: f64, k22: f64, k33: f64) -> Result<()> {
    if !(k11 > 0.0) {
        return Err(RibbonError::OrthotropicPrecondition(format!("K11 > 0 fails (K11 = {k11})")));
    }
    if !(k22 > 0.0) {
        return Err(RibbonError::OrthotropicPrecondition(format!("K22 > 0 fails (K22 = {k22})")));
    }
    if !(k33 > 0.0) {
        return Err(RibbonError::OrthotropicPrecondition(format!("K33 > 0 fails (K33 = {k33})")));
    }
    if !(k12 * k12 < k11 * k22) {
        return Err(RibbonError::OrthotropicPrecondition(format!(
            "K12² < K11·K22 fails ({} >= {})",
            k12 * k12,
            k11 * k22
        )));
    }
    Ok(())
}

const MIN_KERNEL_DET: f64 = 1e-10;

/// Unit vector in the kernel of `C ± alpha± D`.
///
/// Along the kernel `C m·m = ∓alpha± det m`, so the plus pencil only has
/// kernel vectors with `det < 0` and the minus pencil only has kernel vectors
/// with `det > 0`. The returned vector carries the sign `-s` in its
/// determinant, which is what the two-point construction needs on either
/// side of the constraint. The whole numerical kernel is scanned; the
/// smallest-eigenvalue candidate with a usable determinant wins.
pub fn kernel_direction(c: &Rigidity, alphas: &Alphas, sign: Sign) -> Result<Voigt3> {
    let p = pencil(c, sign, alphas.get(sign));
    let eig = SymmetricEigen::new(p);
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let scale = c.spectral_norm();
    let wanted = -sign.factor();

    let candidate = |i: usize| {
        let v = eig.eigenvectors.column(i).into_owned().normalize();
        let m = fix_sign(Voigt3::from_vector(&v));
        (m, det_form(m))
    };

    let mut best_det = 0.0_f64;
    for &i in &order {
        if eig.eigenvalues[i] > 1e-8 * scale {
            break;
        }
        let (m, d) = candidate(i);
        if wanted * d >= MIN_KERNEL_DET {
            return Ok(m);
        }
        if wanted * d > wanted * best_det {
            best_det = d;
        }
    }

    // Near-degenerate determinant: widen the threshold and keep the
    // candidate with the largest correctly signed determinant.
    let widened = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i] <= 1e-5 * scale)
        .map(|&i| candidate(i))
        .filter(|(_, d)| wanted * d > 0.0)
        .max_by(|a, b| (wanted * a.1).total_cmp(&(wanted * b.1)));
    match widened {
        Some((m, d)) if wanted * d >= MIN_KERNEL_DET => Ok(m),
        Some((_, d)) => Err(RibbonError::NoKernelDirection {
            sign: sign.name(),
            best_det: d,
        }),
        None => Err(RibbonError::NoKernelDirection {
            sign: sign.name(),
            best_det,
        }),
    }
}

/// First component with magnitude above 1e-12 made positive.
fn fix_sign(m: Voigt3) -> Voigt3 {
    let first = [m.m1, m.m2, m.m3].into_iter().find(|x| x.abs() > 1e-12);
    match first {
        Some(x) if x < 0.0 => -m,
        _ => m,
    }
}
