//! Dense finite-dimensional state vectors and operators.
//!
//! Composite systems are built with [`Tensor::tensor`]. The left factor is
//! always the first subsystem (system / particle A); every other module relies
//! on that ordering.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for Hermiticity and normalization checks.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance for structural checks (commutation, involution, idempotence).
pub const STRUCTURE_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Kronecker product, left factor first.
pub trait Tensor {
    fn tensor(&self, other: &Self) -> Self;
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor(b)
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ket(DVector<C64>);

impl Ket {
    /// Builds a ket from raw amplitudes. The amplitudes must be finite; they
    /// need not be normalized.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidArgument("ket must have dimension >= 1".into()));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("ket amplitudes must be finite".into()));
        }
        Ok(Ket(DVector::from_vec(amplitudes)))
    }

    /// Builds a ket and requires unit norm within [`NORM_TOL`].
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let ket = Self::new(amplitudes)?;
        ket.require_normalized()?;
        Ok(ket)
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut v = DVector::from_element(dim, ZERO);
        v[index] = ONE;
        Ket(v)
    }

    pub fn from_vector(v: DVector<C64>) -> Self {
        Ket(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    pub fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized { norm_sqr: self.norm_sqr() })
        }
    }

    /// Returns the unit vector along `self`.
    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize the zero vector".into()));
        }
        Ok(Ket(self.0.unscale(n)))
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Ket) -> C64 {
        assert_eq!(self.dim(), other.dim(), "inner product of kets with different dims");
        self.0.dotc(&other.0)
    }

    pub fn scale(&self, factor: C64) -> Ket {
        Ket(self.0.map(|z| z * factor))
    }
}

impl Tensor for Ket {
    fn tensor(&self, other: &Self) -> Self {
        Ket(self.0.kronecker(&other.0))
    }
}

impl fmt::Display for Ket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, z) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}{:+}i", z.re, z.im)?;
        }
        write!(f, "]")
    }
}

/// Structural class of a Hermitian observable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Classification {
    pub involutory: bool,
    pub idempotent: bool,
}

impl Classification {
    pub fn is_neither(&self) -> bool {
        !self.involutory && !self.idempotent
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl Operator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "operator must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("operator entries must be finite".into()));
        }
        Ok(Operator(m))
    }

    /// Row-major construction.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("operator rows must form a square matrix".into()));
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> =
            rows.iter().map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn identity(dim: usize) -> Self {
        Operator(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Operator(DMatrix::from_element(dim, dim, ZERO))
    }

    pub fn pauli_x() -> Self {
        Operator(DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]))
    }

    pub fn pauli_y() -> Self {
        Operator(DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]))
    }

    pub fn pauli_z() -> Self {
        Operator(DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]))
    }

    /// `|k><k|` for a normalized ket.
    pub fn projector(ket: &Ket) -> Result<Self> {
        ket.require_normalized()?;
        Ok(Operator(ket.vector() * ket.vector().adjoint()))
    }

    /// `|ket><bra|`.
    pub fn outer(ket: &Ket, bra: &Ket) -> Self {
        Operator(ket.vector() * bra.vector().adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn adjoint(&self) -> Operator {
        Operator(self.0.adjoint())
    }

    pub fn scale(&self, factor: C64) -> Operator {
        Operator(self.0.map(|z| z * factor))
    }

    pub fn apply(&self, ket: &Ket) -> Ket {
        assert_eq!(self.dim(), ket.dim(), "operator/ket dimension mismatch");
        Ket(&self.0 * ket.vector())
    }

    /// `<bra|self|ket>`.
    pub fn sandwich(&self, bra: &Ket, ket: &Ket) -> C64 {
        bra.inner(&self.apply(ket))
    }

    pub fn expectation(&self, ket: &Ket) -> C64 {
        self.sandwich(ket, ket)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Max-norm distance to another operator of the same dimension.
    pub fn distance(&self, other: &Operator) -> f64 {
        max_abs(&(&self.0 - &other.0))
    }

    pub fn hermitian_residual(&self) -> f64 {
        max_abs(&(&self.0 - self.0.adjoint()))
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_residual() < NORM_TOL
    }

    pub fn require_hermitian(&self) -> Result<()> {
        let residual = self.hermitian_residual();
        if residual < NORM_TOL {
            Ok(())
        } else {
            Err(Error::NotHermitian { residual })
        }
    }

    /// `max |A^2 - I|`.
    pub fn involution_residual(&self) -> f64 {
        let sq = &self.0 * &self.0;
        max_abs(&(sq - DMatrix::identity(self.dim(), self.dim())))
    }

    /// `max |A^2 - A|`.
    pub fn idempotence_residual(&self) -> f64 {
        let sq = &self.0 * &self.0;
        max_abs(&(sq - &self.0))
    }

    pub fn require_involutory(&self) -> Result<()> {
        let residual = self.involution_residual();
        if residual < STRUCTURE_TOL {
            Ok(())
        } else {
            Err(Error::NotInvolutory { residual })
        }
    }

    pub fn require_idempotent(&self) -> Result<()> {
        let residual = self.idempotence_residual();
        if residual < STRUCTURE_TOL {
            Ok(())
        } else {
            Err(Error::NotIdempotent { residual })
        }
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let prod = self.0.adjoint() * &self.0;
        max_abs(&(prod - DMatrix::identity(self.dim(), self.dim()))) < tol
    }
}

impl Tensor for Operator {
    fn tensor(&self, other: &Self) -> Self {
        Operator(self.0.kronecker(&other.0))
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator product dimension mismatch");
        Operator(&self.0 * &rhs.0)
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator sum dimension mismatch");
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator difference dimension mismatch");
        Operator(&self.0 - &rhs.0)
    }
}

/// `exp(scale * h)` for Hermitian `h`, computed from the eigendecomposition
/// `h = V diag(lambda) V†`.
pub fn expm_hermitian(h: &Operator, scale: C64) -> Result<Operator> {
    h.require_hermitian()?;
    // Symmetrize away the sub-tolerance anti-Hermitian residue before the
    // eigensolver sees it.
    let sym = (h.matrix() + h.matrix().adjoint()).unscale(2.0);
    let eig = sym.symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (scale * l).exp()));
    let v = &eig.eigenvectors;
    Ok(Operator(v * phases * v.adjoint()))
}

pub fn commutator_residual(a: &Operator, b: &Operator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let ab = a.matrix() * b.matrix();
    let ba = b.matrix() * a.matrix();
    Ok(max_abs(&(ab - ba)))
}

/// True iff `max |AB - BA| < 1e-10`.
pub fn check_commute(a: &Operator, b: &Operator) -> Result<bool> {
    Ok(commutator_residual(a, b)? < STRUCTURE_TOL)
}

pub fn require_commuting(a: &Operator, b: &Operator) -> Result<()> {
    let residual = commutator_residual(a, b)?;
    if residual < STRUCTURE_TOL {
        Ok(())
    } else {
        Err(Error::NonCommuting { residual })
    }
}

/// Involutory / idempotent classification at [`STRUCTURE_TOL`]. The identity
/// is both.
pub fn classify(a: &Operator) -> Classification {
    Classification {
        involutory: a.involution_residual() < STRUCTURE_TOL,
        idempotent: a.idempotence_residual() < STRUCTURE_TOL,
    }
}

/// Joint eigenbasis of two commuting Hermitian operators.
#[derive(Clone, Debug)]
pub struct JointEigenbasis {
    /// `(lambda, mu, |e>)` with `a|e> = lambda|e>`, `b|e> = mu|e>`.
    pub branches: Vec<(f64, f64, Ket)>,
}

/// Diagonalizes a commuting Hermitian pair by diagonalizing a generic real
/// combination `a + c b`.
pub fn joint_eigenbasis(a: &Operator, b: &Operator) -> Result<JointEigenbasis> {
    a.require_hermitian()?;
    b.require_hermitian()?;
    require_commuting(a, b)?;
    // golden-ratio weight: distinct (lambda, mu) pairs with small integer-ish
    // spectra never collide in lambda + c mu
    let c = (5f64.sqrt() - 1.0) / 2.0;
    let combo = a.matrix() + b.matrix().map(|z| z * c);
    let combo = (&combo + combo.adjoint()).unscale(2.0);
    let eig = combo.symmetric_eigen();
    let mut branches = Vec::with_capacity(a.dim());
    for k in 0..a.dim() {
        let e = Ket(eig.eigenvectors.column(k).into_owned());
        let lambda = a.expectation(&e).re;
        let mu = b.expectation(&e).re;
        let res_a = (a.apply(&e).vector() - e.vector().map(|z| z * lambda)).norm();
        let res_b = (b.apply(&e).vector() - e.vector().map(|z| z * mu)).norm();
        if res_a.max(res_b) > 1e-8 {
            return Err(Error::NonCommuting { residual: res_a.max(res_b) });
        }
        branches.push((lambda, mu, e));
    }
    Ok(JointEigenbasis { branches })
}
