//! Exact continuous-pointer engine.
//!
//! The coupling `exp(-i g (A (x) Px + B (x) Py))` shifts the two-dimensional
//! Gaussian pointer rigidly by `(g lambda, g mu)` on each joint eigenbranch of
//! the commuting pair `(A, B)`. After post-selection the pointer is therefore
//! a finite superposition of shifted copies of the initial Gaussian, weighted
//! by the branch amplitudes `<f|Pi_{lambda mu}|i> / <f|i>`. Every moment
//! follows from the one-dimensional overlap kernels between two shifted
//! Gaussians of common width `sigma`:
//!
//! ```text
//! <G_a|G_b>     = exp(-(a-b)^2 / 8 sigma^2)                     =: ovl
//! <G_a|X|G_b>   = (a+b)/2 * ovl
//! <G_a|X^2|G_b> = (sigma^2 + ((a+b)/2)^2) * ovl
//! <G_a|P|G_b>   = i (a-b) / (4 sigma^2) * ovl
//! <G_a|P^2|G_b> = (1/(4 sigma^2) - (a-b)^2/(16 sigma^4)) * ovl
//! ```
//!
//! with `G_s(x) = (2 pi sigma^2)^(-1/4) exp(-(x-s)^2 / 4 sigma^2)` and
//! `P = -i d/dx`. Two-dimensional monomials factor across the axes.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{Ket, Operator, C64};
use crate::weakvalue::{weak_value_set, WeakValueSet};

/// Shifts closer than this on both axes are merged into one branch.
pub const SHIFT_MERGE_TOL: f64 = 1e-12;
/// Below this the post-selected pointer norm is treated as zero.
pub const DEGENERATE_NORM: f64 = 1e-14;

fn require_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("sigma must be positive and finite, got {sigma}")))
    }
}

fn require_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite, got {v}")))
    }
}

/// Initial uncorrelated Gaussian pointer centred at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPointer {
    sigma: f64,
}

impl GaussianPointer {
    pub fn new(sigma: f64) -> Result<Self> {
        require_sigma(sigma)?;
        Ok(GaussianPointer { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// One-dimensional position amplitude `G_shift(x)`.
    pub fn amplitude_1d(&self, x: f64, shift: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        (2.0 * PI * s2).powf(-0.25) * (-(x - shift).powi(2) / (4.0 * s2)).exp()
    }

    /// One-dimensional momentum amplitude of the unshifted Gaussian.
    pub fn momentum_amplitude_1d(&self, k: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        (2.0 * s2 / PI).powf(0.25) * (-s2 * k * k).exp()
    }

    pub fn amplitude(&self, x: f64, y: f64) -> f64 {
        self.amplitude_1d(x, 0.0) * self.amplitude_1d(y, 0.0)
    }
}

/// Pointer monomials whose post-selected expectation the engine evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Monomial {
    One,
    X,
    Y,
    XY,
    X2,
    XPy,
    PxPy,
    Px,
    Py,
    Py2,
}

impl Monomial {
    pub const ALL: [Monomial; 10] = [
        Monomial::One,
        Monomial::X,
        Monomial::Y,
        Monomial::XY,
        Monomial::X2,
        Monomial::XPy,
        Monomial::PxPy,
        Monomial::Px,
        Monomial::Py,
        Monomial::Py2,
    ];

    fn factors(self) -> (Axis, Axis) {
        use Axis::*;
        match self {
            Monomial::One => (Unit, Unit),
            Monomial::X => (Pos, Unit),
            Monomial::Y => (Unit, Pos),
            Monomial::XY => (Pos, Pos),
            Monomial::X2 => (Pos2, Unit),
            Monomial::XPy => (Pos, Mom),
            Monomial::PxPy => (Mom, Mom),
            Monomial::Px => (Mom, Unit),
            Monomial::Py => (Unit, Mom),
            Monomial::Py2 => (Unit, Mom2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Monomial::One => "1",
            Monomial::X => "X",
            Monomial::Y => "Y",
            Monomial::XY => "XY",
            Monomial::X2 => "X2",
            Monomial::XPy => "XPy",
            Monomial::PxPy => "PxPy",
            Monomial::Px => "Px",
            Monomial::Py => "Py",
            Monomial::Py2 => "Py2",
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Monomial {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Monomial::ALL
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnsupportedMonomial(s.to_string()))
    }
}

#[derive(Clone, Copy)]
enum Axis {
    Unit,
    Pos,
    Pos2,
    Mom,
    Mom2,
    /// `X^2` minus the `sigma^2` every branch carries.
    Pos2Excess,
}

/// `<G_a| op |G_b>` on one axis.
fn kernel_1d(axis: Axis, a: f64, b: f64, sigma: f64) -> C64 {
    let s2 = sigma * sigma;
    let d = a - b;
    let ovl = (-d * d / (8.0 * s2)).exp();
    let mid = 0.5 * (a + b);
    match axis {
        Axis::Unit => C64::new(ovl, 0.0),
        Axis::Pos => C64::new(mid * ovl, 0.0),
        Axis::Pos2 => C64::new((s2 + mid * mid) * ovl, 0.0),
        Axis::Pos2Excess => C64::new(mid * mid * ovl, 0.0),
        Axis::Mom => C64::new(0.0, d / (4.0 * s2) * ovl),
        Axis::Mom2 => C64::new((1.0 / (4.0 * s2) - d * d / (16.0 * s2 * s2)) * ovl, 0.0),
    }
}

/// One shifted copy of the initial pointer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Branch {
    pub coeff: C64,
    pub shift: (f64, f64),
}

/// Post-selected pointer: `<f|i> * sum_j c_j G(x - sx_j, y - sy_j)`.
///
/// The coefficients are normalized by `<f|i>`; the post-selection
/// probability `|<f|i>|^2` is carried separately in `prob_weight`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSuperposition {
    sigma: f64,
    terms: Vec<Branch>,
    prob_weight: f64,
}

impl GaussianSuperposition {
    pub fn new(sigma: f64, terms: Vec<Branch>, prob_weight: f64) -> Result<Self> {
        require_sigma(sigma)?;
        if terms.is_empty() {
            return Err(Error::InvalidArgument("superposition needs at least one term".into()));
        }
        let mut merged: Vec<Branch> = Vec::with_capacity(terms.len());
        for t in terms {
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
                return Err(Error::InvalidArgument("non-finite branch coefficient".into()));
            }
            require_finite("shift", t.shift.0)?;
            require_finite("shift", t.shift.1)?;
            match merged.iter_mut().find(|m| {
                (m.shift.0 - t.shift.0).abs() < SHIFT_MERGE_TOL
                    && (m.shift.1 - t.shift.1).abs() < SHIFT_MERGE_TOL
            }) {
                Some(m) => m.coeff += t.coeff,
                None => merged.push(t),
            }
        }
        Ok(GaussianSuperposition { sigma, terms: merged, prob_weight })
    }

    /// The unshifted initial pointer.
    pub fn initial(sigma: f64) -> Result<Self> {
        Self::new(sigma, vec![Branch { coeff: C64::new(1.0, 0.0), shift: (0.0, 0.0) }], 1.0)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn terms(&self) -> &[Branch] {
        &self.terms
    }

    pub fn prob_weight(&self) -> f64 {
        self.prob_weight
    }

    /// Coefficient of the branch at `shift`, zero if absent.
    pub fn coeff_at(&self, shift: (f64, f64)) -> C64 {
        self.terms
            .iter()
            .find(|t| (t.shift.0 - shift.0).abs() < 1e-9 && (t.shift.1 - shift.1).abs() < 1e-9)
            .map(|t| t.coeff)
            .unwrap_or_default()
    }

    /// Position amplitude (normalized by `<f|i>`).
    pub fn position_amplitude(&self, x: f64, y: f64) -> C64 {
        let ptr = GaussianPointer { sigma: self.sigma };
        self.terms
            .iter()
            .map(|t| t.coeff * ptr.amplitude_1d(x, t.shift.0) * ptr.amplitude_1d(y, t.shift.1))
            .sum()
    }

    /// Momentum amplitude (normalized by `<f|i>`).
    pub fn momentum_amplitude(&self, kx: f64, ky: f64) -> C64 {
        let ptr = GaussianPointer { sigma: self.sigma };
        let envelope = ptr.momentum_amplitude_1d(kx) * ptr.momentum_amplitude_1d(ky);
        self.terms
            .iter()
            .map(|t| t.coeff * C64::new(0.0, -(kx * t.shift.0 + ky * t.shift.1)).exp())
            .sum::<C64>()
            * envelope
    }

    /// `sum_{jk} c_j^* c_k <G_j| monomial |G_k>`, unnormalized.
    pub fn overlap_moment(&self, monomial: Monomial) -> C64 {
        self.kernel_sum(monomial.factors())
    }

    fn kernel_sum(&self, (fx, fy): (Axis, Axis)) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for bra in &self.terms {
            for ket in &self.terms {
                let kx = kernel_1d(fx, bra.shift.0, ket.shift.0, self.sigma);
                let ky = kernel_1d(fy, bra.shift.1, ket.shift.1, self.sigma);
                acc += bra.coeff.conj() * ket.coeff * kx * ky;
            }
        }
        acc
    }

    /// Normalization `W = <psi_f|psi_f> / |<f|i>|^2`.
    pub fn w_norm(&self) -> f64 {
        self.overlap_moment(Monomial::One).re
    }

    /// Displacements relative to the initial pointer, all orders in `g`.
    pub fn moments(&self) -> Result<MomentReport> {
        let w = self.w_norm();
        if !(w >= DEGENERATE_NORM) {
            return Err(Error::DegenerateNorm { w });
        }
        let avg = |m: Monomial| self.overlap_moment(m).re / w;
        Ok(MomentReport {
            x: avg(Monomial::X),
            y: avg(Monomial::Y),
            xy: avg(Monomial::XY),
            x_py: avg(Monomial::XPy),
            // the sigma^2 part divides out exactly; summing only the excess
            // keeps small displacements free of cancellation
            x2: self.kernel_sum((Axis::Pos2Excess, Axis::Unit)).re / w,
            px_py: avg(Monomial::PxPy),
            w_norm: w,
        })
    }

    /// Largest imaginary residue of the (Hermitian) monomial expectations,
    /// relative to `W`.
    pub fn imaginary_residue(&self) -> f64 {
        let w = self.w_norm();
        [Monomial::X, Monomial::Y, Monomial::XY, Monomial::X2, Monomial::XPy, Monomial::PxPy]
            .iter()
            .map(|&m| self.overlap_moment(m).im.abs() / w)
            .fold(self.overlap_moment(Monomial::One).im.abs(), f64::max)
    }
}

/// Post-selected pointer displacements `<M>_f - <M>_i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub x: f64,
    pub y: f64,
    pub xy: f64,
    pub x_py: f64,
    pub x2: f64,
    pub px_py: f64,
    pub w_norm: f64,
}

impl MomentReport {
    pub const FIELDS: [&'static str; 7] = ["x", "y", "xy", "x_py", "x2", "px_py", "w_norm"];

    pub fn values(&self) -> [f64; 7] {
        [self.x, self.y, self.xy, self.x_py, self.x2, self.px_py, self.w_norm]
    }

    /// Fields made dimensionless with the pointer width.
    pub fn scaled(&self, sigma: f64) -> [f64; 7] {
        let s2 = sigma * sigma;
        [
            self.x / sigma,
            self.y / sigma,
            self.xy / s2,
            self.x_py,
            self.x2 / s2,
            self.px_py * s2,
            self.w_norm,
        ]
    }
}

/// Joint eigenbranch amplitudes `<f|Pi_{lambda mu}|i>/<f|i>` for an
/// involutory pair, `Pi_{lambda mu} = (1 + lambda A)(1 + mu B)/4`, as
/// `(lambda, mu, amplitude)` with `lambda, mu` in `{+1, -1}`.
pub fn involutory_branches(wv: &WeakValueSet) -> [(f64, f64, C64); 4] {
    let amp = |l: f64, m: f64| 0.25 * (1.0 + l * wv.a_w + m * wv.b_w + l * m * wv.ab_w);
    [
        (1.0, 1.0, amp(1.0, 1.0)),
        (1.0, -1.0, amp(1.0, -1.0)),
        (-1.0, 1.0, amp(-1.0, 1.0)),
        (-1.0, -1.0, amp(-1.0, -1.0)),
    ]
}

/// Joint eigenbranch amplitudes for a projector pair, eigenvalues in `{0, 1}`.
pub fn projector_branches(wv: &WeakValueSet) -> [(f64, f64, C64); 4] {
    let (pa, pb, pab) = (wv.a_w, wv.b_w, wv.ab_w);
    [
        (0.0, 0.0, 1.0 - pa - pb + pab),
        (1.0, 0.0, pa - pab),
        (0.0, 1.0, pb - pab),
        (1.0, 1.0, pab),
    ]
}

fn superposition_from_branches(
    branches: &[(f64, f64, C64)],
    wv: &WeakValueSet,
    g: f64,
    sigma: f64,
) -> Result<GaussianSuperposition> {
    require_finite("g", g)?;
    let terms = branches
        .iter()
        .map(|&(l, m, c)| Branch { coeff: c, shift: (g * l, g * m) })
        .collect();
    GaussianSuperposition::new(sigma, terms, wv.postselect_prob)
}

/// Post-selected pointer for an involutory commuting pair (`A^2 = B^2 = I`).
pub fn postselect_involutory(
    pre: &Ket,
    post: &Ket,
    a: &Operator,
    b: &Operator,
    g: f64,
    sigma: f64,
) -> Result<GaussianSuperposition> {
    require_sigma(sigma)?;
    a.require_involutory()?;
    b.require_involutory()?;
    let wv = weak_value_set(pre, post, a, b)?;
    superposition_from_weak_values_involutory(&wv, g, sigma)
}

pub fn superposition_from_weak_values_involutory(
    wv: &WeakValueSet,
    g: f64,
    sigma: f64,
) -> Result<GaussianSuperposition> {
    superposition_from_branches(&involutory_branches(wv), wv, g, sigma)
}

/// Post-selected pointer for a commuting projector pair (`P^2 = P`).
pub fn postselect_projector(
    pre: &Ket,
    post: &Ket,
    pa: &Operator,
    pb: &Operator,
    g: f64,
    sigma: f64,
) -> Result<GaussianSuperposition> {
    require_sigma(sigma)?;
    pa.require_idempotent()?;
    pb.require_idempotent()?;
    let wv = weak_value_set(pre, post, pa, pb)?;
    superposition_from_weak_values_projector(&wv, g, sigma)
}

pub fn superposition_from_weak_values_projector(
    wv: &WeakValueSet,
    g: f64,
    sigma: f64,
) -> Result<GaussianSuperposition> {
    superposition_from_branches(&projector_branches(wv), wv, g, sigma)
}

/// Dispatches on the structure of the pair: involutory pairs go through
/// [`postselect_involutory`], projector pairs through [`postselect_projector`].
pub fn postselect(
    pre: &Ket,
    post: &Ket,
    a: &Operator,
    b: &Operator,
    g: f64,
    sigma: f64,
) -> Result<GaussianSuperposition> {
    let (ca, cb) = (crate::hilbert::classify(a), crate::hilbert::classify(b));
    if ca.involutory && cb.involutory {
        postselect_involutory(pre, post, a, b, g, sigma)
    } else if ca.idempotent && cb.idempotent {
        postselect_projector(pre, post, a, b, g, sigma)
    } else {
        Err(Error::InvalidArgument(
            "observables must both be involutory or both be projectors".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{expm_hermitian, Tensor, I};

    fn theta_scenario() -> (Ket, Ket, Operator, Operator) {
        let t = std::f64::consts::PI / 6.0;
        let up = Ket::basis(2, 0);
        let tilted = Ket::new(vec![C64::new(t.cos(), 0.0), C64::new(0.0, t.sin())]).unwrap();
        let id = Operator::identity(2);
        (
            up.tensor(&up),
            tilted.tensor(&up),
            Operator::pauli_x().tensor(&id),
            id.tensor(&Operator::pauli_z()),
        )
    }

    /// Simpson-rule quadrature of a 1-D integrand on `[-40 sigma, 40 sigma]`.
    fn quad(f: impl Fn(f64) -> C64, sigma: f64) -> C64 {
        let n = 100_000;
        let (lo, hi) = (-40.0 * sigma, 40.0 * sigma);
        let h = (hi - lo) / n as f64;
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + i as f64 * h);
        }
        acc * (h / 3.0)
    }

    #[test]
    fn kernel_table_matches_quadrature() {
        let sigma = 0.8;
        let ptr = GaussianPointer::new(sigma).unwrap();
        for &(a, b) in &[(0.0, 0.0), (0.3, -0.5), (1.7, 0.4), (-2.0, 1.1)] {
            let ga = |x: f64| ptr.amplitude_1d(x, a);
            let gb = |x: f64| ptr.amplitude_1d(x, b);
            // derivatives of G_b for the momentum operator P = -i d/dx
            let dgb = |x: f64| -(x - b) / (2.0 * sigma * sigma) * gb(x);
            let d2gb = |x: f64| {
                let s2 = sigma * sigma;
                ((x - b).powi(2) / (4.0 * s2 * s2) - 1.0 / (2.0 * s2)) * gb(x)
            };
            let cases: [(Axis, Box<dyn Fn(f64) -> C64>); 5] = [
                (Axis::Unit, Box::new(|x| C64::from(ga(x) * gb(x)))),
                (Axis::Pos, Box::new(|x| C64::from(ga(x) * x * gb(x)))),
                (Axis::Pos2, Box::new(|x| C64::from(ga(x) * x * x * gb(x)))),
                (Axis::Mom, Box::new(|x| -I * ga(x) * dgb(x))),
                (Axis::Mom2, Box::new(|x| C64::from(-ga(x) * d2gb(x)))),
            ];
            for (axis, integrand) in cases.iter() {
                let numeric = quad(integrand, sigma);
                let table = kernel_1d(*axis, a, b, sigma);
                assert!((numeric - table).norm() < 1e-8, "{a} {b}: {numeric} vs {table}");
            }
        }
    }

    #[test]
    fn single_centred_term_has_zero_mean() {
        let sup = GaussianSuperposition::initial(1.3).unwrap();
        assert_eq!(sup.overlap_moment(Monomial::X).re, 0.0);
        let m = sup.moments().unwrap();
        assert!(m.values()[..6].iter().all(|v| v.abs() < 1e-15));
        assert!((m.w_norm - 1.0).abs() < 1e-15);
    }

    #[test]
    fn displaced_gaussian_mean() {
        let g = 0.7;
        let sup = GaussianSuperposition::new(
            1.0,
            vec![Branch { coeff: C64::new(1.0, 0.0), shift: (g, 0.0) }],
            1.0,
        )
        .unwrap();
        assert!((sup.moments().unwrap().x - g).abs() < 1e-15);
    }

    #[test]
    fn two_equal_real_terms() {
        let (g, sigma) = (1.2, 0.9);
        let half = C64::new(0.5, 0.0);
        let sup = GaussianSuperposition::new(
            sigma,
            vec![Branch { coeff: half, shift: (0.0, 0.0) }, Branch { coeff: half, shift: (g, 0.0) }],
            1.0,
        )
        .unwrap();
        // both terms and their cross terms are centred symmetrically about g/2
        assert!((sup.moments().unwrap().x - g / 2.0).abs() < 1e-14);
    }

    #[test]
    fn eigenstate_branch_survives_alone() {
        let wv = WeakValueSet::from_real(1.0, 1.0, 1.0);
        let g = 0.4;
        let sup = superposition_from_weak_values_involutory(&wv, g, 1.0).unwrap();
        let nonzero: Vec<_> = sup.terms().iter().filter(|t| t.coeff.norm() > 1e-15).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].shift, (g, g));
        assert!((nonzero[0].coeff - 1.0).norm() < 1e-15);

        let sup = superposition_from_weak_values_projector(&wv, g, 1.0).unwrap();
        let nonzero: Vec<_> = sup.terms().iter().filter(|t| t.coeff.norm() > 1e-15).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].shift, (g, g));
    }

    #[test]
    fn zero_coupling_merges_to_initial_state() {
        let (pre, post, a, b) = theta_scenario();
        let sup = postselect_involutory(&pre, &post, &a, &b, 0.0, 1.0).unwrap();
        assert_eq!(sup.terms().len(), 1);
        assert!((sup.terms()[0].coeff - 1.0).norm() < 1e-14);
        let m = sup.moments().unwrap();
        assert!(m.values()[..6].iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn branch_sum_reconstructs_matrix_exponential() {
        let (pre, post, a, b) = theta_scenario();
        let wv = weak_value_set(&pre, &post, &a, &b).unwrap();
        let branches = involutory_branches(&wv);
        for &g in &[0.05, 0.3, 0.77, 1.4, 2.2, 3.1, -0.6, 4.0, 5.5, 0.01] {
            // the pointer-momentum-free part: <f|exp(-i g (lambda A + mu B))|i>
            // at unit pointer momentum on both axes
            let h = &a + &b;
            let u = expm_hermitian(&h, -I * g).unwrap();
            let exact = u.sandwich(&post, &pre);
            let rebuilt: C64 = branches
                .iter()
                .map(|&(l, m, c)| c * C64::new(0.0, -g * (l + m)).exp())
                .sum::<C64>()
                * wv.overlap;
            assert!((exact - rebuilt).norm() < 1e-12, "g = {g}");
        }
    }

    #[test]
    fn moments_are_real() {
        let (pre, post, a, b) = theta_scenario();
        let sup = postselect_involutory(&pre, &post, &a, &b, 0.9, 1.0).unwrap();
        assert!(sup.imaginary_residue() < 1e-12);
    }

    #[test]
    fn monomial_parsing() {
        assert_eq!("XPy".parse::<Monomial>().unwrap(), Monomial::XPy);
        assert!(matches!("X3".parse::<Monomial>(), Err(Error::UnsupportedMonomial(_))));
    }

    #[test]
    fn rejects_wrong_structure() {
        let (pre, post, a, _) = theta_scenario();
        let p = Operator::projector(&Ket::basis(4, 0)).unwrap();
        assert!(matches!(
            postselect_involutory(&pre, &post, &a, &p, 0.1, 1.0),
            Err(Error::NotInvolutory { .. })
        ));
        assert!(matches!(
            postselect_projector(&pre, &post, &a, &p, 0.1, 1.0),
            Err(Error::NotIdempotent { .. })
        ));
        assert!(postselect_involutory(&pre, &post, &a, &a, 0.1, -1.0).is_err());
    }
}
