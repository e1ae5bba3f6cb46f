//! Single and joint weak values between a pre- and a post-selected state.

use crate::error::{Error, Result};
use crate::hilbert::{require_commuting, Ket, Operator, C64, NORM_TOL};

/// Weak values of a commuting pair and of their product, together with the
/// post-selection amplitude `<f|i>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeakValueSet {
    pub a_w: C64,
    pub b_w: C64,
    pub ab_w: C64,
    pub overlap: C64,
    pub postselect_prob: f64,
}

impl WeakValueSet {
    /// A set built directly from weak values, with unit post-selection
    /// amplitude. Used when only the weak values matter.
    pub fn from_values(a_w: C64, b_w: C64, ab_w: C64) -> Self {
        WeakValueSet { a_w, b_w, ab_w, overlap: C64::new(1.0, 0.0), postselect_prob: 1.0 }
    }

    pub fn from_real(a_w: f64, b_w: f64, ab_w: f64) -> Self {
        Self::from_values(a_w.into(), b_w.into(), ab_w.into())
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.a_w.im.abs() <= tol && self.b_w.im.abs() <= tol && self.ab_w.im.abs() <= tol
    }
}

fn checked_overlap(pre: &Ket, post: &Ket) -> Result<C64> {
    if pre.dim() != post.dim() {
        return Err(Error::DimensionMismatch { expected: pre.dim(), found: post.dim() });
    }
    let overlap = post.inner(pre);
    if overlap.norm() <= NORM_TOL {
        return Err(Error::OrthogonalPostselection { overlap: overlap.norm() });
    }
    Ok(overlap)
}

/// `<post|obs|pre> / <post|pre>`.
pub fn weak_value(pre: &Ket, post: &Ket, obs: &Operator) -> Result<C64> {
    let overlap = checked_overlap(pre, post)?;
    if obs.dim() != pre.dim() {
        return Err(Error::DimensionMismatch { expected: pre.dim(), found: obs.dim() });
    }
    Ok(obs.sandwich(post, pre) / overlap)
}

/// Weak values of `a`, `b` and the product `a b` for a commuting pair.
pub fn weak_value_set(pre: &Ket, post: &Ket, a: &Operator, b: &Operator) -> Result<WeakValueSet> {
    let overlap = checked_overlap(pre, post)?;
    require_commuting(a, b)?;
    let ab = a * b;
    Ok(WeakValueSet {
        a_w: weak_value(pre, post, a)?,
        b_w: weak_value(pre, post, b)?,
        ab_w: weak_value(pre, post, &ab)?,
        overlap,
        postselect_prob: overlap.norm_sqr(),
    })
}

/// `|<post|pre>|^2`.
pub fn postselect_probability(pre: &Ket, post: &Ket) -> f64 {
    post.inner(pre).norm_sqr()
}
