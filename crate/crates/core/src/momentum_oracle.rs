//! Matrix-exponential oracle for the continuous pointer.
//!
//! Works in the pointer momentum representation, where the coupling is
//! diagonal in `(kx, ky)`: the post-selected amplitude is
//! `Phi(k) = <f| exp(-i g (kx A + ky B)) |i> * phi(kx) phi(ky)` with
//! `phi(k) = (2 sigma^2 / pi)^(1/4) exp(-sigma^2 k^2)`. The propagator is
//! evaluated by [`expm_hermitian`] at every quadrature node, so this path never
//! uses the eigenbranch decomposition of [`crate::gaussian_meter`]. Position
//! acts as `i d/dk`; the derivatives are moved onto the propagator by parts
//! and the integrals taken with the trapezoid rule, which converges
//! geometrically for these Gaussian-enveloped integrands.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gaussian_meter::{MomentReport, DEGENERATE_NORM};
use crate::hilbert::{expm_hermitian, require_commuting, Ket, Operator, C64, I};
use crate::weakvalue::postselect_probability;

/// Quadrature settings, in units of `1/sigma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentumQuadrature {
    /// Integration range is `[-half_width, half_width] / sigma` per axis.
    pub half_width: f64,
    /// Upper bound on the node spacing, times `sigma`.
    pub max_step: f64,
    /// Minimal alias-free position window, in units of `sigma`, added to the
    /// largest branch separation.
    pub guard: f64,
}

impl Default for MomentumQuadrature {
    fn default() -> Self {
        MomentumQuadrature { half_width: 6.0, max_step: 0.2, guard: 30.0 }
    }
}

/// Neumaier summation; the moment integrands are O(1) while some moments are
/// many orders smaller.
#[derive(Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn total(self) -> f64 {
        self.sum + self.carry
    }
}

fn add(acc: &mut Compensated, v: f64) {
    let t = acc.sum + v;
    if acc.sum.abs() >= v.abs() {
        acc.carry += (acc.sum - t) + v;
    } else {
        acc.carry += (v - t) + acc.sum;
    }
    acc.sum = t;
}

fn spectral_radius(op: &Operator) -> f64 {
    let sym = (op.matrix() + op.matrix().adjoint()).unscale(2.0);
    sym.symmetric_eigen().eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()))
}

/// Exact post-selected moments from the momentum-space matrix exponential.
pub fn expm_moments(
    pre: &Ket,
    post: &Ket,
    a: &Operator,
    b: &Operator,
    g: f64,
    sigma: f64,
) -> Result<MomentReport> {
    expm_moments_with(pre, post, a, b, g, sigma, MomentumQuadrature::default())
}

pub fn expm_moments_with(
    pre: &Ket,
    post: &Ket,
    a: &Operator,
    b: &Operator,
    g: f64,
    sigma: f64,
    quad: MomentumQuadrature,
) -> Result<MomentReport> {
    if !(sigma.is_finite() && sigma > 0.0) || !g.is_finite() {
        return Err(Error::InvalidArgument(format!("need sigma > 0 and finite g, got sigma={sigma}, g={g}")));
    }
    a.require_hermitian()?;
    b.require_hermitian()?;
    require_commuting(a, b)?;
    let prob = postselect_probability(pre, post);
    if prob <= 1e-24 {
        return Err(Error::OrthogonalPostselection { overlap: prob.sqrt() });
    }

    // Alias-free when the position period 2 pi / h exceeds every branch
    // separation plus a Gaussian guard band.
    let reach = 2.0 * g.abs() * spectral_radius(a).max(spectral_radius(b));
    let h = (quad.max_step / sigma).min(2.0 * PI / (reach + quad.guard * sigma));
    let kmax = quad.half_width / sigma;
    let n = (kmax / h).ceil() as i64;
    let nodes: Vec<f64> = (-n..=n).map(|j| j as f64 * h).collect();

    let s2 = sigma * sigma;
    let env2 = |k: f64| (2.0 * s2 / PI).sqrt() * (-2.0 * s2 * k * k).exp();
    let a_post = a.apply(post);
    let b_post = b.apply(post);
    let ab_post = a.apply(&b_post);
    let aa_post = a.apply(&a_post);

    // With amp = <f|U|i>, amp_a = <f|A U|i> and so on, the moments after
    // integrating by parts against the envelope E = phi(kx)^2 phi(ky)^2 are
    //   N X     = g   int Re(amp^* amp_a) E
    //   N XY    = g^2 int (Re(amp_a^* amp_b) + Re(amp^* amp_ab)) E / 2
    //   N dX^2  = g^2 int (|amp_a|^2 + Re(amp^* amp_aa)) E / 2
    //   N X Py  = -g^2 int Im(amp_ab^* amp - amp_a^* amp_b) E / 4 s^2
    //   N Px Py = -g^2 int (Re(amp^* amp_ab) - Re(amp_a^* amp_b)) E / 8 s^4
    // Every term carries its power of g explicitly, so small displacements
    // do not arise from cancelling O(1) sums.
    let mut norm = Compensated::default();
    let (mut x, mut y, mut ab, mut a_b, mut x2, mut x_py, mut px_py) = Default::default();
    for &kx in &nodes {
        for &ky in &nodes {
            let h_k = &a.scale(C64::from(kx)) + &b.scale(C64::from(ky));
            let u_pre = expm_hermitian(&h_k, -I * g)?.apply(pre);
            let amp = post.inner(&u_pre);
            let amp_a = a_post.inner(&u_pre);
            let amp_b = b_post.inner(&u_pre);
            let amp_ab = ab_post.inner(&u_pre);
            let amp_aa = aa_post.inner(&u_pre);
            let e = env2(kx) * env2(ky);
            let (joint, product) = ((amp.conj() * amp_ab).re, (amp_a.conj() * amp_b).re);
            add(&mut norm, amp.norm_sqr() * e);
            add(&mut x, (amp.conj() * amp_a).re * e);
            add(&mut y, (amp.conj() * amp_b).re * e);
            add(&mut ab, joint * e);
            add(&mut a_b, product * e);
            add(&mut x2, (amp_a.norm_sqr() + (amp.conj() * amp_aa).re) * e);
            add(&mut x_py, (amp_ab.conj() * amp - amp_a.conj() * amp_b).im * e);
            add(&mut px_py, (joint - product) * e);
        }
    }
    let [norm, x, y, ab, a_b, x2, x_py, px_py] = [norm, x, y, ab, a_b, x2, x_py, px_py].map(Compensated::total);
    let cell = h * h;
    let w = norm * cell / prob;
    if !(w >= DEGENERATE_NORM) {
        return Err(Error::DegenerateNorm { w });
    }
    let g2 = g * g;
    Ok(MomentReport {
        x: g * x / norm,
        y: g * y / norm,
        xy: 0.5 * g2 * (a_b + ab) / norm,
        x_py: -g2 * x_py / (4.0 * s2 * norm),
        x2: 0.5 * g2 * x2 / norm,
        px_py: -g2 * px_py / (8.0 * s2 * s2 * norm),
        w_norm: w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian_meter::postselect;
    use crate::hilbert::Tensor;

    fn scenario() -> (Ket, Ket, Operator, Operator) {
        let pre = Ket::new(vec![
            C64::new(0.4, 0.1),
            C64::new(-0.2, 0.5),
            C64::new(0.3, -0.3),
            C64::new(0.1, 0.6),
        ])
        .unwrap()
        .normalize()
        .unwrap();
        let post = Ket::new(vec![
            C64::new(0.7, 0.0),
            C64::new(0.1, -0.4),
            C64::new(-0.5, 0.2),
            C64::new(0.2, 0.1),
        ])
        .unwrap()
        .normalize()
        .unwrap();
        let id = Operator::identity(2);
        (pre, post, Operator::pauli_y().tensor(&id), id.tensor(&Operator::pauli_x()))
    }

    #[test]
    fn agrees_with_branch_engine() {
        let (pre, post, a, b) = scenario();
        for &(g, sigma) in &[(0.1, 1.0), (1.0, 1.0), (2.5, 0.8), (3.0, 1.0)] {
            let oracle = expm_moments(&pre, &post, &a, &b, g, sigma).unwrap();
            let exact = postselect(&pre, &post, &a, &b, g, sigma).unwrap().moments().unwrap();
            for (o, e) in oracle.values().iter().zip(exact.values()) {
                assert!((o - e).abs() <= 1e-10 * e.abs().max(1.0), "g={g}: {o} vs {e}");
            }
        }
    }

    #[test]
    fn unshifted_pointer_at_zero_coupling() {
        let (pre, post, a, b) = scenario();
        let m = expm_moments(&pre, &post, &a, &b, 0.0, 1.3).unwrap();
        assert!(m.values()[..6].iter().all(|v| v.abs() < 1e-12));
        assert!((m.w_norm - 1.0).abs() < 1e-12);
    }
}
