//! Two-qubit discrete pointer.
//!
//! The system couples through `exp(-i g (PA (x) S1 (x) I + PB (x) I (x) S2))`
//! with projectors `PA`, `PB` on the system and involutions `S1`, `S2` on the
//! two meter qubits. Composite states are ordered system first, meter second.
//! Because `exp(-i g P (x) S) = 1 - P (x) (r + i s S)` with `r = 1 - cos g`
//! and `s = sin g`, post-selection leaves the meter in
//! `<f|i> eta |xi_i>` with
//! `eta = 1 - pa_w (r + i s S1) - pb_w (r + i s S2) + pab_w (r + i s S1)(r + i s S2)`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::gaussian_meter::DEGENERATE_NORM;
use crate::hilbert::{expm_hermitian, require_commuting, Ket, Operator, Tensor, C64, I};
use crate::weakvalue::{weak_value_set, WeakValueSet};

const METER_DIM: usize = 4;

/// Full specification of a qubit-meter run.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitMeterScenario {
    pre: Ket,
    post: Ket,
    pa: Operator,
    pb: Operator,
    meter_init: Ket,
    coupling_a: Operator,
    coupling_b: Operator,
    g: f64,
}

impl QubitMeterScenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        pre: Ket,
        post: Ket,
        pa: Operator,
        pb: Operator,
        meter_init: Ket,
        coupling_a: Operator,
        coupling_b: Operator,
        g: f64,
    ) -> Result<Self> {
        pre.require_normalized()?;
        post.require_normalized()?;
        meter_init.require_normalized()?;
        if meter_init.dim() != METER_DIM {
            return Err(Error::DimensionMismatch { expected: METER_DIM, found: meter_init.dim() });
        }
        for op in [&pa, &pb] {
            if op.dim() != pre.dim() {
                return Err(Error::DimensionMismatch { expected: pre.dim(), found: op.dim() });
            }
            op.require_hermitian()?;
            op.require_idempotent()?;
        }
        require_commuting(&pa, &pb)?;
        for s in [&coupling_a, &coupling_b] {
            if s.dim() != 2 {
                return Err(Error::DimensionMismatch { expected: 2, found: s.dim() });
            }
            s.require_hermitian()?;
            s.require_involutory()?;
        }
        if !g.is_finite() {
            return Err(Error::InvalidArgument(format!("g must be finite, got {g}")));
        }
        Ok(QubitMeterScenario { pre, post, pa, pb, meter_init, coupling_a, coupling_b, g })
    }

    pub fn with_coupling(&self, g: f64) -> Result<Self> {
        let mut s = self.clone();
        if !g.is_finite() {
            return Err(Error::InvalidArgument(format!("g must be finite, got {g}")));
        }
        s.g = g;
        Ok(s)
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn meter_init(&self) -> &Ket {
        &self.meter_init
    }

    pub fn weak_values(&self) -> Result<WeakValueSet> {
        weak_value_set(&self.pre, &self.post, &self.pa, &self.pb)
    }

    /// Meter-space coupling operators `S1 (x) I` and `I (x) S2`.
    pub fn meter_couplings(&self) -> (Operator, Operator) {
        let id = Operator::identity(2);
        (self.coupling_a.tensor(&id), id.tensor(&self.coupling_b))
    }

    /// Meter moments `(<S1 (x) I>, <I (x) S2>, <S1 (x) S2>)` on the initial
    /// meter state.
    pub fn meter_moments(&self) -> MeterMoments {
        let (s1, s2) = self.meter_couplings();
        let s12 = &s1 * &s2;
        MeterMoments {
            first: s1.expectation(&self.meter_init).re,
            second: s2.expectation(&self.meter_init).re,
            joint: s12.expectation(&self.meter_init).re,
        }
    }

    /// Full system-meter Hamiltonian divided by `g`.
    fn generator(&self) -> Operator {
        let (s1, s2) = self.meter_couplings();
        &self.pa.tensor(&s1) + &self.pb.tensor(&s2)
    }
}

/// Expectations of the two meter couplings and their product.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeterMoments {
    pub first: f64,
    pub second: f64,
    pub joint: f64,
}

/// Unnormalized post-selected meter state.
#[derive(Clone, Debug, PartialEq)]
pub struct PostselectedMeter {
    pub state: Ket,
    pub prob_weight: f64,
}

/// Contracts the system index of a system (x) meter vector against `post`.
fn contract_system(total: &DVector<C64>, post: &Ket) -> Ket {
    let sys = post.dim();
    let mut meter = DVector::from_element(METER_DIM, C64::new(0.0, 0.0));
    for s in 0..sys {
        let c = post.amplitudes()[s].conj();
        for m in 0..METER_DIM {
            meter[m] += c * total[s * METER_DIM + m];
        }
    }
    Ket::from_vector(meter)
}

/// Post-selected meter state from the full matrix exponential.
pub fn evolve_postselect_qubit(s: &QubitMeterScenario) -> Result<PostselectedMeter> {
    let wv = s.weak_values()?;
    let u = expm_hermitian(&s.generator(), -I * s.g)?;
    let evolved = u.apply(&s.pre.tensor(&s.meter_init));
    Ok(PostselectedMeter {
        state: contract_system(evolved.vector(), &s.post),
        prob_weight: wv.postselect_prob,
    })
}

/// Full evolved system-meter state, before post-selection.
pub fn evolve_total(s: &QubitMeterScenario) -> Result<Ket> {
    let u = expm_hermitian(&s.generator(), -I * s.g)?;
    Ok(u.apply(&s.pre.tensor(&s.meter_init)))
}

/// The meter-space operator `eta` built from weak values.
pub fn eta_operator(wv: &WeakValueSet, s1: &Operator, s2: &Operator, g: f64) -> Operator {
    let id = Operator::identity(METER_DIM);
    let (r, sn) = (1.0 - g.cos(), g.sin());
    let step = |s: &Operator| &id.scale(C64::from(r)) + &s.scale(I * sn);
    let (k1, k2) = (step(s1), step(s2));
    let joint = &k1 * &k2;
    &(&(&id - &k1.scale(wv.a_w)) - &k2.scale(wv.b_w)) + &joint.scale(wv.ab_w)
}

/// Post-selected meter state `<f|i> eta |xi_i>` from weak values.
pub fn evolve_postselect_eta(s: &QubitMeterScenario) -> Result<PostselectedMeter> {
    let wv = s.weak_values()?;
    let (s1, s2) = s.meter_couplings();
    let eta = eta_operator(&wv, &s1, &s2, s.g);
    Ok(PostselectedMeter {
        state: eta.apply(&s.meter_init).scale(wv.overlap),
        prob_weight: wv.postselect_prob,
    })
}

/// Largest amplitude difference between the two constructions.
pub fn construction_residual(s: &QubitMeterScenario) -> Result<f64> {
    let full = evolve_postselect_qubit(s)?;
    let eta = evolve_postselect_eta(s)?;
    Ok((full.state.vector() - eta.state.vector()).camax())
}

/// `<xi_f|m|xi_f>/<xi_f|xi_f> - <xi_i|m|xi_i>`.
pub fn meter_expectation(xi_f: &Ket, xi_i: &Ket, m: &Operator) -> Result<f64> {
    m.require_hermitian()?;
    if m.dim() != xi_f.dim() || xi_i.dim() != xi_f.dim() {
        return Err(Error::DimensionMismatch { expected: xi_f.dim(), found: m.dim() });
    }
    let n = xi_f.norm_sqr();
    if !(n > DEGENERATE_NORM) {
        return Err(Error::VanishingNorm { norm_sqr: n });
    }
    let after = m.expectation(xi_f).re / n;
    let before = m.expectation(xi_i).re / xi_i.norm_sqr();
    Ok(after - before)
}

/// Printed `<S1 (x) S2>` closed form with its normalization `W5`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitJointReading {
    pub numerator: f64,
    pub w5: f64,
    pub value: f64,
}

/// Printed closed form for `<S1 (x) S2>` on a general qubit meter, with the
/// meter moments taken on the initial meter state.
pub fn cf_qubit_joint(wv: &WeakValueSet, g: f64, moments: MeterMoments) -> Result<QubitJointReading> {
    let (pa, pb, pab) = (wv.a_w, wv.b_w, wv.ab_w);
    let r = 1.0 - g.cos();
    let sin2 = g.sin().powi(2);
    let cos2g = (2.0 * g).cos();
    let one = C64::new(1.0, 0.0);
    let MeterMoments { first: m1, second: m2, joint: m12 } = moments;

    let real_term = 2.0 * (pa * pb.conj() + pab).re * sin2;
    let im_first = (pa.conj() * pab + 2.0 * pb + 2.0 * r * pa.conj() * pb
        + r * (pab + r * pa.conj() * pb)
        + pa.conj() * pab * cos2g)
        .im;
    let im_second = (pb * pab.conj() + 2.0 * pa + 2.0 * r * pa * pb.conj()
        + r * (pab + r * pb * pab).conj()
        + pb.conj() * pab * cos2g)
        .im;
    let diag = (one - (pa + pb) * r + pab * r * r).norm_sqr()
        + pa.norm_sqr()
        + pb.norm_sqr()
        + 2.0 * r * r * pab.norm_sqr()
        - 2.0 * ((pa + pb) * pab).re * r;
    let numerator = real_term - im_first * m1 - im_second * m2 + diag * m12;

    let w5_im_first = (pb * pab.conj() + 2.0 * pa + 2.0 * r * pa * pb.conj()
        + r * (pab + r * pb * pab.conj())
        + pb.conj() * pab * cos2g)
        .im;
    let w5_im_second = (pa.conj() * pab + 2.0 * pb + 2.0 * r * pa.conj() * pb
        + r * (pab + r * pa.conj() * pb)
        + pa.conj() * pab * cos2g)
        .im;
    let w5 = diag - w5_im_first * m1 - w5_im_second * m2 + real_term * m12;
    if !(w5.abs() > DEGENERATE_NORM) {
        return Err(Error::DegenerateNorm { w: w5 });
    }
    Ok(QubitJointReading { numerator, w5, value: numerator / w5 })
}

/// Meter observable for the discrete Hardy analysis,
/// `((sx - sy)/sqrt 2) (x) ((sx + sy)/sqrt 2)`.
pub fn hardy_meter_observable() -> Operator {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (sx, sy) = (Operator::pauli_x(), Operator::pauli_y());
    let left = (&sx - &sy).scale(C64::from(h));
    let right = (&sx + &sy).scale(C64::from(h));
    left.tensor(&right)
}

/// Printed discrete-Hardy closed form and its normalization `W6`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HardyQubitReading {
    pub numerator: f64,
    pub w6: f64,
    pub value: f64,
}

/// Printed closed form for the Hardy meter observable with `sigma_x`
/// couplings and the meter starting in `|00>`.
pub fn cf_hardy_qubit(wv: &WeakValueSet, g: f64) -> Result<HardyQubitReading> {
    let (pa, pb, pab) = (wv.a_w, wv.b_w, wv.ab_w);
    let (c, s) = (g.cos(), g.sin());
    let pab2 = pab.norm_sqr();
    let inner = (2.0 * pa * pb.conj() - pa * pab.conj() - pb * pab.conj()).im
        + (pab - pa * pab.conj() - pb * pab.conj()).re
        + ((pa * pab.conj() + pb.conj() * pab.conj()).re
            + (pa * pab.conj() + pa * pab.conj()).im
            + 2.0 * pab2)
            * c
        + pab2 * (2.0 * g).cos();
    let numerator = -2.0 * inner * s * s;

    let one = C64::new(1.0, 0.0);
    let w6 = (one - pa - pb + pab + c * (pa + pb - 2.0 * pab + pab * c)).norm_sqr()
        + (pa - pab + pab * c).norm_sqr() * s * s
        + (pb - pab + pab * c).norm_sqr() * s * s
        + pab2 * s.powi(4);
    if !(w6.abs() > DEGENERATE_NORM) {
        return Err(Error::DegenerateNorm { w: w6 });
    }
    Ok(HardyQubitReading { numerator, w6, value: numerator / w6 })
}

/// Exact meter algebra: `eta = alpha + beta S1 + gamma S2 + delta S1 S2`.
pub mod derived {
    use super::*;

    /// Coefficients `(alpha, beta, gamma, delta)` of `eta`.
    pub fn eta_coefficients(wv: &WeakValueSet, g: f64) -> [C64; 4] {
        let (c, s) = (g.cos(), g.sin());
        let c00 = 1.0 - wv.a_w - wv.b_w + wv.ab_w;
        let c10 = wv.a_w - wv.ab_w;
        let c01 = wv.b_w - wv.ab_w;
        let c11 = wv.ab_w;
        [
            c00 + c * (c10 + c01) + c * c * c11,
            -I * s * (c10 + c * c11),
            -I * s * (c01 + c * c11),
            C64::from(-s * s) * c11,
        ]
    }

    /// Exact `<S1 (x) S2>_fi` for any meter state, from the initial-state
    /// meter moments.
    pub fn qubit_joint(wv: &WeakValueSet, g: f64, m: MeterMoments) -> Result<f64> {
        let [al, be, ga, de] = eta_coefficients(wv, g);
        let sq = al.norm_sqr() + be.norm_sqr() + ga.norm_sqr() + de.norm_sqr();
        let x = 2.0 * (al.conj() * be + ga.conj() * de).re;
        let y = 2.0 * (al.conj() * ga + be.conj() * de).re;
        let z = 2.0 * (al.conj() * de + be.conj() * ga).re;
        let n = sq + x * m.first + y * m.second + z * m.joint;
        if !(n > DEGENERATE_NORM) {
            return Err(Error::DegenerateNorm { w: n });
        }
        Ok((z + y * m.first + x * m.second + sq * m.joint) / n - m.joint)
    }

    /// Exact Hardy meter displacement for `sigma_x` couplings on `|00>`.
    pub fn hardy_qubit(wv: &WeakValueSet, g: f64) -> Result<f64> {
        let [al, be, ga, de] = eta_coefficients(wv, g);
        let n = al.norm_sqr() + be.norm_sqr() + ga.norm_sqr() + de.norm_sqr();
        if !(n > DEGENERATE_NORM) {
            return Err(Error::DegenerateNorm { w: n });
        }
        Ok(2.0 * (al.conj() * de + I * be * ga.conj()).re / n)
    }

    /// Normalization `|alpha|^2 + |beta|^2 + |gamma|^2 + |delta|^2` for a meter
    /// starting in `|00>` with `sigma_x` couplings.
    pub fn hardy_norm(wv: &WeakValueSet, g: f64) -> f64 {
        eta_coefficients(wv, g).iter().map(|z| z.norm_sqr()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_commuting_pair, random_ket, random_pre_post, random_qubit_involution, seeded, PairKind};

    fn random_scenario(seed: u64, g: f64) -> QubitMeterScenario {
        let mut rng = seeded(seed);
        let (pre, post) = random_pre_post(&mut rng, 4, 0.01);
        let (pa, pb) = random_commuting_pair(&mut rng, PairKind::Projector);
        let meter = random_ket(&mut rng, 4);
        let s1 = random_qubit_involution(&mut rng);
        let s2 = random_qubit_involution(&mut rng);
        QubitMeterScenario::new(pre, post, pa, pb, meter, s1, s2, g).unwrap()
    }

    #[test]
    fn constructions_agree() {
        for seed in 0..10 {
            let s = random_scenario(seed, 0.3 + 0.4 * seed as f64);
            assert!(construction_residual(&s).unwrap() < 1e-12);
        }
    }

    #[test]
    fn zero_coupling_leaves_meter_untouched() {
        let s = random_scenario(1, 0.0);
        let out = evolve_postselect_qubit(&s).unwrap();
        let wv = s.weak_values().unwrap();
        let expected = s.meter_init().scale(wv.overlap);
        assert!((out.state.vector() - expected.vector()).camax() < 1e-14);
    }

    #[test]
    fn vanishing_weak_values_give_identity_eta() {
        let wv = WeakValueSet::from_real(0.0, 0.0, 0.0);
        let eta = eta_operator(&wv, &Operator::pauli_x().tensor(&Operator::identity(2)), &Operator::identity(4), 0.9);
        assert!(eta.distance(&Operator::identity(4)) < 1e-15);
    }

    #[test]
    fn exact_joint_form_matches_engine() {
        for seed in 0..10 {
            let s = random_scenario(seed, 0.2 + 0.5 * seed as f64);
            let (s1, s2) = s.meter_couplings();
            let m = &s1 * &s2;
            let out = evolve_postselect_qubit(&s).unwrap();
            let engine = meter_expectation(&out.state, s.meter_init(), &m).unwrap();
            let wv = s.weak_values().unwrap();
            let cf = derived::qubit_joint(&wv, s.g(), s.meter_moments()).unwrap();
            assert!((engine - cf).abs() < 1e-12, "{engine} vs {cf}");
        }
    }

    #[test]
    fn meter_expectation_trivial_cases() {
        let k = Ket::basis(4, 1);
        assert_eq!(meter_expectation(&k, &k, &Operator::identity(4)).unwrap(), 0.0);
        let zero = Ket::new(vec![C64::new(0.0, 0.0); 4]).unwrap();
        assert!(matches!(
            meter_expectation(&zero, &k, &Operator::identity(4)),
            Err(Error::VanishingNorm { .. })
        ));
    }

    #[test]
    fn printed_qubit_forms_vanish_at_zero_coupling() {
        let wv = WeakValueSet::from_values(C64::new(0.3, 0.2), C64::new(-0.1, 0.5), C64::new(0.4, -0.3));
        let m = MeterMoments { first: 0.0, second: 0.0, joint: 0.0 };
        assert_eq!(cf_qubit_joint(&wv, 0.0, m).unwrap().value, 0.0);
        assert_eq!(cf_hardy_qubit(&WeakValueSet::from_real(0.0, 0.0, 0.0), 0.7).unwrap().value, 0.0);
    }

    #[test]
    fn printed_w6_equals_exact_norm() {
        let wv = WeakValueSet::from_values(C64::new(0.3, 0.2), C64::new(-0.1, 0.5), C64::new(0.4, -0.3));
        for &g in &[0.2, 1.0, 2.5] {
            let printed = cf_hardy_qubit(&wv, g).unwrap().w6;
            assert!((printed - derived::hardy_norm(&wv, g)).abs() < 1e-13);
        }
    }

    #[test]
    fn periodic_in_coupling() {
        let s = random_scenario(4, 0.8);
        let t = s.with_coupling(0.8 + 2.0 * std::f64::consts::PI).unwrap();
        let (s1, s2) = s.meter_couplings();
        let m = &s1 * &s2;
        let a = meter_expectation(&evolve_postselect_qubit(&s).unwrap().state, s.meter_init(), &m).unwrap();
        let b = meter_expectation(&evolve_postselect_qubit(&t).unwrap().state, t.meter_init(), &m).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_projector() {
        let mut rng = seeded(2);
        let (pre, post) = random_pre_post(&mut rng, 4, 0.01);
        let (a, b) = random_commuting_pair(&mut rng, PairKind::Involutory);
        let err = QubitMeterScenario::new(pre, post, a, b, Ket::basis(4, 0), Operator::pauli_x(), Operator::pauli_x(), 1.0);
        assert!(matches!(err, Err(Error::NotIdempotent { .. })));
    }
}
