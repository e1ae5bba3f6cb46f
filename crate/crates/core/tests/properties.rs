//! Property tests over randomly drawn scenarios. Random states come from a
//! seeded stream so every counterexample is reproducible from its seed.

use std::f64::consts::PI;

use proptest::prelude::*;

use jointweak::closedform::{self, derived, ClosedFormInputs};
use jointweak::gaussian_meter::{postselect, MomentReport};
use jointweak::grid_oracle::{apply_coupling, grid_run, init_grid, postselect_grid, GridSpec};
use jointweak::hardy::{build_scenario, p_continuous, p_discrete, HardyCase, Meter};
use jointweak::hilbert::{expm_hermitian, joint_eigenbasis, Ket, Operator, C64, I};
use jointweak::qubit_meter::{
    construction_residual, evolve_postselect_qubit, evolve_total, meter_expectation, QubitMeterScenario,
};
use jointweak::random::{
    random_commuting_pair, random_ket, random_pre_post, random_qubit_involution, random_unitary, seeded, PairKind,
};
use jointweak::weakvalue::{weak_value, weak_value_set};

const MIN_PROB: f64 = 0.05;

fn kind() -> impl Strategy<Value = PairKind> {
    prop_oneof![Just(PairKind::Involutory), Just(PairKind::Projector)]
}

struct Draw {
    pre: Ket,
    post: Ket,
    a: Operator,
    b: Operator,
}

fn draw(seed: u64, kind: PairKind) -> Draw {
    let mut rng = seeded(seed);
    let (pre, post) = random_pre_post(&mut rng, 4, MIN_PROB);
    let (a, b) = random_commuting_pair(&mut rng, kind);
    Draw { pre, post, a, b }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn max_entry(op: &Operator) -> f64 {
    op.matrix().iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn unitary_evolution_preserves_norm(seed: u64, g in -10.0..10.0_f64) {
        let mut rng = seeded(seed);
        let (a, b) = random_commuting_pair(&mut rng, PairKind::Involutory);
        let h = &a + &b.scale(C64::from(0.3));
        let ket = random_ket(&mut rng, 4);
        let out = expm_hermitian(&h, -I * g).unwrap().apply(&ket);
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn involutory_exponential_is_a_rotation(seed: u64, g in -10.0..10.0_f64) {
        let (a, _) = random_commuting_pair(&mut seeded(seed), PairKind::Involutory);
        let u = expm_hermitian(&a, -I * g).unwrap();
        let rot = &Operator::identity(4).scale(C64::from(g.cos())) - &a.scale(I * g.sin());
        prop_assert!(max_entry(&(&u - &rot)) < 1e-10);
    }

    #[test]
    fn projector_exponential_is_a_phase(seed: u64, g in -10.0..10.0_f64) {
        let (p, _) = random_commuting_pair(&mut seeded(seed), PairKind::Projector);
        let u = expm_hermitian(&p, -I * g).unwrap();
        let phase = &Operator::identity(4) - &p.scale(C64::from(1.0) - (-I * g).exp());
        prop_assert!(max_entry(&(&u - &phase)) < 1e-10);
    }
}

// ---------------------------------------------------------------------------
// Weak values
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn weak_value_is_linear(seed: u64, k in kind(), alpha in -3.0..3.0_f64, beta in -3.0..3.0_f64) {
        let d = draw(seed, k);
        let combo = &d.a.scale(C64::from(alpha)) + &d.b.scale(C64::from(beta));
        let lhs = weak_value(&d.pre, &d.post, &combo).unwrap();
        let rhs = weak_value(&d.pre, &d.post, &d.a).unwrap() * alpha
            + weak_value(&d.pre, &d.post, &d.b).unwrap() * beta;
        prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn swapping_pre_and_post_conjugates(seed: u64, k in kind()) {
        let d = draw(seed, k);
        let fwd = weak_value_set(&d.pre, &d.post, &d.a, &d.b).unwrap();
        let back = weak_value_set(&d.post, &d.pre, &d.a, &d.b).unwrap();
        for (x, y) in [(fwd.a_w, back.a_w), (fwd.b_w, back.b_w), (fwd.ab_w, back.ab_w)] {
            prop_assert!((x - y.conj()).norm() <= 1e-12 * x.norm().max(1.0));
        }
    }

    #[test]
    fn eigenstate_pins_the_weak_value(seed: u64, k in kind(), which in 0usize..4) {
        let mut rng = seeded(seed);
        let (a, b) = random_commuting_pair(&mut rng, k);
        let (lambda, _, e) = joint_eigenbasis(&a, &b).unwrap().branches.swap_remove(which);
        let post = loop {
            let p = random_ket(&mut rng, 4);
            if p.inner(&e).norm() > 0.1 {
                break p;
            }
        };
        let w = weak_value(&e, &post, &a).unwrap();
        prop_assert!((w - C64::from(lambda)).norm() < 1e-10);
    }
}

// ---------------------------------------------------------------------------
// Gaussian pointer engine
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The branch superposition reproduces `<f|exp(-i g (kx A + ky B))|i>`
    /// times the initial envelope, with the exponential taken directly.
    #[test]
    fn branches_reproduce_the_propagator(seed: u64, k in kind(), g in 0.01..3.0_f64, sigma in 0.5..2.0_f64) {
        let d = draw(seed, k);
        let psi = postselect(&d.pre, &d.post, &d.a, &d.b, g, sigma).unwrap();
        let overlap = d.post.inner(&d.pre);
        let env = |q: f64| (2.0 * sigma * sigma / PI).powf(0.25) * (-sigma * sigma * q * q).exp();
        for (kx, ky) in [(0.0, 0.0), (0.7, -0.3), (-1.1, 0.4), (0.2, 1.5), (-0.9, -0.8)] {
            let (kx, ky) = (kx / sigma, ky / sigma);
            let h = &d.a.scale(C64::from(kx)) + &d.b.scale(C64::from(ky));
            let direct = d.post.inner(&expm_hermitian(&h, -I * g).unwrap().apply(&d.pre)) / overlap * env(kx) * env(ky);
            let engine = psi.momentum_amplitude(kx, ky);
            prop_assert!((direct - engine).norm() < 1e-9, "{direct} vs {engine}");
        }
    }

    #[test]
    fn moments_are_real(seed: u64, k in kind(), g in 0.01..3.0_f64) {
        let d = draw(seed, k);
        let psi = postselect(&d.pre, &d.post, &d.a, &d.b, g, 1.0).unwrap();
        prop_assert!(psi.imaginary_residue() < 1e-10);
        prop_assert!(psi.w_norm() > 0.0);
    }

    /// Displacements in units of sigma depend on g/sigma alone.
    #[test]
    fn dimensionless_in_g_over_sigma(seed: u64, k in kind(), u in 0.01..3.0_f64, sigma in 0.3..3.0_f64) {
        let d = draw(seed, k);
        let unit = postselect(&d.pre, &d.post, &d.a, &d.b, u, 1.0).unwrap().moments().unwrap();
        let scaled = postselect(&d.pre, &d.post, &d.a, &d.b, u * sigma, sigma).unwrap().moments().unwrap();
        for (f, (a, b)) in MomentReport::FIELDS.iter().zip(unit.values().iter().zip(scaled.scaled(sigma))) {
            prop_assert!(close(*a, b, 1e-10), "{f}: {a} vs {b}");
        }
    }

    /// Every displacement vanishes at least linearly in g.
    #[test]
    fn displacements_vanish_with_coupling(seed: u64, k in kind()) {
        let d = draw(seed, k);
        let at = |g: f64| postselect(&d.pre, &d.post, &d.a, &d.b, g, 1.0).unwrap().moments().unwrap().values();
        let (m1, m2) = (at(1e-3), at(5e-4));
        for i in 0..6 {
            // halving g at least halves the displacement
            prop_assert!(m2[i].abs() <= 0.5 * m1[i].abs() * 1.01 + 1e-15, "{}: {} -> {}", MomentReport::FIELDS[i], m1[i], m2[i]);
        }
    }

    /// Engine normalization against the exact kernel sums; the printed
    /// involutory normalization is four times it.
    #[test]
    fn engine_norm_matches_kernel_sums(seed: u64, g in 0.01..3.0_f64) {
        for k in [PairKind::Involutory, PairKind::Projector] {
            let d = draw(seed, k);
            let wv = weak_value_set(&d.pre, &d.post, &d.a, &d.b).unwrap();
            let inp = ClosedFormInputs::new(wv, g, 1.0).unwrap();
            let w = postselect(&d.pre, &d.post, &d.a, &d.b, g, 1.0).unwrap().w_norm();
            let exact = match k {
                PairKind::Involutory => {
                    prop_assert!(close(closedform::w1(&inp), 4.0 * w, 1e-10));
                    derived::w_involutory(&inp)
                }
                PairKind::Projector => derived::w_projector(&inp),
            };
            prop_assert!(close(w, exact, 1e-10));
        }
    }
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn closed_form_parity(seed: u64, g in 0.01..3.0_f64) {
        let d = draw(seed, PairKind::Involutory);
        let wv = weak_value_set(&d.pre, &d.post, &d.a, &d.b).unwrap();
        let at = |g| ClosedFormInputs::new(wv, g, 1.0).unwrap();
        let (p, m) = (at(g), at(-g));
        prop_assert!(close(closedform::cf_xy_inv(&p).unwrap(), closedform::cf_xy_inv(&m).unwrap(), 1e-12));
        prop_assert!(close(closedform::cf_x_inv(&p).unwrap(), -closedform::cf_x_inv(&m).unwrap(), 1e-12));
        prop_assert!(close(closedform::cf_xpy_inv(&p).unwrap(), closedform::cf_xpy_inv(&m).unwrap(), 1e-12));
    }

    /// The first printed normalization is positive; the second is negative,
    /// being `-2 exp(g^2/sigma^2)` times the positive pointer norm.
    #[test]
    fn printed_normalization_signs(seed: u64, g in 0.01..3.0_f64) {
        let d = draw(seed, PairKind::Involutory);
        let wv = weak_value_set(&d.pre, &d.post, &d.a, &d.b).unwrap();
        let inp = ClosedFormInputs::new(wv, g, 1.0).unwrap();
        let w = derived::w_involutory(&inp);
        prop_assert!(closedform::w1(&inp) > 0.0);
        prop_assert!(closedform::w2(&inp) < 0.0);
        prop_assert!(close(closedform::w2(&inp), -2.0 * (g * g).exp() * w, 1e-10));
    }
}

// ---------------------------------------------------------------------------
// Qubit meter
// ---------------------------------------------------------------------------

fn qubit_draw(seed: u64, g: f64) -> QubitMeterScenario {
    let mut rng = seeded(seed);
    let (pre, post) = random_pre_post(&mut rng, 4, MIN_PROB);
    let (pa, pb) = random_commuting_pair(&mut rng, PairKind::Projector);
    let meter = random_ket(&mut rng, 4);
    let (s1, s2) = (random_qubit_involution(&mut rng), random_qubit_involution(&mut rng));
    QubitMeterScenario::new(pre, post, pa, pb, meter, s1, s2, g).unwrap()
}

proptest! {
    #[test]
    fn qubit_constructions_agree(seed: u64, g in -7.0..7.0_f64) {
        prop_assert!(construction_residual(&qubit_draw(seed, g)).unwrap() < 1e-12);
    }

    #[test]
    fn qubit_evolution_is_unitary(seed: u64, g in -7.0..7.0_f64) {
        let total = evolve_total(&qubit_draw(seed, g)).unwrap();
        prop_assert!((total.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qubit_displacements_are_periodic(seed: u64, g in 0.0..2.0 * PI) {
        let s = qubit_draw(seed, g);
        let t = s.with_coupling(g + 2.0 * PI).unwrap();
        let (s1, s2) = s.meter_couplings();
        for m in [s1.clone(), s2.clone(), &s1 * &s2] {
            let a = meter_expectation(&evolve_postselect_qubit(&s).unwrap().state, s.meter_init(), &m).unwrap();
            let b = meter_expectation(&evolve_postselect_qubit(&t).unwrap().state, t.meter_init(), &m).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}

// ---------------------------------------------------------------------------
// Grid oracle
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn grid_norms(seed: u64, k in kind(), g in 0.0..3.0_f64) {
        let d = draw(seed, k);
        let spec = GridSpec::new(256, 40.0).unwrap();
        let coupled = apply_coupling(&init_grid(1.0, spec, &d.pre).unwrap(), &d.a, &d.b, g).unwrap();
        prop_assert!((coupled.norm_sqr() - 1.0).abs() < 1e-8);
        let (pos, spectral) = postselect_grid(&coupled, &d.post).unwrap().parseval_pair();
        prop_assert!((pos - spectral).abs() <= 1e-10 * pos);
    }

    /// Doubling the grid never makes it worse, down to the rounding floor.
    #[test]
    fn grid_converges(seed: u64, k in kind(), g in 0.1..3.0_f64) {
        let d = draw(seed, k);
        let exact = postselect(&d.pre, &d.post, &d.a, &d.b, g, 1.0).unwrap().moments().unwrap();
        let err = |n| {
            let m = grid_run(&d.pre, &d.post, &d.a, &d.b, g, 1.0, GridSpec::new(n, 40.0).unwrap()).unwrap();
            m.values().iter().zip(exact.values()).fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
        };
        let errs = [err(256), err(512), err(1024)];
        for w in errs.windows(2) {
            prop_assert!(w[1] <= w[0] || w[1] < 1e-11, "{errs:?}");
        }
    }
}

// ---------------------------------------------------------------------------
// Hardy
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn hardy_continuous_structure(u in 0.001..5.0_f64, sigma in 0.3..3.0_f64) {
        let unit = build_scenario(Meter::Continuous { sigma: 1.0 }).unwrap();
        let scaled = build_scenario(Meter::Continuous { sigma }).unwrap();
        let p = |s, c, g| p_continuous(s, c, g).unwrap().engine;
        prop_assert!((p(&unit, HardyCase::OverlapApart, u) - p(&unit, HardyCase::ApartOverlap, u)).abs() < 1e-12);
        for c in HardyCase::ALL {
            prop_assert!(close(p(&unit, c, u), p(&scaled, c, u * sigma), 1e-9));
        }
        let p4 = p(&unit, HardyCase::ApartApart, u);
        let root = (4.0 * 2f64.ln()).sqrt();
        if (u - root).abs() > 1e-6 {
            prop_assert_eq!(p4 < 0.0, u < root);
        }
    }

    /// The exact qubit engine keeps the second and third cases equal and
    /// the fourth changes sign only at pi/2.
    #[test]
    fn hardy_discrete_structure(g in 0.001..3.1_f64) {
        let s = build_scenario(Meter::Qubit).unwrap();
        let p = |c| p_discrete(&s, c, g).unwrap().engine;
        // compare meter shifts; dividing by g^2 only magnifies rounding
        let g2 = g * g;
        prop_assert!((p(HardyCase::OverlapApart) - p(HardyCase::ApartOverlap)).abs() * g2 < 1e-14);
        prop_assert!(p(HardyCase::OverlapOverlap).abs() * g2 < 1e-14);
        if (g - PI / 2.0).abs() > 1e-6 {
            let weak = p_discrete(&s, HardyCase::ApartApart, 1e-3).unwrap().engine;
            prop_assert_eq!(p(HardyCase::ApartApart) * weak > 0.0, g < PI / 2.0);
        }
    }
}

#[test]
fn random_unitaries_are_unitary() {
    let mut rng = seeded(3);
    for _ in 0..20 {
        assert!(random_unitary(&mut rng, 4).is_unitary(1e-12));
    }
}
