//! Seeded random scenarios for property tests and the verification suite.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hilbert::{Ket, Operator, Tensor, C64};
use crate::weakvalue::postselect_probability;

pub type ScenarioRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> ScenarioRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_normal<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random normalized ket.
pub fn random_ket<R: Rng>(rng: &mut R, dim: usize) -> Ket {
    loop {
        let amps: Vec<C64> = (0..dim).map(|_| complex_normal(rng)).collect();
        if let Ok(k) = Ket::new(amps).and_then(|k| k.normalize()) {
            return k;
        }
    }
}

/// Random real normalized ket; with real observables all weak values are
/// real.
pub fn random_real_ket<R: Rng>(rng: &mut R, dim: usize) -> Ket {
    loop {
        let amps: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(k) = Ket::from_real(&amps).and_then(|k| k.normalize()) {
            return k;
        }
    }
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix, with
/// the phases of `R`'s diagonal absorbed into `Q`.
pub fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> Operator {
    let z = DMatrix::from_fn(dim, dim, |_, _| complex_normal(rng));
    let (q, r) = z.qr().unpack();
    let phases = DMatrix::from_diagonal(&r.diagonal().map(|d| {
        let n = d.norm();
        if n > 0.0 {
            d / n
        } else {
            C64::new(1.0, 0.0)
        }
    }));
    Operator::from_matrix(q * phases).expect("square by construction")
}

/// Which commuting structure to draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    Involutory,
    Projector,
}

/// A random commuting pair on two qubits: a fixed local pair conjugated by a
/// Haar-random unitary on the full four-dimensional space.
pub fn random_commuting_pair<R: Rng>(rng: &mut R, kind: PairKind) -> (Operator, Operator) {
    let id = Operator::identity(2);
    let local = match kind {
        PairKind::Involutory => Operator::pauli_z(),
        PairKind::Projector => Operator::projector(&Ket::basis(2, 0)).expect("unit ket"),
    };
    let (a0, b0) = (local.tensor(&id), id.tensor(&local));
    let v = random_unitary(rng, 4);
    let vd = v.adjoint();
    (&(&v * &a0) * &vd, &(&v * &b0) * &vd)
}

/// Random pre/post pair with post-selection probability at least `min_prob`.
pub fn random_pre_post<R: Rng>(rng: &mut R, dim: usize, min_prob: f64) -> (Ket, Ket) {
    loop {
        let pre = random_ket(rng, dim);
        let post = random_ket(rng, dim);
        if postselect_probability(&pre, &post) >= min_prob {
            return (pre, post);
        }
    }
}

/// Random Hermitian involution on one qubit, `U sigma_z U^dagger`.
pub fn random_qubit_involution<R: Rng>(rng: &mut R) -> Operator {
    let u = random_unitary(rng, 2);
    &(&u * &Operator::pauli_z()) * &u.adjoint()
}
