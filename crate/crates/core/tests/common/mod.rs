#![allow(dead_code)]

use bellkit_core::quantum::C64;
use bellkit_core::rational::frac;
use bellkit_core::{BellExpression, BlochVector, DensityMatrix, MarginalTerm, MeasurementModel, PureState, QuantumState, Scenario};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn pure_state(rng: &mut ChaCha8Rng, qubits: usize) -> PureState {
    let amps = (0..1usize << qubits)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    PureState::normalized(amps).unwrap()
}

/// Pure, or a random mixture of up to four pure states.
pub fn state(rng: &mut ChaCha8Rng, qubits: usize) -> QuantumState {
    if rng.random_bool(0.5) {
        return pure_state(rng, qubits).into();
    }
    let dim = 1usize << qubits;
    let k = rng.random_range(2..=4);
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for w in weights {
        let psi = pure_state(rng, qubits);
        let v = psi.amplitudes();
        m += v * v.adjoint() * C64::from(w / total);
    }
    DensityMatrix::new(m).unwrap().into()
}

pub fn bloch(rng: &mut ChaCha8Rng) -> BlochVector {
    let cos_theta: f64 = rng.random_range(-1.0..=1.0);
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    BlochVector::from_angles(cos_theta.clamp(-1.0, 1.0).acos(), phi)
}

pub fn model(rng: &mut ChaCha8Rng, parties: usize, settings: usize) -> MeasurementModel {
    MeasurementModel::new((0..parties).map(|_| (0..settings).map(|_| bloch(rng)).collect()).collect()).unwrap()
}

/// Random rational expression over up to 24 terms.
pub fn expression(rng: &mut ChaCha8Rng, scenario: &Scenario) -> BellExpression {
    let n = rng.random_range(0..=24);
    let terms = (0..n).map(|_| {
        let settings: Vec<usize> = (0..scenario.parties()).map(|p| rng.random_range(0..scenario.settings(p))).collect();
        let outcomes = settings
            .iter()
            .enumerate()
            .map(|(p, &s)| rng.random_range(0..scenario.outcomes(p, s)))
            .collect();
        MarginalTerm::new(frac(rng.random_range(-12..=12), rng.random_range(1..=6)), settings, outcomes)
    });
    BellExpression::new(scenario.clone(), terms).unwrap()
}

pub fn labels(parties: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..1usize << parties).map(move |bits| (0..parties).map(|p| (bits >> (parties - 1 - p)) & 1).collect())
}
