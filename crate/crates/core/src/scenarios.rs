//! Ready-made systems used by the examples, the CLI configs and the tests.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::paths::{MeasurementChain, Step, TwoStepSystem};
use crate::qcore::{pauli, unitary_from_hamiltonian, CMatrix, Observable, QuantumState, Unitary};
use crate::sampler::IntervalPartition;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Pointer width of the qubit reconstruction experiment (half the gap of `sigma_z`).
pub const FIG4_DELTA_F: f64 = 1.0;

/// Interior boundaries of the three counting cells.
pub const FIG4_BOUNDARIES: [f64; 2] = [-0.33, 0.9];

/// Generator of the qubit experiment, `H = -omega sigma_x` with `omega = 1`.
pub fn fig4_hamiltonian() -> CMatrix {
    -pauli::x()
}

/// Qubit pre/post-selected system: `b ~ (1+8i, 2+3i)`, `d ~ (3+4i, 2+7i)`,
/// `sigma_z` measured after a rotation by `pi/3`, detection after a further
/// rotation by `pi/2`.
pub fn fig4_system() -> TwoStepSystem {
    let h = fig4_hamiltonian();
    TwoStepSystem::new(
        QuantumState::new(vec![c(1.0, 8.0), c(2.0, 3.0)]).expect("valid"),
        unitary_from_hamiltonian(&h, PI / 3.0).expect("hermitian"),
        Observable::diagonal(vec![1.0, -1.0]).expect("valid"),
        unitary_from_hamiltonian(&h, PI / 2.0).expect("hermitian"),
        QuantumState::new(vec![c(3.0, 4.0), c(2.0, 7.0)]).expect("valid"),
    )
    .expect("dimensions agree")
}

pub fn fig4_partition() -> IntervalPartition {
    IntervalPartition::new(FIG4_BOUNDARIES.to_vec()).expect("sorted")
}

/// Three-level system whose first two path amplitudes cancel exactly,
/// `A(d <- c_1 <- b) = -A(d <- c_2 <- b) != 0`. The observable is diagonal
/// with eigenvalues `(1, 2, 3)`; swap in `(1, 0, 0)` or `(1, 1, 0)` with
/// [`Observable::with_eigenvalues`] for the half-box and whole-box projectors.
pub fn box_system() -> TwoStepSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB0B);
    let u1 = random_unitary(3, &mut rng);
    let u2 = random_unitary(3, &mut rng);
    let b = QuantumState::new(vec![c(1.0, 0.3), c(0.5, -0.7), c(0.2, 0.4)]).expect("valid");
    let observable = Observable::diagonal(vec![1.0, 2.0, 3.0]).expect("valid");
    let beta = u1.matrix() * b.coefficients();
    // A_j = conj(delta_j) beta_j with delta_j = <c_j|d(t')>; pick delta_1, delta_3
    // and solve conj(delta_1) beta_1 + conj(delta_2) beta_2 = 0 for delta_2.
    let delta1 = c(1.0, 0.0);
    let delta3 = c(0.4, -0.6);
    let delta2 = -(delta1.conj() * beta[0] / beta[1]).conj();
    let d_at_t = nalgebra::DVector::from_vec(vec![delta1, delta2, delta3]);
    let d = QuantumState::from_vector(u2.matrix() * d_at_t).expect("nonzero");
    TwoStepSystem::new(b, u1, observable, u2, d).expect("dimensions agree")
}

pub fn random_state(n: usize, rng: &mut impl Rng) -> QuantumState {
    loop {
        let v: Vec<Complex64> = (0..n)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        if let Ok(s) = QuantumState::new(v) {
            return s;
        }
    }
}

pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| {
        c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    (&a + a.adjoint()).unscale(2.0)
}

pub fn random_unitary(n: usize, rng: &mut impl Rng) -> Unitary {
    let h = random_hermitian(n, rng) * c(4.0, 0.0);
    unitary_from_hamiltonian(&h, 1.0).expect("hermitian by construction")
}

/// Observable with a random eigenbasis and the given eigenvalues.
pub fn random_observable(eigenvalues: Vec<f64>, rng: &mut impl Rng) -> Observable {
    let u = random_unitary(eigenvalues.len(), rng);
    Observable::new(u.matrix().clone(), eigenvalues).expect("unitary columns are orthonormal")
}

/// Random two-step system with distinct, well separated eigenvalues.
pub fn random_system(n: usize, seed: u64) -> TwoStepSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = spread_eigenvalues(n, &mut rng);
    TwoStepSystem::new(
        random_state(n, &mut rng),
        random_unitary(n, &mut rng),
        random_observable(values, &mut rng),
        random_unitary(n, &mut rng),
        random_state(n, &mut rng),
    )
    .expect("dimensions agree")
}

/// Sorted eigenvalues with gaps in `[0.7, 1.3]`, centred near zero.
pub fn spread_eigenvalues(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut v = Vec::with_capacity(n);
    let mut x = 0.0;
    for _ in 0..n {
        v.push(x);
        x += 0.7 + 0.6 * rng.random::<f64>();
    }
    let mid = (v[0] + v[n - 1]) / 2.0;
    v.iter().map(|x| x - mid).collect()
}

/// Eigenvalues whose pairwise sums `C_j + C_k` (`j <= k`) are all distinct,
/// jittered by up to `±0.05` and centred; unit minimum spacing before jitter.
/// The Gaussian products `G_j G_k` then all have distinct centres.
pub fn sidon_eigenvalues(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let marks: &[f64] = match n {
        2 => &[0.0, 1.0],
        3 => &[0.0, 1.0, 3.0],
        4 => &[0.0, 1.0, 4.0, 6.0],
        5 => &[0.0, 1.0, 4.0, 9.0, 11.0],
        _ => panic!("no distinct-sum set stored for dimension {n}"),
    };
    let v: Vec<f64> = marks.iter().map(|m| m + 0.1 * (rng.random::<f64>() - 0.5)).collect();
    let mid = (v[0] + v[n - 1]) / 2.0;
    v.iter().map(|x| x - mid).collect()
}

/// Pointer width, in units of the unperturbed minimum spacing, at which the
/// pointwise design for [`sidon_eigenvalues`] is best conditioned.
pub fn well_conditioned_ratio(n: usize) -> f64 {
    match n {
        0..=2 => 0.45,
        3 => 1.0,
        _ => 1.4,
    }
}

/// Random system with [`sidon_eigenvalues`] and a pointer width inside the
/// well-conditioned band.
pub fn round_trip_system(n: usize, seed: u64) -> (TwoStepSystem, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = sidon_eigenvalues(n, &mut rng);
    let sys = TwoStepSystem::new(
        random_state(n, &mut rng),
        random_unitary(n, &mut rng),
        random_observable(values, &mut rng),
        random_unitary(n, &mut rng),
        random_state(n, &mut rng),
    )
    .expect("dimensions agree");
    (sys, well_conditioned_ratio(n))
}

/// Random chain with `steps` measurements after the preparation. Eigenvalues
/// are drawn from `{0, 1, 2}`, so degeneracies occur.
pub fn random_chain(n: usize, steps: usize, seed: u64) -> MeasurementChain {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prep = random_state(n, &mut rng);
    let steps = (0..steps)
        .map(|_| {
            let values = (0..n).map(|_| rng.random_range(0..3) as f64).collect();
            Step {
                observable: random_observable(values, &mut rng),
                propagator: random_unitary(n, &mut rng),
            }
        })
        .collect();
    MeasurementChain::new(prep, steps).expect("dimensions agree")
}
