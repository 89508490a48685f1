//! Feynman path amplitudes for chains of accurate measurements.
//!
//! A chain starts from the state prepared by the first measurement and then
//! alternates free evolution with measurement of an observable. Amplitudes of
//! paths through eigenvectors of the same degeneracy class add coherently at
//! every step except the last; distinct final eigenvectors never interfere.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::pairwise_sum;
use crate::qcore::{CMatrix, CVector, Observable, QuantumState, Unitary};

/// One measurement after free evolution.
#[derive(Debug, Clone)]
pub struct Step {
    pub observable: Observable,
    /// Propagator from the previous measurement time to this one.
    pub propagator: Unitary,
}

#[derive(Debug, Clone)]
pub struct MeasurementChain {
    preparation: QuantumState,
    steps: Vec<Step>,
}

impl MeasurementChain {
    pub fn new(preparation: QuantumState, steps: Vec<Step>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidChain("chain needs at least one step".into()));
        }
        let n = preparation.dim();
        for s in &steps {
            for found in [s.observable.dim(), s.propagator.dim()] {
                if found != n {
                    return Err(Error::DimensionMismatch { expected: n, found });
                }
            }
        }
        Ok(Self { preparation, steps })
    }

    pub fn preparation(&self) -> &QuantumState {
        &self.preparation
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn dim(&self) -> usize {
        self.preparation.dim()
    }

    /// The chain without its last measurement.
    pub fn truncated(&self) -> Result<Self> {
        Self::new(
            self.preparation.clone(),
            self.steps[..self.steps.len() - 1].to_vec(),
        )
    }
}

/// `<to|U|from>`.
pub fn transition_amplitude(
    from: &QuantumState,
    to: &QuantumState,
    propagator: &Unitary,
) -> Result<Complex64> {
    to.inner(&propagator.apply(from)?)
}

/// Product of transition amplitudes along `path` (one eigenvector index per step).
pub fn path_amplitude(chain: &MeasurementChain, path: &[usize]) -> Result<Complex64> {
    if path.len() != chain.steps.len() {
        return Err(Error::InvalidChain(format!(
            "path has {} indices for {} steps",
            path.len(),
            chain.steps.len()
        )));
    }
    let n = chain.dim();
    let mut amplitude = Complex64::new(1.0, 0.0);
    let mut previous = chain.preparation.clone();
    for (step, (&index, s)) in path.iter().zip(&chain.steps).enumerate() {
        if index >= n {
            return Err(Error::IndexOutOfRange {
                step,
                index,
                dimension: n,
            });
        }
        let next = s.observable.eigenvector(index);
        amplitude *= transition_amplitude(&previous, &next, &s.propagator)?;
        previous = next;
    }
    Ok(amplitude)
}

/// All path amplitudes of a chain, dense over index tuples.
#[derive(Debug, Clone)]
pub struct PathAmplitudeTable {
    dim: usize,
    steps: usize,
    amplitudes: Vec<Complex64>,
}

impl PathAmplitudeTable {
    pub fn compute(chain: &MeasurementChain) -> Result<Self> {
        let n = chain.dim();
        let steps = chain.steps.len();
        // transition matrices T[l][(i, k)] = <c^l_i|U_l|c^{l-1}_k>
        let mut transitions: Vec<CMatrix> = Vec::with_capacity(steps);
        let mut prev_basis: Option<&CMatrix> = None;
        for s in &chain.steps {
            let moved = s.propagator.matrix();
            let t = match prev_basis {
                Some(pb) => s.observable.basis().adjoint() * moved * pb,
                None => {
                    let v: CVector = s.observable.basis().adjoint()
                        * moved
                        * chain.preparation.coefficients();
                    CMatrix::from_column_slice(n, 1, v.as_slice())
                }
            };
            transitions.push(t);
            prev_basis = Some(s.observable.basis());
        }
        let total = n.pow(steps as u32);
        let mut amplitudes = Vec::with_capacity(total);
        let mut path = vec![0usize; steps];
        for _ in 0..total {
            let mut a = transitions[0][(path[0], 0)];
            for l in 1..steps {
                a *= transitions[l][(path[l], path[l - 1])];
            }
            amplitudes.push(a);
            increment(&mut path, n);
        }
        Ok(Self {
            dim: n,
            steps,
            amplitudes,
        })
    }

    fn offset(&self, path: &[usize]) -> usize {
        path.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, path: &[usize]) -> Option<Complex64> {
        if path.len() != self.steps || path.iter().any(|&i| i >= self.dim) {
            return None;
        }
        Some(self.amplitudes[self.offset(path)])
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, Complex64)> + '_ {
        let mut path = vec![0usize; self.steps];
        self.amplitudes.iter().map(move |&a| {
            let here = path.clone();
            increment(&mut path, self.dim);
            (here, a)
        })
    }

    /// `sum |A|^2` over all paths.
    pub fn total_probability(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Odometer increment with the last index fastest.
fn increment(path: &mut [usize], n: usize) {
    for slot in path.iter_mut().rev() {
        *slot += 1;
        if *slot < n {
            return;
        }
        *slot = 0;
    }
}

/// Joint probabilities of eigenvalue classes, one class index per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    /// Representative eigenvalue of each class, per step.
    pub class_values: Vec<Vec<f64>>,
    pub probabilities: BTreeMap<Vec<usize>, f64>,
}

impl OutcomeDistribution {
    pub fn steps(&self) -> usize {
        self.class_values.len()
    }

    pub fn probability(&self, classes: &[usize]) -> f64 {
        self.probabilities.get(classes).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probabilities.values().sum()
    }

    /// Eigenvalue tuple for a class-index key.
    pub fn eigenvalues(&self, classes: &[usize]) -> Vec<f64> {
        classes
            .iter()
            .zip(&self.class_values)
            .map(|(&c, vals)| vals[c])
            .collect()
    }
}

/// Outcome probabilities of a chain, with coherent addition inside the
/// degeneracy classes of intermediate steps and incoherent addition over the
/// eigenvectors of the final step.
pub fn outcome_distribution(chain: &MeasurementChain) -> Result<OutcomeDistribution> {
    let table = PathAmplitudeTable::compute(chain)?;
    let last = chain.steps.len() - 1;
    // group key: (classes of intermediate steps, eigenvector index of last step)
    let mut groups: BTreeMap<(Vec<usize>, usize), Vec<Complex64>> = BTreeMap::new();
    for (path, a) in table.iter() {
        let classes: Vec<usize> = path[..last]
            .iter()
            .zip(&chain.steps)
            .map(|(&i, s)| s.observable.class_of(i))
            .collect();
        groups.entry((classes, path[last])).or_default().push(a);
    }
    let final_obs = &chain.steps[last].observable;
    let mut probabilities: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for ((mut classes, i_last), amps) in groups {
        classes.push(final_obs.class_of(i_last));
        *probabilities.entry(classes).or_insert(0.0) += pairwise_sum(&amps).norm_sqr();
    }
    let class_values = chain
        .steps
        .iter()
        .map(|s| {
            (0..s.observable.classes().len())
                .map(|c| s.observable.class_value(c))
                .collect()
        })
        .collect();
    Ok(OutcomeDistribution {
        class_values,
        probabilities,
    })
}

/// Sums out the last measurement.
pub fn marginalize_last(dist: &OutcomeDistribution) -> Result<OutcomeDistribution> {
    if dist.class_values.is_empty() {
        return Err(Error::InvalidChain("no step to marginalize".into()));
    }
    let mut probabilities: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (key, p) in &dist.probabilities {
        *probabilities.entry(key[..key.len() - 1].to_vec()).or_insert(0.0) += p;
    }
    Ok(OutcomeDistribution {
        class_values: dist.class_values[..dist.class_values.len() - 1].to_vec(),
        probabilities,
    })
}

/// `p[C_j]` for a three-measurement chain post-selected on the final
/// eigenvector `final_index`.
pub fn postselected_distribution(
    chain: &MeasurementChain,
    final_index: usize,
) -> Result<Vec<f64>> {
    if chain.steps.len() != 2 {
        return Err(Error::InvalidChain(format!(
            "post-selection needs exactly two steps, got {}",
            chain.steps.len()
        )));
    }
    let middle = &chain.steps[0].observable;
    if !middle.is_nondegenerate() {
        return Err(Error::DegenerateObservable);
    }
    let n = chain.dim();
    if final_index >= n {
        return Err(Error::IndexOutOfRange {
            step: 1,
            index: final_index,
            dimension: n,
        });
    }
    let joint: Vec<f64> = (0..n)
        .map(|j| path_amplitude(chain, &[j, final_index]).map(|a| a.norm_sqr()))
        .collect::<Result<_>>()?;
    let denominator: f64 = joint.iter().sum();
    if !(denominator > 0.0) {
        return Err(Error::PostselectionImpossible { denominator });
    }
    Ok(joint.into_iter().map(|p| p / denominator).collect())
}

/// Amplitudes `A_j = A(d <- c_j <- b)` for one pre/post-selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathAmplitudes(pub Vec<Complex64>);

impl PathAmplitudes {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn sum(&self) -> Complex64 {
        self.0.iter().sum()
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|a| a.norm_sqr() == 0.0)
    }

    pub fn conj(&self) -> Self {
        Self(self.0.iter().map(|a| a.conj()).collect())
    }
}

/// Orthonormal basis whose first column is `state`, completed by Gram-Schmidt
/// on the reference basis.
pub fn basis_containing(state: &QuantumState) -> CMatrix {
    let n = state.dim();
    let mut columns: Vec<CVector> = vec![state.coefficients().clone()];
    for k in 0..n {
        if columns.len() == n {
            break;
        }
        let mut v = CVector::zeros(n);
        v[k] = Complex64::new(1.0, 0.0);
        for c in &columns {
            let proj = c.dotc(&v);
            v -= c * proj;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            columns.push(v.unscale(norm));
        }
    }
    CMatrix::from_columns(&columns)
}

/// Pre-selected state, evolution to the pointer coupling, measured
/// observable, evolution to the detector, and the post-selected state.
#[derive(Debug, Clone)]
pub struct TwoStepSystem {
    pub preparation: QuantumState,
    pub to_measurement: Unitary,
    pub observable: Observable,
    pub to_detection: Unitary,
    pub detection: QuantumState,
}

impl TwoStepSystem {
    pub fn new(
        preparation: QuantumState,
        to_measurement: Unitary,
        observable: Observable,
        to_detection: Unitary,
        detection: QuantumState,
    ) -> Result<Self> {
        let n = preparation.dim();
        for found in [
            to_measurement.dim(),
            observable.dim(),
            to_detection.dim(),
            detection.dim(),
        ] {
            if found != n {
                return Err(Error::DimensionMismatch { expected: n, found });
            }
        }
        Ok(Self {
            preparation,
            to_measurement,
            observable,
            to_detection,
            detection,
        })
    }

    pub fn dim(&self) -> usize {
        self.preparation.dim()
    }

    /// `A_j = <d|U''|c_j><c_j|U'|b>`.
    pub fn path_amplitudes(&self) -> PathAmplitudes {
        let b_t = self.state_at_measurement();
        let d_t = self.detection_at_measurement();
        let basis = self.observable.basis();
        let b_c = basis.adjoint() * b_t.coefficients();
        let d_c = basis.adjoint() * d_t.coefficients();
        PathAmplitudes(
            b_c.iter()
                .zip(d_c.iter())
                .map(|(b, d)| d.conj() * b)
                .collect(),
        )
    }

    /// One-step amplitudes `<c_j|U'|b>`.
    pub fn one_step_amplitudes(&self) -> PathAmplitudes {
        let b_c = self.observable.basis().adjoint() * self.state_at_measurement().coefficients();
        PathAmplitudes(b_c.iter().copied().collect())
    }

    /// `U'|b>`.
    pub fn state_at_measurement(&self) -> QuantumState {
        self.to_measurement
            .apply(&self.preparation)
            .expect("dimensions checked at construction")
    }

    /// `U''^dagger |d>`.
    pub fn detection_at_measurement(&self) -> QuantumState {
        self.to_detection
            .adjoint()
            .apply(&self.detection)
            .expect("dimensions checked at construction")
    }

    pub fn with_preparation(&self, preparation: QuantumState) -> Result<Self> {
        Self::new(
            preparation,
            self.to_measurement.clone(),
            self.observable.clone(),
            self.to_detection.clone(),
            self.detection.clone(),
        )
    }

    pub fn with_detection(&self, detection: QuantumState) -> Result<Self> {
        Self::new(
            self.preparation.clone(),
            self.to_measurement.clone(),
            self.observable.clone(),
            self.to_detection.clone(),
            detection,
        )
    }

    pub fn with_observable(&self, observable: Observable) -> Result<Self> {
        Self::new(
            self.preparation.clone(),
            self.to_measurement.clone(),
            observable,
            self.to_detection.clone(),
            self.detection.clone(),
        )
    }

    /// Final observable with the detection state as eigenvector 0 and
    /// distinct eigenvalues `0, 1, ..., N-1`.
    pub fn detection_observable(&self) -> Observable {
        let n = self.dim();
        Observable::new(
            basis_containing(&self.detection),
            (0..n).map(|k| k as f64).collect(),
        )
        .expect("Gram-Schmidt basis is orthonormal")
    }

    /// Three-measurement chain whose final eigenvector 0 is the detection state.
    pub fn chain(&self) -> MeasurementChain {
        MeasurementChain::new(
            self.preparation.clone(),
            vec![
                Step {
                    observable: self.observable.clone(),
                    propagator: self.to_measurement.clone(),
                },
                Step {
                    observable: self.detection_observable(),
                    propagator: self.to_detection.clone(),
                },
            ],
        )
        .expect("dimensions checked at construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{pauli, unitary_from_hamiltonian};
    use crate::scenarios;
    use std::f64::consts::PI;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rot(theta: f64) -> Unitary {
        unitary_from_hamiltonian(&pauli::x(), theta).unwrap()
    }

    fn qubit_chain(middle: Vec<f64>, last: Vec<f64>, u1: &Unitary, u2: &Unitary) -> MeasurementChain {
        MeasurementChain::new(
            QuantumState::basis(2, 0).unwrap(),
            vec![
                Step {
                    observable: Observable::diagonal(middle).unwrap(),
                    propagator: u1.clone(),
                },
                Step {
                    observable: Observable::diagonal(last).unwrap(),
                    propagator: u2.clone(),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn transition_amplitude_examples() {
        let e1 = QuantumState::basis(2, 0).unwrap();
        let e2 = QuantumState::basis(2, 1).unwrap();
        let id = Unitary::identity(2).unwrap();
        assert_eq!(transition_amplitude(&e1, &e1, &id).unwrap(), c(1.0, 0.0));
        assert_eq!(transition_amplitude(&e1, &e2, &id).unwrap(), c(0.0, 0.0));
        let a = transition_amplitude(&e1, &e2, &rot(PI / 3.0)).unwrap();
        assert!((a - c(0.0, -(PI / 3.0).sin())).norm() < 1e-15);
    }

    #[test]
    fn identity_chain_stays_put() {
        let id = Unitary::identity(3).unwrap();
        let obs = Observable::diagonal(vec![0.0, 1.0, 2.0]).unwrap();
        let chain = MeasurementChain::new(
            QuantumState::basis(3, 1).unwrap(),
            vec![
                Step { observable: obs.clone(), propagator: id.clone() },
                Step { observable: obs, propagator: id },
            ],
        )
        .unwrap();
        assert_eq!(path_amplitude(&chain, &[1, 1]).unwrap(), c(1.0, 0.0));
        assert_eq!(path_amplitude(&chain, &[1, 2]).unwrap(), c(0.0, 0.0));
        assert_eq!(path_amplitude(&chain, &[0, 1]).unwrap(), c(0.0, 0.0));
        assert!(matches!(
            path_amplitude(&chain, &[3, 1]),
            Err(Error::IndexOutOfRange { index: 3, .. })
        ));
    }

    #[test]
    fn fig4_path_amplitudes_match_fixture() {
        let sys = scenarios::fig4_system();
        let a = sys.path_amplitudes();
        let fixture = [
            c(-0.3352645524950123, 0.4606179901317372),
            c(-0.3950113991340429, -0.10667318045754831),
        ];
        for (x, y) in a.as_slice().iter().zip(fixture) {
            assert!((x - y).norm() < 1e-14, "{x} vs {y}");
        }
        let chain = sys.chain();
        for j in 0..2 {
            let via_chain = path_amplitude(&chain, &[j, 0]).unwrap();
            assert!((via_chain - fixture[j]).norm() < 1e-14);
        }
    }

    /// Explicit enumeration of the four qubit paths: A(I, J) = U2[I, J] U1[J, 0].
    fn section3_oracle(u1: &Unitary, u2: &Unitary) -> [[Complex64; 2]; 2] {
        let mut a = [[c(0.0, 0.0); 2]; 2];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = u2.matrix()[(i, j)] * u1.matrix()[(j, 0)];
            }
        }
        a
    }

    #[test]
    fn section3_past_and_present() {
        let u = rot(PI / 4.0);
        let a = section3_oracle(&u, &u);
        // D at both times, nondegenerate, marginalized over the middle
        let p = outcome_distribution(&qubit_chain(vec![1.0, 2.0], vec![1.0, 2.0], &u, &u)).unwrap();
        let p_any = p.probability(&[0, 0]) + p.probability(&[1, 0]);
        let oracle = a[0][0].norm_sqr() + a[0][1].norm_sqr();
        assert!((p_any - oracle).abs() < 1e-14);

        // identity at t', D at t'': coherent
        let p1 = outcome_distribution(&qubit_chain(vec![1.0, 1.0], vec![1.0, 2.0], &u, &u)).unwrap();
        let oracle1 = (a[0][0] + a[0][1]).norm_sqr();
        assert!((p1.probability(&[0, 0]) - oracle1).abs() < 1e-14);
        assert!((p_any - p1.probability(&[0, 0])).abs() > 1e-3);

        // D at t', identity at t'': incoherent over the final eigenvectors
        let p2 = outcome_distribution(&qubit_chain(vec![1.0, 2.0], vec![1.0, 1.0], &u, &u)).unwrap();
        let oracle2 = a[0][0].norm_sqr() + a[1][0].norm_sqr();
        assert!((p2.probability(&[0, 0]) - oracle2).abs() < 1e-14);

        for d in [&p, &p1, &p2] {
            assert!((d.total() - 1.0).abs() < 1e-12);
            let m = marginalize_last(&marginalize_last(d).unwrap()).unwrap();
            assert!((m.probability(&[]) - 1.0).abs() < 1e-12);
        }
        // adding amplitudes over the later outcome is not a probability
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = section3_oracle(&scenarios::random_unitary(2, &mut rng), &scenarios::random_unitary(2, &mut rng));
        let wrong = (g[0][0] + g[1][0]).norm_sqr() + (g[0][1] + g[1][1]).norm_sqr();
        assert!((wrong - 1.0).abs() > 1e-6);
    }

    #[test]
    fn one_step_chain_is_born_rule() {
        let u = rot(0.4);
        let chain = MeasurementChain::new(
            QuantumState::basis(2, 0).unwrap(),
            vec![Step {
                observable: Observable::diagonal(vec![1.0, -1.0]).unwrap(),
                propagator: u.clone(),
            }],
        )
        .unwrap();
        let d = outcome_distribution(&chain).unwrap();
        assert!((d.probability(&[0]) - 0.4f64.cos().powi(2)).abs() < 1e-15);
        assert!((d.probability(&[1]) - 0.4f64.sin().powi(2)).abs() < 1e-15);
        assert_eq!(d.eigenvalues(&[1]), vec![-1.0]);
    }

    #[test]
    fn final_identity_basis_marginal_matches_shorter_chain() {
        let u = rot(0.9);
        let v = rot(-0.3);
        let full = qubit_chain(vec![3.0, -1.0], vec![0.0, 1.0], &u, &v);
        let m = marginalize_last(&outcome_distribution(&full).unwrap()).unwrap();
        let short = outcome_distribution(&full.truncated().unwrap()).unwrap();
        for (k, p) in &short.probabilities {
            assert!((m.probability(k) - p).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_middle_differs_from_marginal_but_final_does_not() {
        let sys = scenarios::random_system(3, 5);
        let u1 = sys.to_measurement.clone();
        let u2 = sys.to_detection.clone();
        let chain = |mid: Vec<f64>, last: Vec<f64>| {
            MeasurementChain::new(
                sys.preparation.clone(),
                vec![
                    Step { observable: Observable::diagonal(mid).unwrap(), propagator: u1.clone() },
                    Step { observable: Observable::diagonal(last).unwrap(), propagator: u2.clone() },
                ],
            )
            .unwrap()
        };
        // middle: merge classes {0,1}
        let degenerate = outcome_distribution(&chain(vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 2.0])).unwrap();
        let fine = outcome_distribution(&chain(vec![1.0, 2.0, 0.0], vec![0.0, 1.0, 2.0])).unwrap();
        let merged = fine.probability(&[0, 0]) + fine.probability(&[1, 0]);
        assert!((degenerate.probability(&[0, 0]) - merged).abs() > 1e-6);
        // last: merge classes {0,1}
        let degenerate_last = outcome_distribution(&chain(vec![0.0, 1.0, 2.0], vec![5.0, 5.0, 0.0])).unwrap();
        for j in 0..3 {
            let merged = fine_last(&chain(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]), j);
            assert!((degenerate_last.probability(&[j, 0]) - merged).abs() < 1e-12);
        }

        fn fine_last(ch: &MeasurementChain, j: usize) -> f64 {
            let d = outcome_distribution(ch).unwrap();
            d.probability(&[j, 0]) + d.probability(&[j, 1])
        }
    }

    #[test]
    fn postselected_examples() {
        let id = Unitary::identity(2).unwrap();
        let chain = qubit_chain(vec![1.0, -1.0], vec![1.0, -1.0], &id, &id);
        assert_eq!(postselected_distribution(&chain, 0).unwrap(), vec![1.0, 0.0]);

        let sys = scenarios::fig4_system();
        let p = postselected_distribution(&sys.chain(), 0).unwrap();
        let a = [
            c(-0.3352645524950123, 0.4606179901317372),
            c(-0.3950113991340429, -0.10667318045754831),
        ];
        let s = a[0].norm_sqr() + a[1].norm_sqr();
        assert!((p[0] - a[0].norm_sqr() / s).abs() < 1e-14);
        assert!((p[1] - a[1].norm_sqr() / s).abs() < 1e-14);

        let degenerate = qubit_chain(vec![1.0, 1.0], vec![1.0, -1.0], &id, &id);
        assert!(matches!(
            postselected_distribution(&degenerate, 0),
            Err(Error::DegenerateObservable)
        ));
        // b = e1 and d = e2 with identity propagation: nothing gets through
        let blocked = MeasurementChain::new(
            QuantumState::basis(2, 0).unwrap(),
            vec![
                Step { observable: Observable::diagonal(vec![1.0, -1.0]).unwrap(), propagator: id.clone() },
                Step { observable: Observable::diagonal(vec![1.0, -1.0]).unwrap(), propagator: id },
            ],
        )
        .unwrap();
        assert!(matches!(
            postselected_distribution(&blocked, 1),
            Err(Error::PostselectionImpossible { .. })
        ));
    }

    #[test]
    fn box_fixture_sign_relation() {
        let sys = scenarios::box_system();
        let a = sys.path_amplitudes();
        assert!(a.as_slice()[0].norm() > 1e-3);
        assert!((a.as_slice()[0] + a.as_slice()[1]).norm() < 1e-14);
        let p = postselected_distribution(&sys.chain(), 0).unwrap();
        assert!(p[0] > 1e-3 && p[1] > 1e-3);
        let prime = sys
            .with_observable(sys.observable.with_eigenvalues(vec![1.0, 1.0, 0.0]).unwrap())
            .unwrap();
        let d = outcome_distribution(&prime.chain()).unwrap();
        // class 0 = eigenvalue 1 (the "box"), final eigenvector 0 = d
        assert!(d.probability(&[0, 0]) < 1e-28);
    }

    #[test]
    fn basis_containing_is_orthonormal() {
        let s = QuantumState::new(vec![c(1.0, 2.0), c(0.0, 0.0), c(-1.0, 0.5)]).unwrap();
        let b = basis_containing(&s);
        let dev = crate::qcore::max_abs(&(b.adjoint() * &b - CMatrix::identity(3, 3)));
        assert!(dev < 1e-14);
        assert_eq!(b.column(0).into_owned(), s.coefficients().clone());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn completeness_and_causality(seed in 0u64..10_000, n in 2usize..5, steps in 1usize..4) {
                let chain = scenarios::random_chain(n, steps, seed);
                let table = PathAmplitudeTable::compute(&chain).unwrap();
                prop_assert!((table.total_probability() - 1.0).abs() < 1e-10);
                let d = outcome_distribution(&chain).unwrap();
                prop_assert!((d.total() - 1.0).abs() < 1e-10);
                prop_assert!(d.probabilities.values().all(|&p| p >= 0.0));
                if steps >= 2 {
                    let m = marginalize_last(&d).unwrap();
                    let t = outcome_distribution(&chain.truncated().unwrap()).unwrap();
                    for (k, p) in &t.probabilities {
                        prop_assert!((m.probability(k) - p).abs() < 1e-12);
                    }
                }
                for (path, a) in table.iter().take(5) {
                    prop_assert!((path_amplitude(&chain, &path).unwrap() - a).norm() < 1e-13);
                }
            }
        }
    }
}
