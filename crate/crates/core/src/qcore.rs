//! Dense finite-dimensional linear algebra for pure and mixed states.
//!
//! Everything here is immutable once built. The inner product is
//! conjugate-linear in its first argument, so `inner(a, b)` reads as `<a|b>`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest Hilbert-space dimension accepted by the constructors.
pub const MAX_DIMENSION: usize = 64;

pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
pub const UNITARY_TOLERANCE: f64 = 1e-10;
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-10;

/// Relative factor for the default degeneracy threshold (times max |C_j|).
pub const DEGENERACY_RELATIVE_TOLERANCE: f64 = 1e-9;

fn check_dimension(n: usize) -> Result<()> {
    if (2..=MAX_DIMENSION).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidDimension(n))
    }
}

fn check_same(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Largest entrywise modulus of `m`.
pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Normalized pure state in the fixed reference basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    coefficients: CVector,
}

impl QuantumState {
    /// Builds a state from possibly unnormalized coefficients.
    pub fn new(coefficients: Vec<Complex64>) -> Result<Self> {
        Self::from_vector(CVector::from_vec(coefficients))
    }

    pub fn from_vector(v: CVector) -> Result<Self> {
        check_dimension(v.len())?;
        let norm = v.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            coefficients: v.unscale(norm),
        })
    }

    /// Reference basis vector `e_k` in dimension `n`.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        check_dimension(n)?;
        if k >= n {
            return Err(Error::IndexOutOfRange {
                step: 0,
                index: k,
                dimension: n,
            });
        }
        let mut v = CVector::zeros(n);
        v[k] = Complex64::new(1.0, 0.0);
        Ok(Self { coefficients: v })
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &CVector {
        &self.coefficients
    }

    pub fn to_vec(&self) -> Vec<Complex64> {
        self.coefficients.iter().copied().collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> Result<Complex64> {
        inner(self, other)
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &QuantumState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner(a: &QuantumState, b: &QuantumState) -> Result<Complex64> {
    check_same(a.dim(), b.dim())?;
    Ok(a.coefficients.dotc(&b.coefficients))
}

/// Applies `u` to `state`.
pub fn evolve(state: &QuantumState, u: &Unitary) -> Result<QuantumState> {
    check_same(u.dim(), state.dim())?;
    QuantumState::from_vector(&u.matrix * &state.coefficients)
}

/// Unitary N x N matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    matrix: CMatrix,
}

impl Unitary {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let n = matrix.nrows();
        check_same(n, matrix.ncols())?;
        check_dimension(n)?;
        let deviation = max_abs(&(matrix.adjoint() * &matrix - CMatrix::identity(n, n)));
        if deviation > UNITARY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_dimension(n)?;
        Ok(Self {
            matrix: CMatrix::identity(n, n),
        })
    }

    /// `exp(-i H dt)`.
    pub fn from_hamiltonian(hamiltonian: &CMatrix, dt: f64) -> Result<Self> {
        unitary_from_hamiltonian(hamiltonian, dt)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary {
            matrix: self.matrix.adjoint(),
        }
    }

    /// The propagator that applies `self` first and `later` second.
    pub fn then(&self, later: &Unitary) -> Result<Unitary> {
        check_same(self.dim(), later.dim())?;
        Ok(Unitary {
            matrix: &later.matrix * &self.matrix,
        })
    }

    pub fn apply(&self, state: &QuantumState) -> Result<QuantumState> {
        evolve(state, self)
    }
}

/// Largest entrywise deviation of `h` from its adjoint.
pub fn hermiticity_defect(h: &CMatrix) -> f64 {
    max_abs(&(h - h.adjoint()))
}

/// `exp(-i H dt)` via the spectral decomposition of the Hermitian generator.
pub fn unitary_from_hamiltonian(hamiltonian: &CMatrix, dt: f64) -> Result<Unitary> {
    let n = hamiltonian.nrows();
    check_same(n, hamiltonian.ncols())?;
    check_dimension(n)?;
    let deviation = hermiticity_defect(hamiltonian);
    if deviation > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { deviation });
    }
    // symmetrize so the eigensolver sees an exactly Hermitian input
    let h = (hamiltonian + hamiltonian.adjoint()).unscale(2.0);
    let eig = h.symmetric_eigen();
    let phases = CVector::from_iterator(
        n,
        eig.eigenvalues
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -e * dt)),
    );
    let v = &eig.eigenvectors;
    let matrix = v * CMatrix::from_diagonal(&phases) * v.adjoint();
    Unitary::new(matrix)
}

/// Groups indices into equivalence classes of `|v_i - v_j| <= tolerance`,
/// closed transitively (single linkage on the sorted values).
///
/// Classes are ordered by their smallest member index; members ascend.
pub fn degeneracy_classes(values: &[f64], tolerance: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut prev: Option<f64> = None;
    for &i in &order {
        match prev {
            Some(p) if (values[i] - p).abs() <= tolerance => {
                classes.last_mut().expect("open class").push(i)
            }
            _ => classes.push(vec![i]),
        }
        prev = Some(values[i]);
    }
    for c in &mut classes {
        c.sort_unstable();
    }
    classes.sort_by_key(|c| c[0]);
    classes
}

/// Default degeneracy threshold for a list of eigenvalues.
pub fn default_degeneracy_tolerance(values: &[f64]) -> f64 {
    DEGENERACY_RELATIVE_TOLERANCE * values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Hermitian observable stored as an orthonormal eigenbasis plus eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    /// Columns are the eigenvectors `|c_j>`.
    basis: CMatrix,
    eigenvalues: Vec<f64>,
    degeneracy_tolerance: f64,
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
}

impl Observable {
    /// `basis` holds the eigenvectors as columns.
    pub fn new(basis: CMatrix, eigenvalues: Vec<f64>) -> Result<Self> {
        let tol = default_degeneracy_tolerance(&eigenvalues);
        Self::with_tolerance(basis, eigenvalues, tol)
    }

    pub fn with_tolerance(
        basis: CMatrix,
        eigenvalues: Vec<f64>,
        degeneracy_tolerance: f64,
    ) -> Result<Self> {
        let n = basis.nrows();
        check_same(n, basis.ncols())?;
        check_dimension(n)?;
        check_same(n, eigenvalues.len())?;
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidChain("non-finite eigenvalue".into()));
        }
        let deviation = max_abs(&(basis.adjoint() * &basis - CMatrix::identity(n, n)));
        if deviation > ORTHONORMAL_TOLERANCE {
            return Err(Error::NotOrthonormal { deviation });
        }
        let classes = degeneracy_classes(&eigenvalues, degeneracy_tolerance);
        let mut class_of = vec![0; n];
        for (c, members) in classes.iter().enumerate() {
            for &j in members {
                class_of[j] = c;
            }
        }
        Ok(Self {
            basis,
            eigenvalues,
            degeneracy_tolerance,
            classes,
            class_of,
        })
    }

    /// Observable diagonal in the reference basis.
    pub fn diagonal(eigenvalues: Vec<f64>) -> Result<Self> {
        let n = eigenvalues.len();
        check_dimension(n)?;
        Self::new(CMatrix::identity(n, n), eigenvalues)
    }

    /// Projector `|c_n><c_n|` onto the `n`-th vector of `basis`.
    pub fn projector(basis: CMatrix, n: usize) -> Result<Self> {
        let dim = basis.nrows();
        let values = (0..dim).map(|j| if j == n { 1.0 } else { 0.0 }).collect();
        Self::new(basis, values)
    }

    /// Observable from a Hermitian matrix.
    pub fn from_hermitian(matrix: &CMatrix) -> Result<Self> {
        let n = matrix.nrows();
        check_same(n, matrix.ncols())?;
        check_dimension(n)?;
        let deviation = hermiticity_defect(matrix);
        if deviation > HERMITIAN_TOLERANCE {
            return Err(Error::NotHermitian { deviation });
        }
        let h = (matrix + matrix.adjoint()).unscale(2.0);
        let eig = h.symmetric_eigen();
        Self::new(eig.eigenvectors, eig.eigenvalues.iter().copied().collect())
    }

    /// Same eigenbasis, new eigenvalues (a commuting observable).
    pub fn with_eigenvalues(&self, eigenvalues: Vec<f64>) -> Result<Self> {
        Self::new(self.basis.clone(), eigenvalues)
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn degeneracy_tolerance(&self) -> f64 {
        self.degeneracy_tolerance
    }

    pub fn eigenvector(&self, j: usize) -> QuantumState {
        QuantumState {
            coefficients: self.basis.column(j).into_owned(),
        }
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_of(&self, j: usize) -> usize {
        self.class_of[j]
    }

    /// Mean eigenvalue of a degeneracy class.
    pub fn class_value(&self, class: usize) -> f64 {
        let members = &self.classes[class];
        members.iter().map(|&j| self.eigenvalues[j]).sum::<f64>() / members.len() as f64
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.classes.len() == self.dim()
    }

    /// `sum_j C_j |c_j><c_j|`.
    pub fn matrix(&self) -> CMatrix {
        let d = CVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&v| Complex64::new(v, 0.0)),
        );
        &self.basis * CMatrix::from_diagonal(&d) * self.basis.adjoint()
    }
}

/// Statistical mixture of pure states.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    components: Vec<(f64, QuantumState)>,
}

impl MixedState {
    pub fn new(components: Vec<(f64, QuantumState)>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidMixture("no components".into()))?;
        let n = first.1.dim();
        for (w, s) in &components {
            check_same(n, s.dim())?;
            if !(*w > 0.0 && *w <= 1.0) {
                return Err(Error::InvalidMixture(format!("weight {w} outside (0, 1]")));
            }
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMixture(format!("weights sum to {total}")));
        }
        Ok(Self { components })
    }

    pub fn pure(state: QuantumState) -> Self {
        Self {
            components: vec![(1.0, state)],
        }
    }

    pub fn dim(&self) -> usize {
        self.components[0].1.dim()
    }

    pub fn components(&self) -> &[(f64, QuantumState)] {
        &self.components
    }
}

/// Pauli matrices, handy for qubit setups.
pub mod pauli {
    use super::CMatrix;
    use num_complex::Complex64;

    const O: Complex64 = Complex64::new(0.0, 0.0);
    const I1: Complex64 = Complex64::new(1.0, 0.0);
    const IM: Complex64 = Complex64::new(0.0, 1.0);

    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[O, I1, I1, O])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[O, -IM, IM, O])
    }

    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[I1, O, O, -I1])
    }
}
