//! Reconstruction of path amplitudes from pointer statistics.
//!
//! The reading density is linear in the Gram matrix `X_jk = Re[Ã_k^* Ã_j]`:
//!
//! ```text
//! rho(f) = sum_j G_j(f)^2 X_jj + 2 sum_{j<k} G_j(f) G_k(f) X_jk
//! ```
//!
//! so densities sampled at probe points, or reading frequencies in the cells
//! of a partition, give a linear system for the `P = N(N+1)/2` unknowns.
//! Unknowns are ordered as in [`unknown_pairs`]: the diagonal first, then the
//! pairs `j < k` in lexicographic order. Moduli and relative phases follow
//! from `|Ã_j| = sqrt(X_jj)` and `cos φ_j = X_j0 / sqrt(X_jj X_00)`, which
//! leaves every phase defined only up to a common sign (complex conjugation).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linspace;
use crate::paths::{PathAmplitudes, TwoStepSystem};
use crate::pointer::{
    full_overlaps, gaussian, interval_probability, overlap_integrals, reading_density, renormalized,
    unknown_pairs, GramMatrix, PointerConfig, ReadingDensity,
};
use crate::qcore::{Observable, QuantumState, ORTHONORMAL_TOLERANCE};
use crate::sampler::{count, frequencies, sample_stream, CountVector, IntervalPartition};

/// Smallest accepted `σ_min / σ_max` of a design matrix.
pub const RANK_TOLERANCE: f64 = 1e-6;
/// Smallest `|<c_j|d(t')>|` accepted when dividing out the final state.
pub const FINAL_COMPONENT_TOLERANCE: f64 = 1e-8;
/// Default lower bound on `Δf / span` for weak reconstruction.
pub const WEAK_REGIME_RATIO: f64 = 10.0;
/// Largest dimension for which phase signs are resolved exhaustively.
const EXHAUSTIVE_SIGN_LIMIT: usize = 16;

/// Number of unknowns for dimension `n`.
pub fn unknown_count(n: usize) -> usize {
    n * (n + 1) / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Pointwise,
    Intervals,
    /// Unconditional one-step density: no interference terms.
    OneStep,
}

/// Singular-value diagnostics of a design matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    /// `|det|`, square designs only.
    pub abs_det: Option<f64>,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Conditioning {
    pub fn relative_sigma_min(&self) -> f64 {
        if self.sigma_max > 0.0 {
            self.sigma_min / self.sigma_max
        } else {
            0.0
        }
    }
}

/// Coefficients of the linear system, one row per probe point or cell and
/// one column per unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    matrix: DMatrix<f64>,
    dim: usize,
    kind: DesignKind,
}

impl DesignMatrix {
    pub fn pointwise(config: &PointerConfig, probes: &[f64]) -> Result<Self> {
        check_distinct(probes)?;
        let n = config.dim();
        let pairs = unknown_pairs(n);
        let matrix = DMatrix::from_fn(probes.len(), pairs.len(), |row, col| {
            let (j, k) = pairs[col];
            let f = probes[row];
            let g = gaussian(config, f, j) * gaussian(config, f, k);
            if j == k {
                g
            } else {
                2.0 * g
            }
        });
        Ok(Self {
            matrix,
            dim: n,
            kind: DesignKind::Pointwise,
        })
    }

    pub fn intervals(config: &PointerConfig, partition: &IntervalPartition) -> Self {
        let n = config.dim();
        let pairs = unknown_pairs(n);
        let cells = partition.cells();
        let mut matrix = DMatrix::zeros(cells.len(), pairs.len());
        for (row, cell) in cells.iter().enumerate() {
            let overlaps = overlap_integrals(config, *cell);
            for (col, &(j, k)) in pairs.iter().enumerate() {
                matrix[(row, col)] = if j == k {
                    overlaps[(j, j)]
                } else {
                    2.0 * overlaps[(j, k)]
                };
            }
        }
        Self {
            matrix,
            dim: n,
            kind: DesignKind::Intervals,
        }
    }

    /// Design for the density without post-selection, `sum_j G_j^2 |<c_j|ψ>|^2`.
    pub fn one_step(config: &PointerConfig, probes: &[f64]) -> Result<Self> {
        check_distinct(probes)?;
        let n = config.dim();
        let pairs = unknown_pairs(n);
        let matrix = DMatrix::from_fn(probes.len(), pairs.len(), |row, col| {
            let (j, k) = pairs[col];
            if j == k {
                gaussian(config, probes[row], j).powi(2)
            } else {
                0.0
            }
        });
        Ok(Self {
            matrix,
            dim: n,
            kind: DesignKind::OneStep,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> DesignKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Columns with no nonzero entry.
    pub fn zero_columns(&self) -> Vec<usize> {
        (0..self.cols())
            .filter(|&c| self.matrix.column(c).iter().all(|&v| v == 0.0))
            .collect()
    }

    /// Maximum number of nonzero entries with no two in a row or column.
    pub fn structural_rank(&self) -> usize {
        let (rows, cols) = self.matrix.shape();
        let mut owner: Vec<Option<usize>> = vec![None; cols];
        let mut matched = 0;
        for r in 0..rows {
            let mut seen = vec![false; cols];
            if self.augment(r, &mut seen, &mut owner) {
                matched += 1;
            }
        }
        matched
    }

    fn augment(&self, row: usize, seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for c in 0..self.cols() {
            if self.matrix[(row, c)] != 0.0 && !seen[c] {
                seen[c] = true;
                if owner[c].is_none_or(|other| self.augment(other, seen, owner)) {
                    owner[c] = Some(row);
                    return true;
                }
            }
        }
        false
    }

    pub fn conditioning(&self) -> Conditioning {
        let sv = self.matrix.clone().svd(false, false).singular_values;
        let sigma_max = sv.iter().copied().fold(0.0, f64::max);
        let sigma_min = if self.rows() < self.cols() {
            0.0
        } else {
            sv.iter().copied().fold(f64::INFINITY, f64::min)
        };
        let abs_det = (self.rows() == self.cols()).then(|| self.matrix.determinant().abs());
        Conditioning {
            abs_det,
            sigma_min,
            sigma_max,
        }
    }

    /// Design values `sum_{jk} X_jk (...)` for given unknowns.
    pub fn apply(&self, unknowns: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(unknowns)).iter().copied().collect()
    }
}

fn check_distinct(probes: &[f64]) -> Result<()> {
    let mut sorted = probes.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) || probes.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidPartition("probe points must be finite and distinct".into()));
    }
    Ok(())
}

/// `m` probe points equally spaced over `[min C - Δf, max C + Δf]`.
pub fn default_probes(config: &PointerConfig, m: usize) -> Vec<f64> {
    let lo = config.eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = config.eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    linspace(lo - config.delta_f(), hi + config.delta_f(), m)
}

/// Least-squares solution of a design system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    /// Feasible Gram matrix, rescaled to unit arrival normalization.
    pub gram: GramMatrix,
    /// Least-squares unknowns before projection onto the feasible set.
    pub raw: Vec<f64>,
    /// `||D x - y||_2` at the raw solution.
    pub residual: f64,
    /// Largest change to any unknown made by clamping and rescaling.
    pub adjustment: f64,
    /// `sum_{jk} X_jk I_jk^full` of the raw solution.
    pub normalization: f64,
    pub condition: Conditioning,
    /// Covariance of the raw unknowns, when the data are sampled frequencies.
    pub covariance: Option<Vec<Vec<f64>>>,
}

impl LinearFit {
    pub fn covariance_matrix(&self) -> Option<DMatrix<f64>> {
        self.covariance.as_ref().map(|rows| {
            let p = rows.len();
            DMatrix::from_fn(p, p, |i, j| rows[i][j])
        })
    }
}

fn solve_design(design: &DesignMatrix, data: &[f64]) -> Result<(Vec<f64>, f64, Conditioning, SVD<f64, nalgebra::Dyn, nalgebra::Dyn>)> {
    if data.len() != design.rows() {
        return Err(Error::DimensionMismatch {
            expected: design.rows(),
            found: data.len(),
        });
    }
    if design.rows() < design.cols() {
        return Err(Error::Underdetermined {
            needed: design.cols(),
            rows: design.rows(),
        });
    }
    let condition = design.conditioning();
    if !(condition.relative_sigma_min() >= RANK_TOLERANCE) {
        return Err(Error::RankDeficient {
            sigma_min: condition.sigma_min,
            sigma_max: condition.sigma_max,
        });
    }
    let svd = design.matrix.clone().svd(true, true);
    let y = DVector::from_column_slice(data);
    let x = svd.solve(&y, 0.0).map_err(|_| Error::RankDeficient {
        sigma_min: condition.sigma_min,
        sigma_max: condition.sigma_max,
    })?;
    let residual = (&design.matrix * &x - &y).norm();
    Ok((x.iter().copied().collect(), residual, condition, svd))
}

/// Solve for `X` from exact or noisy density values at probe points.
pub fn solve_pointwise(values: &[f64], probes: &[f64], config: &PointerConfig) -> Result<LinearFit> {
    let design = DesignMatrix::pointwise(config, probes)?;
    let (raw, residual, condition, _) = solve_design(&design, values)?;
    finish_fit(raw, residual, condition, None, config, false)
}

/// Solve for `X` from reading frequencies `W(ν)` in the cells of `partition`.
/// With `trials`, the multinomial covariance `(diag W - W W^T) / K` is
/// propagated to the unknowns.
pub fn solve_intervals(
    freqs: &[f64],
    partition: &IntervalPartition,
    config: &PointerConfig,
    trials: Option<u64>,
) -> Result<LinearFit> {
    let design = DesignMatrix::intervals(config, partition);
    let (raw, residual, condition, svd) = solve_design(&design, freqs)?;
    let covariance = match trials {
        Some(0) => return Err(Error::NoTrials),
        Some(k) => {
            let w = DVector::from_column_slice(freqs);
            let cov_w = (DMatrix::from_diagonal(&w) - &w * w.transpose()) / k as f64;
            let pinv = svd.pseudo_inverse(0.0).map_err(|_| Error::RankDeficient {
                sigma_min: condition.sigma_min,
                sigma_max: condition.sigma_max,
            })?;
            let cov = &pinv * cov_w * pinv.transpose();
            Some(cov.row_iter().map(|r| r.iter().copied().collect()).collect())
        }
        None => None,
    };
    finish_fit(raw, residual, condition, covariance, config, true)
}

/// Interval fit straight from counts.
pub fn solve_counts(counts: &CountVector, partition: &IntervalPartition, config: &PointerConfig) -> Result<LinearFit> {
    let w = frequencies(counts)?;
    solve_intervals(&w, partition, config, Some(counts.total()))
}

fn finish_fit(
    raw: Vec<f64>,
    residual: f64,
    condition: Conditioning,
    covariance: Option<Vec<Vec<f64>>>,
    config: &PointerConfig,
    project: bool,
) -> Result<LinearFit> {
    let n = config.dim();
    let full = full_overlaps(config);
    let raw_gram = GramMatrix::from_unknowns(n, &raw);
    let normalization = raw_gram.contract(&full);
    let mut clamped = false;
    let gram = if project {
        let feasible = project_feasible(&raw_gram);
        clamped = feasible != raw_gram;
        let norm = feasible.contract(&full);
        if !(norm > 0.0) {
            return Err(Error::InfeasibleGram {
                row: 0,
                col: 0,
                excess: -norm,
            });
        }
        feasible.scaled(1.0 / norm)
    } else {
        raw_gram
    };
    let adjustment = gram
        .unknowns()
        .iter()
        .zip(&raw)
        .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()));
    if clamped {
        log::warn!("projected the Gram estimate onto the feasible set, largest change {adjustment:.3e}");
    }
    Ok(LinearFit {
        gram,
        raw,
        residual,
        adjustment,
        normalization,
        condition,
        covariance,
    })
}

/// Clamp negative diagonals to zero, then off-diagonals into
/// `|X_jk| <= sqrt(X_jj X_kk)`.
pub fn project_feasible(gram: &GramMatrix) -> GramMatrix {
    let n = gram.dim();
    let diag: Vec<f64> = (0..n).map(|j| gram.get(j, j).max(0.0)).collect();
    let values = DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            diag[j]
        } else {
            let bound = (diag[j] * diag[k]).sqrt();
            gram.get(j, k).clamp(-bound, bound)
        }
    });
    GramMatrix::new(values).expect("symmetric by construction")
}

/// First-order standard errors of the moduli and phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardErrors {
    pub moduli: Vec<f64>,
    pub phases: Vec<f64>,
}

/// Recovered amplitudes up to a global phase and complex conjugation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    /// `|Ã_j|`.
    pub moduli: Vec<f64>,
    /// `acos(X_j,ref / sqrt(X_jj X_ref,ref))` in `[0, π]`; zero at the reference.
    pub phases: Vec<f64>,
    /// Phases with relative signs fixed by the off-reference entries of `X`
    /// (dimension three and up). Negating all of them is the other branch.
    pub signed_phases: Vec<f64>,
    pub reference: usize,
    pub gram: GramMatrix,
    pub condition: Option<Conditioning>,
    /// Least-squares residual of the linear solve.
    pub residual: f64,
    /// `|sum_{jk} X_jk I_jk^full - 1|`.
    pub normalization_residual: f64,
    /// RMS misfit of the off-reference entries of `X` after sign resolution.
    pub consistency_residual: f64,
    /// Change made by projecting onto the feasible set.
    pub adjustment: f64,
    pub standard_errors: Option<StandardErrors>,
}

impl ReconstructionResult {
    /// Amplitudes of one conjugation branch.
    pub fn amplitudes(&self, conjugate: bool) -> PathAmplitudes {
        let sign = if conjugate { -1.0 } else { 1.0 };
        PathAmplitudes(
            self.moduli
                .iter()
                .zip(&self.signed_phases)
                .map(|(m, p)| Complex64::from_polar(*m, sign * p))
                .collect(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Moduli and relative phases from a Gram matrix, with phase 0 at `reference`.
pub fn amplitudes_from_gram(gram: &GramMatrix, reference: usize) -> Result<ReconstructionResult> {
    let n = gram.dim();
    if reference >= n {
        return Err(Error::IndexOutOfRange {
            step: 0,
            index: reference,
            dimension: n,
        });
    }
    let (excess, row, col) = gram.cauchy_schwarz_excess();
    let scale = (0..n).map(|j| gram.get(j, j).abs()).fold(0.0, f64::max);
    if excess > 1e-9 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InfeasibleGram { row, col, excess });
    }
    let diag: Vec<f64> = (0..n).map(|j| gram.get(j, j).max(0.0)).collect();
    if !(diag[reference] > 1e-14 * scale) {
        let suggested = (0..n).max_by(|&a, &b| diag[a].total_cmp(&diag[b])).unwrap_or(0);
        return Err(Error::ReferenceVanishes { suggested });
    }
    let moduli: Vec<f64> = diag.iter().map(|d| d.sqrt()).collect();
    let phases: Vec<f64> = (0..n)
        .map(|j| {
            if j == reference || moduli[j] == 0.0 {
                0.0
            } else {
                cosine(gram, &moduli, j, reference).acos()
            }
        })
        .collect();
    let (signed_phases, misfit) = resolve_signs(gram, &moduli, &phases, reference);
    Ok(ReconstructionResult {
        moduli,
        phases,
        signed_phases,
        reference,
        gram: gram.clone(),
        condition: None,
        residual: 0.0,
        normalization_residual: 0.0,
        consistency_residual: misfit,
        adjustment: 0.0,
        standard_errors: None,
    })
}

fn cosine(gram: &GramMatrix, moduli: &[f64], j: usize, k: usize) -> f64 {
    (gram.get(j, k) / (moduli[j] * moduli[k])).clamp(-1.0, 1.0)
}

/// Choose the sign of each phase to best reproduce `X_jk` for pairs that
/// avoid the reference. The first phase strictly inside `(0, π)` stays positive.
fn resolve_signs(gram: &GramMatrix, moduli: &[f64], phases: &[f64], reference: usize) -> (Vec<f64>, f64) {
    let n = moduli.len();
    let free: Vec<usize> = (0..n)
        .filter(|&j| j != reference && phases[j] > 1e-12 && phases[j] < PI - 1e-12)
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| (j + 1..n).map(move |k| (j, k)))
        .filter(|&(j, k)| j != reference && k != reference)
        .collect();
    let misfit = |signed: &[f64]| -> f64 {
        pairs
            .iter()
            .map(|&(j, k)| (moduli[j] * moduli[k] * (signed[j] - signed[k]).cos() - gram.get(j, k)).powi(2))
            .sum::<f64>()
    };
    let mut best = phases.to_vec();
    if free.len() > 1 {
        if free.len() <= EXHAUSTIVE_SIGN_LIMIT {
            let mut best_misfit = f64::INFINITY;
            for mask in 0u32..(1 << (free.len() - 1)) {
                let mut trial = phases.to_vec();
                for (bit, &j) in free[1..].iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        trial[j] = -trial[j];
                    }
                }
                let m = misfit(&trial);
                if m < best_misfit {
                    best_misfit = m;
                    best = trial;
                }
            }
        } else {
            for &j in &free[1..] {
                let keep = misfit(&best);
                best[j] = -best[j];
                if misfit(&best) >= keep {
                    best[j] = -best[j];
                }
            }
        }
    }
    let rms = if pairs.is_empty() {
        0.0
    } else {
        (misfit(&best) / pairs.len() as f64).sqrt()
    };
    (best, rms)
}

/// Full reconstruction from a linear fit, with standard errors when the fit
/// carries a covariance.
pub fn reconstruct(fit: &LinearFit, config: &PointerConfig, reference: usize) -> Result<ReconstructionResult> {
    let mut result = amplitudes_from_gram(&fit.gram, reference)?;
    result.condition = Some(fit.condition);
    result.residual = fit.residual;
    result.adjustment = fit.adjustment;
    result.normalization_residual = (fit.gram.contract(&full_overlaps(config)) - 1.0).abs();
    if let Some(cov) = fit.covariance_matrix() {
        result.standard_errors = Some(propagate_errors(&fit.gram, &cov, reference));
    }
    Ok(result)
}

/// Linearized propagation of the covariance of the unknowns to the moduli
/// `sqrt(X_jj)` and phases `acos(X_j,ref / sqrt(X_jj X_ref,ref))`.
pub fn propagate_errors(gram: &GramMatrix, covariance: &DMatrix<f64>, reference: usize) -> StandardErrors {
    let n = gram.dim();
    let pairs = unknown_pairs(n);
    let column = |a: usize, b: usize| {
        let key = (a.min(b), a.max(b));
        pairs.iter().position(|&p| p == key).expect("pair exists")
    };
    let p = pairs.len();
    let quad = |g: &DVector<f64>| (g.transpose() * covariance * g)[(0, 0)].max(0.0).sqrt();
    let mut moduli = Vec::with_capacity(n);
    let mut phases = Vec::with_capacity(n);
    let xr = gram.get(reference, reference);
    for j in 0..n {
        let xj = gram.get(j, j);
        let mut g = DVector::zeros(p);
        if xj > 0.0 {
            g[column(j, j)] = 0.5 / xj.sqrt();
        }
        moduli.push(quad(&g));
        if j == reference || xj <= 0.0 || xr <= 0.0 {
            phases.push(0.0);
            continue;
        }
        let norm = (xj * xr).sqrt();
        let r = gram.get(j, reference) / norm;
        let dphi = -1.0 / (1.0 - r * r).max(f64::MIN_POSITIVE).sqrt();
        let mut g = DVector::zeros(p);
        g[column(j, reference)] += dphi / norm;
        g[column(j, j)] += dphi * (-r / (2.0 * xj));
        g[column(reference, reference)] += dphi * (-r / (2.0 * xr));
        phases.push(quad(&g));
    }
    StandardErrors { moduli, phases }
}

/// Density predicted for a commuting observable with eigenvalues
/// `new_eigenvalues` (one per eigenvector of the original) at width `delta_f`.
pub fn predict_commuting(gram: &GramMatrix, new_eigenvalues: &[f64], delta_f: f64) -> Result<ReadingDensity> {
    if new_eigenvalues.len() != gram.dim() {
        return Err(Error::DimensionMismatch {
            expected: gram.dim(),
            found: new_eigenvalues.len(),
        });
    }
    let cfg = PointerConfig::new(delta_f, new_eigenvalues.to_vec())?;
    let norm = gram.contract(&full_overlaps(&cfg));
    if !(norm > 0.0) {
        return Err(Error::PostselectionImpossible { denominator: norm });
    }
    Ok(ReadingDensity::from_fn(cfg.grid(), |f| {
        crate::pointer::gram_density_at(gram, new_eigenvalues, delta_f, f) / norm
    }))
}

/// Eigenvalues of `new` on the eigenvectors of `original`, or
/// [`Error::NonCommuting`] if `new` does not share that eigenbasis.
pub fn commuting_eigenvalues(original: &Observable, new: &Observable) -> Result<Vec<f64>> {
    if original.dim() != new.dim() {
        return Err(Error::DimensionMismatch {
            expected: original.dim(),
            found: new.dim(),
        });
    }
    let m = new.matrix();
    let mut values = Vec::with_capacity(original.dim());
    let mut deviation: f64 = 0.0;
    for j in 0..original.dim() {
        let c = original.basis().column(j).into_owned();
        let mc = &m * &c;
        let value = c.dotc(&mc);
        deviation = deviation.max((mc - c * value).norm()).max(value.im.abs());
        values.push(value.re);
    }
    let scale = new.eigenvalues().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if deviation > ORTHONORMAL_TOLERANCE * scale {
        return Err(Error::NonCommuting { deviation });
    }
    Ok(values)
}

/// Prediction for an observable given as an operator.
pub fn predict_observable(
    gram: &GramMatrix,
    original: &Observable,
    new: &Observable,
    delta_f: f64,
) -> Result<ReadingDensity> {
    predict_commuting(gram, &commuting_eigenvalues(original, new)?, delta_f)
}

/// Predicted density with pointwise first-order standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionBand {
    pub density: ReadingDensity,
    pub standard_error: Vec<f64>,
}

/// Prediction from a sampled fit, with the covariance of the unknowns pushed
/// through `rho'(f) = h(f)^T x / s^T x`.
pub fn predict_with_band(fit: &LinearFit, new_eigenvalues: &[f64], delta_f: f64) -> Result<PredictionBand> {
    let density = predict_commuting(&fit.gram, new_eigenvalues, delta_f)?;
    let cov = fit.covariance_matrix().ok_or(Error::NoTrials)?;
    let cfg = PointerConfig::new(delta_f, new_eigenvalues.to_vec())?;
    let pairs = unknown_pairs(cfg.dim());
    let full = full_overlaps(&cfg);
    let x = DVector::from_vec(fit.gram.unknowns());
    let s = DVector::from_iterator(
        pairs.len(),
        pairs.iter().map(|&(j, k)| if j == k { full[(j, j)] } else { 2.0 * full[(j, k)] }),
    );
    let sx = s.dot(&x);
    let standard_error = density
        .axis
        .iter()
        .map(|&f| {
            let h = DVector::from_iterator(
                pairs.len(),
                pairs.iter().map(|&(j, k)| {
                    let g = gaussian(&cfg, f, j) * gaussian(&cfg, f, k);
                    if j == k {
                        g
                    } else {
                        2.0 * g
                    }
                }),
            );
            let grad = &h / sx - &s * (h.dot(&x) / (sx * sx));
            (grad.transpose() * &cov * &grad)[(0, 0)].max(0.0).sqrt()
        })
        .collect();
    Ok(PredictionBand {
        density,
        standard_error,
    })
}

/// Mean reading and mean momentum measured with a pointer for the projector
/// onto one eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakInput {
    pub mean_reading: f64,
    pub se_reading: f64,
    pub mean_momentum: f64,
    pub se_momentum: f64,
}

impl WeakInput {
    /// Sample mean and its standard error from a record of readings; momentum
    /// supplied separately.
    pub fn from_readings(readings: &[f64], mean_momentum: f64, se_momentum: f64) -> Result<Self> {
        let k = readings.len();
        if k < 2 {
            return Err(Error::NoTrials);
        }
        let mean = readings.iter().sum::<f64>() / k as f64;
        let var = readings.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        Ok(Self {
            mean_reading: mean,
            se_reading: (var / k as f64).sqrt(),
            mean_momentum,
            se_momentum,
        })
    }
}

/// Relative amplitudes recovered from weak-pointer means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakEstimate {
    pub alpha: Vec<Complex64>,
    pub se_re: Vec<f64>,
    pub se_im: Vec<f64>,
    /// `|sum_n α_n - 1|`.
    pub sum_rule_deviation: f64,
    /// Sum rule holds within four combined standard errors.
    pub consistent: bool,
    /// `(Δf / span)^2`: trials needed for a fixed precision grow by this factor.
    pub relative_cost: f64,
}

/// `Re α_n = <f>_n`, `Im α_n = <λ>_n Δf^2` for each projector `n`.
pub fn weak_reconstruct(inputs: &[WeakInput], delta_f: f64, span: f64, min_ratio: f64) -> Result<WeakEstimate> {
    if !(delta_f >= min_ratio * span) {
        return Err(Error::NotWeakRegime {
            delta_f,
            threshold: min_ratio * span,
        });
    }
    let d2 = delta_f * delta_f;
    let alpha: Vec<Complex64> = inputs
        .iter()
        .map(|i| Complex64::new(i.mean_reading, i.mean_momentum * d2))
        .collect();
    let se_re: Vec<f64> = inputs.iter().map(|i| i.se_reading).collect();
    let se_im: Vec<f64> = inputs.iter().map(|i| i.se_momentum * d2).collect();
    let sum: Complex64 = alpha.iter().sum();
    let deviation = (sum - 1.0).norm();
    let combined = se_re.iter().chain(&se_im).map(|s| s * s).sum::<f64>().sqrt();
    let consistent = deviation <= 4.0 * combined.max(1e-12);
    if !consistent {
        log::warn!("weak estimates violate the sum rule: |sum α - 1| = {deviation:.3e}");
    }
    Ok(WeakEstimate {
        alpha,
        se_re,
        se_im,
        sum_rule_deviation: deviation,
        consistent,
        relative_cost: (delta_f / span).powi(2),
    })
}

/// Initial state at the coupling time recovered from reconstructed amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateReconstruction {
    /// `b(t')` from the branch with the phases as given.
    pub direct: QuantumState,
    /// `b(t')` from the complex-conjugate branch.
    pub conjugate: QuantumState,
}

impl StateReconstruction {
    /// Fidelities of both branches against a known state and the larger one.
    pub fn fidelities(&self, truth: &QuantumState) -> Result<(f64, f64, f64)> {
        let a = self.direct.fidelity(truth)?;
        let b = self.conjugate.fidelity(truth)?;
        Ok((a, b, a.max(b)))
    }
}

/// `<c_j|b(t')> ∝ Ã_j / conj(<c_j|d(t')>)`, expressed in the reference basis.
pub fn reconstruct_initial_state(
    result: &ReconstructionResult,
    d_at_tprime: &QuantumState,
    observable: &Observable,
) -> Result<StateReconstruction> {
    let n = observable.dim();
    if result.moduli.len() != n || d_at_tprime.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: result.moduli.len().max(d_at_tprime.dim()),
        });
    }
    let delta = observable.basis().adjoint() * d_at_tprime.coefficients();
    for (index, d) in delta.iter().enumerate() {
        if d.norm() < FINAL_COMPONENT_TOLERANCE {
            return Err(Error::VanishingFinalComponent {
                index,
                magnitude: d.norm(),
            });
        }
    }
    let build = |amps: PathAmplitudes| -> Result<QuantumState> {
        let coeffs = DVector::from_iterator(n, amps.as_slice().iter().zip(delta.iter()).map(|(a, d)| a / d.conj()));
        QuantumState::from_vector(observable.basis() * coeffs)
    };
    Ok(StateReconstruction {
        direct: build(result.amplitudes(false))?,
        conjugate: build(result.amplitudes(true))?,
    })
}

/// One row of a pointer-width sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta_f: f64,
    pub abs_det: f64,
    pub sigma_min: f64,
    /// Distance between sampled reconstruction and truth in
    /// `(|Ã_1|, ..., |Ã_N|, φ_2, ..., φ_N)`; NaN when the solve fails.
    pub recon_error: f64,
    pub arrival_prob: f64,
}

/// Conditioning of the interval design, arrival probability and the error of
/// a sampled reconstruction for each width. Width `i` draws its `trials`
/// readings from substream `i` of `seed`.
pub fn conditioning_sweep(
    system: &TwoStepSystem,
    partition: &IntervalPartition,
    widths: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let amps = system.path_amplitudes();
    let eigenvalues = system.observable.eigenvalues().to_vec();
    widths
        .par_iter()
        .enumerate()
        .map(|(i, &w)| {
            let cfg = PointerConfig::new(w, eigenvalues.clone())?;
            let design = DesignMatrix::intervals(&cfg, partition);
            let condition = design.conditioning();
            let arrival = interval_probability(&amps, &cfg, (f64::NEG_INFINITY, f64::INFINITY), false)?;
            let recon_error = sampled_error(&amps, &cfg, partition, trials, seed, i as u64).unwrap_or(f64::NAN);
            Ok(SweepRow {
                delta_f: w,
                abs_det: condition.abs_det.unwrap_or(f64::NAN),
                sigma_min: condition.sigma_min,
                recon_error,
                arrival_prob: arrival,
            })
        })
        .collect()
}

fn sampled_error(
    amps: &PathAmplitudes,
    cfg: &PointerConfig,
    partition: &IntervalPartition,
    trials: usize,
    seed: u64,
    stream: u64,
) -> Result<f64> {
    let truth = amplitudes_from_gram(&GramMatrix::from_amplitudes(&renormalized(amps, cfg)?), 0)?;
    let rho = reading_density(amps, cfg)?;
    let record = sample_stream(&rho, trials, seed, stream);
    let fit = solve_counts(&count(&record, partition), partition, cfg)?;
    let rec = reconstruct(&fit, cfg, 0)?;
    Ok(reconstruction_distance(&rec, &truth))
}

/// Euclidean distance over moduli and `[0, π]` phases.
pub fn reconstruction_distance(a: &ReconstructionResult, b: &ReconstructionResult) -> f64 {
    let moduli = a.moduli.iter().zip(&b.moduli).map(|(x, y)| (x - y).powi(2));
    let phases = a.phases.iter().zip(&b.phases).map(|(x, y)| (x - y).powi(2));
    moduli.chain(phases).sum::<f64>().sqrt()
}
