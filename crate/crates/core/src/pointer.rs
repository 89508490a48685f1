//! Von Neumann pointer with a Gaussian initial state.
//!
//! The pointer is shifted by the eigenvalue `C_j` of the measured observable,
//! so each path `d <- c_j <- b` carries the pointer amplitude `G(f - C_j)`.
//! With `G` normalized to `∫ G^2 df = 1`, the post-selected reading density is
//!
//! ```text
//! rho(f) = | sum_j G(f - C_j) Ã_j |^2,      Ã_j = A_j / 𝒩,
//! 𝒩^2   = sum_{j,k} Re[A_k^* A_j] ∫ G_j G_k df,
//! ```
//!
//! where `𝒩^2` is the probability that the post-selection succeeds.
//!
//! Momentum is read with the convention `<f|λ> = exp(iλf)/sqrt(2π)`. Under it
//! the weak-limit mean momentum is `+Im[sum_j C_j α_j] / Δf^2`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{half_erf_difference, linspace, trapezoid};
use crate::paths::{PathAmplitudes, TwoStepSystem};
use crate::qcore::{default_degeneracy_tolerance, degeneracy_classes, MixedState, Observable, QuantumState};

/// Minimum number of grid points for a density table.
pub const MIN_GRID_POINTS: usize = 512;
pub const DEFAULT_GRID_POINTS: usize = 4096;
/// Grid margin beyond the eigenvalue range, in units of `Δf`.
pub const GRID_MARGIN: f64 = 6.0;
const MAX_GRID_POINTS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Grid {
    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.points)
    }
}

/// Pointer width, eigenvalues of the measured observable, and the grid on
/// which densities are tabulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointerConfig {
    delta_f: f64,
    eigenvalues: Vec<f64>,
    grid: Grid,
}

impl PointerConfig {
    /// Config with the default grid: `±6Δf` beyond the eigenvalue range and
    /// at least 4096 points, fine enough to resolve `G^2`.
    pub fn new(delta_f: f64, eigenvalues: Vec<f64>) -> Result<Self> {
        check_width(delta_f)?;
        let (lo, hi) = required_span(delta_f, &eigenvalues)?;
        let resolving = ((hi - lo) / (delta_f / 4.0)).ceil() as usize + 1;
        let points = resolving.clamp(DEFAULT_GRID_POINTS, MAX_GRID_POINTS);
        Ok(Self {
            delta_f,
            eigenvalues,
            grid: Grid {
                min: lo,
                max: hi,
                points,
            },
        })
    }

    pub fn with_grid(delta_f: f64, eigenvalues: Vec<f64>, grid: Grid) -> Result<Self> {
        check_width(delta_f)?;
        let (lo, hi) = required_span(delta_f, &eigenvalues)?;
        if grid.points < MIN_GRID_POINTS {
            return Err(Error::InvalidPointer(format!(
                "grid needs at least {MIN_GRID_POINTS} points, got {}",
                grid.points
            )));
        }
        if grid.min > lo || grid.max < hi {
            return Err(Error::InvalidPointer(format!(
                "grid [{}, {}] does not cover [{lo}, {hi}]",
                grid.min, grid.max
            )));
        }
        Ok(Self {
            delta_f,
            eigenvalues,
            grid,
        })
    }

    pub fn with_delta_f(&self, delta_f: f64) -> Result<Self> {
        Self::new(delta_f, self.eigenvalues.clone())
    }

    pub fn with_eigenvalues(&self, eigenvalues: Vec<f64>) -> Result<Self> {
        Self::new(self.delta_f, eigenvalues)
    }

    pub fn delta_f(&self) -> f64 {
        self.delta_f
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `max C_j - min C_j`.
    pub fn span(&self) -> f64 {
        eigenvalue_span(&self.eigenvalues)
    }

    fn check_amplitudes(&self, amps: &PathAmplitudes) -> Result<()> {
        if amps.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: amps.len(),
            });
        }
        Ok(())
    }
}

fn check_width(delta_f: f64) -> Result<()> {
    if delta_f > 0.0 && delta_f.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPointer(format!("width must be positive, got {delta_f}")))
    }
}

fn required_span(delta_f: f64, eigenvalues: &[f64]) -> Result<(f64, f64)> {
    if eigenvalues.is_empty() || eigenvalues.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidPointer("eigenvalues must be finite and non-empty".into()));
    }
    let lo = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo - GRID_MARGIN * delta_f, hi + GRID_MARGIN * delta_f))
}

pub fn eigenvalue_span(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Normalized Gaussian pointer amplitude `G(x) = (πΔf²)^(-1/4) exp(-x²/2Δf²)`.
pub fn gaussian_profile(delta_f: f64, x: f64) -> f64 {
    (PI * delta_f * delta_f).powf(-0.25) * (-x * x / (2.0 * delta_f * delta_f)).exp()
}

/// `G(f - C_j)`.
pub fn gaussian(config: &PointerConfig, f: f64, j: usize) -> f64 {
    gaussian_profile(config.delta_f, f - config.eigenvalues[j])
}

/// `∫_a^b G(f - c_j) G(f - c_k) df` in closed form.
pub fn overlap(delta_f: f64, c_j: f64, c_k: f64, interval: (f64, f64)) -> f64 {
    let mid = 0.5 * (c_j + c_k);
    let gap = c_j - c_k;
    let damping = (-gap * gap / (4.0 * delta_f * delta_f)).exp();
    damping * half_erf_difference((interval.0 - mid) / delta_f, (interval.1 - mid) / delta_f)
}

/// Matrix of overlaps `I_{jk}` over `interval` (endpoints may be infinite).
pub fn overlap_integrals(config: &PointerConfig, interval: (f64, f64)) -> DMatrix<f64> {
    let n = config.dim();
    DMatrix::from_fn(n, n, |j, k| {
        overlap(config.delta_f, config.eigenvalues[j], config.eigenvalues[k], interval)
    })
}

/// Full-line overlaps `exp(-(C_j - C_k)^2 / 4Δf^2)`.
pub fn full_overlaps(config: &PointerConfig) -> DMatrix<f64> {
    overlap_integrals(config, (f64::NEG_INFINITY, f64::INFINITY))
}

/// `sum_{j,k} Re[A_k^* A_j] I_{jk}`.
fn quadratic_form(amps: &[Complex64], overlaps: &DMatrix<f64>) -> f64 {
    let n = amps.len();
    let mut total = 0.0;
    for j in 0..n {
        total += amps[j].norm_sqr() * overlaps[(j, j)];
        for k in 0..j {
            total += 2.0 * (amps[k].conj() * amps[j]).re * overlaps[(j, k)];
        }
    }
    total
}

/// Probability `𝒩^2` that the system reaches the post-selected state with
/// the pointer present, readings ignored.
pub fn arrival_probability_at(amps: &PathAmplitudes, config: &PointerConfig) -> Result<f64> {
    config.check_amplitudes(amps)?;
    Ok(quadratic_form(amps.as_slice(), &full_overlaps(config)))
}

/// `Ã_j = A_j / 𝒩`.
pub fn renormalized(amps: &PathAmplitudes, config: &PointerConfig) -> Result<PathAmplitudes> {
    let n2 = arrival_probability_at(amps, config)?;
    if !(n2 > 0.0) {
        return Err(Error::PostselectionImpossible { denominator: n2 });
    }
    let scale = n2.sqrt();
    Ok(PathAmplitudes(amps.as_slice().iter().map(|a| a / scale).collect()))
}

/// Unnormalized joint density `|sum_j G_j(f) A_j|^2` of a reading `f` and a
/// successful post-selection.
pub fn joint_density_at(amps: &PathAmplitudes, config: &PointerConfig, f: f64) -> f64 {
    amps.as_slice()
        .iter()
        .enumerate()
        .map(|(j, a)| a * gaussian(config, f, j))
        .sum::<Complex64>()
        .norm_sqr()
}

/// Tabulated density on a uniform axis (pointer position or momentum).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadingDensity {
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
    /// Trapezoid cumulative integral rescaled to end at exactly 1.
    pub cumulative: Vec<f64>,
}

impl ReadingDensity {
    pub fn from_fn(grid: &Grid, density: impl Fn(f64) -> f64) -> Self {
        let axis = grid.nodes();
        let values: Vec<f64> = axis.iter().map(|&x| density(x)).collect();
        Self::from_table(axis, values)
    }

    /// `axis` must be uniform and increasing.
    pub fn from_table(axis: Vec<f64>, values: Vec<f64>) -> Self {
        let h = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
        let mut cumulative = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in values.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            cumulative.push(acc);
        }
        if acc > 0.0 {
            for c in &mut cumulative {
                *c /= acc;
            }
        }
        Self {
            axis,
            values,
            cumulative,
        }
    }

    pub fn step(&self) -> f64 {
        (self.axis[self.axis.len() - 1] - self.axis[0]) / (self.axis.len() - 1) as f64
    }

    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.step())
    }

    pub fn mean(&self) -> f64 {
        let weighted: Vec<f64> = self.axis.iter().zip(&self.values).map(|(x, v)| x * v).collect();
        trapezoid(&weighted, self.step()) / self.integral()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    /// Largest pointwise difference to another density on the same axis.
    pub fn max_abs_difference(&self, other: &ReadingDensity) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Post-selected reading density `rho(f)`.
pub fn reading_density(amps: &PathAmplitudes, config: &PointerConfig) -> Result<ReadingDensity> {
    config.check_amplitudes(amps)?;
    if amps.is_zero() {
        return Err(Error::PostselectionImpossible { denominator: 0.0 });
    }
    let tilde = renormalized(amps, config)?;
    Ok(ReadingDensity::from_fn(&config.grid, |f| {
        joint_density_at(&tilde, config, f)
    }))
}

/// `rho(f)` at a single point.
pub fn density_at(amps: &PathAmplitudes, config: &PointerConfig, f: f64) -> Result<f64> {
    let tilde = renormalized(amps, config)?;
    Ok(joint_density_at(&tilde, config, f))
}

/// Probability of a reading in `interval`. Unconditional: joint probability
/// with the post-selection. Conditional: divided by `𝒩^2`.
pub fn interval_probability(
    amps: &PathAmplitudes,
    config: &PointerConfig,
    interval: (f64, f64),
    conditional: bool,
) -> Result<f64> {
    config.check_amplitudes(amps)?;
    if !(interval.0 < interval.1) {
        return Err(Error::InvalidPartition(format!(
            "interval ({}, {}) is empty",
            interval.0, interval.1
        )));
    }
    let joint = quadratic_form(amps.as_slice(), &overlap_integrals(config, interval));
    if !conditional {
        return Ok(joint);
    }
    let n2 = arrival_probability_at(amps, config)?;
    if !(n2 > 0.0) {
        return Err(Error::PostselectionImpossible { denominator: n2 });
    }
    Ok(joint / n2)
}

/// Arrival probability `𝒩^2` as a function of the pointer width.
pub fn arrival_probability(
    amps: &PathAmplitudes,
    eigenvalues: &[f64],
    widths: &[f64],
) -> Result<Vec<(f64, f64)>> {
    widths
        .iter()
        .map(|&w| {
            let cfg = PointerConfig::new(w, eigenvalues.to_vec())?;
            Ok((w, arrival_probability_at(amps, &cfg)?))
        })
        .collect()
}

/// `|sum_j A_j|^2`: arrival probability with an infinitely broad pointer.
pub fn unperturbed_arrival(amps: &PathAmplitudes) -> f64 {
    amps.sum().norm_sqr()
}

/// `sum_j |A_j|^2`: arrival probability once path interference is destroyed.
pub fn decohered_arrival(amps: &PathAmplitudes) -> f64 {
    amps.sum_of_squares()
}

/// Accurate-pointer statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongLimit {
    /// Eigenvalue of each degeneracy class.
    pub class_values: Vec<f64>,
    /// Point mass at each class value.
    pub masses: Vec<f64>,
    /// Mean reading.
    pub mean: f64,
    /// `sum C_j |A_j|^2 / sum |A_j|^2`, i.e. the mean if every eigenvalue were
    /// distinct.
    pub distinct_mean: f64,
}

/// Point masses of `rho(f)` as `Δf -> 0`. Amplitudes within a degeneracy
/// class of `eigenvalues` are added before squaring.
pub fn strong_limit_stats(amps: &PathAmplitudes, eigenvalues: &[f64]) -> Result<StrongLimit> {
    if amps.len() != eigenvalues.len() {
        return Err(Error::DimensionMismatch {
            expected: eigenvalues.len(),
            found: amps.len(),
        });
    }
    let classes = degeneracy_classes(eigenvalues, default_degeneracy_tolerance(eigenvalues));
    let raw: Vec<f64> = classes
        .iter()
        .map(|members| members.iter().map(|&j| amps.0[j]).sum::<Complex64>().norm_sqr())
        .collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::PostselectionImpossible { denominator: total });
    }
    let class_values: Vec<f64> = classes
        .iter()
        .map(|m| m.iter().map(|&j| eigenvalues[j]).sum::<f64>() / m.len() as f64)
        .collect();
    let masses: Vec<f64> = raw.iter().map(|p| p / total).collect();
    let mean = class_values.iter().zip(&masses).map(|(c, m)| c * m).sum();
    let s2 = amps.sum_of_squares();
    let distinct_mean = amps
        .as_slice()
        .iter()
        .zip(eigenvalues)
        .map(|(a, c)| c * a.norm_sqr())
        .sum::<f64>()
        / s2;
    Ok(StrongLimit {
        class_values,
        masses,
        mean,
        distinct_mean,
    })
}

/// Inaccurate-pointer statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakLimit {
    /// Relative amplitudes `α_j = A_j / sum_k A_k`.
    pub alpha: Vec<Complex64>,
    /// Weak value `sum_j C_j α_j`.
    pub weak_value: Complex64,
    /// `Re` of the weak value.
    pub mean_reading: f64,
    /// `Im` of the weak value over `Δf^2`.
    pub mean_momentum: f64,
}

/// `α_j = A_j / sum_k A_k`.
pub fn relative_amplitudes(amps: &PathAmplitudes) -> Result<Vec<Complex64>> {
    let sum = amps.sum();
    let scale: f64 = amps.as_slice().iter().map(|a| a.norm()).sum();
    if !(sum.norm() > 1e-12 * scale) {
        return Err(Error::WeakValueUndefined {
            magnitude: sum.norm(),
        });
    }
    Ok(amps.as_slice().iter().map(|a| a / sum).collect())
}

/// Leading-order mean reading and momentum as `Δf -> ∞`.
pub fn weak_limit_stats(amps: &PathAmplitudes, eigenvalues: &[f64], delta_f: f64) -> Result<WeakLimit> {
    if amps.len() != eigenvalues.len() {
        return Err(Error::DimensionMismatch {
            expected: eigenvalues.len(),
            found: amps.len(),
        });
    }
    check_width(delta_f)?;
    let alpha = relative_amplitudes(amps)?;
    let weak_value: Complex64 = alpha.iter().zip(eigenvalues).map(|(a, c)| a * c).sum();
    Ok(WeakLimit {
        mean_reading: weak_value.re,
        mean_momentum: weak_value.im / (delta_f * delta_f),
        alpha,
        weak_value,
    })
}

/// `∫ G(f) G''(f) df = -1 / (2Δf^2)`.
pub fn gaussian_curvature_overlap(delta_f: f64) -> f64 {
    -1.0 / (2.0 * delta_f * delta_f)
}

/// Exact mean reading `∫ f rho(f) df` at finite width, in closed form.
pub fn exact_mean_reading(amps: &PathAmplitudes, config: &PointerConfig) -> Result<f64> {
    let tilde = renormalized(amps, config)?;
    let a = tilde.as_slice();
    let c = config.eigenvalues();
    let overlaps = full_overlaps(config);
    let mut mean = 0.0;
    for j in 0..a.len() {
        for k in 0..a.len() {
            mean += (a[j].conj() * a[k]).re * overlaps[(j, k)] * 0.5 * (c[j] + c[k]);
        }
    }
    Ok(mean)
}

/// Exact mean momentum at finite width, in closed form.
pub fn exact_mean_momentum(amps: &PathAmplitudes, config: &PointerConfig) -> Result<f64> {
    let tilde = renormalized(amps, config)?;
    let a = tilde.as_slice();
    let c = config.eigenvalues();
    let overlaps = full_overlaps(config);
    let mut mean = 0.0;
    for j in 0..a.len() {
        for k in j + 1..a.len() {
            mean -= (c[j] - c[k]) * (a[j].conj() * a[k]).im * overlaps[(j, k)];
        }
    }
    Ok(mean / (config.delta_f * config.delta_f))
}

/// Momentum grid covering `±6/Δf` and resolving the interference fringes.
pub fn momentum_grid(config: &PointerConfig) -> Grid {
    let half = 6.0 / config.delta_f;
    let sigma = 1.0 / (config.delta_f * std::f64::consts::SQRT_2);
    let span = config.span().max(f64::MIN_POSITIVE);
    let h = (sigma / 4.0).min(2.0 * PI / span / 16.0);
    let points = ((2.0 * half / h).ceil() as usize + 1).clamp(DEFAULT_GRID_POINTS, MAX_GRID_POINTS);
    Grid {
        min: -half,
        max: half,
        points,
    }
}

/// Post-selected density of the pointer momentum acquired in the coupling,
/// `|g̃(λ)|^2 |sum_j exp(-iλC_j) Ã_j|^2`.
pub fn momentum_density(amps: &PathAmplitudes, config: &PointerConfig) -> Result<ReadingDensity> {
    config.check_amplitudes(amps)?;
    let tilde = renormalized(amps, config)?;
    let df = config.delta_f;
    let grid = momentum_grid(config);
    Ok(ReadingDensity::from_fn(&grid, |lambda| {
        let envelope = df / PI.sqrt() * (-lambda * lambda * df * df).exp();
        let phase_sum: Complex64 = tilde
            .as_slice()
            .iter()
            .zip(config.eigenvalues())
            .map(|(a, c)| a * Complex64::from_polar(1.0, -lambda * c))
            .sum();
        envelope * phase_sum.norm_sqr()
    }))
}

/// Reading density without post-selection, `sum_j G_j^2(f) |A(c_j <- b)|^2`.
/// The amplitudes are rescaled to unit total probability.
pub fn unconditional_density(one_step: &PathAmplitudes, config: &PointerConfig) -> Result<ReadingDensity> {
    config.check_amplitudes(one_step)?;
    let total = one_step.sum_of_squares();
    if !(total > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let probs: Vec<f64> = one_step.as_slice().iter().map(|a| a.norm_sqr() / total).collect();
    Ok(ReadingDensity::from_fn(&config.grid, |f| {
        unconditional_density_at(&probs, config, f)
    }))
}

/// `sum_j G_j^2(f) p_j`.
pub fn unconditional_density_at(probabilities: &[f64], config: &PointerConfig, f: f64) -> f64 {
    probabilities
        .iter()
        .enumerate()
        .map(|(j, p)| gaussian(config, f, j).powi(2) * p)
        .sum()
}

/// Mean reading without post-selection, `<ψ|C|ψ>`, valid at any width.
pub fn unconditional_mean(one_step: &PathAmplitudes, eigenvalues: &[f64]) -> f64 {
    let total = one_step.sum_of_squares();
    one_step
        .as_slice()
        .iter()
        .zip(eigenvalues)
        .map(|(a, c)| c * a.norm_sqr())
        .sum::<f64>()
        / total
}

/// State of the system after the pointer reads `f`:
/// `∝ sum_j G(f - C_j) <c_j|ψ> |c_j>`.
pub fn post_measurement_state(
    state: &QuantumState,
    observable: &Observable,
    delta_f: f64,
    reading: f64,
) -> Result<QuantumState> {
    check_width(delta_f)?;
    if state.dim() != observable.dim() {
        return Err(Error::DimensionMismatch {
            expected: observable.dim(),
            found: state.dim(),
        });
    }
    let basis = observable.basis();
    let mut in_basis = basis.adjoint() * state.coefficients();
    for (j, z) in in_basis.iter_mut().enumerate() {
        *z *= gaussian_profile(delta_f, reading - observable.eigenvalues()[j]);
    }
    QuantumState::from_vector(basis * in_basis)
}

/// Reading statistics for a mixed preparation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedReading {
    pub density: ReadingDensity,
    /// `w(α) 𝒩_α^2 / sum_β w(β) 𝒩_β^2`.
    pub effective_weights: Vec<f64>,
    /// `sum_α w(α) 𝒩_α^2`.
    pub arrival_probability: f64,
    /// Exact mean reading at the configured width.
    pub exact_mean: f64,
    /// Mean reading as `Δf -> 0`.
    pub strong_mean: f64,
    /// Mean reading as `Δf -> ∞`.
    pub weak_mean: f64,
}

/// Reading density for a mixed preparation: pure-state densities weighted by
/// `w(α)` times the arrival probability `𝒩_α^2` of each component.
pub fn mixed_reading_density(
    mixed: &MixedState,
    system: &TwoStepSystem,
    config: &PointerConfig,
) -> Result<MixedReading> {
    if mixed.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: mixed.dim(),
        });
    }
    let amps: Vec<PathAmplitudes> = mixed
        .components()
        .iter()
        .map(|(_, s)| system.with_preparation(s.clone()).map(|sys| sys.path_amplitudes()))
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = mixed.components().iter().map(|(w, _)| *w).collect();
    let strong_mean = mixed_strong_mean(&weights, &amps, config.eigenvalues())?;
    let weak_mean = mixed_weak_mean(&weights, &amps, config.eigenvalues())?;

    if let [single] = amps.as_slice() {
        return Ok(MixedReading {
            density: reading_density(single, config)?,
            effective_weights: vec![1.0],
            arrival_probability: arrival_probability_at(single, config)?,
            exact_mean: exact_mean_reading(single, config)?,
            strong_mean,
            weak_mean,
        });
    }

    let arrivals: Vec<f64> = amps
        .iter()
        .map(|a| arrival_probability_at(a, config))
        .collect::<Result<_>>()?;
    let raw: Vec<f64> = weights.iter().zip(&arrivals).map(|(w, n2)| w * n2).collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::PostselectionImpossible { denominator: total });
    }
    let effective_weights: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let mut values = vec![0.0; config.grid.points];
    let mut exact_mean = 0.0;
    for ((a, w), n2) in amps.iter().zip(&effective_weights).zip(&arrivals) {
        if *n2 <= 0.0 {
            continue;
        }
        let rho = reading_density(a, config)?;
        for (v, r) in values.iter_mut().zip(&rho.values) {
            *v += w * r;
        }
        exact_mean += w * exact_mean_reading(a, config)?;
    }
    Ok(MixedReading {
        density: ReadingDensity::from_table(config.grid.nodes(), values),
        effective_weights,
        arrival_probability: total,
        exact_mean,
        strong_mean,
        weak_mean,
    })
}

fn mixed_strong_mean(weights: &[f64], amps: &[PathAmplitudes], eigenvalues: &[f64]) -> Result<f64> {
    let classes = degeneracy_classes(eigenvalues, default_degeneracy_tolerance(eigenvalues));
    let (mut num, mut den) = (0.0, 0.0);
    for (w, a) in weights.iter().zip(amps) {
        for members in &classes {
            let p = members.iter().map(|&j| a.0[j]).sum::<Complex64>().norm_sqr();
            let value = members.iter().map(|&j| eigenvalues[j]).sum::<f64>() / members.len() as f64;
            num += w * value * p;
            den += w * p;
        }
    }
    if !(den > 0.0) {
        return Err(Error::PostselectionImpossible { denominator: den });
    }
    Ok(num / den)
}

fn mixed_weak_mean(weights: &[f64], amps: &[PathAmplitudes], eigenvalues: &[f64]) -> Result<f64> {
    let (mut num, mut den) = (Complex64::new(0.0, 0.0), 0.0);
    for (w, a) in weights.iter().zip(amps) {
        let s = a.sum();
        let weighted: Complex64 = a.as_slice().iter().zip(eigenvalues).map(|(x, c)| x * c).sum();
        num += s.conj() * weighted * w;
        den += w * s.norm_sqr();
    }
    if !(den > 0.0) {
        return Err(Error::WeakValueUndefined { magnitude: den.sqrt() });
    }
    Ok(num.re / den)
}

/// Real symmetric matrix `X_{jk} = Re[Ã_k^* Ã_j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    values: DMatrix<f64>,
}

/// Ordering of the `N(N+1)/2` independent entries of a Gram matrix: the
/// diagonal first, then `(j, k)` with `j < k` in lexicographic order.
pub fn unknown_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..n).map(|j| (j, j)).collect();
    for j in 0..n {
        for k in j + 1..n {
            pairs.push((j, k));
        }
    }
    pairs
}

impl GramMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        if n != values.ncols() {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: values.ncols(),
            });
        }
        let asym = (&values - values.transpose()).amax();
        if asym > 1e-12 * values.amax().max(1.0) {
            return Err(Error::InfeasibleGram {
                row: 0,
                col: 0,
                excess: asym,
            });
        }
        Ok(Self { values })
    }

    pub fn from_amplitudes(amps: &PathAmplitudes) -> Self {
        let a = amps.as_slice();
        let n = a.len();
        Self {
            values: DMatrix::from_fn(n, n, |j, k| (a[k].conj() * a[j]).re),
        }
    }

    /// Rebuild from the unknown vector ordered as [`unknown_pairs`].
    pub fn from_unknowns(n: usize, x: &[f64]) -> Self {
        let mut values = DMatrix::zeros(n, n);
        for (&(j, k), &v) in unknown_pairs(n).iter().zip(x) {
            values[(j, k)] = v;
            values[(k, j)] = v;
        }
        Self { values }
    }

    pub fn unknowns(&self) -> Vec<f64> {
        unknown_pairs(self.dim())
            .into_iter()
            .map(|(j, k)| self.values[(j, k)])
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[(j, k)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Largest violation of `X_jj >= 0` and `|X_jk| <= sqrt(X_jj X_kk)`,
    /// with its location. Non-positive means feasible.
    pub fn cauchy_schwarz_excess(&self) -> (f64, usize, usize) {
        let n = self.dim();
        let mut worst = (f64::NEG_INFINITY, 0, 0);
        for j in 0..n {
            let e = -self.values[(j, j)];
            if e > worst.0 {
                worst = (e, j, j);
            }
            for k in j + 1..n {
                let bound = (self.values[(j, j)].max(0.0) * self.values[(k, k)].max(0.0)).sqrt();
                let e = self.values[(j, k)].abs() - bound;
                if e > worst.0 {
                    worst = (e, j, k);
                }
            }
        }
        worst
    }

    /// `sum_{jk} X_jk I_jk` for an overlap matrix.
    pub fn contract(&self, overlaps: &DMatrix<f64>) -> f64 {
        self.values.component_mul(overlaps).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: &self.values * factor,
        }
    }
}

impl Serialize for GramMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = self
            .values
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GramMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("Gram matrix must be square"));
        }
        let values = DMatrix::from_fn(n, n, |j, k| rows[j][k]);
        GramMatrix::new(values).map_err(serde::de::Error::custom)
    }
}

/// `sum_{jk} X_jk G(f - c_j) G(f - c_k)`.
pub fn gram_density_at(gram: &GramMatrix, eigenvalues: &[f64], delta_f: f64, f: f64) -> f64 {
    let g: Vec<f64> = eigenvalues.iter().map(|c| gaussian_profile(delta_f, f - c)).collect();
    let n = g.len();
    let mut total = 0.0;
    for j in 0..n {
        total += gram.values[(j, j)] * g[j] * g[j];
        for k in 0..j {
            total += 2.0 * gram.values[(j, k)] * g[j] * g[k];
        }
    }
    total
}
