//! Mode dispatch for a parsed [`ExperimentConfig`] and the files each mode
//! writes.
//!
//! | mode | files |
//! |------|-------|
//! | forward | `amplitudes.csv`, `density.csv`, `cells.csv`, `truth.json` |
//! | simulate | `trials.csv`, `counts.csv` |
//! | reconstruct | `counts.csv`, `trace.csv`, `reconstruction.json`, `truth.json`, `prediction.csv` |
//! | sweep | `sweep.csv` |
//! | tomography | `counts.csv`, `reconstruction.json`, `tomography.json` |
//!
//! All floats are written in shortest round-trip form, so identical configs
//! give byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::config::{ExperimentConfig, Mode};
use crate::error::{Error, Result};
use crate::inverse::{
    amplitudes_from_gram, conditioning_sweep, predict_with_band, reconstruct, reconstruct_initial_state, solve_counts,
    ReconstructionResult,
};
use crate::numerics::logspace;
use crate::paths::TwoStepSystem;
use crate::pointer::{
    decohered_arrival, interval_probability, reading_density, renormalized, unconditional_density,
    unperturbed_arrival, GramMatrix, PointerConfig,
};
use crate::sampler::{count, sample, CountVector, IntervalPartition, TrialRecord};

/// Ground truth computed from the configured system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truth {
    pub moduli: Vec<f64>,
    pub phases: Vec<f64>,
    pub arrival_probability: f64,
    pub unperturbed_arrival: f64,
    pub decohered_arrival: f64,
    /// Conditional probability of each partition cell.
    pub cell_probabilities: Vec<f64>,
}

/// One row of the convergence trace; NaN entries mark failed solves.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub trials: usize,
    pub moduli: Vec<f64>,
    pub phases: Vec<f64>,
    pub se_moduli: Vec<f64>,
    pub se_phases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TomographyOutput {
    pub direct: Vec<Complex64>,
    pub conjugate: Vec<Complex64>,
    pub truth: Vec<Complex64>,
    pub fidelity_direct: f64,
    pub fidelity_conjugate: f64,
    pub fidelity: f64,
}

pub fn truth(system: &TwoStepSystem, pointer: &PointerConfig, partition: &IntervalPartition, reference: usize) -> Result<Truth> {
    let amps = system.path_amplitudes();
    let tilde = renormalized(&amps, pointer)?;
    let rec = amplitudes_from_gram(&GramMatrix::from_amplitudes(&tilde), reference)?;
    let cell_probabilities = partition
        .cells()
        .into_iter()
        .map(|cell| interval_probability(&amps, pointer, cell, true))
        .collect::<Result<_>>()?;
    Ok(Truth {
        moduli: rec.moduli,
        phases: rec.phases,
        arrival_probability: interval_probability(&amps, pointer, (f64::NEG_INFINITY, f64::INFINITY), false)?,
        unperturbed_arrival: unperturbed_arrival(&amps),
        decohered_arrival: decohered_arrival(&amps),
        cell_probabilities,
    })
}

/// Re-solve after every `every` readings and once more at the end.
pub fn convergence_trace(
    readings: &[f64],
    partition: &IntervalPartition,
    pointer: &PointerConfig,
    reference: usize,
    every: usize,
) -> Vec<TraceRow> {
    let n = pointer.dim();
    let mut counts = CountVector::zeros(partition.len());
    let mut rows = Vec::with_capacity(readings.len() / every.max(1) + 1);
    for (i, &r) in readings.iter().enumerate() {
        counts.add(partition, r);
        let k = i + 1;
        if k % every == 0 || k == readings.len() {
            rows.push(trace_row(&counts, partition, pointer, reference, n));
        }
    }
    rows
}

fn trace_row(counts: &CountVector, partition: &IntervalPartition, pointer: &PointerConfig, reference: usize, n: usize) -> TraceRow {
    let trials = counts.total() as usize;
    let solved = solve_counts(counts, partition, pointer).and_then(|fit| reconstruct(&fit, pointer, reference));
    match solved {
        Ok(rec) => {
            let se = rec.standard_errors.clone().unwrap_or_else(|| crate::inverse::StandardErrors {
                moduli: vec![f64::NAN; n],
                phases: vec![f64::NAN; n],
            });
            TraceRow {
                trials,
                moduli: rec.moduli,
                phases: rec.phases,
                se_moduli: se.moduli,
                se_phases: se.phases,
            }
        }
        Err(err) => {
            log::debug!("trace solve failed at K = {trials}: {err}");
            TraceRow {
                trials,
                moduli: vec![f64::NAN; n],
                phases: vec![f64::NAN; n],
                se_moduli: vec![f64::NAN; n],
                se_phases: vec![f64::NAN; n],
            }
        }
    }
}

/// `K, mod_A1.., phi.., se_mod_A1.., se_phi..`; a two-level system has a
/// single `phi` column, larger ones `phi_j` for every non-reference index.
pub fn trace_header(n: usize, reference: usize) -> Vec<String> {
    let others: Vec<usize> = (0..n).filter(|&j| j != reference).collect();
    let phi = |j: usize| if n == 2 { "phi".to_string() } else { format!("phi_{}", j + 1) };
    let mut h = vec!["K".to_string()];
    h.extend((1..=n).map(|j| format!("mod_A{j}")));
    h.extend(others.iter().map(|&j| phi(j)));
    h.extend((1..=n).map(|j| format!("se_mod_A{j}")));
    h.extend(others.iter().map(|&j| format!("se_{}", phi(j))));
    h
}

fn trace_record(row: &TraceRow, reference: usize) -> Vec<String> {
    let n = row.moduli.len();
    let others = (0..n).filter(|&j| j != reference);
    let mut rec = vec![row.trials.to_string()];
    rec.extend(row.moduli.iter().map(num));
    rec.extend(others.clone().map(|j| num(row.phases[j])));
    rec.extend(row.se_moduli.iter().map(num));
    rec.extend(others.map(|j| num(row.se_phases[j])));
    rec
}

fn write_table<I>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn num(x: impl std::borrow::Borrow<f64>) -> String {
    format!("{:?}", x.borrow())
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }
}

/// Run the configured mode, writing into `out`. Returns the files written.
pub fn run(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let mut o = Outputs {
        dir: out.to_path_buf(),
        files: Vec::new(),
    };
    let system = config.system()?;
    let pointer = config.pointer()?;
    let partition = config.partition()?;
    log::info!("running {} (N = {}, Δf = {})", config.mode, config.dimension, config.delta_f);
    match config.mode {
        Mode::Forward => forward(config, &system, &pointer, &partition, &mut o)?,
        Mode::Simulate => {
            let record = simulate(&system, &pointer, config)?;
            record.write_csv(&o.path("trials.csv"))?;
            write_counts(&o.path("counts.csv"), &partition, &count(&record, &partition))?;
        }
        Mode::Reconstruct => reconstruct_mode(config, &system, &pointer, &partition, &mut o)?,
        Mode::Sweep => {
            let range = config.sweep_range();
            let widths = logspace(range.min, range.max, range.points);
            let rows = conditioning_sweep(&system, &partition, &widths, config.trials, config.seed)?;
            write_table(
                &o.path("sweep.csv"),
                &header(&["delta_f", "abs_det", "sigma_min", "recon_error", "arrival_prob"]),
                rows.iter().map(|r| {
                    vec![
                        num(r.delta_f),
                        num(r.abs_det),
                        num(r.sigma_min),
                        num(r.recon_error),
                        num(r.arrival_prob),
                    ]
                }),
            )?;
        }
        Mode::Tomography => {
            let record = simulate(&system, &pointer, config)?;
            let counts = count(&record, &partition);
            write_counts(&o.path("counts.csv"), &partition, &counts)?;
            let rec = reconstruct(&solve_counts(&counts, &partition, &pointer)?, &pointer, config.reference)?;
            write_json(&o.path("reconstruction.json"), &rec)?;
            write_json(&o.path("tomography.json"), &tomography(&rec, &system)?)?;
        }
    }
    Ok(o.files)
}

fn simulate(system: &TwoStepSystem, pointer: &PointerConfig, config: &ExperimentConfig) -> Result<TrialRecord> {
    if config.trials == 0 {
        return Err(Error::config(0, "trials", "this mode needs at least one trial"));
    }
    let rho = reading_density(&system.path_amplitudes(), pointer)?;
    Ok(sample(&rho, config.trials, config.seed))
}

fn write_counts(path: &Path, partition: &IntervalPartition, counts: &CountVector) -> Result<()> {
    let total = counts.total() as f64;
    write_table(
        path,
        &header(&["cell", "lo", "hi", "count", "frequency"]),
        partition.cells().iter().zip(&counts.counts).enumerate().map(|(i, ((lo, hi), c))| {
            vec![
                (i + 1).to_string(),
                num(lo),
                num(hi),
                c.to_string(),
                num(*c as f64 / total),
            ]
        }),
    )
}

fn forward(
    config: &ExperimentConfig,
    system: &TwoStepSystem,
    pointer: &PointerConfig,
    partition: &IntervalPartition,
    o: &mut Outputs,
) -> Result<()> {
    let amps = system.path_amplitudes();
    let tilde = renormalized(&amps, pointer)?;
    let eig = pointer.eigenvalues();
    write_table(
        &o.path("amplitudes.csv"),
        &header(&["j", "eigenvalue", "re", "im", "modulus", "renorm_re", "renorm_im", "renorm_modulus"]),
        amps.as_slice().iter().zip(tilde.as_slice()).enumerate().map(|(j, (a, t))| {
            vec![
                (j + 1).to_string(),
                num(eig[j]),
                num(a.re),
                num(a.im),
                num(a.norm()),
                num(t.re),
                num(t.im),
                num(t.norm()),
            ]
        }),
    )?;
    let rho = reading_density(&amps, pointer)?;
    let uncond = unconditional_density(&system.one_step_amplitudes(), pointer)?;
    write_table(
        &o.path("density.csv"),
        &header(&["f", "density", "unconditional"]),
        rho.axis
            .iter()
            .zip(&rho.values)
            .zip(&uncond.values)
            .map(|((f, p), u)| vec![num(f), num(p), num(u)]),
    )?;
    let t = truth(system, pointer, partition, config.reference)?;
    write_table(
        &o.path("cells.csv"),
        &header(&["cell", "lo", "hi", "probability"]),
        partition
            .cells()
            .iter()
            .zip(&t.cell_probabilities)
            .enumerate()
            .map(|(i, ((lo, hi), p))| vec![(i + 1).to_string(), num(lo), num(hi), num(p)]),
    )?;
    write_json(&o.path("truth.json"), &t)
}

fn reconstruct_mode(
    config: &ExperimentConfig,
    system: &TwoStepSystem,
    pointer: &PointerConfig,
    partition: &IntervalPartition,
    o: &mut Outputs,
) -> Result<()> {
    let record = simulate(system, pointer, config)?;
    let counts = count(&record, partition);
    write_counts(&o.path("counts.csv"), partition, &counts)?;
    let trace = convergence_trace(&record.readings, partition, pointer, config.reference, config.trace_every);
    write_table(
        &o.path("trace.csv"),
        &trace_header(config.dimension, config.reference),
        trace.iter().map(|r| trace_record(r, config.reference)),
    )?;
    let fit = solve_counts(&counts, partition, pointer)?;
    let rec = reconstruct(&fit, pointer, config.reference)?;
    write_json(&o.path("reconstruction.json"), &rec)?;
    write_json(&o.path("truth.json"), &truth(system, pointer, partition, config.reference)?)?;
    if !config.predict_delta_f.is_empty() {
        let eig = config
            .predict_eigenvalues
            .clone()
            .unwrap_or_else(|| config.observable_eigenvalues.clone());
        let amps = system.path_amplitudes();
        let mut rows = Vec::new();
        for &w in &config.predict_delta_f {
            let band = predict_with_band(&fit, &eig, w)?;
            let exact = reading_density(&amps, &PointerConfig::new(w, eig.clone())?)?;
            for (i, f) in band.density.axis.iter().enumerate() {
                rows.push(vec![
                    num(w),
                    num(f),
                    num(band.density.values[i]),
                    num(band.standard_error[i]),
                    num(exact.values[i]),
                ]);
            }
        }
        write_table(
            &o.path("prediction.csv"),
            &header(&["delta_f", "f", "predicted", "se", "exact"]),
            rows,
        )?;
    }
    Ok(())
}

/// Reconstructed `b(t')` in both conjugation branches against the true one.
pub fn tomography(rec: &ReconstructionResult, system: &TwoStepSystem) -> Result<TomographyOutput> {
    let states = reconstruct_initial_state(rec, &system.detection_at_measurement(), &system.observable)?;
    let truth = system.state_at_measurement();
    let (fidelity_direct, fidelity_conjugate, fidelity) = states.fidelities(&truth)?;
    Ok(TomographyOutput {
        direct: states.direct.to_vec(),
        conjugate: states.conjugate.to_vec(),
        truth: truth.to_vec(),
        fidelity_direct,
        fidelity_conjugate,
        fidelity,
    })
}

/// Machine-readable error report.
pub fn error_json(err: &Error) -> String {
    let mut v = serde_json::json!({
        "error": err.kind(),
        "exit_code": err.exit_code(),
        "message": err.to_string(),
    });
    if let Error::Config { line, field, .. } = err {
        v["line"] = (*line).into();
        v["field"] = field.clone().into();
    }
    serde_json::to_string_pretty(&v).expect("plain JSON value")
}
