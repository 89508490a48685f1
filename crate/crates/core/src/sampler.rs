//! Synthetic measurement records: pointer readings drawn from a tabulated
//! density, and counts of readings in the cells of a partition.
//!
//! Draws come from ChaCha20 seeded with the record seed. Reading `i` consumes
//! exactly one `u64` (two 32-bit words), so a worker can jump to reading `i`
//! with `set_word_pos(2 * i)` and parallel generation reproduces the
//! sequential stream bit for bit. Independent substreams (for example one per
//! pointer width in a sweep) use `set_stream`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointer::ReadingDensity;

const SHARD: usize = 1 << 14;

/// Readings of `K` independent trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub readings: Vec<f64>,
}

impl TrialRecord {
    pub fn k(&self) -> usize {
        self.readings.len()
    }

    /// Writes `# seed=<seed>,K=<K>`, a `reading` header, then one reading per line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "# seed={},K={}", self.seed, self.k())?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["reading"])?;
        for r in &self.readings {
            w.write_record([r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = BufReader::new(File::open(path)?);
        let mut first = String::new();
        reader.read_line(&mut first)?;
        let (seed, k) = parse_record_header(first.trim())
            .ok_or_else(|| Error::config(1, "header", "expected `# seed=<u64>,K=<count>`"))?;
        let mut rdr = csv::Reader::from_reader(reader);
        let mut readings = Vec::with_capacity(k);
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let value = row
                .get(0)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::config(i + 3, "reading", "not a number"))?;
            readings.push(value);
        }
        if readings.len() != k {
            return Err(Error::config(1, "K", format!("header says {k}, found {}", readings.len())));
        }
        Ok(Self { seed, readings })
    }
}

fn parse_record_header(line: &str) -> Option<(u64, usize)> {
    let body = line.strip_prefix('#')?.trim();
    let mut seed = None;
    let mut k = None;
    for part in body.split(',') {
        let (key, value) = part.split_once('=')?;
        match key.trim() {
            "seed" => seed = value.trim().parse().ok(),
            "K" => k = value.trim().parse().ok(),
            _ => return None,
        }
    }
    Some((seed?, k?))
}

/// Uniform draw in `[0, 1)` with 53 random bits.
fn uniform(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse of the piecewise-linear CDF through the cumulative table.
pub fn inverse_cdf(density: &ReadingDensity, u: f64) -> f64 {
    let cum = &density.cumulative;
    let k = cum.partition_point(|&c| c <= u).clamp(1, cum.len() - 1);
    let (c0, c1) = (cum[k - 1], cum[k]);
    let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
    density.axis[k - 1] + t * (density.axis[k] - density.axis[k - 1])
}

/// `K` i.i.d. readings from `density`.
pub fn sample(density: &ReadingDensity, k: usize, seed: u64) -> TrialRecord {
    sample_stream(density, k, seed, 0)
}

/// `K` readings from substream `stream` of the generator seeded with `seed`.
pub fn sample_stream(density: &ReadingDensity, k: usize, seed: u64, stream: u64) -> TrialRecord {
    let mut readings = vec![0.0; k];
    readings
        .par_chunks_mut(SHARD)
        .enumerate()
        .for_each(|(shard, chunk)| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            rng.set_word_pos(2 * (shard * SHARD) as u128);
            for r in chunk.iter_mut() {
                *r = inverse_cdf(density, uniform(&mut rng));
            }
        });
    TrialRecord { seed, readings }
}

/// Single-threaded reference generator; identical output to [`sample_stream`].
pub fn sample_sequential(density: &ReadingDensity, k: usize, seed: u64, stream: u64) -> TrialRecord {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let readings = (0..k).map(|_| inverse_cdf(density, uniform(&mut rng))).collect();
    TrialRecord { seed, readings }
}

/// Boundaries splitting the real line into cells `(-inf, b_1)`,
/// `[b_1, b_2)`, ..., `[b_last, inf)`. Cells are closed on the left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalPartition {
    boundaries: Vec<f64>,
}

impl IntervalPartition {
    pub fn new(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.is_empty() {
            return Err(Error::InvalidPartition("need at least one boundary".into()));
        }
        if boundaries.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidPartition("boundaries must be finite".into()));
        }
        if let Some(w) = boundaries.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPartition(format!(
                "boundaries must increase strictly, got {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self { boundaries })
    }

    /// `cells` cells of equal width spanning `[lo, hi]`, plus the two tails.
    pub fn uniform(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(Error::InvalidPartition("need at least two cells".into()));
        }
        Self::new(crate::numerics::linspace(lo, hi, cells - 1))
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn len(&self) -> usize {
        self.boundaries.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cells as `(lo, hi)` pairs with infinite outer ends.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let mut edges = Vec::with_capacity(self.boundaries.len() + 2);
        edges.push(f64::NEG_INFINITY);
        edges.extend_from_slice(&self.boundaries);
        edges.push(f64::INFINITY);
        edges.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn cell_of(&self, f: f64) -> usize {
        self.boundaries.partition_point(|&b| b <= f)
    }
}

/// Number of readings `K(ν)` in each cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountVector {
    pub counts: Vec<u64>,
}

impl CountVector {
    pub fn zeros(cells: usize) -> Self {
        Self {
            counts: vec![0; cells],
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn add(&mut self, partition: &IntervalPartition, reading: f64) {
        self.counts[partition.cell_of(reading)] += 1;
    }

    pub fn merge(&self, other: &CountVector) -> Result<CountVector> {
        if self.counts.len() != other.counts.len() {
            return Err(Error::DimensionMismatch {
                expected: self.counts.len(),
                found: other.counts.len(),
            });
        }
        Ok(CountVector {
            counts: self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect(),
        })
    }
}

pub fn count(record: &TrialRecord, partition: &IntervalPartition) -> CountVector {
    count_readings(&record.readings, partition)
}

pub fn count_readings(readings: &[f64], partition: &IntervalPartition) -> CountVector {
    let mut counts = CountVector::zeros(partition.len());
    for &r in readings {
        counts.add(partition, r);
    }
    counts
}

/// `K(ν) / K`.
pub fn frequencies(counts: &CountVector) -> Result<Vec<f64>> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::NoTrials);
    }
    Ok(counts.counts.iter().map(|&c| c as f64 / total as f64).collect())
}
