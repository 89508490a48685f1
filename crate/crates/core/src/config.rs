//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! dimension = 2
//! preparation = 1+8i, 2+3i
//! detection = 3+4i, 2+7i
//! hamiltonian = 0, -1; -1, 0
//! t_prime = pi/3
//! t_double_prime = 5*pi/6
//! observable_eigenvalues = 1, -1
//! delta_f = 1
//! partition = -0.33, 0.9
//! trials = 100000
//! seed = 7
//! ```
//!
//! Lists are comma separated; matrix rows are separated by `;`. Complex
//! entries are written `a+bi`. Real entries accept `pi` factors such as
//! `2pi/3` or `5*pi/6`. Times are absolute: the system evolves under `H` for
//! `t_prime` before the coupling and for `t_double_prime - t_prime` after it.
//! Instead of a Hamiltonian, explicit `to_measurement` and `to_detection`
//! unitaries may be given.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::paths::TwoStepSystem;
use crate::pointer::{Grid, PointerConfig, GRID_MARGIN, MIN_GRID_POINTS};
use crate::qcore::{hermiticity_defect, unitary_from_hamiltonian, CMatrix, Observable, QuantumState, Unitary, MAX_DIMENSION};
use crate::sampler::IntervalPartition;

pub const DEFAULT_TRACE_EVERY: usize = 100;
pub const DEFAULT_TRIALS: usize = 100_000;
pub const DEFAULT_SWEEP_POINTS: usize = 25;
const HERMITIAN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Forward,
    Simulate,
    Reconstruct,
    Sweep,
    Tomography,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Forward => "forward",
            Mode::Simulate => "simulate",
            Mode::Reconstruct => "reconstruct",
            Mode::Sweep => "sweep",
            Mode::Tomography => "tomography",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "forward" => Ok(Mode::Forward),
            "simulate" => Ok(Mode::Simulate),
            "reconstruct" => Ok(Mode::Reconstruct),
            "sweep" => Ok(Mode::Sweep),
            "tomography" => Ok(Mode::Tomography),
            _ => Err(format!(
                "unknown mode `{s}`; expected forward, simulate, reconstruct, sweep or tomography"
            )),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Evolution before and after the pointer coupling.
#[derive(Debug, Clone, PartialEq)]
pub enum Dynamics {
    Hamiltonian {
        matrix: Vec<Vec<Complex64>>,
        t_prime: f64,
        t_double_prime: f64,
    },
    Unitaries {
        to_measurement: Vec<Vec<Complex64>>,
        to_detection: Vec<Vec<Complex64>>,
    },
}

/// Logarithmic range of pointer widths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub dimension: usize,
    /// Unnormalized components of `|b>`.
    pub preparation: Vec<Complex64>,
    /// Unnormalized components of `|d>`.
    pub detection: Vec<Complex64>,
    pub dynamics: Dynamics,
    pub observable_eigenvalues: Vec<f64>,
    /// Eigenvectors as columns; the reference basis when absent.
    pub observable_basis: Option<Vec<Vec<Complex64>>>,
    pub delta_f: f64,
    pub grid_points: Option<usize>,
    /// Interior cell boundaries; `4 N^2` equal cells when absent.
    pub partition: Option<Vec<f64>>,
    pub trials: usize,
    pub seed: u64,
    pub trace_every: usize,
    /// Index whose phase is fixed to zero.
    pub reference: usize,
    pub sweep: Option<SweepRange>,
    /// Widths at which densities are predicted from the reconstruction.
    pub predict_delta_f: Vec<f64>,
    /// Eigenvalues of the commuting observable used for predictions.
    pub predict_eigenvalues: Option<Vec<f64>>,
}

const KEYS: &[&str] = &[
    "mode",
    "dimension",
    "preparation",
    "detection",
    "hamiltonian",
    "t_prime",
    "t_double_prime",
    "to_measurement",
    "to_detection",
    "observable_eigenvalues",
    "observable_basis",
    "delta_f",
    "grid_points",
    "partition",
    "trials",
    "seed",
    "trace_every",
    "reference",
    "sweep_min",
    "sweep_max",
    "sweep_points",
    "predict_delta_f",
    "predict_eigenvalues",
];

struct Entries<'a> {
    map: BTreeMap<&'a str, (usize, &'a str)>,
    last_line: usize,
}

impl<'a> Entries<'a> {
    fn read(text: &'a str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut last_line = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            last_line = line;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::config(line, content, "expected `key = value`"))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::config(line, key, "unknown key"));
            }
            if let Some((first, _)) = map.insert(key, (line, value.trim())) {
                return Err(Error::config(line, key, format!("duplicate key, first set on line {first}")));
            }
        }
        Ok(Self { map, last_line })
    }

    fn get(&self, key: &str) -> Option<(usize, &'a str)> {
        self.map.get(key).copied()
    }

    fn required(&self, key: &str) -> Result<(usize, &'a str)> {
        self.get(key)
            .ok_or_else(|| Error::config(self.last_line, key, "missing required key"))
    }

    fn parse<T>(&self, key: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<(usize, T)>> {
        match self.get(key) {
            None => Ok(None),
            Some((line, v)) => f(v).map(|x| Some((line, x))).map_err(|m| Error::config(line, key, m)),
        }
    }

    fn parse_required<T>(&self, key: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> Result<(usize, T)> {
        self.required(key)?;
        Ok(self.parse(key, f)?.expect("checked above"))
    }
}

/// Real number with optional `pi` factors, `*` and `/`.
pub fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim();
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, t.strip_prefix('+').unwrap_or(t)),
    };
    if body.is_empty() {
        return Err(format!("expected a number, got `{s}`"));
    }
    let mut value = 1.0;
    let mut op = '*';
    let mut start = 0;
    let bytes = body.as_bytes();
    for i in 0..=bytes.len() {
        if i < bytes.len() && bytes[i] != b'*' && bytes[i] != b'/' {
            continue;
        }
        let factor = parse_factor(body[start..i].trim()).ok_or_else(|| format!("expected a number, got `{s}`"))?;
        value = if op == '*' { value * factor } else { value / factor };
        if i < bytes.len() {
            op = bytes[i] as char;
        }
        start = i + 1;
    }
    if value.is_finite() {
        Ok(sign * value)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_factor(s: &str) -> Option<f64> {
    if s == "pi" {
        return Some(PI);
    }
    if let Some(num) = s.strip_suffix("pi") {
        return num.trim().parse::<f64>().ok().map(|x| x * PI);
    }
    s.parse::<f64>().ok()
}

/// Complex number written `a`, `bi`, `a+bi` or `a-bi`.
pub fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || format!("expected a complex number `a+bi`, got `{s}`");
    let body = match t.strip_suffix('i') {
        Some(body) if !t.ends_with("pi") => body,
        _ => return parse_real(&t).map(|re| Complex64::new(re, 0.0)).map_err(|_| err()),
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E' | b'*' | b'/'));
    let (re, im) = match split {
        Some(i) => (parse_real(&body[..i]).map_err(|_| err())?, &body[i..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => parse_real(other).map_err(|_| err())?,
    };
    Ok(Complex64::new(re, im))
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| f(x.trim())).collect()
}

fn parse_matrix(s: &str) -> std::result::Result<Vec<Vec<Complex64>>, String> {
    let rows: Vec<Vec<Complex64>> = s
        .split(';')
        .map(|row| parse_list(row, parse_complex))
        .collect::<std::result::Result<_, _>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(format!("matrix must be square with {n} entries per row"));
    }
    Ok(rows)
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    s.parse().map_err(|_| format!("expected a non-negative integer, got `{s}`"))
}

fn parse_u64(s: &str) -> std::result::Result<u64, String> {
    s.parse().map_err(|_| format!("expected an unsigned 64-bit integer, got `{s}`"))
}

pub fn format_complex(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{:?}-{:?}i", z.re, -z.im)
    } else {
        format!("{:?}+{:?}i", z.re, z.im)
    }
}

fn num(x: &f64) -> String {
    format!("{x:?}")
}

fn format_list<T>(values: &[T], f: impl Fn(&T) -> String) -> String {
    values.iter().map(f).collect::<Vec<_>>().join(", ")
}

fn format_matrix(rows: &[Vec<Complex64>]) -> String {
    rows.iter()
        .map(|r| format_list(r, |z| format_complex(*z)))
        .collect::<Vec<_>>()
        .join("; ")
}

pub(crate) fn to_cmatrix(rows: &[Vec<Complex64>]) -> CMatrix {
    let n = rows.len();
    CMatrix::from_fn(n, n, |i, j| rows[i][j])
}

fn check_len(line: usize, key: &str, found: usize, n: usize) -> Result<()> {
    if found == n {
        Ok(())
    } else {
        Err(Error::config(line, key, format!("expected {n} entries, found {found}")))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let e = Entries::read(text)?;
        let mode = e.parse("mode", |s| s.parse::<Mode>())?.map_or(Mode::Forward, |(_, m)| m);
        let (dim_line, dimension) = e.parse_required("dimension", parse_usize)?;
        if !(2..=MAX_DIMENSION).contains(&dimension) {
            return Err(Error::config(dim_line, "dimension", format!("must lie in 2..={MAX_DIMENSION}")));
        }
        let n = dimension;

        let mut states = Vec::new();
        for key in ["preparation", "detection"] {
            let (line, v) = e.parse_required(key, |s| parse_list(s, parse_complex))?;
            check_len(line, key, v.len(), n)?;
            QuantumState::new(v.clone()).map_err(|err| Error::config(line, key, err.to_string()))?;
            states.push(v);
        }
        let detection = states.pop().expect("two states");
        let preparation = states.pop().expect("two states");

        let dynamics = if let Some((line, h)) = e.parse("hamiltonian", parse_matrix)? {
            for key in ["to_measurement", "to_detection"] {
                if let Some((l, _)) = e.get(key) {
                    return Err(Error::config(l, key, "give either a hamiltonian or explicit unitaries"));
                }
            }
            check_len(line, "hamiltonian", h.len(), n)?;
            let defect = hermiticity_defect(&to_cmatrix(&h));
            if defect > HERMITIAN_TOLERANCE {
                return Err(Error::config(line, "hamiltonian", format!("not Hermitian, max |H - H^dagger| = {defect:.3e}")));
            }
            let (_, t_prime) = e.parse_required("t_prime", parse_real)?;
            let (l2, t_double_prime) = e.parse_required("t_double_prime", parse_real)?;
            if t_double_prime < t_prime {
                return Err(Error::config(
                    l2,
                    "t_double_prime",
                    format!("detection time {t_double_prime} precedes the coupling time t_prime = {t_prime}"),
                ));
            }
            Dynamics::Hamiltonian {
                matrix: h,
                t_prime,
                t_double_prime,
            }
        } else {
            for key in ["t_prime", "t_double_prime"] {
                if let Some((l, _)) = e.get(key) {
                    return Err(Error::config(l, key, "times apply only together with a hamiltonian"));
                }
            }
            let mut us = Vec::new();
            for key in ["to_measurement", "to_detection"] {
                let (line, u) = e.parse_required(key, parse_matrix)?;
                check_len(line, key, u.len(), n)?;
                Unitary::new(to_cmatrix(&u)).map_err(|err| Error::config(line, key, err.to_string()))?;
                us.push(u);
            }
            let to_detection = us.pop().expect("two unitaries");
            let to_measurement = us.pop().expect("two unitaries");
            Dynamics::Unitaries {
                to_measurement,
                to_detection,
            }
        };

        let (eig_line, observable_eigenvalues) = e.parse_required("observable_eigenvalues", |s| parse_list(s, parse_real))?;
        check_len(eig_line, "observable_eigenvalues", observable_eigenvalues.len(), n)?;
        let observable_basis = match e.parse("observable_basis", parse_matrix)? {
            Some((line, b)) => {
                check_len(line, "observable_basis", b.len(), n)?;
                Observable::new(to_cmatrix(&b), observable_eigenvalues.clone())
                    .map_err(|err| Error::config(line, "observable_basis", err.to_string()))?;
                Some(b)
            }
            None => None,
        };

        let (df_line, delta_f) = e.parse_required("delta_f", parse_real)?;
        if !(delta_f > 0.0) {
            return Err(Error::config(df_line, "delta_f", "must be positive"));
        }
        let grid_points = match e.parse("grid_points", parse_usize)? {
            Some((line, p)) if p < MIN_GRID_POINTS => {
                return Err(Error::config(line, "grid_points", format!("need at least {MIN_GRID_POINTS}")));
            }
            other => other.map(|(_, p)| p),
        };
        let partition = match e.parse("partition", |s| parse_list(s, parse_real))? {
            Some((line, b)) => {
                IntervalPartition::new(b.clone()).map_err(|err| Error::config(line, "partition", err.to_string()))?;
                Some(b)
            }
            None => None,
        };
        let trials = e.parse("trials", parse_usize)?.map_or(DEFAULT_TRIALS, |(_, k)| k);
        let seed = e.parse("seed", parse_u64)?.map_or(0, |(_, s)| s);
        let trace_every = match e.parse("trace_every", parse_usize)? {
            Some((line, 0)) => return Err(Error::config(line, "trace_every", "must be at least 1")),
            other => other.map_or(DEFAULT_TRACE_EVERY, |(_, t)| t),
        };
        let reference = match e.parse("reference", parse_usize)? {
            Some((line, r)) if r >= n => {
                return Err(Error::config(line, "reference", format!("must be below the dimension {n}")));
            }
            other => other.map_or(0, |(_, r)| r),
        };

        let lo = e.parse("sweep_min", parse_real)?;
        let hi = e.parse("sweep_max", parse_real)?;
        let pts = e.parse("sweep_points", parse_usize)?;
        let sweep = match (lo, hi) {
            (Some((l1, min)), Some((l2, max))) => {
                if !(min > 0.0) {
                    return Err(Error::config(l1, "sweep_min", "must be positive"));
                }
                if !(max >= min) {
                    return Err(Error::config(l2, "sweep_max", "must not be below sweep_min"));
                }
                Some(SweepRange {
                    min,
                    max,
                    points: pts.map_or(DEFAULT_SWEEP_POINTS, |(_, p)| p),
                })
            }
            (None, None) => {
                if let Some((l, _)) = pts {
                    return Err(Error::config(l, "sweep_points", "needs sweep_min and sweep_max"));
                }
                None
            }
            (Some((l, _)), None) => return Err(Error::config(l, "sweep_max", "missing; give both ends of the sweep")),
            (None, Some((l, _))) => return Err(Error::config(l, "sweep_min", "missing; give both ends of the sweep")),
        };

        let predict_delta_f = match e.parse("predict_delta_f", |s| parse_list(s, parse_real))? {
            Some((line, v)) => {
                if v.iter().any(|w| !(*w > 0.0)) {
                    return Err(Error::config(line, "predict_delta_f", "widths must be positive"));
                }
                v
            }
            None => Vec::new(),
        };
        let predict_eigenvalues = match e.parse("predict_eigenvalues", |s| parse_list(s, parse_real))? {
            Some((line, v)) => {
                check_len(line, "predict_eigenvalues", v.len(), n)?;
                Some(v)
            }
            None => None,
        };

        Ok(Self {
            mode,
            dimension,
            preparation,
            detection,
            dynamics,
            observable_eigenvalues,
            observable_basis,
            delta_f,
            grid_points,
            partition,
            trials,
            seed,
            trace_every,
            reference,
            sweep,
            predict_delta_f,
            predict_eigenvalues,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Canonical text form; parsing it yields an identical config.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            writeln!(s, "{k} = {v}").expect("writing to a String");
        };
        kv("mode", self.mode.to_string());
        kv("dimension", self.dimension.to_string());
        kv("preparation", format_list(&self.preparation, |z| format_complex(*z)));
        kv("detection", format_list(&self.detection, |z| format_complex(*z)));
        match &self.dynamics {
            Dynamics::Hamiltonian {
                matrix,
                t_prime,
                t_double_prime,
            } => {
                kv("hamiltonian", format_matrix(matrix));
                kv("t_prime", num(t_prime));
                kv("t_double_prime", num(t_double_prime));
            }
            Dynamics::Unitaries {
                to_measurement,
                to_detection,
            } => {
                kv("to_measurement", format_matrix(to_measurement));
                kv("to_detection", format_matrix(to_detection));
            }
        }
        kv("observable_eigenvalues", format_list(&self.observable_eigenvalues, num));
        if let Some(b) = &self.observable_basis {
            kv("observable_basis", format_matrix(b));
        }
        kv("delta_f", num(&self.delta_f));
        if let Some(p) = self.grid_points {
            kv("grid_points", p.to_string());
        }
        if let Some(b) = &self.partition {
            kv("partition", format_list(b, num));
        }
        kv("trials", self.trials.to_string());
        kv("seed", self.seed.to_string());
        kv("trace_every", self.trace_every.to_string());
        kv("reference", self.reference.to_string());
        if let Some(r) = &self.sweep {
            kv("sweep_min", num(&r.min));
            kv("sweep_max", num(&r.max));
            kv("sweep_points", r.points.to_string());
        }
        if !self.predict_delta_f.is_empty() {
            kv("predict_delta_f", format_list(&self.predict_delta_f, num));
        }
        if let Some(v) = &self.predict_eigenvalues {
            kv("predict_eigenvalues", format_list(v, num));
        }
        s
    }

    pub fn observable(&self) -> Result<Observable> {
        match &self.observable_basis {
            Some(b) => Observable::new(to_cmatrix(b), self.observable_eigenvalues.clone()),
            None => Observable::diagonal(self.observable_eigenvalues.clone()),
        }
    }

    pub fn system(&self) -> Result<TwoStepSystem> {
        let (u1, u2) = match &self.dynamics {
            Dynamics::Hamiltonian {
                matrix,
                t_prime,
                t_double_prime,
            } => {
                let h = to_cmatrix(matrix);
                (
                    unitary_from_hamiltonian(&h, *t_prime)?,
                    unitary_from_hamiltonian(&h, t_double_prime - t_prime)?,
                )
            }
            Dynamics::Unitaries {
                to_measurement,
                to_detection,
            } => (Unitary::new(to_cmatrix(to_measurement))?, Unitary::new(to_cmatrix(to_detection))?),
        };
        TwoStepSystem::new(
            QuantumState::new(self.preparation.clone())?,
            u1,
            self.observable()?,
            u2,
            QuantumState::new(self.detection.clone())?,
        )
    }

    pub fn pointer(&self) -> Result<PointerConfig> {
        self.pointer_at(self.delta_f, &self.observable_eigenvalues)
    }

    pub(crate) fn pointer_at(&self, delta_f: f64, eigenvalues: &[f64]) -> Result<PointerConfig> {
        let eigenvalues = eigenvalues.to_vec();
        match self.grid_points {
            None => PointerConfig::new(delta_f, eigenvalues),
            Some(points) => {
                let lo = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let grid = Grid {
                    min: lo - GRID_MARGIN * delta_f,
                    max: hi + GRID_MARGIN * delta_f,
                    points,
                };
                PointerConfig::with_grid(delta_f, eigenvalues, grid)
            }
        }
    }

    /// The configured partition, or `4 N^2` equal cells over
    /// `[min C - Δf, max C + Δf]`.
    pub fn partition(&self) -> Result<IntervalPartition> {
        match &self.partition {
            Some(b) => IntervalPartition::new(b.clone()),
            None => {
                let c = &self.observable_eigenvalues;
                let lo = c.iter().copied().fold(f64::INFINITY, f64::min) - self.delta_f;
                let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max) + self.delta_f;
                IntervalPartition::uniform(lo, hi, 4 * self.dimension * self.dimension)
            }
        }
    }

    /// The configured sweep, or 25 widths over `[1e-3, 1e3]` times the
    /// smallest eigenvalue gap.
    pub fn sweep_range(&self) -> SweepRange {
        self.sweep.unwrap_or_else(|| {
            let mut c = self.observable_eigenvalues.clone();
            c.sort_by(f64::total_cmp);
            let gap = c
                .windows(2)
                .map(|w| w[1] - w[0])
                .filter(|g| *g > 0.0)
                .fold(f64::INFINITY, f64::min);
            let gap = if gap.is_finite() { gap } else { 1.0 };
            SweepRange {
                min: 1e-3 * gap,
                max: 1e3 * gap,
                points: DEFAULT_SWEEP_POINTS,
            }
        })
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const QUBIT: &str = "\
dimension = 2
preparation = 1+8i, 2+3i
detection = 3+4i, 2+7i
hamiltonian = 0, -1; -1, 0
t_prime = pi/3
t_double_prime = 5*pi/6
observable_eigenvalues = 1, -1
delta_f = 1
partition = -0.33, 0.9
";

    fn field_of(err: Error) -> (usize, String) {
        match err {
            Error::Config { line, field, .. } => (line, field),
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn reals_with_pi() {
        assert_eq!(parse_real("pi/3").unwrap(), PI / 3.0);
        assert_eq!(parse_real("5*pi/6").unwrap(), 5.0 * PI / 6.0);
        assert_eq!(parse_real("2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_real("-1e-3").unwrap(), -1e-3);
        assert!(parse_real("pie").is_err());
        assert!(parse_real("1/0").is_err());
    }

    #[test]
    fn complex_forms() {
        let c = Complex64::new;
        assert_eq!(parse_complex("1+8i").unwrap(), c(1.0, 8.0));
        assert_eq!(parse_complex("2 - 3i").unwrap(), c(2.0, -3.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("-2.5").unwrap(), c(-2.5, 0.0));
        assert_eq!(parse_complex("1e-3+2e+1i").unwrap(), c(1e-3, 20.0));
        assert_eq!(parse_complex("pi").unwrap(), c(PI, 0.0));
        assert!(parse_complex("1+2j").is_err());
    }

    #[test]
    fn qubit_config_parses() {
        let cfg = ExperimentConfig::parse(QUBIT).unwrap();
        assert_eq!(cfg.mode, Mode::Forward);
        assert_eq!(cfg.trace_every, DEFAULT_TRACE_EVERY);
        assert_eq!(cfg.trials, DEFAULT_TRIALS);
        let sys = cfg.system().unwrap();
        let reference = crate::scenarios::fig4_system().path_amplitudes();
        for (a, b) in sys.path_amplitudes().as_slice().iter().zip(reference.as_slice()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn detection_before_coupling_names_the_field() {
        let text = QUBIT.replace("t_double_prime = 5*pi/6", "t_double_prime = pi/6");
        let (line, field) = field_of(ExperimentConfig::parse(&text).unwrap_err());
        assert_eq!(field, "t_double_prime");
        assert_eq!(line, 6);
    }

    #[test]
    fn diagnostics() {
        let cases = [
            ("dimension = 2", "dimension = 1", "dimension"),
            ("1+8i, 2+3i", "1+8i", "preparation"),
            ("0, -1; -1, 0", "0, -1; 1, 0", "hamiltonian"),
            ("delta_f = 1", "delta_f = -1", "delta_f"),
            ("-0.33, 0.9", "0.9, -0.33", "partition"),
            ("observable_eigenvalues = 1, -1", "observable_eigenvalues = 1, x", "observable_eigenvalues"),
        ];
        for (from, to, field) in cases {
            let text = QUBIT.replace(from, to);
            assert_eq!(field_of(ExperimentConfig::parse(&text).unwrap_err()).1, field, "{to}");
        }
        let (_, field) = field_of(ExperimentConfig::parse(&format!("{QUBIT}colour = red\n")).unwrap_err());
        assert_eq!(field, "colour");
        let (line, field) = field_of(ExperimentConfig::parse(&format!("{QUBIT}delta_f = 2\n")).unwrap_err());
        assert_eq!((line, field.as_str()), (10, "delta_f"));
        let missing = QUBIT.replace("delta_f = 1\n", "");
        assert_eq!(field_of(ExperimentConfig::parse(&missing).unwrap_err()).1, "delta_f");
    }

    #[test]
    fn explicit_unitaries() {
        let text = "\
mode = simulate
dimension = 2
preparation = 1, 0
detection = 0.6, 0.8i
to_measurement = 0, 1; 1, 0
to_detection = 1, 0; 0, 1
observable_eigenvalues = 0.5, -0.5
delta_f = 0.25
seed = 42
";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.mode, Mode::Simulate);
        let amps = cfg.system().unwrap().path_amplitudes();
        assert!(amps.as_slice()[0].norm() < 1e-15);
        assert!((amps.as_slice()[1] - Complex64::new(0.0, -0.8)).norm() < 1e-15);
        let bad = text.replace("to_detection = 1, 0; 0, 1", "to_detection = 1, 1; 0, 1");
        assert_eq!(field_of(ExperimentConfig::parse(&bad).unwrap_err()).1, "to_detection");
        let mixed = format!("{text}t_prime = 1\n");
        assert_eq!(field_of(ExperimentConfig::parse(&mixed).unwrap_err()).1, "t_prime");
    }

    #[test]
    fn serialize_round_trip() {
        let mut cfg = ExperimentConfig::parse(QUBIT).unwrap();
        cfg.sweep = Some(SweepRange {
            min: 2e-3,
            max: 2e3,
            points: 0,
        });
        cfg.predict_delta_f = vec![0.5, 2.0];
        cfg.grid_points = Some(8192);
        cfg.preparation[1] = Complex64::new(-0.0, -1e-300);
        let again = ExperimentConfig::parse(&cfg.serialize()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.serialize(), again.serialize());
    }

    proptest! {
        #[test]
        fn complex_text_round_trips(re in proptest::num::f64::NORMAL | proptest::num::f64::ZERO,
                                    im in proptest::num::f64::NORMAL | proptest::num::f64::ZERO) {
            let z = Complex64::new(re, im);
            let back = parse_complex(&format_complex(z)).unwrap();
            prop_assert_eq!(back.re.to_bits(), re.to_bits());
            prop_assert_eq!(back.im.to_bits(), im.to_bits());
        }
    }
}
