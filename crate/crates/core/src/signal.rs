//! Discrete periodic signal space: vectors of `tau` samples over one period
//! `T`, with the l2 inner product and the circulant backward-difference
//! operator used to discretize the time derivative.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One period of a sampled real trajectory.
///
/// Samples live on the uniform grid `t_k = k T / tau`, `k = 0..tau-1`
/// (left endpoint convention, matching the backward-difference stencil).
/// Two signals are composable only when both `tau` and `T` match exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSignal {
    values: DVector<f64>,
    period: f64,
}

impl PeriodicSignal {
    /// Builds a signal from raw samples, validating the space invariants.
    pub fn new(values: Vec<f64>, period: f64) -> Result<Self> {
        Self::from_vector(DVector::from_vec(values), period)
    }

    pub fn from_vector(values: DVector<f64>, period: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidSignal(format!(
                "need at least 2 samples, got {}",
                values.len()
            )));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidSignal(format!("period must be positive, got {period}")));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!(
                "non-finite sample {} at index {k}",
                values[k]
            )));
        }
        Ok(Self { values, period })
    }

    /// All-zero signal on the given grid.
    pub fn zeros(tau: usize, period: f64) -> Result<Self> {
        Self::from_vector(DVector::zeros(tau), period)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // tau >= 2 by construction
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    /// Sample instants `t_k = k T / tau`.
    pub fn times(&self) -> Vec<f64> {
        let h = self.period / self.len() as f64;
        (0..self.len()).map(|k| k as f64 * h).collect()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.len() == other.len() && self.period == other.period
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected_len: self.len(),
                expected_period: self.period,
                actual_len: other.len(),
                actual_period: other.period(),
            })
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Self::from_vector(&self.values + &other.values, self.period)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Self::from_vector(&self.values - &other.values, self.period)
    }

    pub fn scale(&self, factor: f64) -> Result<Self> {
        Self::from_vector(&self.values * factor, self.period)
    }

    /// l2 norm induced by [`inner_product`].
    pub fn norm(&self) -> f64 {
        self.values.norm()
    }

    /// Max-magnitude sample.
    pub fn norm_inf(&self) -> f64 {
        self.values.amax()
    }

    /// Largest sample distance to another signal on the same grid.
    pub fn distance_inf(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        Ok((&self.values - &other.values).amax())
    }

    /// Replaces the sample vector, keeping the grid. Used by solvers that
    /// already guarantee finiteness and length.
    pub(crate) fn with_values(&self, values: DVector<f64>) -> Result<Self> {
        Self::from_vector(values, self.period)
    }
}

/// Sum over the grid of `u(t) * y(t)`.
pub fn inner_product(u: &PeriodicSignal, y: &PeriodicSignal) -> Result<f64> {
    if !u.same_grid(y) {
        return Err(Error::ShapeMismatch {
            expected_len: u.len(),
            expected_period: u.period(),
            actual_len: y.len(),
            actual_period: y.period(),
        });
    }
    Ok(u.values().dot(y.values()))
}

/// A dense square matrix acting on signals of matching length.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLinearMap {
    entries: DMatrix<f64>,
}

impl DenseLinearMap {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidSignal(format!(
                "linear map must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { entries })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn apply(&self, u: &PeriodicSignal) -> Result<PeriodicSignal> {
        if u.len() != self.dim() {
            return Err(Error::ShapeMismatch {
                expected_len: self.dim(),
                expected_period: u.period(),
                actual_len: u.len(),
                actual_period: u.period(),
            });
        }
        u.with_values(&self.entries * u.values())
    }

    /// Smallest eigenvalue of the symmetric part `(A + A^T)/2`.
    pub fn symmetric_part_min_eigenvalue(&self) -> f64 {
        let sym = (&self.entries + self.entries.transpose()) * 0.5;
        sym.symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest singular value (operator 2-norm).
    pub fn max_singular_value(&self) -> f64 {
        self.entries
            .singular_values()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }
}

/// Scaled circulant backward first-difference matrix: `(tau/T) * D_tau`,
/// with ones on the diagonal, -1 on the first subdiagonal and -1 in the
/// top-right corner. Approximates d/dt on the periodic grid.
pub fn diff_operator(tau: usize, period: f64) -> Result<DenseLinearMap> {
    if tau < 2 {
        return Err(Error::InvalidSignal(format!(
            "difference operator needs tau >= 2, got {tau}"
        )));
    }
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidSignal(format!("period must be positive, got {period}")));
    }
    let scale = tau as f64 / period;
    let mut m = DMatrix::zeros(tau, tau);
    for k in 0..tau {
        m[(k, k)] = scale;
        let prev = if k == 0 { tau - 1 } else { k - 1 };
        m[(k, prev)] = -scale;
    }
    DenseLinearMap::new(m)
}

/// Analytic descriptions of drive waveforms.
#[derive(Debug, Clone, PartialEq)]
pub enum WaveformSpec {
    /// `offset + amplitude * sin(2 pi cycles t / T + phase)`, with `cycles`
    /// counted per period.
    Sine {
        amplitude: f64,
        cycles: f64,
        phase: f64,
        offset: f64,
    },
    Constant(f64),
    /// Pre-tabulated samples; the length must equal the requested grid.
    Samples(Vec<f64>),
}

/// Samples a waveform on the grid `t_k = k T / tau`.
pub fn sample_waveform(spec: &WaveformSpec, tau: usize, period: f64) -> Result<PeriodicSignal> {
    if tau < 2 {
        return Err(Error::InvalidSignal(format!("need tau >= 2, got {tau}")));
    }
    let values = match spec {
        WaveformSpec::Sine {
            amplitude,
            cycles,
            phase,
            offset,
        } => (0..tau)
            .map(|k| {
                let t = k as f64 * period / tau as f64;
                offset + amplitude * (2.0 * std::f64::consts::PI * cycles * t / period + phase).sin()
            })
            .collect(),
        WaveformSpec::Constant(c) => vec![*c; tau],
        WaveformSpec::Samples(samples) => {
            if samples.len() != tau {
                return Err(Error::InvalidSignal(format!(
                    "tabulated waveform has {} samples, requested grid has {tau}",
                    samples.len()
                )));
            }
            samples.clone()
        }
    };
    PeriodicSignal::new(values, period)
}

/// Reads a `t,value` CSV (one header row, '.' decimal separator).
pub fn read_signal_csv(path: &Path, period: f64) -> Result<PeriodicSignal> {
    let file = std::fs::File::open(path)?;
    let mut values = Vec::new();
    for (row, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if row == 0 || line.trim().is_empty() {
            continue; // header
        }
        let mut fields = line.split(',');
        let _t = fields.next();
        let value = fields
            .next()
            .ok_or_else(|| Error::InvalidSignal(format!("csv row {row}: missing value column")))?;
        let value: f64 = value.trim().parse().map_err(|e| {
            Error::InvalidSignal(format!("csv row {row}: bad number {value:?}: {e}"))
        })?;
        values.push(value);
    }
    PeriodicSignal::new(values, period)
}

/// Writes a `t,value` CSV with full double precision.
pub fn write_signal_csv(path: &Path, signal: &PeriodicSignal) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "t,value")?;
    for (t, v) in signal.times().iter().zip(signal.values().iter()) {
        writeln!(file, "{t:.16e},{v:.16e}")?;
    }
    Ok(())
}
