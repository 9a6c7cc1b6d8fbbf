//! Measurement layer: probability vectors to standardized feature rows.

use crate::error::{QercError, Result};
use crate::rng;
use crate::state::{sample_multinomial, ProbVector, StateVector};
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StandardizeMode {
    /// Divide by the population standard deviation.
    #[default]
    StdDev,
    /// Divide by the plain sum of squared deviations.
    AsPrinted,
}

impl fmt::Display for StandardizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StandardizeMode::StdDev => "std_dev",
            StandardizeMode::AsPrinted => "as_printed",
        })
    }
}

impl FromStr for StandardizeMode {
    type Err = QercError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "std_dev" | "stddev" => Ok(StandardizeMode::StdDev),
            "as_printed" => Ok(StandardizeMode::AsPrinted),
            other => Err(QercError::Config(format!(
                "unknown standardization mode '{other}'"
            ))),
        }
    }
}

/// Row-major `rows x cols` real matrix of feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(QercError::dims(rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<S: AsRef<[f64]>>(rows: &[S]) -> Result<Self> {
        let cols = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or(QercError::Empty("feature rows"))?;
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(QercError::dims(cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }
}

/// `u_l = (p_l - 2^-N) / S`.
pub fn standardize(p: &ProbVector, mode: StandardizeMode) -> Result<Vec<f64>> {
    let mut u = p.as_slice().to_vec();
    standardize_in_place(&mut u, mode)?;
    Ok(u)
}

/// In-place form of [`standardize`] for an already validated distribution.
pub fn standardize_in_place(p: &mut [f64], mode: StandardizeMode) -> Result<()> {
    if p.is_empty() {
        return Err(QercError::Empty("distribution"));
    }
    let dim = p.len() as f64;
    let mean = 1.0 / dim;
    let sum_sq: f64 = p.iter().map(|x| (x - mean) * (x - mean)).sum();
    let scale = match mode {
        StandardizeMode::StdDev => (sum_sq / dim).sqrt(),
        StandardizeMode::AsPrinted => sum_sq,
    };
    if !(scale > 0.0) {
        return Err(QercError::DegenerateFeatures);
    }
    if !scale.is_finite() {
        return Err(QercError::NonFinite("standardization scale"));
    }
    let inv = 1.0 / scale;
    p.iter_mut().for_each(|x| *x = (*x - mean) * inv);
    Ok(())
}

/// Replaces a row of probabilities by the empirical frequencies of `n_shots`
/// draws from it.
pub fn resample_in_place(p: &mut [f64], n_shots: u64, rng: &mut rng::Rng) -> Result<()> {
    let counts = sample_multinomial(p, n_shots, rng)?;
    let inv = 1.0 / n_shots as f64;
    for (x, c) in p.iter_mut().zip(counts) {
        *x = c as f64 * inv;
    }
    Ok(())
}

/// Turns one row of probabilities into a feature row. With `shots`, row
/// `index` is resampled from `rng::substream(seed, index)`.
pub fn feature_row_in_place(
    p: &mut [f64],
    mode: StandardizeMode,
    shots: Option<u64>,
    seed: u64,
    index: usize,
) -> Result<()> {
    if let Some(n) = shots {
        resample_in_place(p, n, &mut rng::substream(seed, index as u64))?;
    }
    standardize_in_place(p, mode).map_err(|e| match e {
        QercError::DegenerateFeatures => QercError::Domain(format!(
            "row {index}: distribution is uniform, standardization undefined"
        )),
        other => other,
    })
}

/// Feature matrix for a set of states, in input order.
pub fn features_for_dataset(
    states: &[StateVector],
    mode: StandardizeMode,
    shots: Option<u64>,
    seed: u64,
) -> Result<FeatureMatrix> {
    let cols = states
        .first()
        .map(|s| s.dim())
        .ok_or(QercError::Empty("states"))?;
    if let Some(s) = states.iter().find(|s| s.dim() != cols) {
        return Err(QercError::dims(cols, s.dim()));
    }
    let mut data = vec![0.0; states.len() * cols];
    data.par_chunks_mut(cols)
        .zip(states.par_iter())
        .enumerate()
        .try_for_each(|(i, (row, s))| {
            for (dst, a) in row.iter_mut().zip(s.amplitudes()) {
                *dst = a.norm_sqr();
            }
            feature_row_in_place(row, mode, shots, seed, i)
        })?;
    FeatureMatrix::new(states.len(), cols, data)
}

/// Same as [`features_for_dataset`] starting from distributions.
pub fn features_for_distributions(
    dists: &[ProbVector],
    mode: StandardizeMode,
    shots: Option<u64>,
    seed: u64,
) -> Result<FeatureMatrix> {
    let cols = dists
        .first()
        .map(|p| p.len())
        .ok_or(QercError::Empty("distributions"))?;
    if let Some(p) = dists.iter().find(|p| p.len() != cols) {
        return Err(QercError::dims(cols, p.len()));
    }
    let mut data = vec![0.0; dists.len() * cols];
    data.par_chunks_mut(cols)
        .zip(dists.par_iter())
        .enumerate()
        .try_for_each(|(i, (row, p))| {
            row.copy_from_slice(p.as_slice());
            feature_row_in_place(row, mode, shots, seed, i)
        })?;
    FeatureMatrix::new(dists.len(), cols, data)
}
