//! Distribution diagnostics: participation ratios, divergences, kernels,
//! random Fourier features and sampling-cost estimates.

use crate::error::{QercError, Result};
use crate::linalg::real_gemm;
use crate::mlayer::FeatureMatrix;
use crate::rng;
use crate::state::ProbVector;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

/// `1 / sum_l p_l^2`.
pub fn participation_ratio(p: &ProbVector) -> f64 {
    pr_of(p.as_slice())
}

pub fn pr_of(p: &[f64]) -> f64 {
    1.0 / p.iter().map(|x| x * x).sum::<f64>()
}

pub fn apr(dists: &[ProbVector]) -> Result<f64> {
    Ok(pr_report(dists)?.apr)
}

pub fn iapr(dists: &[ProbVector]) -> Result<f64> {
    Ok(pr_report(dists)?.iapr)
}

pub fn delta_pr(dists: &[ProbVector]) -> Result<f64> {
    Ok(pr_report(dists)?.delta_pr)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrReport {
    pub apr: f64,
    pub iapr: f64,
    pub delta_pr: f64,
    pub per_state: Vec<f64>,
}

pub fn pr_report(dists: &[ProbVector]) -> Result<PrReport> {
    let mut acc = PrAccumulator::default();
    for p in dists {
        acc.add(p.as_slice())?;
    }
    acc.finish()
}

/// Streaming APR/IAPR over distributions added one at a time.
#[derive(Debug, Clone, Default)]
pub struct PrAccumulator {
    per_state: Vec<f64>,
    total: Vec<f64>,
}

impl PrAccumulator {
    pub fn add(&mut self, p: &[f64]) -> Result<()> {
        if self.total.is_empty() {
            self.total = vec![0.0; p.len()];
        } else if p.len() != self.total.len() {
            return Err(QercError::dims(self.total.len(), p.len()));
        }
        self.per_state.push(pr_of(p));
        for (t, x) in self.total.iter_mut().zip(p) {
            *t += x;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.per_state.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_state.is_empty()
    }

    pub fn finish(self) -> Result<PrReport> {
        if self.per_state.is_empty() {
            return Err(QercError::Empty("distribution set"));
        }
        let n = self.per_state.len() as f64;
        let apr = self.per_state.iter().sum::<f64>() / n;
        let iapr = n * n / self.total.iter().map(|x| x * x).sum::<f64>();
        Ok(PrReport {
            apr,
            iapr,
            delta_pr: iapr - apr,
            per_state: self.per_state,
        })
    }
}

/// `sum_l p_l ln(p_l / q_l)` in nats; `f64::INFINITY` when some `q_l = 0 < p_l`.
pub fn kld(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    kld_of(p.as_slice(), q.as_slice())
}

pub fn kld_of(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(QercError::dims(p.len(), q.len()));
    }
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            total += a * (a / b).ln();
        }
    }
    Ok(total.max(0.0))
}

/// Add-one smoothing of an empirical distribution built from `n_shots` draws:
/// `(N_x + 1) / (N_s + 2^N)`.
pub fn laplace_smoothed(empirical: &[f64], n_shots: u64) -> Vec<f64> {
    let denom = n_shots as f64 + empirical.len() as f64;
    empirical
        .iter()
        .map(|p| ((p * n_shots as f64).round() + 1.0) / denom)
        .collect()
}

/// `K_ij = <q_i, q_j> / (|q_i| |q_j|)`.
pub fn normalized_kernel(features: &FeatureMatrix) -> Result<DMatrix<f64>> {
    let (n, d) = (features.rows(), features.cols());
    if n == 0 {
        return Err(QercError::Empty("kernel input"));
    }
    let mut unit = features.as_slice().to_vec();
    for (i, row) in unit.chunks_exact_mut(d).enumerate() {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(QercError::Domain(format!("row {i} has zero norm")));
        }
        row.iter_mut().for_each(|x| *x /= norm);
    }
    let mut k = vec![0.0; n * n];
    real_gemm(n, d, n, &unit, (d, 1), &unit, (1, d), 0.0, &mut k);
    Ok(DMatrix::from_fn(n, n, |r, c| match r.cmp(&c) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => k[r * n + c].clamp(-1.0, 1.0),
        std::cmp::Ordering::Greater => k[c * n + r].clamp(-1.0, 1.0),
    }))
}

/// `z(x) = sqrt(2/D) cos(W x + b)`, `W_ij ~ N(0, 1/bandwidth^2)`, `b ~ U[0, 2 pi)`.
pub fn rff_features(
    inputs: &FeatureMatrix,
    feature_count: usize,
    bandwidth: f64,
    seed: u64,
) -> Result<FeatureMatrix> {
    if feature_count == 0 {
        return Err(QercError::InvalidParameter(
            "feature count must be >= 1".into(),
        ));
    }
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(QercError::InvalidParameter(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    let (n, d) = (inputs.rows(), inputs.cols());
    let mut rng = rng::seeded(seed);
    let normal = Normal::new(0.0, 1.0 / bandwidth).expect("positive scale");
    // row-major D x d
    let w: Vec<f64> = (0..feature_count * d)
        .map(|_| normal.sample(&mut rng))
        .collect();
    let b: Vec<f64> = (0..feature_count)
        .map(|_| rng.random_range(0.0..2.0 * PI))
        .collect();
    let mut z = Vec::with_capacity(n * feature_count);
    for _ in 0..n {
        z.extend_from_slice(&b);
    }
    real_gemm(
        n,
        d,
        feature_count,
        inputs.as_slice(),
        (d, 1),
        &w,
        (1, d),
        1.0,
        &mut z,
    );
    let scale = (2.0 / feature_count as f64).sqrt();
    z.iter_mut().for_each(|v| *v = scale * v.cos());
    FeatureMatrix::new(n, feature_count, z)
}

/// Median Euclidean distance over all pairs of up to `max_points` rows taken
/// at an even stride.
pub fn median_pairwise_distance(inputs: &FeatureMatrix, max_points: usize) -> Result<f64> {
    let n = inputs.rows();
    if n < 2 {
        return Err(QercError::Empty(
            "need at least two points for a pairwise distance",
        ));
    }
    let m = n.min(max_points.max(2));
    let idx: Vec<usize> = (0..m).map(|i| i * n / m).collect();
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let d2: f64 = inputs
                .row(i)
                .iter()
                .zip(inputs.row(j))
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            dists.push(d2.sqrt());
        }
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    Ok(if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    })
}

/// Standard error `sqrt(p (1 - p) / N_s)` of an empirical frequency.
pub fn sampling_error(p: f64, n_shots: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QercError::Domain(format!("probability {p} outside [0, 1]")));
    }
    if n_shots == 0 {
        return Err(QercError::InvalidParameter("n_shots must be >= 1".into()));
    }
    Ok((p * (1.0 - p) / n_shots as f64).sqrt())
}

/// Spread of a distribution about uniform, `sum_l (p_l - 2^-N)^2 = sum_l p_l^2 - 2^-N`.
pub fn probability_spread(p: &ProbVector) -> f64 {
    let p = p.as_slice();
    p.iter().map(|x| x * x).sum::<f64>() - 1.0 / p.len() as f64
}

/// Shot count above which sampling noise drops below the feature spread:
/// `D^2 PR^2 / 2^N`.
pub fn min_shots_bound(pr: f64, num_qubits: usize, sensitivity: f64) -> f64 {
    sensitivity * sensitivity * pr * pr / (1u64 << num_qubits) as f64
}

/// Empirical-minus-theoretical accuracy at one `(N, N_s)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotPoint {
    pub num_qubits: usize,
    pub shots: u64,
    pub acc_empirical: f64,
    pub acc_theoretical: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledPoint {
    pub num_qubits: usize,
    pub shots: u64,
    pub deviation: f64,
    /// `sqrt(2^N / N_s)`.
    pub x_dimension: f64,
    /// `sqrt(N^2 / N_s)`.
    pub x_quadratic: f64,
}

pub fn shot_scaling_curve(points: &[ShotPoint]) -> Vec<ScaledPoint> {
    points
        .iter()
        .map(|p| {
            let ns = p.shots as f64;
            let n = p.num_qubits as f64;
            ScaledPoint {
                num_qubits: p.num_qubits,
                shots: p.shots,
                deviation: (p.acc_empirical - p.acc_theoretical).abs(),
                x_dimension: ((1u64 << p.num_qubits) as f64 / ns).sqrt(),
                x_quadratic: (n * n / ns).sqrt(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rescaling {
    Dimension,
    Quadratic,
}

/// Mean absolute gap between the per-`N` deviation curves under a rescaling,
/// comparing each curve against every other one by linear interpolation in
/// `log x` over their overlapping range. Smaller means better collapse.
pub fn collapse_spread(points: &[ScaledPoint], rescaling: Rescaling) -> Option<f64> {
    let mut sizes: Vec<usize> = points.iter().map(|p| p.num_qubits).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let curve = |n: usize| -> Vec<(f64, f64)> {
        let mut c: Vec<(f64, f64)> = points
            .iter()
            .filter(|p| p.num_qubits == n)
            .map(|p| {
                let x = match rescaling {
                    Rescaling::Dimension => p.x_dimension,
                    Rescaling::Quadratic => p.x_quadratic,
                };
                (x.ln(), p.deviation)
            })
            .collect();
        c.sort_by(|a, b| a.0.total_cmp(&b.0));
        c
    };
    let curves: Vec<Vec<(f64, f64)>> = sizes.iter().map(|&n| curve(n)).collect();
    let (mut sum, mut count) = (0.0, 0usize);
    for (a, ca) in curves.iter().enumerate() {
        for (b, cb) in curves.iter().enumerate() {
            if a == b || cb.len() < 2 {
                continue;
            }
            for &(x, y) in ca {
                if let Some(other) = interpolate(cb, x) {
                    sum += (y - other).abs();
                    count += 1;
                }
            }
        }
    }
    (count > 0).then(|| sum / count as f64)
}

fn interpolate(curve: &[(f64, f64)], x: f64) -> Option<f64> {
    let (first, last) = (curve.first()?, curve.last()?);
    if x < first.0 || x > last.0 {
        return None;
    }
    curve
        .windows(2)
        .find(|w| x >= w[0].0 && x <= w[1].0)
        .map(|w| {
            let span = w[1].0 - w[0].0;
            if span == 0.0 {
                w[0].1
            } else {
                w[0].1 + (w[1].1 - w[0].1) * (x - w[0].0) / span
            }
        })
}
