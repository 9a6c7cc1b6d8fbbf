//! Statevector simulation: product-state preparation, gate and unitary
//! application, computational-basis probabilities and finite-shot sampling.
//!
//! Basis index `x` stores qubit `l` in bit `l`; qubit 0 is the least
//! significant bit everywhere in this crate.

use crate::error::{QercError, Result};
use crate::gates::{self, Gate};
use crate::linalg::{C64, ONE, ZERO};
use crate::rng;
use crate::unitary::UnitaryMatrix;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use std::f64::consts::PI;

pub const NORM_TOLERANCE: f64 = 1e-10;
const GATE_UNITARITY_TOLERANCE: f64 = 1e-8;
const DISTRIBUTION_TOLERANCE: f64 = 1e-8;

/// `z_l(x)`: +1 when bit `l` of `x` is 0, -1 otherwise.
#[inline]
pub fn spin(x: usize, l: usize) -> f64 {
    if (x >> l) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    num_qubits: usize,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(num_qubits: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[0] = ONE;
        Self {
            amplitudes,
            num_qubits,
        }
    }

    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let num_qubits = crate::linalg::is_power_of_two_dim(amplitudes.len()).ok_or_else(|| {
            QercError::Domain(format!("length {} is not a power of two", amplitudes.len()))
        })?;
        let state = Self {
            amplitudes,
            num_qubits,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QercError::Domain(format!(
                "state norm^2 is {norm}, expected 1"
            )));
        }
        Ok(state)
    }

    /// `prod_l [cos(theta_l/2)|0> + e^{i phi_l} sin(theta_l/2)|1>]` with qubit `l`
    /// taking the `l`-th `(theta, phi)` pair.
    pub fn product(angles: &[(f64, f64)]) -> Result<Self> {
        for (l, &(theta, phi)) in angles.iter().enumerate() {
            check_angle(theta, "theta", l)?;
            check_angle(phi, "phi", l)?;
        }
        let mut amplitudes = Vec::with_capacity(1 << angles.len());
        amplitudes.push(ONE);
        for &(theta, phi) in angles {
            let (s, c) = (theta / 2.0).sin_cos();
            let up = C64::from_polar(s, phi);
            let half = amplitudes.len();
            amplitudes.extend_from_within(..half);
            for a in &mut amplitudes[..half] {
                *a *= c;
            }
            for a in &mut amplitudes[half..] {
                *a *= up;
            }
        }
        Ok(Self {
            amplitudes,
            num_qubits: angles.len(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply_unitary(&self, u: &UnitaryMatrix) -> Result<Self> {
        u.apply(self)
    }

    /// Applies `gates[l]` to qubit `l` for every qubit, in `O(N 2^N)`.
    pub fn apply_single_qubit_layer(&self, gates: &[Gate]) -> Result<Self> {
        if gates.len() != self.num_qubits {
            return Err(QercError::dims(self.num_qubits, gates.len()));
        }
        check_gates(gates)?;
        let mut out = self.clone();
        apply_layer_in_place(&mut out.amplitudes, gates);
        Ok(out)
    }

    /// Multiplies amplitude `x` by `exp(-i sum_{l<m} theta_lm z_l(x) z_m(x))`.
    /// Only the strict upper triangle of `theta` is read.
    pub fn apply_zz_diagonal(&self, theta: &DMatrix<f64>) -> Result<Self> {
        let phases = zz_phases(self.num_qubits, theta)?;
        let mut out = self.clone();
        for (a, p) in out.amplitudes.iter_mut().zip(&phases) {
            *a *= p;
        }
        Ok(out)
    }

    pub fn probabilities(&self) -> ProbVector {
        ProbVector {
            probs: probabilities_of(&self.amplitudes),
        }
    }
}

fn check_angle(value: f64, name: &str, qubit: usize) -> Result<()> {
    if !(0.0..=PI).contains(&value) {
        return Err(QercError::Domain(format!(
            "{name} for qubit {qubit} is {value}, outside [0, pi]"
        )));
    }
    Ok(())
}

pub(crate) fn check_gates(gates: &[Gate]) -> Result<()> {
    for g in gates {
        let err = gates::unitarity_error(g);
        if !(err <= GATE_UNITARITY_TOLERANCE) {
            return Err(QercError::NotUnitary(err));
        }
    }
    Ok(())
}

/// Applies one 2x2 gate per qubit to a raw amplitude buffer of length `2^gates.len()`.
pub fn apply_layer_in_place(amplitudes: &mut [C64], gates: &[Gate]) {
    debug_assert_eq!(amplitudes.len(), 1 << gates.len());
    for (q, g) in gates.iter().enumerate() {
        apply_gate_in_place(amplitudes, q, g);
    }
}

pub fn apply_gate_in_place(amplitudes: &mut [C64], qubit: usize, g: &Gate) {
    let stride = 1usize << qubit;
    for block in amplitudes.chunks_exact_mut(stride << 1) {
        let (lo, hi) = block.split_at_mut(stride);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x0, x1) = (*a, *b);
            *a = g[0][0] * x0 + g[0][1] * x1;
            *b = g[1][0] * x0 + g[1][1] * x1;
        }
    }
}

pub fn apply_cnot_in_place(amplitudes: &mut [C64], control: usize, target: usize) {
    let (cb, tb) = (1usize << control, 1usize << target);
    for x in 0..amplitudes.len() {
        if x & cb != 0 && x & tb == 0 {
            amplitudes.swap(x, x | tb);
        }
    }
}

/// Diagonal of `exp(-i sum_{l<m} theta_lm Z_l Z_m)`.
pub fn zz_phases(num_qubits: usize, theta: &DMatrix<f64>) -> Result<Vec<C64>> {
    if theta.nrows() != num_qubits || theta.ncols() != num_qubits {
        return Err(QercError::dims(
            num_qubits,
            theta.nrows().max(theta.ncols()),
        ));
    }
    let pairs: Vec<(usize, usize, f64)> = (0..num_qubits)
        .flat_map(|l| ((l + 1)..num_qubits).map(move |m| (l, m)))
        .map(|(l, m)| (l, m, theta[(l, m)]))
        .filter(|&(_, _, t)| t != 0.0)
        .collect();
    Ok((0..1usize << num_qubits)
        .map(|x| {
            let angle: f64 = pairs
                .iter()
                .map(|&(l, m, t)| {
                    if ((x >> l) ^ (x >> m)) & 1 == 0 {
                        t
                    } else {
                        -t
                    }
                })
                .sum();
            C64::from_polar(1.0, -angle)
        })
        .collect())
}

pub fn probabilities_of(amplitudes: &[C64]) -> Vec<f64> {
    amplitudes.iter().map(|a| a.norm_sqr()).collect()
}

/// A computational-basis distribution over `2^N` outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    probs: Vec<f64>,
}

impl ProbVector {
    /// Validates entries in `[0, 1]` summing to one within `1e-8`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_distribution(&probs)?;
        Ok(Self { probs })
    }

    pub fn uniform(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        Self {
            probs: vec![1.0 / dim as f64; dim],
        }
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut probs = vec![0.0; 1 << num_qubits];
        probs[index] = 1.0;
        Self { probs }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn num_qubits(&self) -> usize {
        self.probs.len().trailing_zeros() as usize
    }

    /// Empirical distribution `N_x / N_s` of `n_shots` draws, seeded.
    pub fn sample_counts(&self, n_shots: u64, seed: u64) -> Result<ProbVector> {
        self.sample_counts_with(n_shots, &mut rng::seeded(seed))
    }

    pub fn sample_counts_with<R: Rng + ?Sized>(
        &self,
        n_shots: u64,
        rng: &mut R,
    ) -> Result<ProbVector> {
        let counts = sample_multinomial(&self.probs, n_shots, rng)?;
        let inv = 1.0 / n_shots as f64;
        Ok(ProbVector {
            probs: counts.into_iter().map(|c| c as f64 * inv).collect(),
        })
    }
}

pub fn validate_distribution(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(QercError::InvalidDistribution("empty".into()));
    }
    if let Some((i, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !(**p >= 0.0 && **p <= 1.0 + DISTRIBUTION_TOLERANCE))
    {
        return Err(QercError::InvalidDistribution(format!("entry {i} is {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(QercError::InvalidDistribution(format!(
            "entries sum to {total}"
        )));
    }
    Ok(())
}

/// Multinomial counts for `n_shots` i.i.d. draws from `probs`, generated as a
/// chain of conditional binomials (same law as drawing indices one by one).
pub fn sample_multinomial<R: Rng + ?Sized>(
    probs: &[f64],
    n_shots: u64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if n_shots == 0 {
        return Err(QercError::InvalidParameter(
            "n_shots must be at least 1".into(),
        ));
    }
    validate_distribution(probs)?;
    let mut counts = vec![0u64; probs.len()];
    let last = probs
        .iter()
        .rposition(|&p| p > 0.0)
        .expect("validated distribution has mass");
    let mut remaining_shots = n_shots;
    let mut remaining_mass = 1.0f64;
    for (x, &p) in probs.iter().enumerate() {
        if remaining_shots == 0 {
            break;
        }
        if x == last {
            counts[x] = remaining_shots;
            break;
        }
        if p <= 0.0 {
            continue;
        }
        let q = if remaining_mass > 0.0 {
            (p / remaining_mass).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let k = Binomial::new(remaining_shots, q)
            .map_err(|e| QercError::InvalidDistribution(e.to_string()))?
            .sample(rng);
        counts[x] = k;
        remaining_shots -= k;
        remaining_mass -= p;
    }
    Ok(counts)
}
