use super::{coupling_matrix, Model, ReservoirSpec};
use crate::error::{QercError, Result};
use crate::gates::{self, Gate};
use crate::linalg::C64;
use crate::rng;
use crate::state::{apply_cnot_in_place, apply_gate_in_place, apply_layer_in_place, zz_phases};
use crate::unitary::{UnitaryMatrix, UnitaryMeta};
use nalgebra::DMatrix;
use rand::Rng;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// Circuit models are materialized densely only up to this size.
pub const ZZX_DENSE_CAP: usize = 14;

fn check_dense_cap(num_qubits: usize) -> Result<()> {
    if num_qubits > ZZX_DENSE_CAP {
        return Err(QercError::TooManyQubits {
            num_qubits,
            cap: ZZX_DENSE_CAP,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum CircuitStep {
    /// Elementwise phase multiplication in the computational basis.
    Diagonal(Vec<C64>),
    /// One gate per qubit.
    Layer(Vec<Gate>),
}

/// A circuit of diagonal and single-qubit layers applied in `O(2^N)` per step.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredCircuit {
    num_qubits: usize,
    steps: Vec<CircuitStep>,
}

impl LayeredCircuit {
    pub fn new(num_qubits: usize, steps: Vec<CircuitStep>) -> Self {
        Self { num_qubits, steps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn steps(&self) -> &[CircuitStep] {
        &self.steps
    }

    pub fn apply_in_place(&self, amplitudes: &mut [C64]) {
        for step in &self.steps {
            match step {
                CircuitStep::Diagonal(phases) => {
                    for (a, p) in amplitudes.iter_mut().zip(phases) {
                        *a *= p;
                    }
                }
                CircuitStep::Layer(layer) => apply_layer_in_place(amplitudes, layer),
            }
        }
    }

    pub fn to_unitary(&self) -> Result<UnitaryMatrix> {
        check_dense_cap(self.num_qubits)?;
        let dim = 1usize << self.num_qubits;
        let mut u = DMatrix::<C64>::identity(dim, dim);
        for col in u.as_mut_slice().chunks_exact_mut(dim) {
            self.apply_in_place(col);
        }
        Ok(UnitaryMatrix::from_parts(u, UnitaryMeta::new("layered")))
    }
}

/// Maps a rotation angle into `[0, pi/2)` using
/// `exp(-i theta sum X) = P_x exp(-i (theta - pi/2) sum X)` up to a global phase.
/// Returns the reduced angle and whether a full bit flip was absorbed.
pub fn reduce_rotation_angle(theta_x: f64) -> (f64, bool) {
    let wrapped = theta_x.rem_euclid(PI);
    if wrapped >= FRAC_PI_2 {
        (wrapped - FRAC_PI_2, true)
    } else {
        (wrapped, false)
    }
}

/// `out[x] = probs[x XOR 1...1]`.
pub fn bit_flip_permutation(probs: &[f64]) -> Vec<f64> {
    let mask = probs.len() - 1;
    (0..probs.len()).map(|x| probs[x ^ mask]).collect()
}

/// `[exp(-i theta_x sum X) exp(-i sum_{l<m} theta_lm Z Z)]^depth` as layers,
/// with `theta_lm = theta_J / |l-m|^alpha`.
pub fn zzx_circuit(spec: &ReservoirSpec) -> Result<LayeredCircuit> {
    spec.validate()?;
    if !(0.0..=FRAC_PI_2).contains(&spec.theta_x) {
        return Err(QercError::Domain(format!(
            "theta_x = {} outside the parity-reduced range [0, pi/2]",
            spec.theta_x
        )));
    }
    Ok(zzx_circuit_unreduced(
        spec.num_qubits,
        spec.theta_x,
        spec.theta_j,
        spec.alpha,
        spec.depth,
    ))
}

pub(crate) fn zzx_circuit_unreduced(
    num_qubits: usize,
    theta_x: f64,
    theta_j: f64,
    alpha: super::Alpha,
    depth: usize,
) -> LayeredCircuit {
    let angles = coupling_matrix(num_qubits, theta_j, alpha);
    let diag = zz_phases(num_qubits, &angles).expect("square coupling matrix");
    let layer = vec![gates::x_rotation(theta_x); num_qubits];
    let steps = (0..depth)
        .flat_map(|_| {
            [
                CircuitStep::Diagonal(diag.clone()),
                CircuitStep::Layer(layer.clone()),
            ]
        })
        .collect();
    LayeredCircuit::new(num_qubits, steps)
}

/// Dense ZZ-X unitary (`N <= 14`).
pub fn build_zzx(spec: &ReservoirSpec) -> Result<UnitaryMatrix> {
    if spec.model != Model::Zzx {
        return Err(QercError::InvalidParameter(format!(
            "build_zzx called with model {}",
            spec.model
        )));
    }
    check_dense_cap(spec.num_qubits)?;
    let u = zzx_circuit(spec)?.to_unitary()?;
    Ok(u.with_meta(UnitaryMeta {
        model: "zzx".into(),
        params: spec.describe().into_iter().skip(1).collect(),
        seed: None,
    }))
}

/// Dense `prod_l gates[l]`.
pub fn layer_unitary(layer: &[Gate]) -> Result<UnitaryMatrix> {
    crate::state::check_gates(layer)?;
    LayeredCircuit::new(layer.len(), vec![CircuitStep::Layer(layer.to_vec())]).to_unitary()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    Cnot { control: usize, target: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliffordCircuit {
    num_qubits: usize,
    gates: Vec<CliffordGate>,
}

impl CliffordCircuit {
    pub fn new(num_qubits: usize, gates: Vec<CliffordGate>) -> Result<Self> {
        for g in &gates {
            let ok = match *g {
                CliffordGate::H(q) | CliffordGate::S(q) => q < num_qubits,
                CliffordGate::Cnot { control, target } => {
                    control < num_qubits && target < num_qubits && control != target
                }
            };
            if !ok {
                return Err(QercError::InvalidParameter(format!(
                    "gate {g:?} invalid on {num_qubits} qubits"
                )));
            }
        }
        Ok(Self { num_qubits, gates })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[CliffordGate] {
        &self.gates
    }

    pub fn apply_in_place(&self, amplitudes: &mut [C64]) {
        for g in &self.gates {
            match *g {
                CliffordGate::H(q) => apply_gate_in_place(amplitudes, q, &gates::HADAMARD),
                CliffordGate::S(q) => apply_gate_in_place(amplitudes, q, &gates::PHASE_S),
                CliffordGate::Cnot { control, target } => {
                    apply_cnot_in_place(amplitudes, control, target)
                }
            }
        }
    }

    pub fn to_unitary(&self) -> Result<UnitaryMatrix> {
        check_dense_cap(self.num_qubits)?;
        let dim = 1usize << self.num_qubits;
        let mut u = DMatrix::<C64>::identity(dim, dim);
        for col in u.as_mut_slice().chunks_exact_mut(dim) {
            self.apply_in_place(col);
        }
        Ok(UnitaryMatrix::from_parts(
            u,
            UnitaryMeta::new("random_clifford").param("gate_count", self.gates.len()),
        ))
    }
}

/// Uniformly random sequence over `{H(q), S(q), CNOT(c, t)}` with uniform wires.
pub fn sample_random_clifford_circuit(
    num_qubits: usize,
    gate_count: usize,
    seed: u64,
) -> Result<CliffordCircuit> {
    if gate_count == 0 {
        return Err(QercError::InvalidParameter(
            "gate_count must be >= 1".into(),
        ));
    }
    if num_qubits == 0 {
        return Err(QercError::InvalidParameter(
            "num_qubits must be >= 1".into(),
        ));
    }
    let mut rng = rng::seeded(seed);
    let kinds = if num_qubits > 1 { 3 } else { 2 };
    let gates = (0..gate_count)
        .map(|_| match rng.random_range(0..kinds) {
            0 => CliffordGate::H(rng.random_range(0..num_qubits)),
            1 => CliffordGate::S(rng.random_range(0..num_qubits)),
            _ => {
                let control = rng.random_range(0..num_qubits);
                let mut target = rng.random_range(0..num_qubits - 1);
                if target >= control {
                    target += 1;
                }
                CliffordGate::Cnot { control, target }
            }
        })
        .collect();
    CliffordCircuit::new(num_qubits, gates)
}

/// `(prod_l T_l) U`.
pub fn append_t_layer(u: &UnitaryMatrix) -> UnitaryMatrix {
    let dim = u.dim();
    let phases: Vec<C64> = (0..dim)
        .map(|x| C64::from_polar(1.0, FRAC_PI_4 * x.count_ones() as f64))
        .collect();
    let mut entries = u.entries().clone();
    for mut col in entries.column_iter_mut() {
        for (x, v) in col.iter_mut().enumerate() {
            *v *= phases[x];
        }
    }
    let mut meta = u.meta().clone();
    meta.model = if meta.model == "random_clifford" {
        "clifford_t".into()
    } else {
        format!("{}+t", meta.model)
    };
    UnitaryMatrix::from_parts(entries, meta)
}

pub fn hth_gate() -> Gate {
    gates::mul(
        &gates::HADAMARD,
        &gates::mul(&gates::t_gate(), &gates::HADAMARD),
    )
}

/// `prod_l (H T H)_l`.
pub fn build_hth_layer(num_qubits: usize) -> Result<UnitaryMatrix> {
    Ok(layer_unitary(&vec![hth_gate(); num_qubits])?.with_meta(UnitaryMeta::new("hth")))
}

pub(crate) fn src_gates(num_qubits: usize, seed: u64) -> Vec<Gate> {
    let mut rng = rng::seeded(seed);
    (0..num_qubits)
        .map(|_| gates::haar_random(&mut rng))
        .collect()
}

/// Independent Haar-random single-qubit gates on every qubit (no entangler).
pub fn sample_single_rotation_circuit(num_qubits: usize, seed: u64) -> Result<UnitaryMatrix> {
    Ok(layer_unitary(&src_gates(num_qubits, seed))?.with_meta(UnitaryMeta::new("src").seed(seed)))
}

/// Fixed per-experiment layer of Haar-random single-qubit rotations applied to
/// every encoded state before the reservoir.
pub fn random_input_rotations(num_qubits: usize, seed: u64) -> Vec<Gate> {
    let mut rng = rng::substream(seed, 1);
    (0..num_qubits)
        .map(|_| gates::haar_random(&mut rng))
        .collect()
}
