//! Reservoir unitaries built from a declarative [`ReservoirSpec`].

mod circuits;
mod haar;
mod ising;

pub use circuits::{
    append_t_layer, bit_flip_permutation, build_hth_layer, build_zzx, hth_gate, layer_unitary,
    random_input_rotations, reduce_rotation_angle, sample_random_clifford_circuit,
    sample_single_rotation_circuit, zzx_circuit, CircuitStep, CliffordCircuit, CliffordGate,
    LayeredCircuit, ZZX_DENSE_CAP,
};
pub use haar::sample_haar_unitary;
pub use ising::{
    build_xx_ising, build_xx_product_form, build_zz_ising, coupling_matrix, xx_ising_hamiltonian,
    zz_ising_hamiltonian,
};

use crate::error::{QercError, Result};
use crate::linalg::C64;
use crate::unitary::UnitaryMatrix;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    ZzIsing,
    XxIsing,
    Zzx,
    XxProduct,
    Haar,
    Src,
    RandomClifford,
    CliffordT,
    Hth,
    /// No reservoir: the encoded product state is measured directly.
    Identity,
}

impl Model {
    pub const ALL: [Model; 10] = [
        Model::ZzIsing,
        Model::XxIsing,
        Model::Zzx,
        Model::XxProduct,
        Model::Haar,
        Model::Src,
        Model::RandomClifford,
        Model::CliffordT,
        Model::Hth,
        Model::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::ZzIsing => "zz_ising",
            Model::XxIsing => "xx_ising",
            Model::Zzx => "zzx",
            Model::XxProduct => "xx_product",
            Model::Haar => "haar",
            Model::Src => "src",
            Model::RandomClifford => "random_clifford",
            Model::CliffordT => "clifford_t",
            Model::Hth => "hth",
            Model::Identity => "identity",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = QercError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Model::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| QercError::Config(format!("unknown reservoir model '{s}'")))
    }
}

/// Long-range exponent in `J_lm = J0 / |l - m|^alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    Finite(f64),
    /// Nearest-neighbour coupling only.
    Infinite,
}

impl Alpha {
    /// `1 / d^alpha` for a site distance `d >= 1`.
    pub fn decay(self, distance: usize) -> f64 {
        match self {
            Alpha::Finite(a) => (distance as f64).powf(-a),
            Alpha::Infinite => {
                if distance == 1 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Finite(a) => write!(f, "{a}"),
            Alpha::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Alpha {
    type Err = QercError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if matches!(t.as_str(), "inf" | "infinity" | "+inf") {
            return Ok(Alpha::Infinite);
        }
        let a: f64 = t
            .parse()
            .map_err(|_| QercError::Config(format!("invalid alpha '{s}'")))?;
        if !(a >= 0.0) || !a.is_finite() {
            return Err(QercError::Config(format!(
                "alpha must be finite and >= 0 (or 'inf'), got {s}"
            )));
        }
        Ok(Alpha::Finite(a))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirSpec {
    pub model: Model,
    pub num_qubits: usize,
    pub j0: f64,
    pub g: f64,
    pub alpha: Alpha,
    /// Scaled time `J0 t`.
    pub t: f64,
    pub theta_x: f64,
    pub theta_j: f64,
    pub depth: usize,
    /// Clifford gate count; `None` means `10 N^2`.
    pub gate_count: Option<usize>,
    pub seed: u64,
}

impl ReservoirSpec {
    pub fn new(model: Model, num_qubits: usize) -> Self {
        Self {
            model,
            num_qubits,
            j0: 1.0,
            g: 1.0,
            alpha: Alpha::Finite(1.5),
            t: 3.5,
            theta_x: std::f64::consts::FRAC_PI_8,
            theta_j: 2.0 * std::f64::consts::PI,
            depth: 1,
            gate_count: None,
            seed: 0,
        }
    }

    pub fn clifford_gate_count(&self) -> usize {
        self.gate_count
            .unwrap_or(10 * self.num_qubits * self.num_qubits)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 {
            return Err(QercError::InvalidParameter(
                "num_qubits must be >= 1".into(),
            ));
        }
        if !(self.g >= 0.0) {
            return Err(QercError::InvalidParameter(format!(
                "g must be >= 0, got {}",
                self.g
            )));
        }
        if let Alpha::Finite(a) = self.alpha {
            if !(a >= 0.0) {
                return Err(QercError::InvalidParameter(format!(
                    "alpha must be >= 0, got {a}"
                )));
            }
        }
        if self.depth == 0 {
            return Err(QercError::InvalidParameter("depth must be >= 1".into()));
        }
        if !self.j0.is_finite() || self.j0 == 0.0 {
            return Err(QercError::InvalidParameter(
                "J0 must be finite and nonzero".into(),
            ));
        }
        Ok(())
    }

    /// Key/value record of the parameters that matter for this model.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("model".to_string(), self.model.to_string()),
            ("num_qubits".to_string(), self.num_qubits.to_string()),
        ];
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        match self.model {
            Model::ZzIsing | Model::XxIsing | Model::XxProduct => {
                push("j0", self.j0.to_string());
                push("g", self.g.to_string());
                push("alpha", self.alpha.to_string());
                push("t", self.t.to_string());
            }
            Model::Zzx => {
                push("theta_x", self.theta_x.to_string());
                push("theta_j", self.theta_j.to_string());
                push("alpha", self.alpha.to_string());
                push("depth", self.depth.to_string());
            }
            Model::RandomClifford | Model::CliffordT => {
                push("gate_count", self.clifford_gate_count().to_string());
                push("seed", self.seed.to_string());
            }
            Model::Haar | Model::Src => push("seed", self.seed.to_string()),
            Model::Hth | Model::Identity => {}
        }
        out
    }
}

/// A constructed reservoir, either materialized or applied layer by layer.
#[derive(Debug, Clone)]
pub enum Reservoir {
    Dense(UnitaryMatrix),
    Layered(LayeredCircuit),
}

impl Reservoir {
    /// Builds the reservoir for `spec`. Circuit models made of diagonal and
    /// single-qubit layers (ZZ-X, SRC, HTH, identity) stay layered, which is
    /// exact and avoids the `4^N` matrix.
    pub fn build(spec: &ReservoirSpec) -> Result<Self> {
        spec.validate()?;
        Ok(match spec.model {
            Model::ZzIsing => Reservoir::Dense(build_zz_ising(spec)?),
            Model::XxIsing => Reservoir::Dense(build_xx_ising(spec)?),
            Model::XxProduct => Reservoir::Dense(build_xx_product_form(spec)?),
            Model::Haar => Reservoir::Dense(sample_haar_unitary(spec.num_qubits, spec.seed)?),
            Model::RandomClifford => Reservoir::Dense(
                sample_random_clifford_circuit(
                    spec.num_qubits,
                    spec.clifford_gate_count(),
                    spec.seed,
                )?
                .to_unitary()?,
            ),
            Model::CliffordT => Reservoir::Dense(append_t_layer(
                &sample_random_clifford_circuit(
                    spec.num_qubits,
                    spec.clifford_gate_count(),
                    spec.seed,
                )?
                .to_unitary()?,
            )),
            Model::Zzx => Reservoir::Layered(zzx_circuit(spec)?),
            Model::Src => Reservoir::Layered(LayeredCircuit::new(
                spec.num_qubits,
                vec![CircuitStep::Layer(circuits::src_gates(
                    spec.num_qubits,
                    spec.seed,
                ))],
            )),
            Model::Hth => Reservoir::Layered(LayeredCircuit::new(
                spec.num_qubits,
                vec![CircuitStep::Layer(vec![hth_gate(); spec.num_qubits])],
            )),
            Model::Identity => Reservoir::Layered(LayeredCircuit::new(spec.num_qubits, Vec::new())),
        })
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            Reservoir::Dense(u) => u.num_qubits(),
            Reservoir::Layered(c) => c.num_qubits(),
        }
    }

    /// Evolves `batch` states stored back to back, in place.
    pub fn apply_batch_in_place(&self, states: &mut [C64], batch: usize) -> Result<()> {
        let dim = 1usize << self.num_qubits();
        if states.len() != dim * batch {
            return Err(QercError::dims(dim * batch, states.len()));
        }
        match self {
            Reservoir::Dense(u) => {
                let out = u.apply_batch(states, batch)?;
                states.copy_from_slice(&out);
            }
            Reservoir::Layered(c) => {
                for s in states.chunks_exact_mut(dim) {
                    c.apply_in_place(s);
                }
            }
        }
        Ok(())
    }

    pub fn to_unitary(&self) -> Result<UnitaryMatrix> {
        match self {
            Reservoir::Dense(u) => Ok(u.clone()),
            Reservoir::Layered(c) => c.to_unitary(),
        }
    }
}
