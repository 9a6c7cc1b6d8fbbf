//! Dense unitaries and Hermitian generators.

use crate::error::{QercError, Result};
use crate::linalg::{self, C64, ZERO};
use crate::state::StateVector;
use nalgebra::{DMatrix, SymmetricEigen};

/// Largest register materialized densely.
pub const DENSE_QUBIT_CAP: usize = 16;
pub const UNITARY_TOLERANCE: f64 = 1e-10;
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Provenance of a unitary: which model built it, with what parameters and seed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UnitaryMeta {
    pub model: String,
    pub params: Vec<(String, String)>,
    pub seed: Option<u64>,
}

impl UnitaryMeta {
    pub fn new(model: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            ..Default::default()
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

#[derive(Debug, Clone)]
pub struct UnitaryMatrix {
    entries: DMatrix<C64>,
    num_qubits: usize,
    meta: UnitaryMeta,
}

fn qubits_for(dim_rows: usize, dim_cols: usize) -> Result<usize> {
    if dim_rows != dim_cols {
        return Err(QercError::dims(dim_rows, dim_cols));
    }
    let n = linalg::is_power_of_two_dim(dim_rows)
        .ok_or_else(|| QercError::Domain(format!("dimension {dim_rows} is not a power of two")))?;
    check_cap(n)?;
    Ok(n)
}

pub(crate) fn check_cap(num_qubits: usize) -> Result<()> {
    if num_qubits > DENSE_QUBIT_CAP {
        return Err(QercError::TooManyQubits {
            num_qubits,
            cap: DENSE_QUBIT_CAP,
        });
    }
    Ok(())
}

impl UnitaryMatrix {
    /// Wraps `entries`, verifying `max |U^dag U - I| < 1e-10`.
    pub fn new(entries: DMatrix<C64>, meta: UnitaryMeta) -> Result<Self> {
        let num_qubits = qubits_for(entries.nrows(), entries.ncols())?;
        let err = linalg::unitarity_error(&entries);
        if !(err < UNITARY_TOLERANCE) {
            return Err(QercError::NotUnitary(err));
        }
        Ok(Self {
            entries,
            num_qubits,
            meta,
        })
    }

    /// For builders that are unitary by construction; tests cover each one.
    pub(crate) fn from_parts(entries: DMatrix<C64>, meta: UnitaryMeta) -> Self {
        let num_qubits = entries.nrows().trailing_zeros() as usize;
        debug_assert_eq!(1usize << num_qubits, entries.nrows());
        Self {
            entries,
            num_qubits,
            meta,
        }
    }

    pub fn identity(num_qubits: usize) -> Result<Self> {
        check_cap(num_qubits)?;
        let dim = 1usize << num_qubits;
        Ok(Self::from_parts(
            DMatrix::identity(dim, dim),
            UnitaryMeta::new("identity"),
        ))
    }

    pub fn diagonal(phases: &[C64], meta: UnitaryMeta) -> Result<Self> {
        qubits_for(phases.len(), phases.len())?;
        if let Some(p) = phases
            .iter()
            .find(|p| (p.norm() - 1.0).abs() > UNITARY_TOLERANCE)
        {
            return Err(QercError::NotUnitary((p.norm() - 1.0).abs()));
        }
        let mut m = DMatrix::from_element(phases.len(), phases.len(), ZERO);
        m.set_diagonal(&nalgebra::DVector::from_column_slice(phases));
        Ok(Self::from_parts(m, meta))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn meta(&self) -> &UnitaryMeta {
        &self.meta
    }

    pub fn with_meta(mut self, meta: UnitaryMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn unitarity_error(&self) -> f64 {
        linalg::unitarity_error(&self.entries)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.entries.adjoint(), self.meta.clone())
    }

    /// `self * other`: apply `other` first.
    pub fn compose(&self, other: &UnitaryMatrix) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(QercError::dims(self.dim(), other.dim()));
        }
        Ok(Self::from_parts(
            linalg::matmul(&self.entries, &other.entries),
            self.meta.clone(),
        ))
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.dim() {
            return Err(QercError::dims(self.dim(), state.dim()));
        }
        let out = self.apply_batch(state.amplitudes(), 1)?;
        StateVector::from_amplitudes(out)
    }

    /// `U S` for `batch` states stored back to back in `states`.
    pub fn apply_batch(&self, states: &[C64], batch: usize) -> Result<Vec<C64>> {
        let dim = self.dim();
        if states.len() != dim * batch {
            return Err(QercError::dims(dim * batch, states.len()));
        }
        let mut out = vec![ZERO; states.len()];
        linalg::gemm_into(dim, dim, batch, self.entries.as_slice(), states, &mut out);
        Ok(out)
    }
}

/// Dense Hermitian operator in angular-frequency units (hbar = 1).
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    entries: DMatrix<C64>,
    num_qubits: usize,
}

impl HamiltonianMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let num_qubits = qubits_for(entries.nrows(), entries.ncols())?;
        let dev = linalg::max_abs_diff(&entries, &entries.adjoint());
        if !(dev < HERMITIAN_TOLERANCE) {
            return Err(QercError::NotHermitian(dev));
        }
        Ok(Self {
            entries,
            num_qubits,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }

    /// `H = V diag(lambda) V^dag`. Real symmetric generators use the real solver.
    pub fn eigensystem(&self) -> Eigensystem {
        if self.is_real() {
            let real = self.entries.map(|z| z.re);
            let eig = SymmetricEigen::new(real);
            Eigensystem {
                values: eig.eigenvalues.as_slice().to_vec(),
                vectors: Basis::Real(eig.eigenvectors),
            }
        } else {
            let eig = SymmetricEigen::new(self.entries.clone());
            Eigensystem {
                values: eig.eigenvalues.as_slice().to_vec(),
                vectors: Basis::Complex(eig.eigenvectors),
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Basis {
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

/// Spectral decomposition reused across evolution times.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    values: Vec<f64>,
    vectors: Basis,
}

impl Eigensystem {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    fn complex_vectors(&self) -> DMatrix<C64> {
        match &self.vectors {
            Basis::Real(v) => v.map(|x| C64::new(x, 0.0)),
            Basis::Complex(v) => v.clone(),
        }
    }

    /// `max |V diag(lambda) V^dag - h|`.
    pub fn reconstruction_error(&self, h: &HamiltonianMatrix) -> f64 {
        let v = self.complex_vectors();
        let mut scaled = v.clone();
        for (mut col, &lam) in scaled.column_iter_mut().zip(&self.values) {
            col *= C64::new(lam, 0.0);
        }
        let rebuilt = linalg::matmul(&scaled, &v.adjoint());
        linalg::max_abs_diff(&rebuilt, h.entries())
    }

    /// `V diag(exp(-i lambda t)) V^dag`.
    pub fn evolve(&self, t: f64, meta: UnitaryMeta) -> UnitaryMatrix {
        let entries = match &self.vectors {
            Basis::Real(v) => {
                // Re U = V cos V^T, Im U = -V sin V^T
                let mut vc = v.clone();
                let mut vs = v.clone();
                for (k, &lam) in self.values.iter().enumerate() {
                    let (s, c) = (lam * t).sin_cos();
                    vc.column_mut(k).scale_mut(c);
                    vs.column_mut(k).scale_mut(s);
                }
                let vt = v.transpose();
                let re = &vc * &vt;
                let im = &vs * &vt;
                re.zip_map(&im, |r, i| C64::new(r, -i))
            }
            Basis::Complex(v) => {
                let mut scaled = v.clone();
                for (mut col, &lam) in scaled.column_iter_mut().zip(&self.values) {
                    col *= C64::from_polar(1.0, -lam * t);
                }
                linalg::matmul(&scaled, &v.adjoint())
            }
        };
        UnitaryMatrix::from_parts(entries, meta)
    }
}

/// `exp(-i h t)` through a dense eigendecomposition.
pub fn hermitian_evolve(h: &HamiltonianMatrix, t: f64) -> UnitaryMatrix {
    h.eigensystem()
        .evolve(t, UnitaryMeta::new("hamiltonian").param("t", t))
}
