use super::{Model, ReservoirSpec};
use crate::error::{QercError, Result};
use crate::linalg::{C64, ZERO};
use crate::state::spin;
use crate::unitary::{HamiltonianMatrix, UnitaryMatrix, UnitaryMeta};
use nalgebra::DMatrix;

use super::Alpha;

/// Ising generators are diagonalized densely; 2^14 is the practical ceiling.
pub const HAMILTONIAN_QUBIT_CAP: usize = 14;

/// `J_lm = J0 / |l - m|^alpha`, zero on the diagonal.
pub fn coupling_matrix(num_qubits: usize, j0: f64, alpha: Alpha) -> DMatrix<f64> {
    DMatrix::from_fn(num_qubits, num_qubits, |l, m| {
        if l == m {
            0.0
        } else {
            j0 * alpha.decay(l.abs_diff(m))
        }
    })
}

fn check_hamiltonian_cap(num_qubits: usize) -> Result<()> {
    if num_qubits > HAMILTONIAN_QUBIT_CAP {
        return Err(QercError::TooManyQubits {
            num_qubits,
            cap: HAMILTONIAN_QUBIT_CAP,
        });
    }
    Ok(())
}

fn pairs(couplings: &DMatrix<f64>) -> Vec<(usize, usize, f64)> {
    let n = couplings.nrows();
    (0..n)
        .flat_map(|l| (0..l).map(move |m| (l, m)))
        .map(|(l, m)| (l, m, couplings[(l, m)]))
        .filter(|&(_, _, j)| j != 0.0)
        .collect()
}

/// `sum_{l>m} J_lm Z_l Z_m + g sum_l X_l`.
pub fn zz_ising_hamiltonian(couplings: &DMatrix<f64>, g: f64) -> Result<HamiltonianMatrix> {
    let n = couplings.nrows();
    check_hamiltonian_cap(n)?;
    let dim = 1usize << n;
    let pairs = pairs(couplings);
    let mut h = DMatrix::from_element(dim, dim, ZERO);
    for x in 0..dim {
        let diag: f64 = pairs
            .iter()
            .map(|&(l, m, j)| j * spin(x, l) * spin(x, m))
            .sum();
        h[(x, x)] = C64::new(diag, 0.0);
        if g != 0.0 {
            for l in 0..n {
                h[(x ^ (1 << l), x)] += C64::new(g, 0.0);
            }
        }
    }
    HamiltonianMatrix::new(h)
}

/// `sum_{l>m} J_lm X_l X_m + g sum_l Z_l`.
pub fn xx_ising_hamiltonian(couplings: &DMatrix<f64>, g: f64) -> Result<HamiltonianMatrix> {
    let n = couplings.nrows();
    check_hamiltonian_cap(n)?;
    let dim = 1usize << n;
    let pairs = pairs(couplings);
    let mut h = DMatrix::from_element(dim, dim, ZERO);
    for x in 0..dim {
        if g != 0.0 {
            let field: f64 = (0..n).map(|l| spin(x, l)).sum();
            h[(x, x)] = C64::new(g * field, 0.0);
        }
        for &(l, m, j) in &pairs {
            h[(x ^ (1 << l) ^ (1 << m), x)] += C64::new(j, 0.0);
        }
    }
    HamiltonianMatrix::new(h)
}

fn ising_meta(spec: &ReservoirSpec) -> UnitaryMeta {
    UnitaryMeta {
        model: spec.model.to_string(),
        params: spec.describe().into_iter().skip(1).collect(),
        seed: None,
    }
}

fn expect_model(spec: &ReservoirSpec, allowed: &[Model]) -> Result<()> {
    if !allowed.contains(&spec.model) {
        return Err(QercError::InvalidParameter(format!(
            "builder does not handle model {}",
            spec.model
        )));
    }
    Ok(())
}

/// Physical evolution time for the spec's scaled time `J0 t`.
fn physical_time(spec: &ReservoirSpec) -> f64 {
    spec.t / spec.j0
}

/// `exp(-i t H_ZZ)` by exact diagonalization.
pub fn build_zz_ising(spec: &ReservoirSpec) -> Result<UnitaryMatrix> {
    expect_model(spec, &[Model::ZzIsing])?;
    spec.validate()?;
    let j = coupling_matrix(spec.num_qubits, spec.j0, spec.alpha);
    let h = zz_ising_hamiltonian(&j, spec.g)?;
    Ok(h.eigensystem()
        .evolve(physical_time(spec), ising_meta(spec)))
}

/// `exp(-i t H_XX)` by exact diagonalization.
pub fn build_xx_ising(spec: &ReservoirSpec) -> Result<UnitaryMatrix> {
    expect_model(spec, &[Model::XxIsing])?;
    spec.validate()?;
    let j = coupling_matrix(spec.num_qubits, spec.j0, spec.alpha);
    let h = xx_ising_hamiltonian(&j, spec.g)?;
    Ok(h.eigensystem()
        .evolve(physical_time(spec), ising_meta(spec)))
}

/// Zero-field XX evolution as a product of commuting two-site oscillators,
/// `prod_{l>m} [cos(w_lm t) I - i sin(w_lm t) X_l X_m]` with `w_lm = J0/|l-m|^alpha`.
pub fn build_xx_product_form(spec: &ReservoirSpec) -> Result<UnitaryMatrix> {
    expect_model(spec, &[Model::XxProduct, Model::XxIsing])?;
    spec.validate()?;
    if spec.g != 0.0 {
        return Err(QercError::InvalidParameter(format!(
            "product form requires g = 0, got {}",
            spec.g
        )));
    }
    crate::unitary::check_cap(spec.num_qubits)?;
    let n = spec.num_qubits;
    let dim = 1usize << n;
    let t = physical_time(spec);
    let omega = coupling_matrix(n, spec.j0, spec.alpha);
    let mut u = DMatrix::<C64>::identity(dim, dim);
    let mut scratch = vec![ZERO; dim];
    for (l, m, w) in pairs(&omega) {
        let (s, c) = (w * t).sin_cos();
        let mask = (1usize << l) | (1usize << m);
        let minus_i_s = C64::new(0.0, -s);
        for mut col in u.column_iter_mut() {
            for (x, out) in scratch.iter_mut().enumerate() {
                *out = col[x] * c + col[x ^ mask] * minus_i_s;
            }
            col.copy_from_slice(&scratch);
        }
    }
    let mut meta = ising_meta(spec);
    meta.model = Model::XxProduct.to_string();
    Ok(UnitaryMatrix::from_parts(u, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::linalg::{self, kron};
    use crate::state::StateVector;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn spec(model: Model, n: usize) -> ReservoirSpec {
        ReservoirSpec::new(model, n)
    }

    #[test]
    fn coupling_examples() {
        let j = coupling_matrix(4, 1.0, Alpha::Finite(1.5));
        assert!((j[(0, 2)] - 0.353_553_390_593_273_8).abs() < 1e-12);
        assert_eq!(j[(1, 1)], 0.0);
        assert_eq!(j, j.transpose());

        let all = coupling_matrix(4, 0.7, Alpha::Finite(0.0));
        for l in 0..4 {
            for m in 0..4 {
                assert_eq!(all[(l, m)], if l == m { 0.0 } else { 0.7 });
            }
        }

        let nn = coupling_matrix(4, 1.0, Alpha::Infinite);
        assert_eq!(nn[(0, 1)], 1.0);
        assert_eq!(nn[(2, 3)], 1.0);
        assert_eq!(nn[(0, 2)], 0.0);
        assert_eq!(nn[(0, 3)], 0.0);
    }

    #[test]
    fn zz_without_field_is_diagonal_phase() {
        let tau = 0.83;
        let mut s = spec(Model::ZzIsing, 2);
        s.g = 0.0;
        s.t = tau;
        let u = build_zz_ising(&s).unwrap();
        let expected = [-tau, tau, tau, -tau];
        for x in 0..4 {
            for y in 0..4 {
                let want = if x == y {
                    C64::from_polar(1.0, expected[x])
                } else {
                    ZERO
                };
                assert!((u.entries()[(x, y)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zz_without_field_preserves_product_distributions() {
        let mut s = spec(Model::ZzIsing, 4);
        s.g = 0.0;
        let u = build_zz_ising(&s).unwrap();
        let psi = StateVector::product(&[(0.3, 1.0), (1.2, 0.1), (2.9, 3.0), (0.0, 0.5)]).unwrap();
        let before = psi.probabilities();
        let after = u.apply(&psi).unwrap().probabilities();
        for (a, b) in before.as_slice().iter().zip(after.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        for model in [Model::ZzIsing, Model::XxIsing] {
            let mut s = spec(model, 3);
            s.t = 0.0;
            let u = if model == Model::ZzIsing {
                build_zz_ising(&s)
            } else {
                build_xx_ising(&s)
            }
            .unwrap();
            assert!(linalg::max_identity_deviation(u.entries()) < 1e-12);
        }
    }

    #[test]
    fn xx_stroboscopic_identity_at_pi() {
        for alpha in [Alpha::Infinite, Alpha::Finite(0.0)] {
            let mut s = spec(Model::XxIsing, 4);
            s.g = 0.0;
            s.alpha = alpha;
            s.t = PI;
            let u = build_xx_ising(&s).unwrap();
            let sign = u.entries()[(0, 0)];
            assert!((sign.norm() - 1.0).abs() < 1e-9);
            assert!((sign.im).abs() < 1e-9);
            for x in 0..16 {
                for y in 0..16 {
                    let want = if x == y { sign } else { ZERO };
                    assert!((u.entries()[(x, y)] - want).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn xx_product_matches_pair_gates_at_half_pi() {
        // alpha = inf, J0 t = pi/2: each factor is -i X_l X_{l+1}
        let n = 3;
        let mut s = spec(Model::XxProduct, n);
        s.g = 0.0;
        s.alpha = Alpha::Infinite;
        s.t = FRAC_PI_2;
        let u = build_xx_product_form(&s).unwrap();
        let x = gates::to_matrix(&gates::PAULI_X);
        let id = DMatrix::<C64>::identity(2, 2);
        // X_0 X_1 and X_1 X_2 with qubit 0 least significant
        let x01 = kron(&id, &kron(&x, &x));
        let x12 = kron(&x, &kron(&x, &id));
        let expected = (x01 * C64::new(0.0, -1.0)) * (x12 * C64::new(0.0, -1.0));
        assert!(linalg::max_abs_diff(u.entries(), &expected) < 1e-12);
    }

    #[test]
    fn product_form_rejects_field() {
        let mut s = spec(Model::XxProduct, 3);
        s.g = 0.5;
        assert!(build_xx_product_form(&s).is_err());
    }

    #[test]
    fn hamiltonian_cap_enforced() {
        let j = coupling_matrix(15, 1.0, Alpha::Infinite);
        assert!(matches!(
            zz_ising_hamiltonian(&j, 1.0),
            Err(QercError::TooManyQubits { .. })
        ));
    }

    #[test]
    fn hamiltonians_match_kronecker_construction() {
        let n = 3;
        let j = coupling_matrix(n, 1.3, Alpha::Finite(1.5));
        let g = 0.4;
        let x = gates::to_matrix(&gates::PAULI_X);
        let z = gates::to_matrix(&gates::PAULI_Z);
        let id = DMatrix::<C64>::identity(2, 2);
        let op = |factors: &[(usize, &DMatrix<C64>)]| {
            let mut m = DMatrix::<C64>::identity(1, 1);
            for q in (0..n).rev() {
                let f = factors
                    .iter()
                    .find(|(k, _)| *k == q)
                    .map(|(_, f)| *f)
                    .unwrap_or(&id);
                m = kron(&m, f);
            }
            m
        };
        let mut zz = DMatrix::from_element(8, 8, ZERO);
        let mut xx = DMatrix::from_element(8, 8, ZERO);
        for l in 0..n {
            for m in 0..l {
                zz += op(&[(l, &z), (m, &z)]) * C64::new(j[(l, m)], 0.0);
                xx += op(&[(l, &x), (m, &x)]) * C64::new(j[(l, m)], 0.0);
            }
            zz += op(&[(l, &x)]) * C64::new(g, 0.0);
            xx += op(&[(l, &z)]) * C64::new(g, 0.0);
        }
        assert!(linalg::max_abs_diff(zz_ising_hamiltonian(&j, g).unwrap().entries(), &zz) < 1e-14);
        assert!(linalg::max_abs_diff(xx_ising_hamiltonian(&j, g).unwrap().entries(), &xx) < 1e-14);
    }
}
