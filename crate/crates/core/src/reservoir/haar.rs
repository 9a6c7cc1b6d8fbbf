use crate::error::Result;
use crate::linalg::C64;
use crate::rng;
use crate::unitary::{check_cap, UnitaryMatrix, UnitaryMeta};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_1_SQRT_2;

/// Haar-random `U(2^N)`: QR of a complex Ginibre matrix, with the phases of
/// `R`'s diagonal moved into `Q` so the result is Haar distributed.
pub fn sample_haar_unitary(num_qubits: usize, seed: u64) -> Result<UnitaryMatrix> {
    check_cap(num_qubits)?;
    let dim = 1usize << num_qubits;
    let mut rng = rng::seeded(seed);
    let ginibre = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * FRAC_1_SQRT_2
    });
    let qr = ginibre.qr();
    let r_diag = qr.r().diagonal();
    let mut q = qr.q();
    for (mut col, r) in q.column_iter_mut().zip(r_diag.iter()) {
        let norm = r.norm();
        if norm > 0.0 {
            col *= r / norm;
        }
    }
    Ok(UnitaryMatrix::from_parts(
        q,
        UnitaryMeta::new("haar").seed(seed),
    ))
}
