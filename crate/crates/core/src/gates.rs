//! Single-qubit gate matrices, row-major `[[g00, g01], [g10, g11]]`.

use crate::linalg::{C64, I, ONE, ZERO};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

pub type Gate = [[C64; 2]; 2];

pub const IDENTITY: Gate = [[ONE, ZERO], [ZERO, ONE]];
pub const PAULI_X: Gate = [[ZERO, ONE], [ONE, ZERO]];
pub const PAULI_Y: Gate = [[ZERO, C64::new(0.0, -1.0)], [I, ZERO]];
pub const PAULI_Z: Gate = [[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]];
pub const HADAMARD: Gate = [
    [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)],
    [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(-FRAC_1_SQRT_2, 0.0)],
];
pub const PHASE_S: Gate = [[ONE, ZERO], [ZERO, I]];

pub fn t_gate() -> Gate {
    [[ONE, ZERO], [ZERO, C64::from_polar(1.0, FRAC_PI_4)]]
}

/// `exp(-i angle X)`. Note the angle convention matches `exp(-i theta sigma_x)`,
/// i.e. the usual `Rx(2 * angle)`.
pub fn x_rotation(angle: f64) -> Gate {
    let (s, c) = angle.sin_cos();
    [
        [C64::new(c, 0.0), C64::new(0.0, -s)],
        [C64::new(0.0, -s), C64::new(c, 0.0)],
    ]
}

/// `exp(i angle Y)`.
pub fn y_rotation_positive(angle: f64) -> Gate {
    let (s, c) = angle.sin_cos();
    [
        [C64::new(c, 0.0), C64::new(s, 0.0)],
        [C64::new(-s, 0.0), C64::new(c, 0.0)],
    ]
}

pub fn mul(a: &Gate, b: &Gate) -> Gate {
    let mut out = [[ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

pub fn adjoint(g: &Gate) -> Gate {
    [
        [g[0][0].conj(), g[1][0].conj()],
        [g[0][1].conj(), g[1][1].conj()],
    ]
}

/// `max |g^dag g - I|`.
pub fn unitarity_error(g: &Gate) -> f64 {
    let p = mul(&adjoint(g), g);
    let mut worst = 0.0f64;
    for r in 0..2 {
        for c in 0..2 {
            let target = if r == c { ONE } else { ZERO };
            worst = worst.max((p[r][c] - target).norm());
        }
    }
    worst
}

pub fn to_matrix(g: &Gate) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |r, c| g[r][c])
}

/// Haar-random element of U(2): QR of a complex Ginibre matrix with the
/// phases of R's diagonal folded back into Q.
pub fn haar_random<R: Rng + ?Sized>(rng: &mut R) -> Gate {
    let mut z = [[ZERO; 2]; 2];
    for row in z.iter_mut() {
        for v in row.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v = C64::new(re, im) * FRAC_1_SQRT_2;
        }
    }
    // Gram-Schmidt on the columns is QR for the 2x2 case.
    let col0 = [z[0][0], z[1][0]];
    let r00 = (col0[0].norm_sqr() + col0[1].norm_sqr()).sqrt();
    let q0 = [col0[0] / r00, col0[1] / r00];
    let col1 = [z[0][1], z[1][1]];
    let r01 = q0[0].conj() * col1[0] + q0[1].conj() * col1[1];
    let v1 = [col1[0] - q0[0] * r01, col1[1] - q0[1] * r01];
    let r11 = (v1[0].norm_sqr() + v1[1].norm_sqr()).sqrt();
    let q1 = [v1[0] / r11, v1[1] / r11];
    // R's diagonal (r00, r11) is real and positive here, so Q is already Haar distributed.
    [[q0[0], q1[0]], [q0[1], q1[1]]]
}
