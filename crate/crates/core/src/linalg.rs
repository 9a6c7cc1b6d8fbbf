//! Dense complex kernels shared by the simulator.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// `c = a * b` for column-major operands, `a` is `m x k`, `b` is `k x n`.
pub fn gemm_into(m: usize, k: usize, n: usize, a: &[C64], b: &[C64], c: &mut [C64]) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.fill(ZERO);
        return;
    }
    // SAFETY: lengths are checked above, Complex64 is repr(C) with the same
    // layout as [f64; 2], and the strides describe column-major storage.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
}

/// `c = a * b + beta * c` for real operands given by `(row, column)` strides;
/// `c` is row-major `m x n`.
#[allow(clippy::too_many_arguments)]
pub fn real_gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (usize, usize),
    b: &[f64],
    b_strides: (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|v| *v *= beta);
        return;
    }
    let last =
        |rows: usize, cols: usize, (rs, cs): (usize, usize)| (rows - 1) * rs + (cols - 1) * cs;
    assert!(last(m, k, a_strides) < a.len());
    assert!(last(k, n, b_strides) < b.len());
    // SAFETY: every index reachable through the given strides was bounds
    // checked above, and `c` is a dense row-major m x n buffer.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0 as isize,
            a_strides.1 as isize,
            b.as_ptr(),
            b_strides.0 as isize,
            b_strides.1 as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut c = DMatrix::from_element(m, n, ZERO);
    gemm_into(m, k, n, a.as_slice(), b.as_slice(), c.as_mut_slice());
    c
}

/// `max |a^dag a - I|` over all entries.
pub fn unitarity_error(a: &DMatrix<C64>) -> f64 {
    let prod = matmul(&a.adjoint(), a);
    max_identity_deviation(&prod)
}

pub fn max_identity_deviation(a: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0f64;
    for c in 0..a.ncols() {
        for r in 0..a.nrows() {
            let target = if r == c { ONE } else { ZERO };
            worst = worst.max((a[(r, c)] - target).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Kronecker product with `a` acting on the more significant bits.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

pub fn is_power_of_two_dim(dim: usize) -> Option<usize> {
    (dim.is_power_of_two() && dim >= 1).then(|| dim.trailing_zeros() as usize)
}
