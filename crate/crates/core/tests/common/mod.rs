//! Test-side oracles built from Kronecker products and a Taylor exponential,
//! independent of the library's bit-indexed constructions.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub fn pauli(kind: char) -> DMatrix<C64> {
    let c = |re: f64, im: f64| C64::new(re, im);
    match kind {
        'I' => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]),
        'X' => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        'Y' => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        'Z' => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
        _ => panic!("unknown pauli {kind}"),
    }
}

/// `ops[N-1] (x) ... (x) ops[0]`, so qubit 0 is the least significant bit.
pub fn kron_qubits(ops: &[DMatrix<C64>]) -> DMatrix<C64> {
    let mut out = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for op in ops.iter().rev() {
        out = out.kronecker(op);
    }
    out
}

/// Pauli string with `kind` on the listed qubits and identity elsewhere.
pub fn pauli_on(n: usize, qubits: &[usize], kind: char) -> DMatrix<C64> {
    let ops: Vec<_> = (0..n)
        .map(|q| pauli(if qubits.contains(&q) { kind } else { 'I' }))
        .collect();
    kron_qubits(&ops)
}

pub fn coupling(j0: f64, alpha: Option<f64>, l: usize, m: usize) -> f64 {
    let d = l.abs_diff(m) as f64;
    match alpha {
        None => {
            if d == 1.0 {
                j0
            } else {
                0.0
            }
        }
        Some(a) => j0 / d.powf(a),
    }
}

/// `sum_{l>m} J_lm A_l A_m + g sum_l B_l` for (A, B) = (Z, X) or (X, Z).
pub fn ising(
    n: usize,
    j0: f64,
    alpha: Option<f64>,
    g: f64,
    pair: char,
    field: char,
) -> DMatrix<C64> {
    let dim = 1 << n;
    let mut h = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for l in 0..n {
        for m in 0..l {
            let j = coupling(j0, alpha, l, m);
            if j != 0.0 {
                h += pauli_on(n, &[l, m], pair) * C64::new(j, 0.0);
            }
        }
        h += pauli_on(n, &[l], field) * C64::new(g, 0.0);
    }
    h
}

/// `exp(a)` by scaling and squaring around a 30-term Taylor series.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * a.nrows() as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / C64::new(2f64.powi(squarings), 0.0);
    let n = a.nrows();
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(-i t h)`.
pub fn evolve(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    expm(&(h * C64::new(0.0, -t)))
}

pub fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `max |a - e^{i phi} b|` with the phase taken from `<b, a>`.
pub fn max_diff_up_to_phase(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let overlap: C64 = b.iter().zip(a.iter()).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 1e-300 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    max_diff(a, &(b * phase))
}

pub fn column_probabilities(u: &DMatrix<C64>, psi: &[C64]) -> Vec<f64> {
    let v = u * nalgebra::DVector::from_column_slice(psi);
    v.iter().map(|z| z.norm_sqr()).collect()
}

/// Writes a small four-class IDX dataset of noisy 8x8 stripe patterns.
pub fn write_synthetic_idx(dir: &std::path::Path, train: usize, test: usize, seed: u64) {
    use qerc::datasets::{LabeledDataset, Split};
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut make = |count: usize, split: Split| {
        let mut images = Vec::with_capacity(count * 64);
        let mut labels = Vec::with_capacity(count);
        for i in 0..count {
            let c = i % 4;
            for p in 0..64 {
                let (r, col) = (p / 8, p % 8);
                let on = match c {
                    0 => col % 3 == 0,
                    1 => r % 3 == 0,
                    2 => r == col || r + col == 7,
                    _ => (2..6).contains(&r) && (2..6).contains(&col),
                };
                let base = if on { 200.0 } else { 30.0 };
                let v: f64 = base + rng.random_range(-60.0..60.0);
                images.push(v.clamp(0.0, 255.0) as u8);
            }
            labels.push(c as u8);
        }
        LabeledDataset::new(8, 8, images, labels, split).unwrap()
    };
    let tr = make(train, Split::Train);
    let te = make(test, Split::Test);
    tr.write_idx(
        &dir.join("train-images-idx3-ubyte"),
        &dir.join("train-labels-idx1-ubyte"),
    )
    .unwrap();
    te.write_idx(
        &dir.join("t10k-images-idx3-ubyte"),
        &dir.join("t10k-labels-idx1-ubyte"),
    )
    .unwrap();
}

/// MNIST location for data-gated tests: `QERC_DATA_DIR`, else `data/mnist`
/// at the workspace root.
pub fn mnist_dir() -> Option<std::path::PathBuf> {
    if let Some(dir) = std::env::var_os(qerc::experiment::DATA_DIR_ENV) {
        return Some(dir.into());
    }
    let local = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
    local
        .join("train-labels-idx1-ubyte")
        .exists()
        .then_some(local)
}
