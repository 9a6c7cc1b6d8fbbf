//! PCA compression of images and the min/max map onto rotation angles.

use crate::error::{QercError, Result};
use crate::gates::Gate;
use crate::linalg::real_gemm;
use crate::state::StateVector;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const CACHE_MAGIC: &[u8; 8] = b"QERCPCA\0";
const CACHE_VERSION: u32 = 1;
const CHUNK: usize = 512;

/// Principal axes fitted on a training set plus the per-component range of
/// the training projections.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// Row-major `k x dim`.
    components: Vec<f64>,
    explained_variance: Vec<f64>,
    train_min: Vec<f64>,
    train_max: Vec<f64>,
}

/// Rotation angles for `N` qubits, every entry in `[0, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedAngles {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl EncodedAngles {
    /// Splits `2N` values: the first half are polar angles, the rest azimuthal.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.len() % 2 != 0 || values.is_empty() {
            return Err(QercError::InvalidParameter(format!(
                "need an even, nonzero number of angle values, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=PI).contains(*v)) {
            return Err(QercError::Domain(format!("angle {v} outside [0, pi]")));
        }
        let n = values.len() / 2;
        Ok(Self {
            theta: values[..n].to_vec(),
            phi: values[n..].to_vec(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.theta.len()
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.theta
            .iter()
            .copied()
            .zip(self.phi.iter().copied())
            .collect()
    }

    pub fn to_state(&self) -> Result<StateVector> {
        StateVector::product(&self.pairs())
    }
}

/// Fits `k` principal components to `images`.
pub fn fit_pca<S: AsRef<[f64]>>(images: &[S], k: usize) -> Result<PcaModel> {
    let dim = images
        .first()
        .map(|r| r.as_ref().len())
        .ok_or(QercError::Empty("training images"))?;
    fit_pca_with(images.len(), dim, k, |i, out| {
        let row = images[i].as_ref();
        if row.len() != dim {
            return Err(QercError::dims(dim, row.len()));
        }
        out.copy_from_slice(row);
        Ok(())
    })
}

/// Streaming variant: `fill(i, out)` writes image `i` into `out`.
pub fn fit_pca_with<F>(count: usize, dim: usize, k: usize, fill: F) -> Result<PcaModel>
where
    F: Fn(usize, &mut [f64]) -> Result<()>,
{
    if count == 0 {
        return Err(QercError::Empty("training images"));
    }
    if k == 0 || k > dim {
        return Err(QercError::InvalidParameter(format!(
            "cannot keep {k} components of {dim}-dimensional data"
        )));
    }

    let mut row = vec![0.0; dim];
    let mut mean = vec![0.0; dim];
    for i in 0..count {
        fill(i, &mut row)?;
        for (m, x) in mean.iter_mut().zip(&row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count as f64);

    let mut cov = vec![0.0; dim * dim];
    let mut chunk = vec![0.0; CHUNK * dim];
    for start in (0..count).step_by(CHUNK) {
        let rows = CHUNK.min(count - start);
        for r in 0..rows {
            let dst = &mut chunk[r * dim..(r + 1) * dim];
            fill(start + r, dst)?;
            for (x, m) in dst.iter_mut().zip(&mean) {
                *x -= m;
            }
        }
        real_gemm(
            dim,
            rows,
            dim,
            &chunk,
            (1, dim),
            &chunk,
            (dim, 1),
            1.0,
            &mut cov,
        );
    }
    let inv = 1.0 / count as f64;
    let cov = DMatrix::from_fn(dim, dim, |r, c| {
        0.5 * (cov[r * dim + c] + cov[c * dim + r]) * inv
    });
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let top = eig.eigenvalues[order[0]].max(0.0);
    let scale = 1.0 + mean.iter().map(|m| m * m).sum::<f64>() / dim as f64;
    let tol = (top * dim as f64 * 1e-12).max(scale * 1e-20);
    let rank = if top > 0.0 {
        order.iter().filter(|&&i| eig.eigenvalues[i] > tol).count()
    } else {
        0
    };
    if k > rank {
        return Err(QercError::RankDeficient { requested: k, rank });
    }

    let mut components = vec![0.0; k * dim];
    let mut explained_variance = Vec::with_capacity(k);
    for (c, &idx) in order.iter().take(k).enumerate() {
        let axis = eig.eigenvectors.column(idx);
        let pivot =
            axis.iter().enumerate().fold(
                0,
                |best, (j, v)| if v.abs() > axis[best].abs() { j } else { best },
            );
        let sign = if axis[pivot] < 0.0 { -1.0 } else { 1.0 };
        for (dst, v) in components[c * dim..(c + 1) * dim]
            .iter_mut()
            .zip(axis.iter())
        {
            *dst = sign * v;
        }
        explained_variance.push(eig.eigenvalues[idx]);
    }

    let mut model = PcaModel {
        mean,
        components,
        explained_variance,
        train_min: vec![f64::INFINITY; k],
        train_max: vec![f64::NEG_INFINITY; k],
    };
    let mut proj = vec![0.0; CHUNK * k];
    for start in (0..count).step_by(CHUNK) {
        let rows = CHUNK.min(count - start);
        for r in 0..rows {
            fill(start + r, &mut chunk[r * dim..(r + 1) * dim])?;
        }
        model.project_rows_into(&mut chunk[..rows * dim], &mut proj[..rows * k]);
        for p in proj[..rows * k].chunks_exact(k) {
            for (l, v) in p.iter().enumerate() {
                model.train_min[l] = model.train_min[l].min(*v);
                model.train_max[l] = model.train_max[l].max(*v);
            }
        }
    }
    if model
        .train_min
        .iter()
        .zip(&model.train_max)
        .any(|(lo, hi)| !(hi > lo))
    {
        return Err(QercError::DegenerateFeatures);
    }
    Ok(model)
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn num_components(&self) -> usize {
        self.explained_variance.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_components() / 2
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn component(&self, l: usize) -> &[f64] {
        let d = self.dim();
        &self.components[l * d..(l + 1) * d]
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn train_min(&self) -> &[f64] {
        &self.train_min
    }

    pub fn train_max(&self) -> &[f64] {
        &self.train_max
    }

    /// `c_l = <v_l, image - mean>`.
    pub fn project(&self, image: &[f64]) -> Result<Vec<f64>> {
        if image.len() != self.dim() {
            return Err(QercError::dims(self.dim(), image.len()));
        }
        Ok((0..self.num_components())
            .map(|l| {
                self.component(l)
                    .iter()
                    .zip(image.iter().zip(&self.mean))
                    .map(|(v, (x, m))| v * (x - m))
                    .sum()
            })
            .collect())
    }

    /// Projects row-major images in place-centred form; `rows` is clobbered.
    fn project_rows_into(&self, rows: &mut [f64], out: &mut [f64]) {
        let (d, k) = (self.dim(), self.num_components());
        let n = rows.len() / d;
        for r in rows.chunks_exact_mut(d) {
            for (x, m) in r.iter_mut().zip(&self.mean) {
                *x -= m;
            }
        }
        real_gemm(n, d, k, rows, (d, 1), &self.components, (1, d), 0.0, out);
    }

    /// Projects many row-major images (`n x dim`); returns `n x k` row-major.
    pub fn project_many(&self, images: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        if images.len() % d != 0 {
            return Err(QercError::dims(d, images.len() % d));
        }
        let mut rows = images.to_vec();
        let mut out = vec![0.0; images.len() / d * self.num_components()];
        self.project_rows_into(&mut rows, &mut out);
        Ok(out)
    }

    /// `pi (c - min) / (max - min)` clamped to `[0, pi]`.
    pub fn components_to_angles(&self, c: &[f64]) -> Result<EncodedAngles> {
        let k = self.num_components();
        if c.len() != k {
            return Err(QercError::dims(k, c.len()));
        }
        if k % 2 != 0 {
            return Err(QercError::InvalidParameter(format!(
                "{k} components cannot be split into theta/phi"
            )));
        }
        let values: Vec<f64> = c
            .iter()
            .zip(self.train_min.iter().zip(&self.train_max))
            .map(|(v, (lo, hi))| (PI * ((v - lo) / (hi - lo))).clamp(0.0, PI))
            .collect();
        EncodedAngles::from_values(&values)
    }

    pub fn angles(&self, image: &[f64]) -> Result<EncodedAngles> {
        self.components_to_angles(&self.project(image)?)
    }

    /// Product state for `image`, followed by an optional fixed single-qubit layer.
    pub fn encode_image(&self, image: &[f64], rotations: Option<&[Gate]>) -> Result<StateVector> {
        let state = self.angles(image)?.to_state()?;
        match rotations {
            Some(layer) => state.apply_single_qubit_layer(layer),
            None => Ok(state),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(CACHE_MAGIC)?;
        w.write_u32::<LittleEndian>(CACHE_VERSION)?;
        w.write_u64::<LittleEndian>(self.dim() as u64)?;
        w.write_u64::<LittleEndian>(self.num_components() as u64)?;
        for block in [
            &self.mean,
            &self.components,
            &self.explained_variance,
            &self.train_min,
            &self.train_max,
        ] {
            for v in block.iter() {
                w.write_f64::<LittleEndian>(*v)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut offset = 0u64;
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic, &mut offset)?;
        if &magic != CACHE_MAGIC {
            return Err(QercError::Parse {
                offset: 0,
                message: "not a PCA cache file".into(),
            });
        }
        let version = r
            .read_u32::<LittleEndian>()
            .map_err(|e| truncated(offset, e))?;
        if version != CACHE_VERSION {
            return Err(QercError::Parse {
                offset,
                message: format!("unsupported cache version {version}"),
            });
        }
        offset += 4;
        let dim = r
            .read_u64::<LittleEndian>()
            .map_err(|e| truncated(offset, e))? as usize;
        offset += 8;
        let k = r
            .read_u64::<LittleEndian>()
            .map_err(|e| truncated(offset, e))? as usize;
        offset += 8;
        if k == 0 || k > dim || dim > 1 << 24 {
            return Err(QercError::Parse {
                offset,
                message: format!("implausible shape dim={dim}, k={k}"),
            });
        }
        let mut block = |len: usize| -> Result<Vec<f64>> {
            let mut v = vec![0.0; len];
            r.read_f64_into::<LittleEndian>(&mut v)
                .map_err(|e| truncated(offset, e))?;
            offset += 8 * len as u64;
            Ok(v)
        };
        Ok(Self {
            mean: block(dim)?,
            components: block(k * dim)?,
            explained_variance: block(k)?,
            train_min: block(k)?,
            train_max: block(k)?,
        })
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], offset: &mut u64) -> Result<()> {
    r.read_exact(buf).map_err(|e| truncated(*offset, e))?;
    *offset += buf.len() as u64;
    Ok(())
}

fn truncated(offset: u64, e: std::io::Error) -> QercError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        QercError::Parse {
            offset,
            message: "unexpected end of file".into(),
        }
    } else {
        QercError::Io(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_images(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = crate::rng::seeded(seed);
        // anisotropic cloud so components are well separated
        (0..n)
            .map(|_| {
                (0..d)
                    .map(|j| rng.random::<f64>() * (d - j) as f64)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn identical_images_have_rank_zero() {
        let images = vec![vec![0.3; 5]; 10];
        assert!(matches!(
            fit_pca(&images, 1),
            Err(QercError::RankDeficient {
                requested: 1,
                rank: 0
            })
        ));
    }

    #[test]
    fn two_point_toy() {
        let m = fit_pca(&[vec![1.0, 0.0], vec![-1.0, 0.0]], 1).unwrap();
        assert_abs_diff_eq!(m.component(0)[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.component(0)[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.project(&[1.0, 0.0]).unwrap()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.train_min()[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.train_max()[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn components_orthonormal_sorted_and_signed() {
        let images = random_images(300, 12, 1);
        let m = fit_pca(&images, 6).unwrap();
        for a in 0..6 {
            for b in 0..6 {
                let dot: f64 = m
                    .component(a)
                    .iter()
                    .zip(m.component(b))
                    .map(|(x, y)| x * y)
                    .sum();
                assert_abs_diff_eq!(dot, if a == b { 1.0 } else { 0.0 }, epsilon = 1e-8);
            }
            let v = m.component(a);
            let pivot = v
                .iter()
                .cloned()
                .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            assert!(pivot > 0.0);
        }
        assert!(m.explained_variance().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn projection_examples() {
        let images = random_images(200, 8, 2);
        let m = fit_pca(&images, 4).unwrap();
        assert!(m.project(m.mean()).unwrap().iter().all(|v| v.abs() < 1e-12));
        let shifted: Vec<f64> = m
            .mean()
            .iter()
            .zip(m.component(0))
            .map(|(a, b)| a + b)
            .collect();
        let c = m.project(&shifted).unwrap();
        assert_abs_diff_eq!(c[0], 1.0, epsilon = 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
        assert!(m.project(&[0.0; 3]).is_err());
    }

    #[test]
    fn train_extremes_map_to_zero_and_pi() {
        let images = random_images(150, 6, 3);
        let m = fit_pca(&images, 4).unwrap();
        let mut lo = [f64::INFINITY; 4];
        let mut hi = [f64::NEG_INFINITY; 4];
        for img in &images {
            for (l, v) in m.project(img).unwrap().into_iter().enumerate() {
                lo[l] = lo[l].min(v);
                hi[l] = hi[l].max(v);
            }
        }
        for l in 0..4 {
            assert_abs_diff_eq!(lo[l], m.train_min()[l], epsilon = 1e-12);
            assert_abs_diff_eq!(hi[l], m.train_max()[l], epsilon = 1e-12);
        }
        let at_min = m.components_to_angles(m.train_min()).unwrap();
        let at_max = m.components_to_angles(m.train_max()).unwrap();
        assert!(at_min.theta.iter().chain(&at_min.phi).all(|&a| a == 0.0));
        assert!(at_max.theta.iter().chain(&at_max.phi).all(|&a| a == PI));
        let below: Vec<f64> = m.train_min().iter().map(|v| v - 10.0).collect();
        assert!(m
            .components_to_angles(&below)
            .unwrap()
            .theta
            .iter()
            .all(|&a| a == 0.0));
    }

    #[test]
    fn symmetric_range_sends_mean_to_half_pi() {
        let images = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 2.0],
            vec![0.0, -2.0],
        ];
        let m = fit_pca(&images, 2).unwrap();
        let a = m.angles(&[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(a.theta[0], PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.phi[0], PI / 2.0, epsilon = 1e-12);
        let s1 = m.encode_image(&[0.3, 0.1], None).unwrap();
        let s2 = m.encode_image(&[0.3, 0.1], None).unwrap();
        assert_eq!(s1, s2);
        assert_abs_diff_eq!(s1.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn batch_projection_matches_single() {
        let images = random_images(100, 10, 4);
        let m = fit_pca(&images, 4).unwrap();
        let flat: Vec<f64> = images.iter().flatten().copied().collect();
        let many = m.project_many(&flat).unwrap();
        for (i, img) in images.iter().enumerate() {
            for (a, b) in m
                .project(img)
                .unwrap()
                .iter()
                .zip(&many[i * 4..(i + 1) * 4])
            {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cache_round_trip() {
        let m = fit_pca(&random_images(80, 7, 5), 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pca.bin");
        m.save(&path).unwrap();
        assert_eq!(PcaModel::load(&path).unwrap(), m);
        std::fs::write(&path, b"QERCPCA\0\x01\0\0\0").unwrap();
        assert!(matches!(
            PcaModel::load(&path),
            Err(QercError::Parse { .. })
        ));
        std::fs::write(&path, b"garbage!").unwrap();
        assert!(matches!(
            PcaModel::load(&path),
            Err(QercError::Parse { offset: 0, .. })
        ));
    }
}
