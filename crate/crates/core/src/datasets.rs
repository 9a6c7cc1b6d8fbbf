//! IDX image/label files and the synthetic angle generators.

use crate::encoder::EncodedAngles;
use crate::error::{QercError, Result};
use crate::mlayer::FeatureMatrix;
use crate::rng;
use byteorder::{BigEndian, ByteOrder, WriteBytesExt};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// Byte images (row-major, `rows x cols` each) with integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub rows: usize,
    pub cols: usize,
    pub images: Vec<u8>,
    pub labels: Vec<u8>,
    pub split: Split,
}

impl LabeledDataset {
    pub fn new(
        rows: usize,
        cols: usize,
        images: Vec<u8>,
        labels: Vec<u8>,
        split: Split,
    ) -> Result<Self> {
        if images.len() != rows * cols * labels.len() {
            return Err(QercError::dims(rows * cols * labels.len(), images.len()));
        }
        Ok(Self {
            rows,
            cols,
            images,
            labels,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn pixels_per_image(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let d = self.pixels_per_image();
        &self.images[i * d..(i + 1) * d]
    }

    /// Pixel values scaled to `[0, 1]`.
    pub fn fill_pixels(&self, i: usize, out: &mut [f64]) {
        for (o, &b) in out.iter_mut().zip(self.image(i)) {
            *o = b as f64 / 255.0;
        }
    }

    pub fn pixels(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.pixels_per_image()];
        self.fill_pixels(i, &mut out);
        out
    }

    /// All images scaled to `[0, 1]`, one row per image.
    pub fn pixel_matrix(&self) -> FeatureMatrix {
        let data = self.images.iter().map(|&b| b as f64 / 255.0).collect();
        FeatureMatrix::new(self.len(), self.pixels_per_image(), data).expect("consistent shape")
    }

    pub fn labels_usize(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| l as usize).collect()
    }

    pub fn num_classes(&self) -> usize {
        self.labels
            .iter()
            .copied()
            .max()
            .map_or(0, |m| m as usize + 1)
    }

    /// First `n` examples (or all of them if fewer).
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            rows: self.rows,
            cols: self.cols,
            images: self.images[..n * self.pixels_per_image()].to_vec(),
            labels: self.labels[..n].to_vec(),
            split: self.split,
        }
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let mut images = Vec::with_capacity(indices.len() * self.pixels_per_image());
        for &i in indices {
            images.extend_from_slice(self.image(i));
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            images,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            split: self.split,
        }
    }

    pub fn write_idx(&self, images_path: &Path, labels_path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(images_path)?);
        for v in [
            IMAGE_MAGIC,
            self.len() as u32,
            self.rows as u32,
            self.cols as u32,
        ] {
            w.write_u32::<BigEndian>(v)?;
        }
        w.write_all(&self.images)?;
        w.flush()?;
        let mut w = BufWriter::new(fs::File::create(labels_path)?);
        w.write_u32::<BigEndian>(LABEL_MAGIC)?;
        w.write_u32::<BigEndian>(self.len() as u32)?;
        w.write_all(&self.labels)?;
        w.flush()?;
        Ok(())
    }
}

fn header(bytes: &[u8], words: usize, what: &str) -> Result<Vec<u32>> {
    if bytes.len() < 4 * words {
        return Err(QercError::Parse {
            offset: bytes.len() as u64,
            message: format!(
                "{what}: truncated header ({} of {} bytes)",
                bytes.len(),
                4 * words
            ),
        });
    }
    Ok((0..words)
        .map(|i| BigEndian::read_u32(&bytes[4 * i..]))
        .collect())
}

fn expect_magic(found: u32, expected: u32, what: &str) -> Result<()> {
    if found != expected {
        return Err(QercError::Parse {
            offset: 0,
            message: format!("{what}: bad magic 0x{found:08x}, expected 0x{expected:08x}"),
        });
    }
    Ok(())
}

/// Parses an IDX image file: magic, count, rows, cols, then `count*rows*cols` bytes.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<u8>)> {
    let h = header(bytes, 4, "image file")?;
    expect_magic(h[0], IMAGE_MAGIC, "image file")?;
    let (count, rows, cols) = (h[1] as usize, h[2] as usize, h[3] as usize);
    let need = count * rows * cols;
    let body = &bytes[16..];
    if body.len() < need {
        return Err(QercError::Parse {
            offset: bytes.len() as u64,
            message: format!(
                "image file truncated: {need} pixel bytes declared, {} present",
                body.len()
            ),
        });
    }
    if body.len() > need {
        return Err(QercError::Parse {
            offset: 16 + need as u64,
            message: "trailing bytes after image data".into(),
        });
    }
    Ok((count, rows, cols, body.to_vec()))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let h = header(bytes, 2, "label file")?;
    expect_magic(h[0], LABEL_MAGIC, "label file")?;
    let count = h[1] as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(QercError::Parse {
            offset: bytes.len() as u64,
            message: format!(
                "label file truncated: {count} labels declared, {} present",
                body.len()
            ),
        });
    }
    if body.len() > count {
        return Err(QercError::Parse {
            offset: 8 + count as u64,
            message: "trailing bytes after label data".into(),
        });
    }
    Ok(body.to_vec())
}

pub fn load_idx(images_path: &Path, labels_path: &Path, split: Split) -> Result<LabeledDataset> {
    let read = |p: &Path| {
        fs::read(p).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))
    };
    let (count, rows, cols, images) = parse_idx_images(&read(images_path)?)?;
    let labels = parse_idx_labels(&read(labels_path)?)?;
    if labels.len() != count {
        return Err(QercError::Parse {
            offset: 4,
            message: format!("{count} images but {} labels", labels.len()),
        });
    }
    LabeledDataset::new(rows, cols, images, labels, split)
}

/// Locates the image/label pair for `split` in `dir`, accepting the usual
/// MNIST-family spellings (`train-images-idx3-ubyte`, `train-images.idx3-ubyte`).
pub fn idx_paths(dir: &Path, split: Split) -> Result<(PathBuf, PathBuf)> {
    let prefix = match split {
        Split::Train => "train",
        Split::Test => "t10k",
    };
    let find = |kind: &str, idx: &str| -> Result<PathBuf> {
        let candidates = [
            format!("{prefix}-{kind}-{idx}-ubyte"),
            format!("{prefix}-{kind}.{idx}-ubyte"),
        ];
        candidates
            .iter()
            .map(|c| dir.join(c))
            .find(|p| p.is_file())
            .ok_or_else(|| {
                QercError::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("no {} in {}", candidates[0], dir.display()),
                ))
            })
    };
    Ok((find("images", "idx3")?, find("labels", "idx1")?))
}

pub fn load_split(dir: &Path, split: Split) -> Result<LabeledDataset> {
    let (images, labels) = idx_paths(dir, split)?;
    load_idx(&images, &labels, split)
}

/// `count` tuples of `2N` independent angles uniform on `[0, pi]`.
pub fn gen_uniform_angles(count: usize, num_qubits: usize, seed: u64) -> Vec<EncodedAngles> {
    let mut rng = rng::seeded(seed);
    (0..count)
        .map(|_| {
            let values: Vec<f64> = (0..2 * num_qubits)
                .map(|_| rng.random_range(0.0..=PI))
                .collect();
            EncodedAngles::from_values(&values).expect("values in range")
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlobConfig {
    pub count: usize,
    pub clusters: usize,
    pub std: f64,
    pub box_min: f64,
    pub box_max: f64,
    pub dim: usize,
    pub seed: u64,
}

impl BlobConfig {
    /// Defaults for `N` qubits: 10000 points, 10 clusters, std 1.2, box
    /// `[-10, 10]`, dimension `2N`.
    pub fn for_qubits(num_qubits: usize, seed: u64) -> Self {
        Self {
            count: 10_000,
            clusters: 10,
            std: 1.2,
            box_min: -10.0,
            box_max: 10.0,
            dim: 2 * num_qubits,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Blobs {
    pub points: FeatureMatrix,
    pub labels: Vec<usize>,
    pub centers: FeatureMatrix,
}

/// Isotropic Gaussian clusters around uniform centers; point `i` belongs to
/// cluster `i mod clusters`.
pub fn gen_gaussian_blobs(cfg: &BlobConfig) -> Result<Blobs> {
    if cfg.clusters == 0 || cfg.dim == 0 {
        return Err(QercError::InvalidParameter(
            "clusters and dim must be >= 1".into(),
        ));
    }
    if !(cfg.std >= 0.0) || !(cfg.box_max > cfg.box_min) {
        return Err(QercError::InvalidParameter(format!(
            "need std >= 0 and box_min < box_max, got std={}, box=[{}, {}]",
            cfg.std, cfg.box_min, cfg.box_max
        )));
    }
    let mut rng = rng::seeded(cfg.seed);
    let centers: Vec<f64> = (0..cfg.clusters * cfg.dim)
        .map(|_| rng.random_range(cfg.box_min..=cfg.box_max))
        .collect();
    let noise = Normal::new(0.0, cfg.std).expect("std >= 0");
    let mut points = Vec::with_capacity(cfg.count * cfg.dim);
    let mut labels = Vec::with_capacity(cfg.count);
    for i in 0..cfg.count {
        let c = i % cfg.clusters;
        labels.push(c);
        for j in 0..cfg.dim {
            points.push(centers[c * cfg.dim + j] + noise.sample(&mut rng));
        }
    }
    Ok(Blobs {
        points: FeatureMatrix::new(cfg.count, cfg.dim, points)?,
        labels,
        centers: FeatureMatrix::new(cfg.clusters, cfg.dim, centers)?,
    })
}

/// Maps every coordinate to `[0, pi]` with the min/max over the whole set;
/// the first half of the coordinates become polar angles.
pub fn points_to_angles(points: &FeatureMatrix) -> Result<Vec<EncodedAngles>> {
    let d = points.cols();
    if points.rows() == 0 {
        return Err(QercError::Empty("points"));
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for row in points.iter_rows() {
        for (j, v) in row.iter().enumerate() {
            lo[j] = lo[j].min(*v);
            hi[j] = hi[j].max(*v);
        }
    }
    if lo.iter().zip(&hi).any(|(a, b)| !(b > a)) {
        return Err(QercError::DegenerateFeatures);
    }
    points
        .iter_rows()
        .map(|row| {
            let values: Vec<f64> = row
                .iter()
                .zip(lo.iter().zip(&hi))
                .map(|(v, (a, b))| (PI * ((v - a) / (b - a))).clamp(0.0, PI))
                .collect();
            EncodedAngles::from_values(&values)
        })
        .collect()
}
