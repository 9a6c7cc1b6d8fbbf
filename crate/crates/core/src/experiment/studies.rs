use super::config::{BaselineKind, ExperimentConfig, InputSource};
use super::pipeline::{
    features_from_probabilities, shot_seeds, train_readout, DataBundle, Inputs, PcaStore, Pipeline,
    RunResult,
};
use crate::datasets::{gen_gaussian_blobs, gen_uniform_angles, points_to_angles, BlobConfig};
use crate::encoder::EncodedAngles;
use crate::error::{QercError, Result};
use crate::metrics::{
    kld_of, laplace_smoothed, median_pairwise_distance, normalized_kernel, rff_features,
    shot_scaling_curve, PrReport, ScaledPoint, ShotPoint,
};
use crate::mlayer::{resample_in_place, FeatureMatrix};
use crate::reservoir::Model;
use crate::rng;
use nalgebra::DMatrix;
use rand::seq::index;
use std::f64::consts::PI;

/// Number of points on the default time grid of the PR study.
pub const DEFAULT_PR_POINTS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub result: RunResult,
}

/// One training run per value of `axis`, sharing PCA fits and seeds.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    data: &DataBundle,
    store: &mut PcaStore,
    axis: &str,
    values: &[String],
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(QercError::Config("sweep needs at least one value".into()));
    }
    let cells = values
        .iter()
        .map(|v| {
            let mut c = cfg.clone();
            c.set(axis, v)?;
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    cells
        .iter()
        .zip(values)
        .map(|(c, v)| {
            Ok(SweepRow {
                value: v.clone(),
                result: super::run_train(c, data, store)?,
            })
        })
        .collect()
}

/// Linear softmax without a reservoir, on pixels or leading principal components.
pub fn run_baseline(
    cfg: &ExperimentConfig,
    data: &DataBundle,
    store: &mut PcaStore,
) -> Result<RunResult> {
    let (xtr, xte) = match cfg.baseline {
        BaselineKind::Pixels => (data.train.pixel_matrix(), data.test.pixel_matrix()),
        BaselineKind::Pca => {
            let pca = store.get(cfg, &data.train, cfg.baseline_components)?;
            let angles = |ds: &crate::datasets::LabeledDataset| -> Result<FeatureMatrix> {
                let rows: Vec<Vec<f64>> = (0..ds.len())
                    .map(|i| {
                        let a = pca.angles(&ds.pixels(i))?;
                        Ok(a.theta.into_iter().chain(a.phi).collect())
                    })
                    .collect::<Result<_>>()?;
                FeatureMatrix::from_rows(&rows)
            };
            (angles(&data.train)?, angles(&data.test)?)
        }
    };
    train_readout(
        cfg,
        (&xtr, &data.train.labels_usize()),
        (&xte, &data.test.labels_usize()),
        data.num_classes(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotRun {
    pub num_qubits: usize,
    /// `None` is the exact-probability run.
    pub shots: Option<u64>,
    pub repeat: usize,
    pub result: RunResult,
    /// Mean `KL(p || smoothed empirical p)` over the first test states.
    pub mean_kld: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotStudy {
    pub runs: Vec<ShotRun>,
    pub scaling: Vec<ScaledPoint>,
}

impl ShotStudy {
    /// Mean test accuracy over repeats at `(n, shots)`.
    pub fn mean_test(&self, n: usize, shots: Option<u64>) -> Option<f64> {
        let v: Vec<f64> = self
            .runs
            .iter()
            .filter(|r| r.num_qubits == n && r.shots == shots)
            .map(|r| r.result.test.mean)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn mean_kld(&self, n: usize, shots: u64) -> Option<f64> {
        let v: Vec<f64> = self
            .runs
            .iter()
            .filter(|r| r.num_qubits == n && r.shots == Some(shots))
            .filter_map(|r| r.mean_kld)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Accuracy and distribution-reconstruction error against the shot count.
pub fn run_shot_study(
    cfg: &ExperimentConfig,
    data: &DataBundle,
    store: &mut PcaStore,
) -> Result<ShotStudy> {
    if cfg.shot_values.is_empty() || cfg.shot_qubits.is_empty() {
        return Err(QercError::Config(
            "shot study needs shots.values and shots.qubits".into(),
        ));
    }
    let ytr = data.train.labels_usize();
    let yte = data.test.labels_usize();
    let mut runs = Vec::new();
    let mut points = Vec::new();
    for &n in &cfg.shot_qubits {
        let mut c = cfg.clone();
        c.reservoir.num_qubits = n;
        c.shots = None;
        c.validate()?;
        let dim = 1usize << n;
        let pipeline = Pipeline::from_config(&c)?;
        let pca = store.get(&c, &data.train, 2 * n)?;
        let ptr = pipeline
            .probabilities(&Inputs::Images {
                pca,
                data: &data.train,
            })
            .map_err(|e| e.at("features"))?;
        let pte = pipeline
            .probabilities(&Inputs::Images {
                pca,
                data: &data.test,
            })
            .map_err(|e| e.at("features"))?;

        let exact = {
            let xtr = features_from_probabilities(&ptr, dim, c.mode, None, 0)?;
            let xte = features_from_probabilities(&pte, dim, c.mode, None, 0)?;
            train_readout(&c, (&xtr, &ytr), (&xte, &yte), data.num_classes())?
        };
        let theory = exact.test.mean;
        if cfg.shot_values.contains(&None) {
            runs.push(ShotRun {
                num_qubits: n,
                shots: None,
                repeat: 0,
                result: exact,
                mean_kld: Some(0.0),
            });
        }

        for &shots in cfg.shot_values.iter().flatten() {
            let mut accs = Vec::with_capacity(cfg.shot_seeds);
            for repeat in 0..cfg.shot_seeds {
                let (s_tr, s_te) = shot_seeds(&c, repeat as u64);
                let xtr = features_from_probabilities(&ptr, dim, c.mode, Some(shots), s_tr)
                    .map_err(|e| e.at("sample"))?;
                let xte = features_from_probabilities(&pte, dim, c.mode, Some(shots), s_te)
                    .map_err(|e| e.at("sample"))?;
                let result = train_readout(&c, (&xtr, &ytr), (&xte, &yte), data.num_classes())?;
                let kld = mean_reconstruction_kld(&pte, dim, cfg.kld_states, shots, s_te)?;
                accs.push(result.test.mean);
                runs.push(ShotRun {
                    num_qubits: n,
                    shots: Some(shots),
                    repeat,
                    result,
                    mean_kld: kld,
                });
            }
            points.push(ShotPoint {
                num_qubits: n,
                shots,
                acc_empirical: accs.iter().sum::<f64>() / accs.len() as f64,
                acc_theoretical: theory,
            });
        }
    }
    Ok(ShotStudy {
        runs,
        scaling: shot_scaling_curve(&points),
    })
}

/// Resamples the first `states` rows exactly as the feature path does and
/// averages `KL(p || add-one-smoothed empirical)`.
fn mean_reconstruction_kld(
    probs: &[f64],
    dim: usize,
    states: usize,
    shots: u64,
    seed: u64,
) -> Result<Option<f64>> {
    let rows = states.min(probs.len() / dim);
    if rows == 0 {
        return Ok(None);
    }
    let mut total = 0.0;
    for (i, p) in probs.chunks_exact(dim).take(rows).enumerate() {
        let mut emp = p.to_vec();
        resample_in_place(&mut emp, shots, &mut rng::substream(seed, i as u64))?;
        total += kld_of(p, &laplace_smoothed(&emp, shots))?;
    }
    Ok(Some(total / rows as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrRow {
    /// Swept key, or the reference model name.
    pub label: String,
    pub value: String,
    pub apr: f64,
    pub iapr: f64,
    pub delta_pr: f64,
}

impl PrRow {
    fn new(label: &str, value: &str, r: &PrReport) -> Self {
        Self {
            label: label.into(),
            value: value.into(),
            apr: r.apr,
            iapr: r.iapr,
            delta_pr: r.delta_pr,
        }
    }
}

/// `DEFAULT_PR_POINTS` evenly spaced scaled times on `[0, 2 pi]`.
pub fn default_time_grid() -> Vec<String> {
    (0..DEFAULT_PR_POINTS)
        .map(|i| (2.0 * PI * i as f64 / (DEFAULT_PR_POINTS - 1) as f64).to_string())
        .collect()
}

enum OwnedInputs {
    Angles(Vec<EncodedAngles>),
    Mnist(crate::datasets::LabeledDataset),
}

/// APR / IAPR / Delta PR along a parameter axis, plus Haar and SRC references.
pub fn run_pr_study(
    cfg: &ExperimentConfig,
    data: Option<&DataBundle>,
    store: &mut PcaStore,
) -> Result<Vec<PrRow>> {
    cfg.validate()?;
    let n = cfg.reservoir.num_qubits;
    let input_seed = cfg.sub_seed("inputs");
    let owned = match cfg.pr_source {
        InputSource::Uniform => {
            OwnedInputs::Angles(gen_uniform_angles(cfg.pr_count, n, input_seed))
        }
        InputSource::Blobs => {
            let blobs = gen_gaussian_blobs(&BlobConfig {
                count: cfg.pr_count,
                ..BlobConfig::for_qubits(n, input_seed)
            })?;
            OwnedInputs::Angles(points_to_angles(&blobs.points)?)
        }
        InputSource::Mnist => {
            let d =
                data.ok_or_else(|| QercError::Config("MNIST input source needs a dataset".into()))?;
            OwnedInputs::Mnist(d.train.truncated(cfg.pr_count))
        }
    };
    let pca = match (&owned, data) {
        (OwnedInputs::Mnist(_), Some(d)) => Some(store.get(cfg, &d.train, 2 * n)?.clone()),
        _ => None,
    };
    let inputs = match &owned {
        OwnedInputs::Angles(a) => Inputs::Angles(a),
        OwnedInputs::Mnist(ds) => Inputs::Images {
            pca: pca.as_ref().expect("fitted above"),
            data: ds,
        },
    };
    if inputs.is_empty() {
        return Err(QercError::Empty("PR inputs"));
    }

    let values = if cfg.pr_values.is_empty() {
        default_time_grid()
    } else {
        cfg.pr_values.clone()
    };
    let mut rows = Vec::with_capacity(values.len() + 2);
    for v in &values {
        let mut c = cfg.clone();
        c.set(&cfg.pr_axis, v)?;
        c.validate()?;
        let report = Pipeline::from_config(&c)?
            .pr_report(&inputs)
            .map_err(|e| e.at("pr"))?;
        rows.push(PrRow::new(&cfg.pr_axis, v, &report));
    }
    for model in [Model::Haar, Model::Src] {
        let mut c = cfg.clone();
        c.reservoir.model = model;
        let report = Pipeline::from_config(&c)?
            .pr_report(&inputs)
            .map_err(|e| e.at("pr"))?;
        rows.push(PrRow::new(model.name(), "reference", &report));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelOutput {
    /// Training-set indices, sorted by label then index.
    pub indices: Vec<usize>,
    pub labels: Vec<usize>,
    pub reservoir: DMatrix<f64>,
    pub rff: DMatrix<f64>,
    pub bandwidth: f64,
}

/// Normalized kernels of reservoir features and of random Fourier features
/// (`2^N` of them) on a class-sorted random subset of training images.
pub fn run_kernel(
    cfg: &ExperimentConfig,
    data: &DataBundle,
    store: &mut PcaStore,
) -> Result<KernelOutput> {
    cfg.validate()?;
    let n = cfg.reservoir.num_qubits;
    let count = cfg.kernel_samples.min(data.train.len());
    let mut r = rng::seeded(cfg.sub_seed("kernel"));
    let mut indices = index::sample(&mut r, data.train.len(), count).into_vec();
    indices.sort_by_key(|&i| (data.train.labels[i], i));
    let subset = data.train.select(&indices);

    let pca = store.get(cfg, &data.train, 2 * n)?;
    let pipeline = Pipeline::from_config(cfg)?;
    let (seed, _) = shot_seeds(cfg, 0);
    let q = pipeline.features(
        &Inputs::Images { pca, data: &subset },
        cfg.mode,
        cfg.shots,
        seed,
    )?;
    let pixels = subset.pixel_matrix();
    let bandwidth = match cfg.rff_bandwidth {
        Some(b) => b,
        None => median_pairwise_distance(&pixels, count)?,
    };
    let z = rff_features(&pixels, 1 << n, bandwidth, cfg.sub_seed("rff"))?;
    Ok(KernelOutput {
        labels: subset.labels_usize(),
        indices,
        reservoir: normalized_kernel(&q)?,
        rff: normalized_kernel(&z)?,
        bandwidth,
    })
}
