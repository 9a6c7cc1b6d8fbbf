use super::config::{ExperimentConfig, DATA_DIR_ENV};
use crate::classifier::{self, EpochRecord, LabeledFeatures, WindowStats};
use crate::datasets::{self, LabeledDataset, Split};
use crate::encoder::{fit_pca_with, EncodedAngles, PcaModel};
use crate::error::{QercError, Result};
use crate::gates::Gate;
use crate::linalg::{C64, ZERO};
use crate::metrics::{PrAccumulator, PrReport};
use crate::mlayer::{feature_row_in_place, FeatureMatrix, StandardizeMode};
use crate::reservoir::{random_input_rotations, Reservoir, ReservoirSpec};
use crate::rng;
use crate::state::{apply_layer_in_place, StateVector};
use rayon::prelude::*;
use std::collections::HashMap;
use std::path::{Path, PathBuf};

/// States evolved together in one dense product.
const CHUNK: usize = 256;

#[derive(Debug, Clone)]
pub struct DataBundle {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

impl DataBundle {
    pub fn num_classes(&self) -> usize {
        self.train.num_classes().max(self.test.num_classes())
    }
}

pub fn resolve_data_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    if let Some(dir) = &cfg.data_dir {
        return Ok(dir.clone());
    }
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .ok_or_else(|| {
            QercError::Config(format!(
                "no dataset directory: set data.dir or {DATA_DIR_ENV}"
            ))
        })
}

/// Loads both splits from the configured directory and applies the size limits.
pub fn load_data(cfg: &ExperimentConfig) -> Result<DataBundle> {
    let dir = resolve_data_dir(cfg)?;
    let load = |split, limit: Option<usize>| -> Result<LabeledDataset> {
        let ds = datasets::load_split(&dir, split).map_err(|e| e.at("load data"))?;
        Ok(match limit {
            Some(n) => ds.truncated(n),
            None => ds,
        })
    };
    let bundle = DataBundle {
        train: load(Split::Train, cfg.train_limit)?,
        test: load(Split::Test, cfg.test_limit)?,
    };
    if bundle.train.is_empty() || bundle.test.is_empty() {
        return Err(QercError::Empty("dataset split").at("load data"));
    }
    Ok(bundle)
}

/// Fitted PCA models keyed by component count, optionally mirrored on disk.
#[derive(Debug, Default)]
pub struct PcaStore {
    models: HashMap<usize, PcaModel>,
}

impl PcaStore {
    pub fn get(
        &mut self,
        cfg: &ExperimentConfig,
        train: &LabeledDataset,
        k: usize,
    ) -> Result<&PcaModel> {
        if let std::collections::hash_map::Entry::Vacant(e) = self.models.entry(k) {
            let model =
                load_or_fit(cfg.pca_cache.as_deref(), train, k).map_err(|e| e.at("fit pca"))?;
            e.insert(model);
        }
        Ok(&self.models[&k])
    }
}

fn load_or_fit(cache_dir: Option<&Path>, train: &LabeledDataset, k: usize) -> Result<PcaModel> {
    let d = train.pixels_per_image();
    let path = cache_dir.map(|dir| dir.join(format!("pca-k{k}-n{}-d{d}.bin", train.len())));
    if let Some(p) = path.as_ref().filter(|p| p.is_file()) {
        let m = PcaModel::load(p)?;
        if m.dim() == d && m.num_components() == k {
            return Ok(m);
        }
    }
    let m = fit_pca_with(train.len(), d, k, |i, out| {
        train.fill_pixels(i, out);
        Ok(())
    })?;
    if let Some(p) = path {
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir)?;
        }
        m.save(&p)?;
    }
    Ok(m)
}

/// Encoder inputs: images through PCA, or precomputed angles.
#[derive(Debug, Clone, Copy)]
pub enum Inputs<'a> {
    Images {
        pca: &'a PcaModel,
        data: &'a LabeledDataset,
    },
    Angles(&'a [EncodedAngles]),
}

impl Inputs<'_> {
    pub fn len(&self) -> usize {
        match self {
            Inputs::Images { data, .. } => data.len(),
            Inputs::Angles(a) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn angles(&self, start: usize, rows: usize) -> Result<Vec<EncodedAngles>> {
        match self {
            Inputs::Angles(a) => Ok(a[start..start + rows].to_vec()),
            Inputs::Images { pca, data } => {
                let d = data.pixels_per_image();
                let mut pixels = vec![0.0; rows * d];
                for (r, out) in pixels.chunks_exact_mut(d).enumerate() {
                    data.fill_pixels(start + r, out);
                }
                let k = pca.num_components();
                pca.project_many(&pixels)?
                    .chunks_exact(k)
                    .map(|c| pca.components_to_angles(c))
                    .collect()
            }
        }
    }
}

/// Encoder, optional fixed input rotations and reservoir, applied to batches.
#[derive(Debug, Clone)]
pub struct Pipeline {
    reservoir: Reservoir,
    rotations: Option<Vec<Gate>>,
}

impl Pipeline {
    pub fn new(spec: &ReservoirSpec, rotations: Option<Vec<Gate>>) -> Result<Self> {
        let reservoir = Reservoir::build(spec).map_err(|e| e.at("build reservoir"))?;
        Ok(Self {
            reservoir,
            rotations,
        })
    }

    /// Reservoir from the config's derived seed, plus input rotations when enabled.
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let spec = cfg.reservoir_spec();
        let rotations = cfg
            .randomize_encoder
            .then(|| random_input_rotations(spec.num_qubits, cfg.sub_seed("encoder")));
        Self::new(&spec, rotations)
    }

    pub fn num_qubits(&self) -> usize {
        self.reservoir.num_qubits()
    }

    pub fn reservoir(&self) -> &Reservoir {
        &self.reservoir
    }

    fn chunk_probabilities(
        &self,
        inputs: &Inputs<'_>,
        start: usize,
        rows: usize,
    ) -> Result<Vec<f64>> {
        let dim = 1usize << self.num_qubits();
        let mut amps = vec![ZERO; rows * dim];
        for (a, out) in self
            .angles_checked(inputs, start, rows)?
            .iter()
            .zip(amps.chunks_exact_mut(dim))
        {
            out.copy_from_slice(a.to_state()?.amplitudes());
            if let Some(layer) = &self.rotations {
                apply_layer_in_place(out, layer);
            }
        }
        self.reservoir.apply_batch_in_place(&mut amps, rows)?;
        Ok(amps.iter().map(C64::norm_sqr).collect())
    }

    fn angles_checked(
        &self,
        inputs: &Inputs<'_>,
        start: usize,
        rows: usize,
    ) -> Result<Vec<EncodedAngles>> {
        let angles = inputs.angles(start, rows)?;
        if let Some(a) = angles.iter().find(|a| a.num_qubits() != self.num_qubits()) {
            return Err(QercError::dims(self.num_qubits(), a.num_qubits()));
        }
        Ok(angles)
    }

    /// Output state of a single input.
    pub fn output_state(&self, inputs: &Inputs<'_>, index: usize) -> Result<StateVector> {
        let a = &self.angles_checked(inputs, index, 1)?[0];
        let mut amps = a.to_state()?.into_amplitudes();
        if let Some(layer) = &self.rotations {
            apply_layer_in_place(&mut amps, layer);
        }
        self.reservoir.apply_batch_in_place(&mut amps, 1)?;
        StateVector::from_amplitudes(amps)
    }

    /// Row-major `inputs.len() x 2^N` output distributions.
    pub fn probabilities(&self, inputs: &Inputs<'_>) -> Result<Vec<f64>> {
        let dim = 1usize << self.num_qubits();
        let mut out = vec![0.0; inputs.len() * dim];
        out.par_chunks_mut(CHUNK * dim)
            .enumerate()
            .try_for_each(|(c, block)| {
                let p = self.chunk_probabilities(inputs, c * CHUNK, block.len() / dim)?;
                block.copy_from_slice(&p);
                Ok::<_, QercError>(())
            })?;
        Ok(out)
    }

    /// Standardized features of every input, optionally from `shots` samples
    /// (row `i` drawn from `rng::substream(seed, i)`).
    pub fn features(
        &self,
        inputs: &Inputs<'_>,
        mode: StandardizeMode,
        shots: Option<u64>,
        seed: u64,
    ) -> Result<FeatureMatrix> {
        let dim = 1usize << self.num_qubits();
        let mut out = vec![0.0; inputs.len() * dim];
        out.par_chunks_mut(CHUNK * dim)
            .enumerate()
            .try_for_each(|(c, block)| {
                let start = c * CHUNK;
                let p = self.chunk_probabilities(inputs, start, block.len() / dim)?;
                block.copy_from_slice(&p);
                for (r, row) in block.chunks_exact_mut(dim).enumerate() {
                    feature_row_in_place(row, mode, shots, seed, start + r)?;
                }
                Ok::<_, QercError>(())
            })?;
        FeatureMatrix::new(inputs.len(), dim, out)
    }

    pub fn pr_report(&self, inputs: &Inputs<'_>) -> Result<PrReport> {
        let dim = 1usize << self.num_qubits();
        let mut acc = PrAccumulator::default();
        for start in (0..inputs.len()).step_by(CHUNK * 16) {
            let rows = (CHUNK * 16).min(inputs.len() - start);
            let probs = self.probabilities_range(inputs, start, rows)?;
            for p in probs.chunks_exact(dim) {
                acc.add(p)?;
            }
        }
        acc.finish()
    }

    fn probabilities_range(
        &self,
        inputs: &Inputs<'_>,
        start: usize,
        rows: usize,
    ) -> Result<Vec<f64>> {
        let dim = 1usize << self.num_qubits();
        let mut out = vec![0.0; rows * dim];
        out.par_chunks_mut(CHUNK * dim)
            .enumerate()
            .try_for_each(|(c, block)| {
                let p = self.chunk_probabilities(inputs, start + c * CHUNK, block.len() / dim)?;
                block.copy_from_slice(&p);
                Ok::<_, QercError>(())
            })?;
        Ok(out)
    }
}

/// Standardizes (and optionally resamples) a matrix of distributions.
pub fn features_from_probabilities(
    probs: &[f64],
    dim: usize,
    mode: StandardizeMode,
    shots: Option<u64>,
    seed: u64,
) -> Result<FeatureMatrix> {
    let mut out = probs.to_vec();
    out.par_chunks_mut(dim)
        .enumerate()
        .try_for_each(|(i, row)| feature_row_in_place(row, mode, shots, seed, i))?;
    FeatureMatrix::new(probs.len() / dim, dim, out)
}

/// Seeds for resampling the train and test splits.
pub fn shot_seeds(cfg: &ExperimentConfig, repeat: u64) -> (u64, u64) {
    let base = rng::derive_seed(cfg.sub_seed("shots"), repeat);
    (
        rng::derive_seed(base, rng::tag("train")),
        rng::derive_seed(base, rng::tag("test")),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub train: WindowStats,
    pub test: WindowStats,
    pub window: (usize, usize),
    pub history: Vec<EpochRecord>,
}

/// Trains the readout and summarizes the stats window.
pub fn train_readout(
    cfg: &ExperimentConfig,
    train: (&FeatureMatrix, &[usize]),
    test: (&FeatureMatrix, &[usize]),
    num_classes: usize,
) -> Result<RunResult> {
    let tc = cfg.train_config();
    let outcome = classifier::train(
        LabeledFeatures::new(train.0, train.1)?,
        Some(LabeledFeatures::new(test.0, test.1)?),
        num_classes,
        &tc,
    )
    .map_err(|e| e.at("train"))?;
    let window = tc.stats_window();
    let train_acc: Vec<f64> = outcome.history.iter().map(|h| h.train_acc).collect();
    let test_acc: Vec<f64> = outcome
        .history
        .iter()
        .map(|h| h.test_acc.unwrap_or(f64::NAN))
        .collect();
    Ok(RunResult {
        train: classifier::epoch_stats(&train_acc, window).map_err(|e| e.at("epoch stats"))?,
        test: classifier::epoch_stats(&test_acc, window).map_err(|e| e.at("epoch stats"))?,
        window,
        history: outcome.history,
    })
}

/// Full pipeline: PCA, encoding, reservoir, measurement, readout training.
pub fn run_train(
    cfg: &ExperimentConfig,
    data: &DataBundle,
    store: &mut PcaStore,
) -> Result<RunResult> {
    cfg.validate()?;
    let n = cfg.reservoir.num_qubits;
    let pipeline = Pipeline::from_config(cfg)?;
    let pca = store.get(cfg, &data.train, 2 * n)?;
    let (train_seed, test_seed) = shot_seeds(cfg, 0);
    let encode = |ds, seed| {
        pipeline
            .features(&Inputs::Images { pca, data: ds }, cfg.mode, cfg.shots, seed)
            .map_err(|e| e.at("features"))
    };
    let xtr = encode(&data.train, train_seed)?;
    let xte = encode(&data.test, test_seed)?;
    train_readout(
        cfg,
        (&xtr, &data.train.labels_usize()),
        (&xte, &data.test.labels_usize()),
        data.num_classes(),
    )
}
