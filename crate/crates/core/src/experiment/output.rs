//! CSV emission with an embedded configuration header.

use super::config::ExperimentConfig;
use super::pipeline::RunResult;
use super::studies::{KernelOutput, PrRow, ShotStudy, SweepRow};
use crate::error::Result;
use nalgebra::DMatrix;
use std::fs;
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Decimal rendering with 9 significant digits, trailing zeros trimmed.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        let s = format!("{x:.8e}");
        let (mantissa, e) = s.split_once('e').expect("scientific format");
        format!("{}e{e}", trim(mantissa.to_string()))
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".into()
        } else {
            t.to_string()
        }
    } else {
        s
    }
}

/// A table with `# key = value` comment lines ahead of the column header.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    comments: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(kind: &str, config: &ExperimentConfig, columns: &[&str]) -> Self {
        let mut comments = vec![format!("qerc {VERSION}"), format!("table = {kind}")];
        comments.extend(
            config
                .entries()
                .into_iter()
                .map(|(k, v)| format!("{k} = {v}")),
        );
        Self {
            comments,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, self.render())?;
        Ok(())
    }
}

fn shots_label(s: Option<u64>) -> String {
    s.map_or("inf".into(), |n| n.to_string())
}

/// Window summary of one training run.
pub fn result_table(cfg: &ExperimentConfig, label: &str, r: &RunResult) -> CsvTable {
    let mut t = CsvTable::new(
        "result",
        cfg,
        &[
            "label",
            "train_mean",
            "train_std",
            "test_mean",
            "test_std",
            "window_first",
            "window_last",
        ],
    );
    t.push(vec![
        label.to_string(),
        fmt_num(r.train.mean),
        fmt_num(r.train.std),
        fmt_num(r.test.mean),
        fmt_num(r.test.std),
        r.window.0.to_string(),
        r.window.1.to_string(),
    ]);
    t
}

pub fn history_table(cfg: &ExperimentConfig, r: &RunResult) -> CsvTable {
    let mut t = CsvTable::new(
        "history",
        cfg,
        &["epoch", "train_loss", "train_acc", "test_acc"],
    );
    for h in &r.history {
        t.push(vec![
            h.epoch.to_string(),
            fmt_num(h.train_loss),
            fmt_num(h.train_acc),
            h.test_acc.map_or(String::new(), fmt_num),
        ]);
    }
    t
}

pub fn sweep_table(cfg: &ExperimentConfig, rows: &[SweepRow]) -> CsvTable {
    let mut t = CsvTable::new(
        "sweep",
        cfg,
        &["value", "train_mean", "train_std", "test_mean", "test_std"],
    );
    for r in rows {
        let s = &r.result;
        t.push(vec![
            r.value.clone(),
            fmt_num(s.train.mean),
            fmt_num(s.train.std),
            fmt_num(s.test.mean),
            fmt_num(s.test.std),
        ]);
    }
    t
}

/// Per-run accuracies with reconstruction KLD, and the rescaled deviation curves.
pub fn shot_tables(cfg: &ExperimentConfig, study: &ShotStudy) -> (CsvTable, CsvTable) {
    let mut runs = CsvTable::new(
        "shots",
        cfg,
        &[
            "num_qubits",
            "shots",
            "repeat",
            "train_mean",
            "test_mean",
            "test_std",
            "mean_kld",
        ],
    );
    for r in &study.runs {
        runs.push(vec![
            r.num_qubits.to_string(),
            shots_label(r.shots),
            r.repeat.to_string(),
            fmt_num(r.result.train.mean),
            fmt_num(r.result.test.mean),
            fmt_num(r.result.test.std),
            r.mean_kld.map_or(String::new(), fmt_num),
        ]);
    }
    let mut scaling = CsvTable::new(
        "shot_scaling",
        cfg,
        &[
            "num_qubits",
            "shots",
            "deviation",
            "sqrt_dim_over_shots",
            "sqrt_n2_over_shots",
        ],
    );
    for p in &study.scaling {
        scaling.push(vec![
            p.num_qubits.to_string(),
            p.shots.to_string(),
            fmt_num(p.deviation),
            fmt_num(p.x_dimension),
            fmt_num(p.x_quadratic),
        ]);
    }
    (runs, scaling)
}

pub fn pr_table(cfg: &ExperimentConfig, rows: &[PrRow]) -> CsvTable {
    let mut t = CsvTable::new("pr", cfg, &["label", "value", "apr", "iapr", "delta_pr"]);
    for r in rows {
        t.push(vec![
            r.label.clone(),
            r.value.clone(),
            fmt_num(r.apr),
            fmt_num(r.iapr),
            fmt_num(r.delta_pr),
        ]);
    }
    t
}

fn matrix_table(cfg: &ExperimentConfig, kind: &str, m: &DMatrix<f64>) -> CsvTable {
    let cols: Vec<String> = (0..m.ncols()).map(|j| format!("k{j}")).collect();
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = CsvTable::new(kind, cfg, &col_refs);
    for i in 0..m.nrows() {
        t.push((0..m.ncols()).map(|j| fmt_num(m[(i, j)])).collect());
    }
    t
}

/// Sample index table, reservoir kernel, RFF kernel.
pub fn kernel_tables(cfg: &ExperimentConfig, k: &KernelOutput) -> (CsvTable, CsvTable, CsvTable) {
    let mut idx = CsvTable::new("kernel_samples", cfg, &["position", "train_index", "label"]);
    for (p, (i, l)) in k.indices.iter().zip(&k.labels).enumerate() {
        idx.push(vec![p.to_string(), i.to_string(), l.to_string()]);
    }
    (
        idx,
        matrix_table(cfg, "kernel_reservoir", &k.reservoir),
        matrix_table(cfg, "kernel_rff", &k.rff),
    )
}
