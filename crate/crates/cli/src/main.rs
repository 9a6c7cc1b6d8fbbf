use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use qerc::experiment::{
    history_table, kernel_tables, load_data, pr_table, result_table, run_baseline, run_kernel,
    run_pr_study, run_shot_study, run_sweep, run_train, shot_tables, sweep_table, CsvTable,
    DataBundle, ExperimentConfig, InputSource, PcaStore,
};
use qerc::{ErrorClass, QercError};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "qerc",
    version,
    about = "Quantum extreme reservoir computing experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file with one `key = value` per line.
    #[arg(short, long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Directory holding the IDX files.
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// Output directory for CSV files.
    #[arg(short, long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Master seed; all sub-seeds derive from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Limit to 10000 training and 2000 test images.
    #[arg(long)]
    reduced: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the readout on one reservoir.
    Train(Common),
    /// Train once per value of one configuration key.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Configuration key to vary, e.g. `g` or `reservoir.alpha`.
        #[arg(long, value_name = "KEY")]
        axis: Option<String>,
        /// Comma-separated values for the key.
        #[arg(long, value_name = "LIST")]
        values: Option<String>,
    },
    /// Accuracy and reconstruction error under finite measurement shots.
    Shots {
        #[command(flatten)]
        common: Common,
        /// Comma-separated shot counts; `inf` means exact probabilities.
        #[arg(long, value_name = "LIST")]
        shots: Option<String>,
        /// Comma-separated qubit counts.
        #[arg(long, value_name = "LIST")]
        qubits: Option<String>,
    },
    /// Participation ratios along a parameter axis.
    Pr {
        #[command(flatten)]
        common: Common,
        /// Input states.
        #[arg(long, value_name = "mnist|uniform|blobs")]
        source: Option<String>,
        /// Configuration key to vary.
        #[arg(long, value_name = "KEY")]
        axis: Option<String>,
        /// Comma-separated values; `auto` gives the default time grid.
        #[arg(long, value_name = "LIST")]
        values: Option<String>,
    },
    /// Reservoir and random-Fourier-feature kernel matrices.
    Kernel(Common),
    /// Linear classifier without a reservoir.
    Baseline {
        #[command(flatten)]
        common: Common,
        /// Pixel inputs or PCA angles.
        #[arg(long, value_name = "pixels|pca")]
        kind: Option<String>,
    },
}

fn load_config(
    common: &Common,
    extra: &[(&str, Option<&String>)],
) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| QercError::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    for kv in &common.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| QercError::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    for (key, value) in extra {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    if let Some(dir) = &common.data_dir {
        cfg.data_dir = Some(dir.clone());
    }
    if let Some(dir) = &common.out {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.reduced {
        cfg.apply_reduced();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(cfg: &ExperimentConfig, name: &str, table: &CsvTable) -> anyhow::Result<PathBuf> {
    let path = cfg.output_dir.join(name);
    table
        .write(&path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn file_stem(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

fn data(cfg: &ExperimentConfig) -> anyhow::Result<DataBundle> {
    Ok(load_data(cfg)?)
}

// Stdout may be a closed pipe; results are already on disk by then.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        say!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut store = PcaStore::default();
    match cli.command {
        Command::Train(common) => {
            let cfg = load_config(&common, &[])?;
            let data = data(&cfg)?;
            let r = run_train(&cfg, &data, &mut store)?;
            let label = format!("{}-N{}", cfg.reservoir.model, cfg.reservoir.num_qubits);
            say!(
                "{label}: train {:.4} +- {:.4}, test {:.4} +- {:.4} (epochs {}-{})",
                r.train.mean,
                r.train.std,
                r.test.mean,
                r.test.std,
                r.window.0,
                r.window.1
            );
            report(&[
                write(&cfg, "train.csv", &result_table(&cfg, &label, &r))?,
                write(&cfg, "train_history.csv", &history_table(&cfg, &r))?,
            ]);
        }
        Command::Sweep {
            common,
            axis,
            values,
        } => {
            let cfg = load_config(
                &common,
                &[
                    ("sweep.axis", axis.as_ref()),
                    ("sweep.values", values.as_ref()),
                ],
            )?;
            let axis = cfg
                .sweep_axis
                .clone()
                .ok_or_else(|| QercError::Config("sweep needs --axis".into()))?;
            let data = data(&cfg)?;
            let rows = run_sweep(&cfg, &data, &mut store, &axis, &cfg.sweep_values)?;
            for r in &rows {
                say!(
                    "{axis} = {}: test {:.4} +- {:.4}",
                    r.value,
                    r.result.test.mean,
                    r.result.test.std
                );
            }
            report(&[write(
                &cfg,
                &format!("sweep_{}.csv", file_stem(&axis)),
                &sweep_table(&cfg, &rows),
            )?]);
        }
        Command::Shots {
            common,
            shots,
            qubits,
        } => {
            let cfg = load_config(
                &common,
                &[
                    ("shots.values", shots.as_ref()),
                    ("shots.qubits", qubits.as_ref()),
                ],
            )?;
            let data = data(&cfg)?;
            let study = run_shot_study(&cfg, &data, &mut store)?;
            let (runs, scaling) = shot_tables(&cfg, &study);
            report(&[
                write(&cfg, "shots.csv", &runs)?,
                write(&cfg, "shot_scaling.csv", &scaling)?,
            ]);
        }
        Command::Pr {
            common,
            source,
            axis,
            values,
        } => {
            let cfg = load_config(
                &common,
                &[
                    ("pr.source", source.as_ref()),
                    ("pr.axis", axis.as_ref()),
                    ("pr.values", values.as_ref()),
                ],
            )?;
            let data = match cfg.pr_source {
                InputSource::Mnist => Some(data(&cfg)?),
                _ => None,
            };
            let rows = run_pr_study(&cfg, data.as_ref(), &mut store)?;
            let name = format!("pr_{}_{}.csv", cfg.pr_source, file_stem(&cfg.pr_axis));
            report(&[write(&cfg, &name, &pr_table(&cfg, &rows))?]);
        }
        Command::Kernel(common) => {
            let cfg = load_config(&common, &[])?;
            let data = data(&cfg)?;
            let k = run_kernel(&cfg, &data, &mut store)?;
            let (idx, res, rff) = kernel_tables(&cfg, &k);
            report(&[
                write(&cfg, "kernel_samples.csv", &idx)?,
                write(&cfg, "kernel_reservoir.csv", &res)?,
                write(&cfg, "kernel_rff.csv", &rff)?,
            ]);
        }
        Command::Baseline { common, kind } => {
            let cfg = load_config(&common, &[("baseline.kind", kind.as_ref())])?;
            let data = data(&cfg)?;
            let r = run_baseline(&cfg, &data, &mut store)?;
            let label = format!("baseline-{}", cfg.baseline);
            say!(
                "{label}: train {:.4} +- {:.4}, test {:.4} +- {:.4}",
                r.train.mean,
                r.train.std,
                r.test.mean,
                r.test.std
            );
            report(&[
                write(
                    &cfg,
                    &format!("{label}.csv"),
                    &result_table(&cfg, &label, &r),
                )?,
                write(
                    &cfg,
                    &format!("{label}_history.csv"),
                    &history_table(&cfg, &r),
                )?,
            ]);
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err
        .chain()
        .find_map(|e| e.downcast_ref::<QercError>())
        .map(QercError::class)
    {
        Some(ErrorClass::Config) | None => 1,
        Some(ErrorClass::Data) => 2,
        Some(ErrorClass::Numeric) => 3,
    }
}

/// Joins the cause chain, skipping causes whose text the outer message already carries.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
