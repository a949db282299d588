use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mzplan_core::config::parse_kv_text;
use mzplan_core::learn::{run_training, MetricsRow, RunConfig, METRICS_HEADER};
use mzplan_core::{Network, TrainOutcome};
use sha2::{Digest, Sha256};

pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const CONFIG_FILE: &str = "config.resolved";

/// Builds a config from layered sources. Later layers win: the config file,
/// then `env`, `preset`, per-key flags, `--set` pairs and finally the seed.
pub fn resolve_config(
    file: Option<&Path>,
    env: Option<&str>,
    preset: Option<&str>,
    flags: &[(String, String)],
    sets: &[String],
    seed: Option<u64>,
) -> Result<RunConfig> {
    let mut pairs = Vec::new();
    if let Some(path) = file {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        pairs.extend(parse_kv_text(&text)?);
    }
    if let Some(e) = env {
        pairs.push(("env".to_string(), e.to_string()));
    }
    if let Some(p) = preset {
        pairs.push(("variant".to_string(), p.to_string()));
    }
    pairs.extend(flags.iter().cloned());
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got `{s}`"))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(s) = seed {
        pairs.push(("seed".to_string(), s.to_string()));
    }
    Ok(RunConfig::from_pairs(&pairs)?)
}

/// First 12 hex digits of the SHA-256 of the resolved config without its seed.
pub fn config_hash(config: &RunConfig) -> String {
    let mut hasher = Sha256::new();
    for (k, v) in config.fields() {
        if k != "seed" {
            hasher.update(format!("{k}={v}\n"));
        }
    }
    hasher.finalize()[..6]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn run_dir_name(config: &RunConfig) -> String {
    format!("{}-seed{}", config_hash(config), config.train.seed)
}

pub struct TrainReport {
    pub dir: PathBuf,
    pub outcome: TrainOutcome,
}

/// Trains and writes `metrics.csv`, `checkpoint.bin` and `config.resolved`
/// into `<root>/<hash>-seed<seed>/`. Metric rows are flushed as they arrive.
pub fn train_to_dir(
    config: &RunConfig,
    root: &Path,
    mut progress: impl FnMut(&MetricsRow),
) -> Result<TrainReport> {
    let dir = root.join(run_dir_name(config));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join(CONFIG_FILE), config.to_kv_string())?;
    let mut metrics = BufWriter::new(File::create(dir.join(METRICS_FILE))?);
    writeln!(metrics, "{METRICS_HEADER}")?;

    let mut write_err: Option<io::Error> = None;
    let outcome = run_training::<f64>(config, |row| {
        progress(row);
        match writeln!(metrics, "{}", row.to_csv()).and_then(|_| metrics.flush()) {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                write_err = Some(e);
                ControlFlow::Break(())
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e).context("writing metrics");
    }
    outcome
        .network
        .save(&dir.join(CHECKPOINT_FILE))
        .context("writing checkpoint")?;
    Ok(TrainReport { dir, outcome })
}

/// Reads a run directory back: its resolved config and final parameters.
pub fn load_run(dir: &Path) -> Result<(RunConfig, Network)> {
    let text = fs::read_to_string(dir.join(CONFIG_FILE))
        .with_context(|| format!("{} is not a run directory", dir.display()))?;
    let config = RunConfig::from_kv_str(&text)?;
    let probe = config.env.factory().make(config.train.seed);
    let shape = config
        .net
        .shape(probe.observation_len(), probe.num_actions());
    let network = Network::load(shape, &dir.join(CHECKPOINT_FILE))
        .with_context(|| format!("loading checkpoint from {}", dir.display()))?;
    Ok((config, network))
}
