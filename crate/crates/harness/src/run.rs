//! Experiment dispatch, CSV/JSON emission and the run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::experiments::{self, effective_mode, Timing};

/// Serialized outputs of one run.
pub struct RunArtifacts {
    pub stem: String,
    pub csv: Vec<u8>,
    pub fit: Option<String>,
    pub rows: usize,
    pub timings: Vec<Timing>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModuleVersions {
    pub core: &'static str,
    pub harness: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub versions: ModuleVersions,
    pub rows: usize,
    pub outputs: Vec<String>,
    pub total_seconds: f64,
    pub timings: Vec<Timing>,
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner()
        .map_err(|e| HarnessError::Config(e.to_string()))
}

fn pack<T: Serialize>(
    cfg: &ExperimentConfig,
    rows: Vec<T>,
    timings: Vec<Timing>,
    fit: Option<String>,
) -> Result<RunArtifacts> {
    Ok(RunArtifacts {
        stem: format!(
            "{}_{}",
            cfg.experiment.as_str(),
            effective_mode(cfg).as_str()
        ),
        csv: to_csv(&rows)?,
        fit,
        rows: rows.len(),
        timings,
    })
}

/// Runs the configured experiment on a resolved configuration.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    match cfg.experiment {
        Experiment::Fig1 => {
            let (rows, t) = experiments::run_fig1(cfg)?;
            pack(cfg, rows, t, None)
        }
        Experiment::Fig2 => {
            let (rows, t, fits) = experiments::run_fig2(cfg)?;
            pack(cfg, rows, t, Some(serde_json::to_string_pretty(&fits)?))
        }
        Experiment::Fig3 => {
            let (rows, t, fits) = experiments::run_fig3(cfg)?;
            pack(cfg, rows, t, Some(serde_json::to_string_pretty(&fits)?))
        }
        Experiment::Fig3e => {
            let (rows, t) = experiments::run_fig3e(cfg)?;
            pack(cfg, rows, t, None)
        }
        Experiment::SuppBloch => {
            let (rows, t) = experiments::run_supp_bloch(cfg)?;
            pack(cfg, rows, t, None)
        }
        Experiment::SuppNorm => {
            let (rows, t) = experiments::run_supp_norm(cfg)?;
            pack(cfg, rows, t, None)
        }
        Experiment::SuppSubspace => {
            let (rows, t) = experiments::run_supp_subspace(cfg)?;
            pack(cfg, rows, t, None)
        }
        Experiment::TableS1 => {
            let (rows, t) = experiments::run_table_s1(cfg)?;
            pack(cfg, rows, t, None)
        }
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

/// Runs inside the worker pool and writes `<stem>.csv`, `<stem>_fit.json`
/// (when the experiment has fits) and `<stem>_manifest.json` into `out_dir`.
pub fn run_to_dir(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(RunManifest, Vec<PathBuf>)> {
    let cfg = cfg.clone().resolved()?;
    let start = Instant::now();
    let art = with_pool(|| run_experiment(&cfg))?;
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut files = vec![out_dir.join(format!("{}.csv", art.stem))];
    write(&files[0], &art.csv)?;
    if let Some(fit) = &art.fit {
        let p = out_dir.join(format!("{}_fit.json", art.stem));
        write(&p, fit.as_bytes())?;
        files.push(p);
    }
    let manifest_path = out_dir.join(format!("{}_manifest.json", art.stem));
    let manifest = RunManifest {
        config_hash: cfg.hash(),
        config: cfg.clone(),
        versions: ModuleVersions {
            core: ptdilate_core::VERSION,
            harness: env!("CARGO_PKG_VERSION"),
        },
        rows: art.rows,
        outputs: files
            .iter()
            .chain(std::iter::once(&manifest_path))
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect(),
        total_seconds: start.elapsed().as_secs_f64(),
        timings: art.timings,
    };
    write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    files.push(manifest_path);
    Ok((manifest, files))
}

/// Worker count from `PTDILATE_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("PTDILATE_THREADS")
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
}

/// Runs `f` on a pool capped by `PTDILATE_THREADS`, or the global pool.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match thread_cap().and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}
