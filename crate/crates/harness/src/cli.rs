//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ptdilate_core::circuitsim::{ReadoutModel, ShotTable};
use ptdilate_core::dilation::{context_for_time, propagate_u};
use ptdilate_core::metrics::concurrence;
use ptdilate_core::synthesis::{CnotOrientation, SynthesisConfig};
use ptdilate_core::tomography::{
    bloch_vector, single_qubit_reconstruct_on, two_qubit_reconstruct_on, two_qubit_settings,
    ZeroQuantumConvention,
};
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig, Mode, TimeGrid};
use crate::engine::synthesize;
use crate::error::{HarnessError, Result};
use crate::run::run_to_dir;

#[derive(Debug, Parser)]
#[command(
    name = "ptdilate",
    version,
    about = "Dilated simulation of a PT-symmetric qubit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and write CSV, fit and manifest files.
    Run(RunArgs),
    /// Synthesize the dilated propagator at one (r, t) into the 3-CNOT template.
    Decompose(DecomposeArgs),
    /// Reconstruct a density matrix from shot-count CSV files.
    Tomo(TomoArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub experiment: Experiment,
    /// TOML or JSON configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub shots: Option<u64>,
    /// Comma-separated r values.
    #[arg(long, value_delimiter = ',')]
    pub r_values: Option<Vec<f64>>,
    /// Time grid as start:stop:step.
    #[arg(long)]
    pub t_grid: Option<String>,
    #[arg(long)]
    pub synthesize: bool,
    #[arg(long)]
    pub postselect_on: Option<u8>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OrientationArg {
    #[value(name = "control_system")]
    ControlSystem,
    #[value(name = "control_ancilla")]
    ControlAncilla,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub r: f64,
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "control_system")]
    pub orientation: OrientationArg,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ReadoutArg {
    Perfect,
    Device,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ConventionArg {
    #[value(name = "rotate_first")]
    RotateFirst,
    #[value(name = "rotate_second")]
    RotateSecond,
}

#[derive(Debug, Args)]
pub struct TomoArgs {
    /// Directory holding `<setting>.csv` files with `basis,count` rows
    /// (T1..T7 for two qubits, X/Y/Z for one).
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub qubits: usize,
    #[arg(long, value_enum, default_value = "perfect")]
    pub readout: ReadoutArg,
    #[arg(long, value_enum, default_value = "rotate_first")]
    pub convention: ConventionArg,
    /// Ancilla outcome to post-select on when tables carry an ancilla wire.
    #[arg(long, default_value_t = 0)]
    pub ancilla: u8,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_grid(text: &str) -> Result<TimeGrid> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| HarnessError::Config(format!("bad grid '{text}': {e}")))
        })
        .collect::<Result<_>>()?;
    match parts[..] {
        [start, stop, step] => Ok(TimeGrid { start, stop, step }),
        _ => Err(HarnessError::Config(format!(
            "grid must be start:stop:step, got '{text}'"
        ))),
    }
}

/// File configuration with command-line overrides applied.
pub fn build_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.experiment = args.experiment;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(n) = args.shots {
        cfg.shots = n;
    }
    if let Some(r) = &args.r_values {
        cfg.r_values = r.clone();
    }
    if let Some(g) = &args.t_grid {
        cfg.t_grid = Some(parse_grid(g)?);
    }
    if args.synthesize {
        cfg.synthesize = true;
    }
    if let Some(v) = args.postselect_on {
        cfg.postselect_on = v;
    }
    cfg.resolved()
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| HarnessError::io(p, e)),
        None => {
            let mut so = std::io::stdout().lock();
            writeln!(so, "{text}").map_err(|e| HarnessError::io(Path::new("<stdout>"), e))
        }
    }
}

#[derive(Serialize)]
struct DecomposeReport {
    r: f64,
    t: f64,
    eta0: f64,
    theta: f64,
    err_u: f64,
    fidelity_fu: f64,
    iterations: usize,
    restarts_used: usize,
    circuit: ptdilate_core::circuit::Circuit,
}

fn decompose_cmd(a: &DecomposeArgs) -> Result<()> {
    let ctx = context_for_time(a.r, a.t, &Default::default())?;
    let u = propagate_u(&ctx, a.t, ptdilate_core::dilation::DEFAULT_DT)?;
    let orientation = match a.orientation {
        OrientationArg::ControlSystem => CnotOrientation::ControlSystem,
        OrientationArg::ControlAncilla => CnotOrientation::ControlAncilla,
    };
    let base = SynthesisConfig {
        seed: a.seed,
        orientation,
        ..Default::default()
    };
    let rep = synthesize(a.r, a.t, &u, &base)?;
    let report = DecomposeReport {
        r: a.r,
        t: a.t,
        eta0: ctx.eta0,
        theta: ctx.theta,
        err_u: rep.err_u,
        fidelity_fu: rep.fidelity_fu,
        iterations: rep.iterations,
        restarts_used: rep.restarts_used,
        circuit: rep.circuit,
    };
    emit(a.out.as_deref(), &serde_json::to_string_pretty(&report)?)
}

fn read_table(dir: &Path, id: &str) -> Result<ShotTable> {
    let path = dir.join(format!("{id}.csv"));
    let file = std::fs::File::open(&path).map_err(|e| HarnessError::io(&path, e))?;
    Ok(ShotTable::read_csv(file, id, 0)?)
}

#[derive(Serialize)]
struct TomoReport {
    density: ptdilate_core::tomography::DensityMatrix,
    concurrence: Option<f64>,
    bloch: Option<[f64; 3]>,
}

fn tomo_cmd(a: &TomoArgs) -> Result<()> {
    let convention = match a.convention {
        ConventionArg::RotateFirst => ZeroQuantumConvention::RotateFirst,
        ConventionArg::RotateSecond => ZeroQuantumConvention::RotateSecond,
    };
    let readout = match a.readout {
        ReadoutArg::Perfect => None,
        ReadoutArg::Device => Some(ReadoutModel::device_default()),
    };
    let report = match a.qubits {
        1 => {
            let tables = ["X", "Y", "Z"]
                .iter()
                .map(|id| read_table(&a.dir, id))
                .collect::<Result<Vec<_>>>()?;
            let model = readout
                .map(|m| {
                    if tables[0].wires() == 1 {
                        ReadoutModel::new(m.wires[1..2].to_vec())
                    } else {
                        Ok(m)
                    }
                })
                .transpose()?;
            let rho = single_qubit_reconstruct_on(&tables, model.as_ref(), a.ancilla)?;
            let bloch = bloch_vector(&rho.matrix);
            TomoReport {
                density: rho,
                concurrence: None,
                bloch: Some(bloch),
            }
        }
        2 => {
            let tables = two_qubit_settings(convention)
                .iter()
                .map(|s| read_table(&a.dir, &s.id))
                .collect::<Result<Vec<_>>>()?;
            let model = readout
                .map(|m| {
                    if tables[0].wires() == 2 {
                        ReadoutModel::new(m.wires[1..3].to_vec())
                    } else {
                        Ok(m)
                    }
                })
                .transpose()?;
            let rho = two_qubit_reconstruct_on(&tables, model.as_ref(), convention, a.ancilla)?;
            let c = concurrence(&rho.matrix)?;
            TomoReport {
                density: rho,
                concurrence: Some(c),
                bloch: None,
            }
        }
        n => {
            return Err(HarnessError::Config(format!(
                "tomography supports 1 or 2 qubits, got {n}"
            )))
        }
    };
    emit(a.out.as_deref(), &serde_json::to_string_pretty(&report)?)
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(args) => {
            let cfg = build_config(args)?;
            let (manifest, files) = run_to_dir(&cfg, &args.out)?;
            eprintln!(
                "{} rows, config {}",
                manifest.rows,
                &manifest.config_hash[..12]
            );
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Decompose(a) => decompose_cmd(a),
        Command::Tomo(a) => tomo_cmd(a),
    }
}
