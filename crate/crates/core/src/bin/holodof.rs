use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use holodof::harness::acceptance::{run_all, run_criterion, CriterionResult};
use holodof::harness::config::{Config, KernelKind, SweepConfig};
use holodof::harness::experiments::{
    run_coupling, run_edof, run_polarization, run_spectrum, run_sweep, run_waveforms,
};
use holodof::harness::output::{write_outputs, Metadata, Table};

/// Degrees of freedom and waveforms of a link between two rectangular surfaces.
#[derive(Parser, Debug)]
#[command(name = "holodof", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for the CSV and JSON files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid nodes per wavelength on both surfaces.
    #[arg(long, global = true)]
    grid_density: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form and numerical counts for each threshold.
    Edof {
        /// Normalized thresholds, e.g. `0.9,0.5,0.1`.
        #[arg(long, value_delimiter = ',')]
        gamma: Option<Vec<f64>>,
        #[arg(long)]
        kernel: Option<KernelKind>,
    },
    /// Full eigenvalue spectrum of the Tx operator.
    Spectrum {
        #[arg(long)]
        kernel: Option<KernelKind>,
    },
    /// Prolate waveforms, their received energy and localization.
    Waveforms,
    /// Coupling matrix of the received waveforms.
    Coupling,
    /// Plateau and transition counts as the Tx is scaled.
    Polarization {
        /// Tx scalings, e.g. `1,2,4`.
        #[arg(long = "r", value_delimiter = ',')]
        scalings: Option<Vec<f64>>,
        #[arg(long)]
        kernel: Option<KernelKind>,
    },
    /// Closed-form and numerical counts along one pose parameter.
    Sweep {
        /// theta_o, phi_o, alpha, beta or distance.
        #[arg(long)]
        param: Option<String>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Skip the eigenvalue computation.
        #[arg(long)]
        closed_only: bool,
    },
    /// Runs the acceptance criteria; exits nonzero if any fails.
    Validate {
        /// Run a single criterion.
        #[arg(long)]
        criterion: Option<u8>,
    },
}

fn load(common: &Common) -> holodof::Result<(Config, String)> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(d) = common.grid_density {
        if !(d.is_finite() && d > 0.0) {
            return Err(holodof::Error::Config(format!("--grid-density: must be positive, got {d}")));
        }
        cfg.numerics.points_per_lambda = d;
        cfg.numerics.tx_points_per_lambda = None;
        cfg.numerics.rx_points_per_lambda = None;
    }
    if let Some(s) = common.seed {
        cfg.numerics.seed = s;
    }
    let text = cfg.canonical();
    Ok((cfg, text))
}

fn sweep_config(
    cfg: &Config,
    param: Option<String>,
    from: Option<f64>,
    to: Option<f64>,
    steps: Option<usize>,
    closed_only: bool,
) -> holodof::Result<SweepConfig> {
    let base = cfg.sweep.clone();
    let pick = |name: &str, cli: Option<f64>, cfgv: Option<f64>| {
        cli.or(cfgv)
            .ok_or_else(|| holodof::Error::Config(format!("sweep: --{name} or sweep.{name} is required")))
    };
    Ok(SweepConfig {
        param: param
            .or_else(|| base.as_ref().map(|s| s.param.clone()))
            .ok_or_else(|| holodof::Error::Config("sweep: --param or sweep.param is required".into()))?,
        from: pick("from", from, base.as_ref().map(|s| s.from))?,
        to: pick("to", to, base.as_ref().map(|s| s.to))?,
        steps: steps
            .or(base.as_ref().map(|s| s.steps))
            .ok_or_else(|| holodof::Error::Config("sweep: --steps or sweep.steps is required".into()))?,
        numeric: !closed_only && base.map_or(true, |s| s.numeric),
    })
}

fn out_dir(common: &Common, cfg: &Config) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.experiment.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn validate(common: &Common, criterion: Option<u8>) -> holodof::Result<bool> {
    let quiet = common.quiet;
    let print = |r: &CriterionResult| {
        if !quiet {
            println!("{}", r.line());
        }
    };
    let results = match criterion {
        Some(id) => {
            let r = run_criterion(id);
            print(&r);
            vec![r]
        }
        None => run_all(print),
    };
    let mut t = Table::new(&["criterion", "title", "passed", "seconds", "detail"]);
    for r in &results {
        t.push(vec![
            (r.id as usize).into(),
            r.title.into(),
            r.passed.into(),
            r.seconds.into(),
            r.detail.clone().into(),
        ]);
    }
    let all = results.iter().all(|r| r.passed);
    let summary = json!({
        "passed": results.iter().filter(|r| r.passed).count(),
        "total": results.len(),
    });
    let meta = Metadata::new("validate", "", common.seed.unwrap_or(0), &t, summary);
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    write_outputs(&dir, "validate", &t, &meta)?;
    Ok(all)
}

fn run(cli: Cli) -> holodof::Result<bool> {
    let common = &cli.common;
    if let Command::Validate { criterion } = cli.command {
        return validate(common, criterion);
    }
    let (mut cfg, _) = load(common)?;
    let (name, (table, summary)) = match cli.command {
        Command::Edof { gamma, kernel } => {
            if let Some(g) = gamma {
                cfg.experiment.gammas = g;
            }
            if let Some(k) = kernel {
                cfg.experiment.kernel = k;
            }
            ("edof", run_edof(&cfg)?)
        }
        Command::Spectrum { kernel } => {
            if let Some(k) = kernel {
                cfg.experiment.kernel = k;
            }
            ("spectrum", run_spectrum(&cfg)?)
        }
        Command::Waveforms => ("waveforms", run_waveforms(&cfg)?),
        Command::Coupling => ("coupling", run_coupling(&cfg)?),
        Command::Polarization { scalings, kernel } => {
            if let Some(r) = scalings {
                cfg.experiment.scalings = r;
            }
            if let Some(k) = kernel {
                cfg.experiment.kernel = k;
            }
            ("polarization", run_polarization(&cfg)?)
        }
        Command::Sweep { param, from, to, steps, closed_only } => {
            let s = sweep_config(&cfg, param, from, to, steps, closed_only)?;
            cfg.sweep = Some(s.clone());
            ("sweep", run_sweep(&cfg, &s)?)
        }
        Command::Validate { .. } => unreachable!(),
    };
    // Re-validate after command-line overrides and hash the effective config.
    let text = cfg.canonical();
    Config::from_toml(&text)?;
    let meta = Metadata::new(name, &text, cfg.numerics.seed, &table, summary);
    let (csv, json) = write_outputs(&out_dir(common, &cfg), name, &table, &meta)?;
    if !common.quiet {
        println!("{} rows -> {}", table.rows.len(), csv.display());
        println!("metadata -> {}", json.display());
        println!("{}", serde_json::to_string(&meta.summary)?);
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.common.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
