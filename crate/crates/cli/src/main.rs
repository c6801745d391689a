//! `ontolab`: verification, classification, experiments and grid export for
//! ontological models of a qubit.
//!
//! Exit codes: 0 pass, 1 quantitative failure, 2 usage error, 3 hypothesis
//! refusal, 4 I/O error.

mod args;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ontolab_core::analysis::{
    born_test_pairs, classify, verify_born_rule, StatePairSampler, BORN_TEST_PAIRS, BORN_TEST_SEED,
};
use ontolab_core::bloch::Ray;
use ontolab_core::experiments::{
    einstein_1927_check_state, local_causality_residual, theorem1_check,
};
use ontolab_core::measures::export::{marginal_rows, to_csv};
use ontolab_core::measures::QuadratureConfig;
use ontolab_core::models::{model_by_name, OntologicalModel, MODEL_NAMES};
use ontolab_core::report::Report;
use ontolab_core::Error;

#[derive(Debug, Parser)]
#[command(
    name = "ontolab",
    version,
    about = "Numerical laboratory for ontological models of a qubit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Registered model: bb, bm or ks.
    #[arg(long, global = true)]
    model: Option<String>,

    /// Pure state: z+, z-, x+, x-, y+, y- or "theta,phi" in radians.
    #[arg(long, global = true)]
    state: Option<String>,

    /// Gauss grid resolution, NPxNA.
    #[arg(long, global = true, conflicts_with = "mc")]
    grid: Option<String>,

    /// Monte Carlo with this many samples.
    #[arg(long, global = true)]
    mc: Option<usize>,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the Born rule on the fixed 100-pair suite.
    Verify,
    /// Classify a model as psi-complete, psi-supplemented or psi-epistemic.
    Classify,
    /// Run one of the locality experiments.
    Experiment {
        #[arg(value_enum)]
        name: Experiment,
    },
    /// Export the epistemic state of `--state` as CSV rows.
    Plot,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Experiment {
    Theorem1,
    Einstein1927,
    Residual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug)]
enum Failure {
    Quantitative(String),
    Usage(String),
    Refused(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Quantitative(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Refused(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Quantitative(m) | Failure::Usage(m) | Failure::Refused(m) | Failure::Io(m) => {
                m
            }
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(m) => Failure::Usage(m),
            Error::HypothesisRefused(m) => Failure::Refused(m),
            e @ (Error::NotQuantum { .. } | Error::SpaceMismatch { .. }) => {
                Failure::Quantitative(e.to_string())
            }
        }
    }
}

/// Result of a command that ran to completion: its output and whether it passed.
struct Outcome {
    output: String,
    passed: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => match emit(&outcome.output, cli.out.as_ref()) {
            Ok(()) if outcome.passed => ExitCode::SUCCESS,
            Ok(()) => ExitCode::from(1),
            Err(f) => fail(&f),
        },
        Err(f) => fail(&f),
    }
}

fn fail(f: &Failure) -> ExitCode {
    eprintln!("ontolab: {}", f.message());
    ExitCode::from(f.code())
}

fn emit(output: &str, out: Option<&PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, output)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => match io::stdout().lock().write_all(output.as_bytes()) {
            // A closed pipe (`ontolab plot | head`) is the reader's choice, not a failure.
            Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
                Err(Failure::Io(format!("cannot write to stdout: {e}")))
            }
            _ => Ok(()),
        },
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let model = resolve_model(cli.model.as_deref())?;
    let cfg = quadrature(cli)?;
    let model = model.as_ref();
    let (report, passed) = match &cli.command {
        Command::Verify => {
            let born = verify_born_rule(
                model,
                &born_test_pairs(BORN_TEST_PAIRS, BORN_TEST_SEED),
                &cfg,
            )?;
            (born.to_report(), born.passed())
        }
        Command::Classify => (
            classify(model, &StatePairSampler::standard(), &cfg)?.to_report(),
            true,
        ),
        Command::Experiment { name } => (experiment(*name, model, cli, &cfg)?, true),
        Command::Plot => return plot(model, cli, &cfg),
    };
    let mut full = Report::new().with("quadrature", describe(&cfg));
    full.extend(report);
    let output = match cli.format.unwrap_or(Format::Text) {
        Format::Text => full.to_text(),
        Format::Json => full.to_json(),
        Format::Csv => full.to_csv(),
    };
    Ok(Outcome { output, passed })
}

fn experiment(
    name: Experiment,
    model: &dyn OntologicalModel,
    cli: &Cli,
    cfg: &QuadratureConfig,
) -> Result<Report, Failure> {
    Ok(match name {
        Experiment::Theorem1 => theorem1_check(model, cfg)?.to_report(),
        Experiment::Einstein1927 => {
            let psi = state(cli, Ray::plus())?;
            einstein_1927_check_state(model, &psi, &StatePairSampler::standard(), cfg)?.to_report()
        }
        Experiment::Residual => {
            let residual = local_causality_residual(model, cfg)?;
            Report::new()
                .with("model", model.name())
                .with("residual", residual)
        }
    })
}

fn plot(
    model: &dyn OntologicalModel,
    cli: &Cli,
    cfg: &QuadratureConfig,
) -> Result<Outcome, Failure> {
    if matches!(cli.format, Some(Format::Json | Format::Text)) {
        return Err(Failure::Usage("plot only writes CSV".into()));
    }
    let QuadratureConfig::GaussGrid {
        n_polar,
        n_azimuthal,
    } = *cfg
    else {
        return Err(Failure::Usage("plot needs a grid, not --mc".into()));
    };
    let psi = state(cli, Ray::zero())?;
    let rows = marginal_rows(&model.prepare(&psi), n_polar, n_azimuthal);
    Ok(Outcome {
        output: to_csv(&rows),
        passed: true,
    })
}

fn resolve_model(name: Option<&str>) -> Result<Box<dyn OntologicalModel>, Failure> {
    let known = MODEL_NAMES.join(", ");
    let name =
        name.ok_or_else(|| Failure::Usage(format!("--model is required (one of {known})")))?;
    model_by_name(name)
        .ok_or_else(|| Failure::Usage(format!("unknown model '{name}' (expected one of {known})")))
}

fn quadrature(cli: &Cli) -> Result<QuadratureConfig, Failure> {
    let cfg = match (&cli.grid, cli.mc) {
        (Some(grid), _) => {
            let (np, na) = args::parse_grid(grid).map_err(Failure::Usage)?;
            QuadratureConfig::gauss_grid(np, na)?
        }
        (None, Some(n)) => QuadratureConfig::monte_carlo(n, cli.seed)?,
        (None, None) => QuadratureConfig::default(),
    };
    Ok(cfg)
}

fn state(cli: &Cli, default: Ray) -> Result<Ray, Failure> {
    cli.state.as_deref().map_or(Ok(default), |s| {
        args::parse_state(s).map_err(Failure::Usage)
    })
}

fn describe(cfg: &QuadratureConfig) -> String {
    match *cfg {
        QuadratureConfig::GaussGrid {
            n_polar,
            n_azimuthal,
        } => format!("grid {n_polar}x{n_azimuthal}"),
        QuadratureConfig::MonteCarlo { n_samples, seed } => format!("mc {n_samples} seed {seed}"),
    }
}
