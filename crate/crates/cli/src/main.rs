use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bellkit_core::optimize::OptimizerConfig;
use bellkit_core::parser::parse_expression;
use bellkit_core::quantum::model_file::ModelFile;
use bellkit_core::report::{self, ModelSource};
use bellkit_core::{builtin, ghz_state, paper_model, Error, NamedExpression, ValueMode, BUILTIN_NAMES};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "bellkit", version, about = "Local bounds, quantum values and noise tolerance of Bell expressions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact local bounds and the strategies attaining them.
    Bound(Common),
    /// Full-joint expansion, optionally diffed against a fixture.
    Expand {
        #[command(flatten)]
        common: Common,
        /// Full-joint fixture to compare against.
        #[arg(long, value_name = "FIXTURE")]
        diff: Option<PathBuf>,
    },
    /// Quantum value with per-term breakdown and violation.
    Quantum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArg,
    },
    /// Critical white-noise fraction.
    Noise {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArg,
    },
    /// Search measurement angles on a fixed state.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "ghz")]
        state: String,
        /// Random starts in addition to the fixed X/Y start.
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        #[arg(long, default_value_t = 20_000)]
        max_evals: usize,
        /// Skip the fixed X/Y start.
        #[arg(long)]
        no_fixed_start: bool,
    },
    /// Full analysis report.
    Report {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArg,
        /// Full-joint fixture to compare against (builtins default to their reference).
        #[arg(long, value_name = "FIXTURE")]
        diff: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Expression file.
    #[arg(value_name = "EXPR", required_unless_present = "builtin", conflicts_with = "builtin")]
    file: Option<PathBuf>,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(BUILTIN_NAMES))]
    builtin: Option<String>,
    /// Treat a file expression's value as an absolute value.
    #[arg(long)]
    magnitude: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct ModelArg {
    /// Model file, or `paper` for GHZ with X/Y settings.
    #[arg(long, value_name = "FILE|paper")]
    model: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Plain,
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Invariant(_) => e,
        other => Error::InvalidConfig(format!("{}: {other}", path.display())),
    }
}

fn load_expression(common: &Common) -> Result<(String, NamedExpression), Error> {
    if let Some(name) = &common.builtin {
        let mut named = builtin(name)?;
        if common.magnitude {
            named.mode = ValueMode::Magnitude;
        }
        return Ok((format!("builtin:{name}"), named));
    }
    let path = common.file.as_ref().expect("clap requires a file or --builtin");
    let text = read(path)?;
    let parsed = parse_expression(&text).map_err(|e| with_path(path, e))?;
    for w in &parsed.warnings {
        eprintln!("warning: {}: line {}: {}", path.display(), w.line, w.message);
    }
    let digest: String = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    let named = NamedExpression {
        name: path.display().to_string(),
        expression: parsed.value,
        mode: if common.magnitude { ValueMode::Magnitude } else { ValueMode::Signed },
    };
    Ok((format!("file:{} sha256:{digest}", path.display()), named))
}

fn load_model(arg: &ModelArg, parties: usize) -> Result<ModelSource, Error> {
    if arg.model == "paper" {
        if parties != 3 {
            return Err(Error::ScenarioMismatch(format!(
                "the `paper` model has 3 parties, the expression has {parties}"
            )));
        }
        return Ok(ModelSource {
            identity: "paper".into(),
            state: ghz_state(3)?.into(),
            model: paper_model(),
        });
    }
    let path = Path::new(&arg.model);
    let text = read(path)?;
    let file = ModelFile::from_json(&text).map_err(|e| with_path(path, e))?;
    let (state, model) = file.load().map_err(|e| with_path(path, e))?;
    Ok(ModelSource {
        identity: format!("file:{}", path.display()),
        state,
        model,
    })
}

fn emit<T: Serialize>(report: &T, format: Format) {
    match format {
        Format::Json => print!("{}", report::to_json(report)),
        Format::Plain => print!("{}", report::render_plain(report)),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Bound(common) => {
            let (id, named) = load_expression(&common)?;
            emit(&report::bound_report(&id, &named)?, common.format);
        }
        Command::Expand { common, diff } => {
            let (id, named) = load_expression(&common)?;
            let fixture = diff.as_ref().map(|p| read(p).map(|t| (p.display().to_string(), t))).transpose()?;
            let r = report::expand_report(&id, &named, fixture.as_ref().map(|(n, t)| (n.as_str(), t.as_str())))
                .map_err(|e| match &diff {
                    Some(p) if matches!(e, Error::Parse { .. } | Error::Format { .. }) => with_path(p, e),
                    _ => e,
                })?;
            emit(&r, common.format);
        }
        Command::Quantum { common, model } => {
            let (id, named) = load_expression(&common)?;
            let source = load_model(&model, named.expression.scenario().parties())?;
            emit(&report::quantum_report(&id, &named, &source)?, common.format);
        }
        Command::Noise { common, model } => {
            let (id, named) = load_expression(&common)?;
            let source = load_model(&model, named.expression.scenario().parties())?;
            emit(&report::noise_report(&id, &named, &source)?, common.format);
        }
        Command::Optimize {
            common,
            state,
            restarts,
            seed,
            tolerance,
            max_evals,
            no_fixed_start,
        } => {
            let (id, named) = load_expression(&common)?;
            if state != "ghz" {
                return Err(Error::InvalidConfig(format!("unknown state `{state}` (expected ghz)")));
            }
            let quantum_state = ghz_state(named.expression.scenario().parties())?.into();
            let config = OptimizerConfig {
                restarts,
                seed,
                tolerance,
                max_evals,
                include_fixed_start: !no_fixed_start,
            };
            let (r, _) = report::optimize_report(&id, &named, &state, &quantum_state, &config)?;
            emit(&r, common.format);
        }
        Command::Report { common, model, diff } => {
            let (id, named) = load_expression(&common)?;
            let source = load_model(&model, named.expression.scenario().parties())?;
            let fixture = diff.as_ref().map(|p| read(p).map(|t| (p.display().to_string(), t))).transpose()?;
            let r = report::analysis_report(
                &id,
                &named,
                &source,
                fixture.as_ref().map(|(n, t)| (n.as_str(), t.as_str())),
            )?;
            emit(&r, common.format);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Invariant(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
