//! `check`: decides whether a linear process satisfies a μ-calculus formula
//! and writes the witness or counterexample.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use mucheck::evidence::{evidence_lts, export_aut, lts_to_dot};
use mucheck::formula::parse_formula;
use mucheck::kernel::Bounds;
use mucheck::model::parse_lpe;
use mucheck::transform::{run, Mode, PipelineError};
use thiserror::Error;
use tracing_subscriber::EnvFilter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Plain encoding only: verdict, no evidence.
    Plain,
    /// Solve the evidence encoding in one go.
    Direct,
    /// Solve the plain encoding, then the restricted evidence encoding.
    TwoStep,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Plain => Mode::Plain,
            ModeArg::Direct => Mode::Direct,
            ModeArg::TwoStep => Mode::TwoStep,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "check",
    version,
    about = "Model check a linear process against a modal mu-calculus formula"
)]
struct Args {
    /// Linear process file (.lpe).
    model: PathBuf,
    /// Formula file (.mcf), or the formula text itself.
    formula: String,
    #[arg(long, value_enum, default_value_t = ModeArg::TwoStep)]
    mode: ModeArg,
    /// Write solver statistics as JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Write the witness or counterexample; `.aut` or `.dot`.
    #[arg(long)]
    evidence: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    quantifier_cap: u64,
    #[arg(long, default_value_t = 10_000_000)]
    max_vertices: usize,
}

#[derive(Debug, Error)]
enum Failure {
    #[error("{0}")]
    Input(String),
    #[error("resource bound exceeded: {0}")]
    Resource(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) | Failure::Internal(_) => 2,
            Failure::Resource(_) => 3,
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match &e {
            _ if e.is_resource_bound() => Failure::Resource(e.to_string()),
            PipelineError::Encode(_) => Failure::Input(e.to_string()),
            PipelineError::Graph(_) => Failure::Input(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

#[derive(Clone, Copy)]
enum EvidenceFormat {
    Aut,
    Dot,
}

fn evidence_format(path: &Path) -> Result<EvidenceFormat, Failure> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("aut") => Ok(EvidenceFormat::Aut),
        Some("dot") => Ok(EvidenceFormat::Dot),
        _ => Err(Failure::Input(format!(
            "{}: evidence files must end in .aut or .dot",
            path.display()
        ))),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn check(args: &Args) -> Result<bool, Failure> {
    let format = args.evidence.as_deref().map(evidence_format).transpose()?;
    let model_text = read(&args.model)?;
    let model = parse_lpe(&model_text)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.model.display())))?;
    let formula_path = Path::new(&args.formula);
    let formula_text = if formula_path.is_file() {
        read(formula_path)?
    } else {
        args.formula.clone()
    };
    let phi = parse_formula(&formula_text).map_err(|e| Failure::Input(format!("formula: {e}")))?;
    let bounds = Bounds {
        quantifier_cap: args.quantifier_cap,
        max_vertices: args.max_vertices,
    };

    let out = run(&model.lpe, &phi, &model.init, args.mode.into(), &bounds)?;
    println!("{}", out.verdict);

    if let Some(path) = &args.stats {
        let json = serde_json::to_string_pretty(&out.stats)
            .map_err(|e| Failure::Internal(e.to_string()))?;
        write(path, &(json + "\n"))?;
    }
    if let (Some(path), Some(format)) = (&args.evidence, format) {
        match &out.evidence {
            Some(g) => {
                let lts = evidence_lts(g, &model.lpe, &model.init, &out.encoding.evidence, &bounds)
                    .map_err(|e| Failure::Internal(e.to_string()))?;
                let text = match format {
                    EvidenceFormat::Aut => export_aut(&lts),
                    EvidenceFormat::Dot => lts_to_dot(&lts),
                };
                write(path, &text)?;
            }
            None => tracing::warn!(
                "plain mode produces no evidence; {} not written",
                path.display()
            ),
        }
    }
    Ok(out.verdict)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_env("CHECK_LOG").unwrap_or_else(|_| EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    let args = Args::parse();
    match check(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("check: {e}");
            ExitCode::from(e.code())
        }
    }
}
