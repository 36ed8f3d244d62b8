use clap::{Parser, Subcommand, ValueEnum};
use exgjms::cli::{self, CliCommand, Options, VerifyKind};
use exgjms::Error;

/// Extrinsic conformal operators and Q-curvatures of embedded submanifolds.
#[derive(Parser)]
#[command(name = "exgjms", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Built-in geometry name or path to a geometry JSON file.
    #[arg(long, global = true)]
    geometry: Option<String>,

    /// Pass/fail tolerance (mixed absolute/relative).
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,

    /// Seed for sample points and random test data.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Sample points per geometry.
    #[arg(long, global = true, default_value_t = 5)]
    points: usize,

    /// Jet truncation order.
    #[arg(long, global = true, default_value_t = 6)]
    order: usize,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the report to a file instead of stdout.
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Ambient curvature tensors at sample points of the submanifold.
    Curvature,
    /// Induced metric, second fundamental form and Fialkow data.
    Extrinsic,
    /// Extrinsic Q-curvature of order 2*level.
    Qcurv {
        #[arg(long, default_value_t = 1)]
        level: usize,
    },
    /// Apply the order-2*level operator to a function of the chart variables.
    Apply {
        #[arg(long, default_value_t = 2)]
        level: usize,
        /// Expression in x1..xk.
        #[arg(long)]
        f: String,
    },
    /// Numerically verify one of the structural laws.
    Verify {
        #[arg(value_enum)]
        kind: VerifyArg,
        /// Operator level (1 or 2) where applicable.
        #[arg(long)]
        level: Option<usize>,
    },
    /// Eigenvalue table of the factorized operator on the unit k-sphere.
    Spectrum {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        l: u32,
        #[arg(long, default_value_t = 4)]
        mmax: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyArg {
    Covariance,
    QCovariance,
    GaussCodazzi,
    Pipeline,
    U4,
    Factorization,
    Umbilic,
    Decomposition,
}

impl From<VerifyArg> for VerifyKind {
    fn from(v: VerifyArg) -> VerifyKind {
        match v {
            VerifyArg::Covariance => VerifyKind::Covariance,
            VerifyArg::QCovariance => VerifyKind::QCovariance,
            VerifyArg::GaussCodazzi => VerifyKind::GaussCodazzi,
            VerifyArg::Pipeline => VerifyKind::Pipeline,
            VerifyArg::U4 => VerifyKind::U4,
            VerifyArg::Factorization => VerifyKind::Factorization,
            VerifyArg::Umbilic => VerifyKind::Umbilic,
            VerifyArg::Decomposition => VerifyKind::Decomposition,
        }
    }
}

const EXIT_TOLERANCE: i32 = 2;
const EXIT_INADMISSIBLE: i32 = 3;
const EXIT_SPEC: i32 = 4;
const EXIT_NUMERIC: i32 = 5;

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Inadmissible { .. } => EXIT_INADMISSIBLE,
        Error::Parse { .. }
        | Error::Spec(_)
        | Error::Json(_)
        | Error::InvalidParameter(_)
        | Error::DimensionMismatch(_)
        | Error::UnsupportedDimension(_) => EXIT_SPEC,
        Error::SingularMetric
        | Error::NotPositiveDefinite
        | Error::DegenerateEmbedding
        | Error::DivisionByZero
        | Error::Domain { .. }
        | Error::NonFinite(_)
        | Error::InsufficientOrder { .. }
        | Error::IndexOutOfRange { .. }
        | Error::OrderExceeded { .. } => EXIT_NUMERIC,
        Error::Io(_) => 1,
    }
}

fn run(cli: Cli) -> Result<(cli_report::Output, bool), Error> {
    let opts = Options {
        tol: cli.tol,
        seed: cli.seed,
        points: cli.points,
        order: cli.order,
    };
    if opts.order < 4 || opts.order > 10 {
        return Err(Error::InvalidParameter(
            "--order must be between 4 and 10".into(),
        ));
    }
    let command = match cli.command {
        Cmd::Curvature => CliCommand::Curvature,
        Cmd::Extrinsic => CliCommand::Extrinsic,
        Cmd::Qcurv { level } => CliCommand::QCurv { level },
        Cmd::Apply { level, f } => CliCommand::Apply { level, f },
        Cmd::Verify { kind, level } => CliCommand::Verify {
            kind: kind.into(),
            level,
        },
        Cmd::Spectrum { k, l, mmax } => CliCommand::Spectrum { k, l, mmax },
    };
    let spec = match &cli.geometry {
        Some(g) => Some(cli::resolve(g)?),
        None => None,
    };
    let report = cli::run_command(&command, spec.as_ref(), &opts)?;
    let pass = report.pass;
    let rendered = match cli.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    Ok((
        cli_report::Output {
            rendered,
            out: cli.out,
        },
        pass,
    ))
}

mod cli_report {
    pub struct Output {
        pub rendered: String,
        pub out: Option<std::path::PathBuf>,
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok((output, pass)) => {
            if let Some(path) = output.out {
                if let Err(e) = std::fs::write(&path, &output.rendered) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    std::process::exit(1);
                }
            } else {
                println!("{}", output.rendered);
            }
            std::process::exit(if pass { 0 } else { EXIT_TOLERANCE });
        }
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
    }
}
