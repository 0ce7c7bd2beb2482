//! `saturation`: batch analysis of interview saturation.
//!
//! Data goes to stdout (or `--out`); summaries and diagnostics go to stderr.

use std::fs;
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use saturation::crc::per_interview_series;
use saturation::dataset::{
    derive_sequence, descriptive_stats, parse_grouped, parse_long, parse_wide,
};
use saturation::export::{self, KmReport};
use saturation::planner::{impute_grouped, parse_scenarios, scenario_eval};
use saturation::survival::km_estimate;
use saturation::{
    CiTransform, ElicitationMatrix, EventCoding, InterviewSequence, KmOptions, ProjectionMethod,
    Seed,
};

#[derive(Parser)]
#[command(
    name = "saturation",
    version,
    about = "Saturation estimates for sequential qualitative interviews"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-interview and per-code descriptive statistics.
    Describe(Common),
    /// Kaplan-Meier curve, landmarks and stopping-rule assessment.
    Km(KmArgs),
    /// Capture-recapture estimates at every interview.
    Crc(Common),
    /// Evaluate a batch of 0/1 scenario patterns, one per line.
    Plan(PlanArgs),
    /// Expand grouped counts into a per-interview sequence.
    Impute(Common),
    /// Run the HTTP session service.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    /// `interview_id,seq,<code>...` with 0/1 cells
    Wide,
    /// two files: `interview_id,seq` and `seq,code_id`
    Long,
    /// `start_seq,end_seq,codes_count`
    Grouped,
    /// a comma-separated 0/1 pattern
    Pattern,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
    Svg,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Coding {
    /// an interview with new codes is an event
    #[value(alias = "table5")]
    NewCodes,
    /// an interview with no new codes is an event
    #[value(alias = "prose")]
    ZeroCodes,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Transform {
    Log,
    Plain,
}

#[derive(Args)]
struct Common {
    /// Input file(s); the long format takes the manifest then the elicitations.
    #[arg(long, short, required = true, num_args = 1..=2)]
    input: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "wide")]
    input_format: InputFormat,
    #[arg(long, short, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// Seed for grouped-count imputation.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Directory for relative `--out` paths.
    #[arg(long, env = "SATURATION_OUT_DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct KmArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, env = "SATURATION_ALPHA", default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "new-codes")]
    coding: Coding,
    #[arg(long, value_enum, default_value = "log")]
    transform: Transform,
}

#[derive(Args)]
struct PlanArgs {
    /// Scenario batch file.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short, value_enum, default_value = "csv")]
    format: OutputFormat,
    #[arg(long, env = "SATURATION_ALPHA", default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "log")]
    transform: Transform,
    /// Projection methods, e.g. `extrapolation,rule_completion(3)`.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, env = "SATURATION_OUT_DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "SATURATION_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    #[arg(long, env = "SATURATION_DATA_DIR", default_value = "sessions")]
    data_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Describe(args) => describe(&args),
        Command::Km(args) => km(&args),
        Command::Crc(args) => crc(&args),
        Command::Plan(args) => plan(&args),
        Command::Impute(args) => impute(&args),
        Command::Serve(args) => serve(args),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn one_input(common: &Common) -> Result<&Path> {
    match common.input.as_slice() {
        [path] => Ok(path),
        _ => bail!("this input format takes exactly one --input"),
    }
}

fn load_matrix(common: &Common) -> Result<ElicitationMatrix> {
    let matrix = match common.input_format {
        InputFormat::Wide => {
            let path = one_input(common)?;
            parse_wide(&read(path)?).with_context(|| path.display().to_string())?
        }
        InputFormat::Long => {
            let [manifest, elicitations] = common.input.as_slice() else {
                bail!("the long format takes two --input files: manifest then elicitations");
            };
            parse_long(&read(manifest)?, &read(elicitations)?)
                .with_context(|| format!("{} + {}", manifest.display(), elicitations.display()))?
        }
        InputFormat::Grouped | InputFormat::Pattern => {
            bail!("this command needs code-level input (wide or long)")
        }
    };
    Ok(matrix)
}

fn load_sequence(common: &Common) -> Result<InterviewSequence> {
    match common.input_format {
        InputFormat::Wide | InputFormat::Long => Ok(derive_sequence(&load_matrix(common)?)),
        InputFormat::Grouped => {
            let path = one_input(common)?;
            let Some(seed) = common.seed else {
                bail!("grouped input needs --seed for imputation");
            };
            let groups = parse_grouped(&read(path)?).with_context(|| path.display().to_string())?;
            Ok(impute_grouped(&groups, Seed(seed)))
        }
        InputFormat::Pattern => {
            let path = one_input(common)?;
            let text = String::from_utf8(read(path)?).context("pattern file is not UTF-8")?;
            let mut patterns =
                parse_scenarios(&text).with_context(|| path.display().to_string())?;
            match patterns.len() {
                0 => bail!("{}: no interviews", path.display()),
                1 => Ok(InterviewSequence::from_pattern(&patterns.remove(0))?),
                n => bail!("{}: expected one pattern, found {n}", path.display()),
            }
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("results serialize");
    text.push('\n');
    text
}

fn no_svg(command: &str) -> Result<String> {
    bail!("svg output is only available for km, not {command}")
}

fn emit(out: &Option<PathBuf>, out_dir: &Option<PathBuf>, body: &str) -> Result<()> {
    match out {
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            Ok(())
        }
        Some(path) => {
            let path = match out_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))?;
            }
            fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn describe(args: &Common) -> Result<()> {
    let stats = descriptive_stats(&load_matrix(args)?);
    let body = match args.format {
        OutputFormat::Csv => export::describe_csv(&stats),
        OutputFormat::Json => json(&stats),
        OutputFormat::Text => export::describe_text(&stats),
        OutputFormat::Svg => no_svg("describe")?,
    };
    emit(&args.out, &args.out_dir, &body)
}

fn km(args: &KmArgs) -> Result<()> {
    let sequence = load_sequence(&args.common)?;
    let options = KmOptions {
        alpha: args.alpha,
        coding: match args.coding {
            Coding::NewCodes => EventCoding::NewCodes,
            Coding::ZeroCodes => EventCoding::ZeroNewCodes,
        },
        transform: transform(args.transform),
    };
    let curve = km_estimate(&sequence, &options)?;
    let report = KmReport::new(&sequence, curve);
    let body = match args.common.format {
        OutputFormat::Csv => export::curve_csv(&report.curve),
        OutputFormat::Json => json(&report),
        OutputFormat::Svg => export::curve_svg(&report.curve, &report.summary),
        OutputFormat::Text => export::km_text(&report),
    };
    if args.common.format != OutputFormat::Text {
        let last = report.curve.last();
        let ci = last.ci.map_or_else(
            || "not estimable".to_owned(),
            |ci| format!("({}, {})", export::sig4(ci.low), export::sig4(ci.high)),
        );
        eprintln!(
            "J = {}, S = {}, CI {ci}",
            last.seq,
            export::sig4(last.survival)
        );
    }
    emit(&args.common.out, &args.common.out_dir, &body)
}

fn transform(t: Transform) -> CiTransform {
    match t {
        Transform::Log => CiTransform::Log,
        Transform::Plain => CiTransform::Plain,
    }
}

fn crc(args: &Common) -> Result<()> {
    let series = per_interview_series(&load_matrix(args)?);
    let body = match args.format {
        OutputFormat::Csv => export::crc_csv(&series),
        OutputFormat::Json => json(&series),
        OutputFormat::Text => export::crc_text(&series),
        OutputFormat::Svg => no_svg("crc")?,
    };
    emit(&args.out, &args.out_dir, &body)
}

fn plan(args: &PlanArgs) -> Result<()> {
    let text = String::from_utf8(read(&args.input)?).context("scenario file is not UTF-8")?;
    let patterns = parse_scenarios(&text).with_context(|| args.input.display().to_string())?;
    let methods = if args.methods.is_empty() {
        ProjectionMethod::defaults().to_vec()
    } else {
        args.methods
            .iter()
            .map(|m| m.parse())
            .collect::<Result<Vec<ProjectionMethod>, _>>()?
    };
    let options = KmOptions {
        transform: transform(args.transform),
        ..KmOptions::with_alpha(args.alpha)
    };
    let rows = patterns
        .iter()
        .enumerate()
        .map(|(i, p)| {
            scenario_eval(p, &options, &methods).with_context(|| format!("scenario {}", i + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    let body = match args.format {
        OutputFormat::Csv => export::scenarios_csv(&rows),
        OutputFormat::Json => json(&rows),
        OutputFormat::Text => export::scenarios_text(&rows),
        OutputFormat::Svg => no_svg("plan")?,
    };
    emit(&args.out, &args.out_dir, &body)
}

fn impute(args: &Common) -> Result<()> {
    if args.input_format != InputFormat::Grouped {
        bail!("impute reads grouped input; pass --input-format grouped");
    }
    let sequence = load_sequence(args)?;
    let body = match args.format {
        OutputFormat::Csv => export::sequence_csv(&sequence),
        OutputFormat::Json => json(&sequence),
        OutputFormat::Text => {
            sequence
                .new_codes()
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(",")
                + "\n"
        }
        OutputFormat::Svg => no_svg("impute")?,
    };
    emit(&args.out, &args.out_dir, &body)
}

fn serve(args: ServeArgs) -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(saturation_service::serve(args.listen, args.data_dir))?;
    Ok(())
}
