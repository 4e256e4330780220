//! Command line frontend: generate synthetic data, profile a dataset, run
//! the detection pipeline, recompute explanations and summarise runs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spendscope::encoding::EncodingStrategy;
use spendscope::ensemble::ReviewOrder;
use spendscope::ingest::{self, Schema};
use spendscope::pipeline::{self, InputConfig, RunConfig, RunReport};
use spendscope::synthgen::{self, AnomalySpec, GenConfig};
use spendscope::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "spendscope",
    version,
    about = "Anomaly detection and review prioritisation for purchase transactions"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug, -vvv trace)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// ~28k records, 988 vendors
    Company1,
    /// ~38k records, 1126 vendors
    Company2,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic purchase dataset, optionally with labelled anomalies
    Generate(GenerateArgs),
    /// Print shape and entity statistics for a transaction CSV
    Profile(ProfileArgs),
    /// Run the full detection pipeline into an output directory
    Detect(DetectArgs),
    /// Recompute attribution files for the top rows of a finished run
    Explain(ExplainArgs),
    /// Summarise the report of a finished run
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Destination CSV path
    #[arg(long)]
    out: PathBuf,
    /// Vocabulary sizes and volume to mimic
    #[arg(long, value_enum, default_value_t = Preset::Company1)]
    preset: Preset,
    /// Override the record count of the preset
    #[arg(long)]
    records: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of rows turned into amount-inflation anomalies
    #[arg(long, default_value_t = 0.0)]
    point_rate: f64,
    /// Fraction of rows turned into vendor-swap anomalies
    #[arg(long, default_value_t = 0.0)]
    contextual_rate: f64,
    /// Smallest amount multiplier for point anomalies
    #[arg(long, default_value_t = 10.0)]
    multiplier_low: f64,
    /// Largest amount multiplier for point anomalies
    #[arg(long, default_value_t = 20.0)]
    multiplier_high: f64,
    /// Where to write the anomaly labels (default: <out>.truth.csv)
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    /// Transaction CSV to profile
    input: PathBuf,
    /// Column layout description (defaults to the standard layout)
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Emit the full JSON profile instead of the figure table
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DetectArgs {
    /// Full run configuration as JSON; mutually exclusive with the
    /// individual input flags
    #[arg(long, conflicts_with_all = ["input", "schema", "out", "seed", "strategies",
        "k_min", "k_max", "segregate", "explain_top", "review_order"])]
    config: Option<PathBuf>,
    /// Transaction CSV to analyse
    #[arg(long, required_unless_present = "config")]
    input: Option<PathBuf>,
    /// Column layout description for --input
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Run directory for all artifacts
    #[arg(long, required_unless_present = "config")]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma separated subset of: count, mean, median, mode
    #[arg(long, value_delimiter = ',')]
    strategies: Vec<EncodingStrategy>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Remove univariate outliers before clustering and list them separately
    #[arg(long)]
    segregate: bool,
    /// Rows receiving an individual attribution file
    #[arg(long)]
    explain_top: Option<usize>,
    /// Order within a priority level: silhouette_asc, iforest_desc, row_id
    #[arg(long)]
    review_order: Option<ReviewOrder>,
}

#[derive(Args)]
struct ExplainArgs {
    /// Run directory produced by `detect`
    run_dir: PathBuf,
    /// How many rows from the top of the review list
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory produced by `detect`
    run_dir: PathBuf,
    /// Dump the raw report JSON instead of the summary
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    // Die quietly instead of panicking when stdout is a closed pipe,
    // e.g. `spendscope report run | head`.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Generate(args) => run_generate(args),
        Command::Profile(args) => run_profile(args),
        Command::Detect(args) => run_detect(args),
        Command::Explain(args) => run_explain(args),
        Command::Report(args) => run_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Usage problems exit 2, bad input data 3, anything else 4.
fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::InvalidConfig(_)
        | Error::UnknownColumn(_)
        | Error::InvalidK { .. }
        | Error::TooManyFeatures { .. } => EXIT_USAGE,
        Error::FileAccess { .. }
        | Error::HeaderMismatch { .. }
        | Error::AmountParse { .. }
        | Error::MissingValue { .. }
        | Error::EmptyDataset(_)
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_) => EXIT_DATA,
        _ => EXIT_INTERNAL,
    }
}

fn run_generate(args: GenerateArgs) -> Result<(), Error> {
    let mut cfg = match args.preset {
        Preset::Company1 => GenConfig::company1_like(args.seed),
        Preset::Company2 => GenConfig::company2_like(args.seed),
    };
    if let Some(n) = args.records {
        cfg.n_records = n;
    }
    let dataset = synthgen::generate(&cfg)?;
    if args.point_rate > 0.0 || args.contextual_rate > 0.0 {
        let spec = AnomalySpec {
            rate_point: args.point_rate,
            rate_contextual: args.contextual_rate,
            multiplier_low: args.multiplier_low,
            multiplier_high: args.multiplier_high,
        };
        let (injected, truth) = synthgen::inject_anomalies(
            &dataset,
            &spec,
            spendscope::seeding::derive_seed(cfg.seed, "inject", 0),
        )?;
        injected.write_csv_file(&args.out)?;
        let truth_path = args.truth.unwrap_or_else(|| {
            let mut p = args.out.as_os_str().to_owned();
            p.push(".truth.csv");
            PathBuf::from(p)
        });
        truth.write_csv_file(&truth_path)?;
        println!(
            "wrote {} records to {} ({} labelled anomalies, labels in {})",
            injected.len(),
            args.out.display(),
            injected.len() - truth.count(synthgen::AnomalyLabel::None),
            truth_path.display()
        );
    } else {
        dataset.write_csv_file(&args.out)?;
        println!("wrote {} records to {}", dataset.len(), args.out.display());
    }
    Ok(())
}

fn load_schema(path: &Option<PathBuf>) -> Result<Schema, Error> {
    match path {
        Some(p) => Schema::from_json_file(p),
        None => Ok(Schema::standard()),
    }
}

fn run_profile(args: ProfileArgs) -> Result<(), Error> {
    let schema = load_schema(&args.schema)?;
    let raw = ingest::load_transactions_file(&args.input, &schema)?;
    let (cleaned, removed) = ingest::clean(&raw)?;
    if removed > 0 {
        log::warn!("dropped {removed} incomplete records");
    }
    let report = ingest::profile(&cleaned)?;
    if args.json {
        println!("{}", report.to_json()?);
    } else {
        print!("{}", report.to_table_csv()?);
    }
    Ok(())
}

fn run_detect(args: DetectArgs) -> Result<(), Error> {
    let config = match args.config {
        Some(path) => RunConfig::from_json_file(&path)?,
        None => {
            let input = InputConfig::Csv {
                path: args.input.expect("clap enforces --input"),
                schema: args.schema,
            };
            let out = args.out.expect("clap enforces --out");
            let mut config = RunConfig::new(input, out, args.seed);
            if !args.strategies.is_empty() {
                config.strategies = args.strategies;
            }
            if let Some(k) = args.k_min {
                config.k_min = k;
            }
            if let Some(k) = args.k_max {
                config.k_max = k;
            }
            config.segregate_univariate = args.segregate;
            if let Some(n) = args.explain_top {
                config.explain_top = n;
            }
            if let Some(order) = args.review_order {
                config.review_order = order;
            }
            config
        }
    };
    let report = pipeline::run_pipeline(&config)?;
    println!(
        "analysed {} rows: picked {} encoding with k={} (sc={:.4}, {}), {} forest-flagged rows",
        report.n_model_rows,
        report.selection.strategy,
        report.selection.k,
        report.selection.sc_full,
        report.selection.label,
        report.iforest_flagged
    );
    println!(
        "review list: {}",
        config
            .output_dir
            .join(pipeline::files::REVIEW_LIST)
            .display()
    );
    Ok(())
}

fn run_explain(args: ExplainArgs) -> Result<(), Error> {
    let written = pipeline::reexplain(&args.run_dir, args.top)?;
    for path in &written {
        println!("{}", path.display());
    }
    println!("{} attribution files written", written.len());
    Ok(())
}

fn run_report(args: ReportArgs) -> Result<(), Error> {
    let path = args.run_dir.join(pipeline::files::REPORT);
    if args.json {
        let text = std::fs::read_to_string(&path).map_err(|source| Error::FileAccess {
            path: path.clone(),
            source,
        })?;
        print!("{text}");
        return Ok(());
    }
    let report = RunReport::from_json_file(&path)?;
    println!(
        "input records:      {} ({} removed as incomplete)",
        report.n_input_records, report.n_removed_incomplete
    );
    println!("modelled rows:      {}", report.n_model_rows);
    for s in &report.strategies {
        println!(
            "  {:<7} univariate {}/{}  best k={} (sc={:.4})",
            s.strategy.to_string(),
            s.univariate_flagged,
            s.total,
            s.best_k,
            s.best_sc
        );
    }
    println!(
        "selected model:     {} encoding, k={}, sc={:.4} ({})",
        report.selection.strategy,
        report.selection.k,
        report.selection.sc_full,
        report.selection.label
    );
    println!("forest-flagged:     {}", report.iforest_flagged);
    println!("priority histogram:");
    for (priority, count) in report.priority_histogram.iter().rev() {
        println!("  {priority} flags: {count}");
    }
    let total_ms: u64 = report.timings_ms.iter().map(|(_, ms)| ms).sum();
    println!("total time:         {} ms", total_ms);
    println!("manifest digest:    {}", report.manifest_digest);
    Ok(())
}
