use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hmegen::pipeline::{
    self, check_written, load_corpus, verify_counts, write_dataset, Corpus, DatasetReport,
    Expected, OUTPUT_ROOT_ENV,
};
use hmegen::{
    decompose, distort_hme, parse_inkml, write_inkml, Axis, DistortionParams, ParseOptions,
};
use hmegen::{RasterConfig, Strategy, StrategyConfig};

#[derive(Parser)]
#[command(
    name = "hmegen",
    version,
    about = "Generate handwritten math training data from InkML corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand a corpus with one strategy and write the dataset.
    Generate(GenerateArgs),
    /// Print the LaTeX of every sub-expression of one file.
    Decompose {
        file: PathBuf,
        #[command(flatten)]
        parse: ParseArgs,
    },
    /// Apply one explicit distortion to a file.
    Distort(DistortArgs),
    /// Render InkML files to PNG images.
    Rasterize {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[command(flatten)]
        raster: RasterArgs,
        #[command(flatten)]
        parse: ParseArgs,
    },
    /// Print the dataset report a run would produce, without writing files.
    Stats {
        #[arg(long, short)]
        input: PathBuf,
        #[command(flatten)]
        strategy: StrategyArgs,
        #[command(flatten)]
        parse: ParseArgs,
    },
    /// Check dataset counts against their identities and expected totals.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    None,
    Distortion,
    Decomposition,
    Hybrid,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::None => Strategy::None,
            StrategyArg::Distortion => Strategy::Distortion,
            StrategyArg::Decomposition => Strategy::Decomposition,
            StrategyArg::Hybrid => Strategy::Hybrid,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Horizontal,
    Vertical,
}

#[derive(Args)]
struct ParseArgs {
    /// Accept files without ground truth.
    #[arg(long)]
    no_truth: bool,
}

impl ParseArgs {
    fn options(&self) -> ParseOptions {
        ParseOptions {
            require_truth: !self.no_truth,
        }
    }
}

#[derive(Args)]
struct StrategyArgs {
    #[arg(long, short, value_enum, default_value = "hybrid")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    copies: u64,
    /// Leave the input expressions out of the dataset.
    #[arg(long)]
    no_originals: bool,
    /// Worker threads; 1 runs sequentially. Output does not depend on it.
    #[arg(long, short)]
    jobs: Option<usize>,
}

impl StrategyArgs {
    fn config(&self) -> StrategyConfig {
        StrategyConfig {
            strategy: self.strategy.into(),
            copies_per_hme: self.copies as usize,
            master_seed: self.seed,
            include_originals: !self.no_originals,
            parallel: self.jobs != Some(1),
        }
    }
}

#[derive(Args)]
struct RasterArgs {
    #[arg(long, default_value_t = RasterConfig::default().target_height)]
    height: u32,
    #[arg(long, default_value_t = RasterConfig::default().max_width)]
    max_width: u32,
    #[arg(long, default_value_t = RasterConfig::default().thickness)]
    thickness: u32,
    #[arg(long, default_value_t = RasterConfig::default().margin)]
    margin: u32,
}

impl RasterArgs {
    fn config(&self) -> Result<RasterConfig> {
        let config = RasterConfig {
            target_height: self.height,
            max_width: self.max_width,
            thickness: self.thickness,
            margin: self.margin,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short, env = OUTPUT_ROOT_ENV)]
    output: PathBuf,
    #[command(flatten)]
    strategy: StrategyArgs,
    /// Write InkML and manifest only.
    #[arg(long)]
    no_images: bool,
    #[command(flatten)]
    raster: RasterArgs,
    #[command(flatten)]
    parse: ParseArgs,
}

#[derive(Args)]
struct DistortArgs {
    file: PathBuf,
    /// Local model: 1 shear, 2 shrink, 3 perspective, 4 shrink + rotation,
    /// 5 perspective + rotation.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    id: u8,
    #[arg(long, value_enum, default_value = "horizontal")]
    axis: AxisArg,
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    gamma: f64,
    /// Output file; stdout if absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    parse: ParseArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// A report.txt written by `generate`.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    report: Option<PathBuf>,
    /// Corpus to run in memory instead of reading a report.
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[command(flatten)]
    strategy: StrategyArgs,
    #[command(flatten)]
    parse: ParseArgs,
    #[arg(long)]
    expect_total: Option<usize>,
    #[arg(long)]
    expect_generated: Option<usize>,
    /// Allowed relative deviation from the expected values, e.g. 0.05.
    #[arg(long, default_value_t = 0.0)]
    tolerance: f64,
    /// Also re-read every file listed in the manifest next to the report.
    #[arg(long, requires = "report")]
    files: bool,
}

fn init_pool(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("starting worker pool")?;
    }
    Ok(())
}

fn read_hme(path: &Path, parse: &ParseArgs) -> Result<hmegen::OnlineHme> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_inkml(&bytes, &parse.options()).with_context(|| format!("parsing {}", path.display()))
}

fn load(input: &Path, parse: &ParseArgs) -> Result<Corpus> {
    let corpus = load_corpus(input, &parse.options())?;
    if corpus.is_empty() && corpus.failures.is_empty() {
        bail!("no .inkml files under {}", input.display());
    }
    log::info!(
        "loaded {} files, {} failed",
        corpus.len(),
        corpus.failures.len()
    );
    Ok(corpus)
}

fn status(failures: usize) -> ExitCode {
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        eprintln!("{failures} item(s) failed");
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(args) => {
            init_pool(args.strategy.jobs)?;
            let raster = (!args.no_images)
                .then(|| args.raster.config())
                .transpose()?;
            let corpus = load(&args.input, &args.parse)?;
            let dataset = pipeline::generate(&corpus, &args.strategy.config())?;
            write_dataset(&dataset, &args.output, raster.as_ref())?;
            for f in &dataset.report.failures {
                eprintln!("failed: {f}");
            }
            println!(
                "{} items ({} generated) written to {}",
                dataset.report.total_count,
                dataset.report.generated_count,
                args.output.display()
            );
            Ok(status(dataset.report.failures.len()))
        }
        Command::Decompose { file, parse } => {
            let hme = read_hme(&file, &parse)?;
            let result = decompose(&hme)?;
            let mut out = std::io::stdout().lock();
            for latex in result.latex() {
                writeln!(out, "{latex}")?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Distort(args) => {
            let hme = read_hme(&args.file, &args.parse)?;
            let axis = match args.axis {
                AxisArg::Horizontal => Axis::Horizontal,
                AxisArg::Vertical => Axis::Vertical,
            };
            let params =
                DistortionParams::new(args.id, axis, args.alpha, args.beta, args.k, args.gamma)?;
            let bytes = write_inkml(&distort_hme(&hme, &params)?);
            match &args.output {
                Some(path) => {
                    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?
                }
                None => std::io::stdout().lock().write_all(&bytes)?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Rasterize {
            input,
            output,
            raster,
            parse,
        } => {
            let config = raster.config()?;
            let corpus = load(&input, &parse)?;
            let mut failures = corpus.failures.clone();
            failures.extend(pipeline::rasterize_corpus(&corpus, &output, &config)?);
            for f in &failures {
                eprintln!("failed: {f}");
            }
            println!(
                "{} images written to {}",
                corpus.len() + corpus.failures.len() - failures.len(),
                output.display()
            );
            Ok(status(failures.len()))
        }
        Command::Stats {
            input,
            strategy,
            parse,
        } => {
            init_pool(strategy.jobs)?;
            let corpus = load(&input, &parse)?;
            let dataset = pipeline::generate(&corpus, &strategy.config())?;
            print!("{}", dataset.report.to_key_value_text());
            Ok(status(dataset.report.failures.len()))
        }
        Command::Verify(args) => {
            init_pool(args.strategy.jobs)?;
            let report = match (&args.report, &args.input) {
                (Some(path), _) => {
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    DatasetReport::from_key_value_text(&text)?
                }
                (None, Some(input)) => {
                    let corpus = load(input, &args.parse)?;
                    pipeline::generate(&corpus, &args.strategy.config())?.report
                }
                (None, None) => unreachable!("clap requires --report or --input"),
            };
            let expected = Expected {
                total: args.expect_total,
                generated: args.expect_generated,
                tolerance: args.tolerance,
            };
            let verification = verify_counts(&report, &expected);
            println!("{verification}");
            let mut ok = verification.passed();
            if args.files {
                let root = args
                    .report
                    .as_deref()
                    .and_then(Path::parent)
                    .unwrap_or(Path::new("."));
                let failures = check_written(root)?;
                for f in &failures {
                    println!("unreadable: {f}");
                }
                ok &= failures.is_empty();
            }
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
