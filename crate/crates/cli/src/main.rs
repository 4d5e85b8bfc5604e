use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use refdiag::config::GeneratorConfig;
use refdiag::eval::{bias_audit, score_detection, score_segmentation, stepwise_iou, EvalDataset};
use refdiag::generate::{generate_dataset, generate_scenes, DatasetManifest, ExpressionKind};
use refdiag::io as formats;
use refdiag::render::rasterize;
use refdiag::scene::SplitCondition;
use refdiag::templates::Catalog;
use refdiag::{Error, ErrorClass};

#[derive(Parser)]
#[command(
    name = "refdiag",
    version,
    about = "Diagnostic referring-expression datasets and scoring"
)]
struct Cli {
    /// Master seed; overrides the seed in --config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Generator configuration as JSON. Missing fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample scene graphs as JSON Lines.
    GenScenes {
        #[arg(long)]
        n: usize,
        /// Compositional split: A, B, or none. Overrides the config.
        #[arg(long)]
        split: Option<SplitCondition>,
        #[command(flatten)]
        out: Output,
    },
    /// Rasterize scenes into masks, bounding boxes, and visibility classes.
    Render {
        #[arg(long)]
        scenes: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Generate referring expressions into a dataset manifest.
    GenRefexps(GenArgs),
    /// Generate false-premise expressions into a dataset manifest.
    GenFalsePremise(GenArgs),
    /// Score mask predictions.
    ScoreSeg(ScoreArgs),
    /// Score candidate choices on single-object expressions.
    ScoreDet(ScoreArgs),
    /// Per-module IoU from per-node mask predictions.
    ScoreSteps(ScoreArgs),
    /// Expression-blind baselines and dataset statistics.
    AuditBias {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Re-execute every stored program and check stored traces and counts.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    scenes: PathBuf,
    /// Expressions per scene; overrides the config.
    #[arg(long)]
    per_image: Option<usize>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    /// Also write the report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn with_path(path: &Path, e: io::Error) -> Error {
    Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, Error> {
    File::open(path).map(BufReader::new).map_err(|e| with_path(path, e))
}

fn sink(out: &Output) -> Result<Box<dyn Write>, Error> {
    Ok(match &out.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| with_path(path, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_config(cli: &Cli) -> Result<GeneratorConfig, Error> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| with_path(path, e))?;
            GeneratorConfig::from_json(&text)?
        }
        None => GeneratorConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| with_path(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn generate(cli: &Cli, args: &GenArgs, kind: ExpressionKind) -> Result<(), Error> {
    let mut config = load_config(cli)?;
    if let Some(n) = args.per_image {
        config.n_per_image = n;
    }
    let scenes = formats::read_scenes(open(&args.scenes)?)?;
    let manifest = generate_dataset(scenes, &Catalog::builtin(), &config, kind)?;
    eprintln!(
        "{} expressions over {} scenes ({} single-object)",
        manifest.num_expressions, manifest.num_scenes, manifest.single_object_count
    );
    formats::write_manifest(sink(&args.out)?, &manifest)
}

fn load_manifest(path: &Path) -> Result<DatasetManifest, Error> {
    formats::read_manifest(open(path)?)
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::GenScenes { n, split, out } => {
            let mut config = load_config(cli)?;
            if let Some(split) = split {
                config.scene.split_condition = *split;
            }
            let scenes = generate_scenes(&config, *n)?;
            formats::write_scenes(sink(out)?, &scenes)
        }
        Command::Render { scenes, out } => {
            let scenes = formats::read_scenes(open(scenes)?)?;
            let renders: Vec<_> = scenes.iter().map(rasterize).collect();
            formats::write_renders(sink(out)?, &scenes, &renders)
        }
        Command::GenRefexps(args) => generate(cli, args, ExpressionKind::Standard),
        Command::GenFalsePremise(args) => generate(cli, args, ExpressionKind::FalsePremise),
        Command::ScoreSeg(args) | Command::ScoreDet(args) | Command::ScoreSteps(args) => {
            let manifest = load_manifest(&args.manifest)?;
            let predictions = formats::read_predictions(open(&args.predictions)?)?;
            let data = EvalDataset::new(&manifest)?;
            match &cli.command {
                Command::ScoreSteps(_) => {
                    let table = stepwise_iou(&predictions, &data)?;
                    println!("{:<16} {:>7} {:>8} {:>8}", "module", "nodes", "in", "out");
                    for (name, s) in &table {
                        let in_iou = s.in_iou.map_or("-".to_string(), |v| format!("{v:.4}"));
                        println!("{name:<16} {:>7} {in_iou:>8} {:>8.4}", s.nodes, s.out_iou);
                    }
                    args.out.as_deref().map_or(Ok(()), |p| write_json(p, &table))
                }
                command => {
                    let report = if matches!(command, Command::ScoreSeg(_)) {
                        score_segmentation(&predictions, &data)?
                    } else {
                        score_detection(&predictions, &data)?
                    };
                    print!("{report}");
                    args.out.as_deref().map_or(Ok(()), |p| write_json(p, &report))
                }
            }
        }
        Command::AuditBias { manifest, out } => {
            let manifest = load_manifest(manifest)?;
            let audit = bias_audit(&EvalDataset::new(&manifest)?)?;
            let mut w = sink(out)?;
            serde_json::to_writer_pretty(&mut w, &audit)?;
            w.write_all(b"\n")?;
            w.flush()?;
            Ok(())
        }
        Command::Validate { manifest } => {
            let manifest = load_manifest(manifest)?;
            let problems = manifest.validate();
            for p in &problems {
                eprintln!("{p}");
            }
            match problems.into_iter().next() {
                Some(first) if matches!(first.class(), ErrorClass::Validation) => Err(first),
                Some(first) => Err(Error::Validation {
                    subject: "manifest".into(),
                    detail: first.to_string(),
                }),
                None => {
                    eprintln!("ok: {} expressions", manifest.num_expressions);
                    Ok(())
                }
            }
        }
    }
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Config => 2,
        ErrorClass::Format => 3,
        ErrorClass::Generation => 4,
        ErrorClass::Validation => 5,
        ErrorClass::Evaluation => 6,
        ErrorClass::Execution => 7,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
