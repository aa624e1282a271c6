use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use literal_forge::graph::{GraphBuilder, ModalityRules, Profiler};
use literal_forge::pipeline::{
    verify_output, AugmentationReport, Pipeline, PipelineError, ProviderConfig, StrategyConfig, StrategySpec,
};
use literal_forge::rdf::{open_input, NTriplesReader, ParseMode, Triple};

const EXIT_INPUT: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_STRATEGY: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "literal-forge", version, about = "Rewrite knowledge-graph literals into relational structure")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count relations, nodes, triples and literal kinds.
    Profile(ProfileArgs),
    /// Replace every literal statement according to a strategy config.
    Transform(TransformArgs),
    /// Re-count a transform output and check it against its report.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ProfileArgs {
    /// N-Triples input, optionally gzip-compressed; `-` for stdin.
    #[arg(long, short)]
    input: PathBuf,
    /// Config whose `modalities` block classifies literals.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Fail on the first malformed line.
    #[arg(long)]
    strict: bool,
    /// Aligned table instead of JSON.
    #[arg(long)]
    human: bool,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long, short)]
    input: PathBuf,
    /// Output N-Triples; `-` for stdout.
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Strategy for every modality, e.g. ONEENTITY, DATFEAT, KL-REL+LOF, COMBINED.
    #[arg(long, short)]
    strategy: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    strict: bool,
    /// Write `<output>.weights.tsv`.
    #[arg(long)]
    emit_weights: bool,
    /// Report path (default `<output>.report.json`).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Output of a transform run.
    #[arg(long, short)]
    output: PathBuf,
    /// Report path (default `<output>.report.json`).
    #[arg(long)]
    report: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LITERAL_FORGE_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Profile(a) => profile(a),
        Command::Transform(a) => transform(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn mode(strict: bool) -> ParseMode {
    if strict {
        ParseMode::Strict
    } else {
        ParseMode::Lenient
    }
}

/// Streams triples from `path`, skipping (lenient) or failing on (strict) malformed lines.
fn read_triples(path: &Path, strict: bool, mut sink: impl FnMut(Triple)) -> Result<(), Failure> {
    let input = open_input(path).map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))?;
    let mut skipped = 0usize;
    for item in NTriplesReader::new(input) {
        match item.map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))? {
            Ok(t) => sink(t),
            Err(d) if mode(strict) == ParseMode::Strict => {
                return Err(fail(EXIT_INPUT, format!("{}:{}: {}", path.display(), d.line, d.message)))
            }
            Err(d) => {
                skipped += 1;
                log::warn!("{}:{}: {} (line skipped)", path.display(), d.line, d.message);
            }
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} malformed line(s) skipped");
    }
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<StrategyConfig, Failure> {
    let Some(path) = path else {
        return Ok(StrategyConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    let mut config = StrategyConfig::from_json(&text).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    // tag map paths are relative to the config file
    if let Some(ProviderConfig::TagMap(map)) = &mut config.image_provider {
        if map.is_relative() {
            if let Some(dir) = path.parent() {
                *map = dir.join(&*map);
            }
        }
    }
    Ok(config)
}

fn profile(args: ProfileArgs) -> Result<(), Failure> {
    let rules = match &args.config {
        Some(p) => load_config(Some(p))?.modalities,
        None => ModalityRules::default(),
    };
    let mut profiler = Profiler::new(rules);
    read_triples(&args.input, args.strict, |t| profiler.push(&t))?;
    let profile = profiler.finish();
    let text = if args.human {
        profile.render_table()
    } else {
        serde_json::to_string_pretty(&profile).expect("profile serializes") + "\n"
    };
    io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| fail(EXIT_INPUT, e.to_string()))
}

fn sibling(output: &Path, suffix: &str) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn transform(args: TransformArgs) -> Result<(), Failure> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(name) = &args.strategy {
        let spec: StrategySpec = name.parse().map_err(|e| fail(EXIT_CONFIG, format!("--strategy: {e}")))?;
        config.set_all(spec);
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.emit_weights {
        config.emit_weights = true;
    }
    config.validate().map_err(|e| fail(EXIT_CONFIG, e.to_string()))?;
    let mut pipeline = Pipeline::new(config.clone()).map_err(|e| fail(EXIT_CONFIG, e.to_string()))?;
    if let Some(n) = args.workers {
        pipeline = pipeline.with_workers(n);
    }

    let mut builder = GraphBuilder::new(config.modalities.clone());
    read_triples(&args.input, args.strict, |t| builder.push(t))?;
    let graph = builder.build();

    let out = pipeline.run(&graph).map_err(|e| match e {
        PipelineError::Config(m) => fail(EXIT_CONFIG, m),
        e @ PipelineError::Strategy { .. } => fail(EXIT_STRATEGY, e.to_string()),
    })?;

    let to_stdout = args.output.as_os_str() == "-";
    let write_err = |p: &Path, e: io::Error| fail(EXIT_INPUT, format!("{}: {e}", p.display()));
    if to_stdout {
        out.write_ntriples(io::stdout().lock()).map_err(|e| write_err(&args.output, e))?;
    } else {
        let f = File::create(&args.output).map_err(|e| write_err(&args.output, e))?;
        out.write_ntriples(BufWriter::new(f)).map_err(|e| write_err(&args.output, e))?;
    }

    let report_path = args.report.clone().or_else(|| (!to_stdout).then(|| sibling(&args.output, ".report.json")));
    match &report_path {
        Some(p) => {
            let json = serde_json::to_string_pretty(&out.report).expect("report serializes");
            fs::write(p, json + "\n").map_err(|e| write_err(p, e))?;
        }
        None => log::warn!("output on stdout and no --report given; report not written"),
    }
    if config.emit_weights {
        let p = if to_stdout {
            report_path.as_ref().map(|r| sibling(r, ".weights.tsv"))
        } else {
            Some(sibling(&args.output, ".weights.tsv"))
        };
        if let Some(p) = p {
            let f = File::create(&p).map_err(|e| write_err(&p, e))?;
            out.write_weights(BufWriter::new(f)).map_err(|e| write_err(&p, e))?;
        }
    }
    for w in &out.report.warnings {
        log::warn!("{w}");
    }
    let failed: Vec<&str> = out
        .report
        .rows
        .iter()
        .filter(|r| r.verdict.is_fail())
        .map(|r| r.predicate.as_str())
        .collect();
    if !failed.is_empty() {
        return Err(fail(EXIT_VERIFY, format!("size bounds violated for: {}", failed.join(", "))));
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let report_path = args.report.clone().unwrap_or_else(|| sibling(&args.output, ".report.json"));
    let text = fs::read_to_string(&report_path).map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", report_path.display())))?;
    let report: AugmentationReport =
        serde_json::from_str(&text).map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", report_path.display())))?;
    let mut triples = Vec::new();
    read_triples(&args.output, true, |t| triples.push(t))?;
    let problems = verify_output(&triples, &report);
    if problems.is_empty() {
        println!("ok: {} triples, {} predicates verified", triples.len(), report.predicates.len());
        Ok(())
    } else {
        for p in &problems {
            println!("FAIL {p}");
        }
        Err(fail(EXIT_VERIFY, format!("{} problem(s) found", problems.len())))
    }
}
