use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use chemprog_core::benchmark::{
    build_benchmark, load_ontology, naive_smarts_program, read_benchmark, read_id_list, write_benchmark, BuildOptions,
    ClassFilters,
};
use chemprog_core::enrich::{enrich_samples, load_samples, write_report_json_lines, write_report_tsv};
use chemprog_core::evalstats::{build_ensemble, metrics_report};
use chemprog_core::leia::{
    find_preset, score_program, synthesize_suite, HttpClient, HttpClientConfig, LeiaConfig, LlmClient, PreparedExample,
    ScriptedClient, PRESETS,
};
use chemprog_core::runtime::{evaluate_on_validation, write_json_lines, write_tsv, Classifier};
use chemprog_core::suite::{ClassStats, SuiteProgram};
use chemprog_core::synthetic::{synthetic_ontology, to_json_lines};
use chemprog_core::ProgramSuite;

#[derive(Parser)]
#[command(name = "chemprog", version, about = "Learn, evaluate and run chemical classifier programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a benchmark directory from an ontology JSON-lines file.
    BuildBenchmark(BuildArgs),
    /// Synthesize one classifier program per benchmark class.
    Learn(LearnArgs),
    /// Score suites on the benchmark's validation split.
    Eval(EvalArgs),
    /// Classify SMILES against a suite.
    Classify(ClassifyArgs),
    /// Per-sample class over-representation against the pooled background.
    Enrich(EnrichArgs),
    /// Write a synthetic ontology with matching reference programs.
    Synthetic(SyntheticArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Args)]
struct BuildArgs {
    ontology: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 25)]
    min_members: usize,
    #[arg(long, default_value_t = 5000)]
    max_members: usize,
    /// Keep classes without a text definition.
    #[arg(long)]
    allow_undefined: bool,
}

#[derive(Args)]
struct LearnArgs {
    benchmark: PathBuf,
    /// Suite output directory; classes already finished there are resumed.
    #[arg(long)]
    out: PathBuf,
    /// Named experiment configuration; explicit flags override it.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    f1_threshold: Option<f64>,
    #[arg(long)]
    max_attempts: Option<u32>,
    #[arg(long)]
    model: Option<String>,
    /// Chat-completions endpoint URL. The bearer token is read from
    /// CHEMPROG_API_KEY.
    #[arg(long, conflicts_with = "mock_dir")]
    endpoint: Option<String>,
    /// Read model replies from `<dir>/<class>/<attempt>.txt` instead of
    /// calling an endpoint.
    #[arg(long)]
    mock_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    use_the_force: bool,
    /// File listing the class ids to learn, one per line.
    #[arg(long)]
    slim_list: Option<PathBuf>,
    #[arg(long)]
    negative_cap: Option<usize>,
    /// Experiment name recorded with each program.
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct EvalArgs {
    benchmark: PathBuf,
    /// Suite directory; with several, each class uses the suite whose
    /// program scored best on training data.
    #[arg(long = "suite", required_unless_present = "naive")]
    suites: Vec<PathBuf>,
    /// Evaluate the single-pattern baseline built from class SMILES.
    #[arg(long)]
    naive: bool,
    #[arg(long)]
    slim_list: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    suite: PathBuf,
    smiles: Vec<String>,
    /// File with one SMILES per line; `-` reads standard input.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    format: Format,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnrichArgs {
    suite: PathBuf,
    /// JSON lines: {"sample_id": ..., "smiles": [...], "metadata": ...}.
    samples: PathBuf,
    #[arg(long, value_enum, default_value = "tsv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SyntheticArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 600)]
    structures: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Also write the reference programs as a suite directory.
    #[arg(long)]
    reference_suite: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn build(args: BuildArgs) -> Result<()> {
    let ontology = load_ontology(&args.ontology)?;
    for (child, parent) in &ontology.dangling {
        log::warn!("{child} refers to unknown parent {parent}");
    }
    let options = BuildOptions {
        filters: ClassFilters {
            min_members: args.min_members,
            max_members: args.max_members,
            require_definition: !args.allow_undefined,
        },
        seed: args.seed,
        train_fraction: args.train_fraction,
    };
    let bench = build_benchmark(&ontology.entries, &options)?;
    write_benchmark(&bench, &args.out)?;
    eprintln!(
        "{} structures, {} classes, {} validation structures",
        bench.structures.len(),
        bench.classes.len(),
        bench.split.validation_ids.len()
    );
    Ok(())
}

fn learn(args: LearnArgs) -> Result<()> {
    let mut bench = read_benchmark(&args.benchmark)?;
    if let Some(path) = &args.slim_list {
        bench.restrict_classes(&read_id_list(path)?);
    }
    let mut config = LeiaConfig::default();
    let mut experiment = config.model_name.clone();
    if let Some(name) = &args.preset {
        let Some(preset) = find_preset(name) else {
            let known: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
            bail!("unknown preset {name:?}; known presets: {}", known.join(", "));
        };
        config = config.with_preset(preset);
        experiment = preset.name.to_string();
    }
    if let Some(v) = args.f1_threshold {
        config.f1_threshold = v;
    }
    if let Some(v) = args.max_attempts {
        config.max_attempts = v;
    }
    if let Some(v) = args.model {
        experiment = v.clone();
        config.model_name = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    config.use_the_force |= args.use_the_force;
    config.negative_sample_cap = args.negative_cap.or(config.negative_sample_cap);
    config.validate().map_err(anyhow::Error::msg)?;
    let experiment = args.experiment.unwrap_or(experiment);

    let client: Box<dyn LlmClient> = match (&args.mock_dir, &args.endpoint) {
        (Some(dir), _) => Box::new(ScriptedClient::new(dir)),
        (None, Some(url)) => Box::new(HttpClient::new(HttpClientConfig::chat_completions(url))?),
        (None, None) => bail!("either --endpoint or --mock-dir is required"),
    };
    let classes: Vec<String> = bench.classes.keys().cloned().collect();
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let run = synthesize_suite(&bench, &classes, &config, client.as_ref(), &experiment, Some(&args.out), args.jobs)?;
    let reached = run.outcomes().filter(|o| o.stats.reached_threshold).count();
    eprintln!(
        "{} programs ({} reached F1 {}, {} resumed, {} failed)",
        run.suite.len(),
        reached,
        config.f1_threshold,
        run.resumed.len(),
        run.failures.len()
    );
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let mut bench = read_benchmark(&args.benchmark)?;
    if let Some(path) = &args.slim_list {
        bench.restrict_classes(&read_id_list(path)?);
    }
    let report = if args.naive {
        let programs: BTreeMap<String, _> =
            bench.classes.values().filter_map(|c| Some((c.class_id.clone(), naive_smarts_program(c)?))).collect();
        metrics_report(&evaluate_on_validation(&programs, &bench))
    } else {
        let suites = args
            .suites
            .iter()
            .map(|dir| Ok((dir.display().to_string(), ProgramSuite::load(dir)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let train_f1: BTreeMap<String, BTreeMap<String, f64>> = suites
            .iter()
            .map(|(name, s)| {
                (name.clone(), s.programs.iter().map(|(id, e)| (id.clone(), e.stats.train_metrics.f1)).collect())
            })
            .collect();
        let classes: Vec<String> = bench.classes.keys().cloned().collect();
        let chosen = build_ensemble(&classes, &train_f1);
        let programs = chosen.values().map(|c| (&c.class_id, &suites[&c.experiment].programs[&c.class_id].program));
        metrics_report(&evaluate_on_validation(programs, &bench))
    };
    let mut out = output(args.out.as_deref())?;
    out.write_all(report.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn classify(args: ClassifyArgs) -> Result<()> {
    let suite = ProgramSuite::load(&args.suite)?;
    let mut inputs = args.smiles;
    if let Some(path) = &args.input {
        let lines: Vec<String> = if path.as_os_str() == "-" {
            io::stdin().lock().lines().collect::<io::Result<_>>()?
        } else {
            let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            io::BufReader::new(file).lines().collect::<io::Result<_>>()?
        };
        inputs.extend(lines.into_iter().map(|l| l.trim().to_string()).filter(|l| !l.is_empty()));
    }
    if inputs.is_empty() {
        bail!("no SMILES given");
    }
    let classifier = Classifier::new(&suite);
    let results = classifier.classify_batch(&inputs, args.jobs);
    log::info!("{} inputs, {} parses", inputs.len(), classifier.parse_count());
    let mut out = output(args.out.as_deref())?;
    match args.format {
        Format::Tsv => write_tsv(&mut out, &results)?,
        Format::Json => write_json_lines(&mut out, &results)?,
    }
    out.flush()?;
    Ok(())
}

fn enrich(args: EnrichArgs) -> Result<()> {
    let suite = ProgramSuite::load(&args.suite)?;
    let samples = load_samples(&args.samples)?;
    let report = enrich_samples(&suite, &samples)?;
    for (sample, bad) in &report.unparseable {
        log::warn!("sample {sample}: {} unparseable structures", bad.len());
    }
    let mut out = output(args.out.as_deref())?;
    match args.format {
        Format::Tsv => write_report_tsv(&mut out, &report)?,
        Format::Json => write_report_json_lines(&mut out, &report)?,
    }
    out.flush()?;
    Ok(())
}

fn synthetic(args: SyntheticArgs) -> Result<()> {
    let onto = synthetic_ontology(args.structures, args.seed);
    fs::write(&args.out, to_json_lines(&onto.entries)).with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(dir) = &args.reference_suite {
        let options = BuildOptions {
            filters: ClassFilters { min_members: 1, max_members: usize::MAX, require_definition: false },
            seed: args.seed,
            ..BuildOptions::default()
        };
        let bench = build_benchmark(&onto.entries, &options)?;
        let mut suite = ProgramSuite::new("reference");
        for text in onto.programs.values() {
            let program = chemprog_core::parse_program(text)?;
            let (positives, negatives) =
                bench.train_examples(&program.class_id).context("reference class missing from benchmark")?;
            let report = score_program(
                Ok(&program),
                &PreparedExample::prepare(&positives),
                &PreparedExample::prepare(&negatives),
            );
            suite.insert(SuiteProgram {
                stats: ClassStats {
                    class_id: program.class_id.clone(),
                    class_name: program.class_name.clone(),
                    experiment: "reference".to_string(),
                    train_counts: report.counts,
                    train_metrics: report.counts.metrics(),
                    attempts_used: 0,
                    reached_threshold: true,
                    best_attempt: 0,
                    positives_scored: positives.len(),
                    negatives_scored: negatives.len(),
                    negative_sample_cap: None,
                },
                program,
            });
        }
        suite.save(dir)?;
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::BuildBenchmark(a) => build(a),
        Command::Learn(a) => learn(a),
        Command::Eval(a) => eval(a),
        Command::Classify(a) => classify(a),
        Command::Enrich(a) => enrich(a),
        Command::Synthetic(a) => synthetic(a),
    }
}
