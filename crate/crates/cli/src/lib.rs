//! The `qtwalk` pipeline: convert → stats → walk → train → eval, plus
//! parameter sweeps and a synthetic fixture generator.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use qtwalk_core::convert::{convert_document, ConvertOptions, LinkTarget};
use qtwalk_core::embeddings::{load_embeddings, save_embeddings, Embeddings};
use qtwalk_core::eval::{
    eval_classification, eval_clustering, eval_qt_similarity, eval_relatedness, gold, EvalConfig, EvalReport,
    LabeledSet, RelatednessGold, SimilarityGold,
};
use qtwalk_core::fixture::{generate, FixtureConfig};
use qtwalk_core::term::vocab;
use qtwalk_core::train::{build_vocabulary, train, Mode, TrainConfig};
use qtwalk_core::walk::{generate_corpus, Strategy, WalkCorpus, WalkParams};
use qtwalk_core::{parse_document, sha256_hex, Graph, StatsOptions, Triple};

mod manifest;

pub use manifest::Manifest;

#[derive(Debug)]
pub enum CliError {
    /// Bad input: unreadable files, parse errors, invalid flags.
    Input(String),
    /// An internal invariant failed.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

fn input<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Input(format!("{context}: {e}"))
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "qtwalk", version, about = "RDF-star graph embeddings with quoted-triple-aware walks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert a KGRC scene graph (Turtle) into RDF-star (Turtle-star).
    Convert(ConvertArgs),
    /// Print graph statistics as TSV.
    Stats(StatsArgs),
    /// Generate a walk corpus.
    Walk(WalkArgs),
    /// Train embeddings on a walk corpus.
    Train(TrainArgs),
    /// Score embeddings against gold-standard files.
    Eval(EvalArgs),
    /// Run walk → train → eval over a parameter grid.
    Sweep(SweepArgs),
    /// Write a seeded synthetic dataset with gold files.
    #[command(name = "gen-fixture")]
    GenFixture(FixtureArgs),
}

#[derive(Args, Debug)]
pub struct ConvertArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Conversion report (TSV); defaults to `<output>.report.tsv`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Point scene links at the bare quoted triple instead of its id wrapper.
    #[arg(long)]
    pub link_inner: bool,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    pub graph: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Count `kgc:sid` id wrappers as quoted triples.
    #[arg(long)]
    pub include_id_wrappers: bool,
}

#[derive(Args, Debug, Clone)]
pub struct WalkFlags {
    /// qs-walk probability.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// oq-walk probability.
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    /// Walks per root.
    #[arg(long, default_value_t = 100)]
    pub walks: usize,
    #[arg(long, default_value = "mid", value_parser = parse_strategy)]
    pub strategy: Strategy,
    /// Drop asserted triples with this predicate before walking (repeatable).
    #[arg(long = "exclude-predicate")]
    pub exclude_predicate: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct TrainFlags {
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value = "classic", value_parser = parse_mode)]
    pub mode: Mode,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long, default_value_t = 0.025)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
    /// More than one thread trains faster but not reproducibly.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Args, Debug)]
pub struct WalkArgs {
    pub graph: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub walk: WalkFlags,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    pub corpus: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub train: TrainFlags,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Also write the output matrices.
    #[arg(long)]
    pub with_outputs: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    pub embeddings: PathBuf,
    /// Directory with labels_<name>.tsv, relatedness.tsv, qt_similarity.tsv.
    #[arg(long)]
    pub gold: PathBuf,
    /// Comma-separated subset of classification,clustering,relatedness,qt_similarity.
    #[arg(long, value_delimiter = ',', default_value = "classification,clustering,relatedness,qt_similarity")]
    pub tasks: Vec<String>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Evaluate label tasks even if rdf:type triples were walked.
    #[arg(long)]
    pub allow_leak: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    pub graph: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub walk: WalkFlags,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Grid of alpha values (defaults to --alpha).
    #[arg(long, value_delimiter = ',')]
    pub alphas: Vec<f64>,
    /// Grid of beta values (defaults to --beta).
    #[arg(long, value_delimiter = ',')]
    pub betas: Vec<f64>,
    /// Grid of depths (defaults to --depth).
    #[arg(long, value_delimiter = ',')]
    pub depths: Vec<usize>,
    /// Seeds averaged at each grid point.
    #[arg(long, value_delimiter = ',', default_value = "42")]
    pub seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "classification,clustering,relatedness,qt_similarity")]
    pub tasks: Vec<String>,
    #[arg(long)]
    pub allow_leak: bool,
}

#[derive(Args, Debug)]
pub struct FixtureArgs {
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// People, objects and places each.
    #[arg(long, default_value_t = 30)]
    pub per_class: usize,
    #[arg(long, default_value_t = 8)]
    pub scenes_per_person: usize,
    #[arg(long, default_value_t = 3)]
    pub max_depth: usize,
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    s.parse()
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse()
}

const TASKS: [&str; 4] = ["classification", "clustering", "relatedness", "qt_similarity"];

/// Expands `rdf:type`, `a`, `kgc:x`, `<iri>` or a bare IRI.
pub fn expand_iri(s: &str) -> String {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix('<').and_then(|r| r.strip_suffix('>')) {
        return inner.to_string();
    }
    if s == "a" {
        return vocab::RDF_TYPE.to_string();
    }
    let prefixes = [
        ("rdf:", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"),
        ("rdfs:", "http://www.w3.org/2000/01/rdf-schema#"),
        ("owl:", "http://www.w3.org/2002/07/owl#"),
        ("xsd:", "http://www.w3.org/2001/XMLSchema#"),
        ("kgc:", vocab::KGC),
    ];
    for (p, ns) in prefixes {
        if let Some(local) = s.strip_prefix(p) {
            return format!("{ns}{local}");
        }
    }
    s.to_string()
}

fn read_triples(path: &Path) -> Result<Vec<Triple>> {
    let text = fs::read_to_string(path).map_err(input(path.display()))?;
    parse_document(&text).map_err(|d| CliError::Input(format!("{}:{d}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(input(path.display()))
}

fn manifest_path(artifact: &Path) -> PathBuf {
    let mut s = artifact.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

fn cmd_convert(a: &ConvertArgs) -> Result<()> {
    let triples = read_triples(&a.input)?;
    let opts = ConvertOptions {
        link_target: if a.link_inner { LinkTarget::Inner } else { LinkTarget::Wrapper },
        ..ConvertOptions::default()
    };
    let (out, report) = convert_document(&triples, &opts);
    write_file(&a.output, &qtwalk_core::turtle::write_document(&out))?;
    let report_path = a.report.clone().unwrap_or_else(|| {
        let mut s = a.output.as_os_str().to_owned();
        s.push(".report.tsv");
        PathBuf::from(s)
    });
    write_file(&report_path, &report.to_tsv())?;
    eprintln!("converted {} scenes into {} triples", report.scenes_converted, out.len());
    Ok(())
}

fn cmd_stats(a: &StatsArgs) -> Result<()> {
    let g = Graph::build(read_triples(&a.graph)?);
    let stats = g.compute_stats(&StatsOptions { include_id_wrappers: a.include_id_wrappers, ..Default::default() });
    let tsv = stats.to_tsv();
    match &a.output {
        Some(p) => write_file(p, &tsv),
        None => {
            print!("{tsv}");
            Ok(())
        }
    }
}

/// Loads a graph and removes asserted triples with excluded predicates.
fn load_graph(path: &Path, exclude: &[String]) -> Result<(Graph, Vec<String>)> {
    let mut excluded: Vec<String> = exclude.iter().map(|s| expand_iri(s)).collect();
    excluded.sort();
    excluded.dedup();
    let triples: Vec<Triple> =
        read_triples(path)?.into_iter().filter(|t| !excluded.iter().any(|e| e == t.predicate.as_str())).collect();
    Ok((Graph::build(triples), excluded))
}

fn walk_params(f: &WalkFlags, seed: u64) -> Result<WalkParams> {
    let p = WalkParams { strategy: f.strategy, walks: f.walks, depth: f.depth, alpha: f.alpha, beta: f.beta, seed };
    p.validate().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(p)
}

fn walk_manifest(m: &mut Manifest, g: &Graph, p: &WalkParams, excluded: &[String]) {
    m.set("graph_fingerprint", g.fingerprint());
    m.set("strategy", p.strategy.to_string());
    m.set("alpha", p.alpha.to_string());
    m.set("beta", p.beta.to_string());
    m.set("walks", p.walks.to_string());
    m.set("depth", p.depth.to_string());
    m.set("walk_seed", p.seed.to_string());
    m.set("exclude_predicates", excluded.join(","));
}

fn cmd_walk(a: &WalkArgs) -> Result<()> {
    let p = walk_params(&a.walk, a.seed)?;
    let (g, excluded) = load_graph(&a.graph, &a.walk.exclude_predicate)?;
    let corpus = generate_corpus(&g, &p).map_err(|e| CliError::Input(e.to_string()))?;
    let file = File::create(&a.output).map_err(input(a.output.display()))?;
    corpus.write_to(BufWriter::new(file)).map_err(input(a.output.display()))?;
    let mut m = Manifest::default();
    walk_manifest(&mut m, &g, &p, &excluded);
    m.set("corpus_walks", corpus.len().to_string());
    m.write(&manifest_path(&a.output))?;
    eprintln!("wrote {} walks from {} roots", corpus.len(), qtwalk_core::walk::corpus_roots(&g).len());
    Ok(())
}

fn train_config(f: &TrainFlags, seed: u64) -> TrainConfig {
    TrainConfig {
        mode: f.mode,
        dim: f.dim,
        window: f.window,
        epochs: f.epochs,
        negatives: f.negatives,
        learning_rate: f.learning_rate,
        min_count: f.min_count,
        seed,
        threads: f.threads,
        ..TrainConfig::default()
    }
}

fn train_manifest(m: &mut Manifest, cfg: &TrainConfig) {
    m.set("mode", cfg.mode.to_string());
    m.set("dim", cfg.dim.to_string());
    m.set("window", cfg.window.to_string());
    m.set("epochs", cfg.epochs.to_string());
    m.set("negatives", cfg.negatives.to_string());
    m.set("learning_rate", cfg.learning_rate.to_string());
    m.set("min_count", cfg.min_count.to_string());
    m.set("train_seed", cfg.seed.to_string());
    m.set("threads", cfg.threads.to_string());
}

fn train_corpus(corpus: &WalkCorpus, cfg: &TrainConfig) -> Result<qtwalk_core::train::EmbeddingModel> {
    let vocab = build_vocabulary(corpus, cfg.min_count);
    let model = train(corpus, &vocab, cfg).map_err(|e| CliError::Input(e.to_string()))?;
    if !model.is_finite() {
        return Err(CliError::Internal("training produced non-finite weights".into()));
    }
    Ok(model)
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let bytes = fs::read(&a.corpus).map_err(input(a.corpus.display()))?;
    let corpus = WalkCorpus::read_from(BufReader::new(&bytes[..])).map_err(input(a.corpus.display()))?;
    let cfg = train_config(&a.train, a.seed);
    let model = train_corpus(&corpus, &cfg)?;
    save_embeddings(&model, &a.output, a.with_outputs).map_err(input(a.output.display()))?;
    // carry the corpus provenance forward
    let mut m = Manifest::read(&manifest_path(&a.corpus)).unwrap_or_default();
    m.set("corpus_sha256", sha256_hex(&bytes));
    train_manifest(&mut m, &cfg);
    m.write(&manifest_path(&a.output))?;
    eprintln!("trained {} vectors of dimension {}", model.vocab_size(), model.dim);
    Ok(())
}

/// Gold files found in a gold directory.
struct GoldDir {
    labels: Vec<(String, LabeledSet)>,
    relatedness: Option<RelatednessGold>,
    similarity: Option<SimilarityGold>,
}

fn read_gold(dir: &Path) -> Result<GoldDir> {
    let entries = fs::read_dir(dir).map_err(input(dir.display()))?;
    let mut names: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    names.sort();
    let mut labels = Vec::new();
    let err = |e: qtwalk_core::eval::EvalError| CliError::Input(e.to_string());
    for p in &names {
        let file = p.file_name().and_then(|f| f.to_str()).unwrap_or_default();
        if let Some(name) = file.strip_prefix("labels_").and_then(|f| f.strip_suffix(".tsv")) {
            labels.push((name.to_string(), LabeledSet::parse(&gold::read_to_string(p).map_err(err)?, file).map_err(err)?));
        }
    }
    let optional = |name: &str| -> Option<PathBuf> { Some(dir.join(name)).filter(|p| p.exists()) };
    let relatedness = match optional("relatedness.tsv") {
        Some(p) => Some(RelatednessGold::parse(&gold::read_to_string(&p).map_err(err)?, "relatedness.tsv").map_err(err)?),
        None => None,
    };
    let similarity = match optional("qt_similarity.tsv") {
        Some(p) => Some(SimilarityGold::parse(&gold::read_to_string(&p).map_err(err)?, "qt_similarity.tsv").map_err(err)?),
        None => None,
    };
    Ok(GoldDir { labels, relatedness, similarity })
}

fn check_tasks(tasks: &[String]) -> Result<()> {
    for t in tasks {
        if !TASKS.contains(&t.as_str()) {
            return Err(CliError::Input(format!("unknown task {t:?} (expected one of {})", TASKS.join(", "))));
        }
    }
    Ok(())
}

fn labels_excluded(excluded: &str) -> bool {
    excluded.split(',').any(|p| p == vocab::RDF_TYPE)
}

/// Runs the selected tasks; label tasks are refused when type triples
/// were part of the walked graph, unless `allow_leak`.
fn evaluate(
    emb: &Embeddings,
    gold: &GoldDir,
    tasks: &[String],
    cfg: &EvalConfig,
    allow_leak: bool,
) -> Result<Vec<EvalReport>> {
    let wants = |t: &str| tasks.iter().any(|x| x == t);
    if (wants("classification") || wants("clustering")) && !gold.labels.is_empty() && !allow_leak && cfg.labels_excluded != Some(true) {
        return Err(CliError::Input(format!(
            "refusing label tasks: embeddings were not trained with --exclude-predicate {} (pass --allow-leak to override)",
            vocab::RDF_TYPE
        )));
    }
    let err = |e: qtwalk_core::eval::EvalError| CliError::Input(e.to_string());
    let mut reports = Vec::new();
    for (name, set) in &gold.labels {
        if wants("classification") {
            let mut r = eval_classification(emb, set, cfg).map_err(err)?;
            r.task = format!("classification:{name}");
            reports.push(r);
        }
        if wants("clustering") {
            let mut r = eval_clustering(emb, set, cfg).map_err(err)?;
            r.task = format!("clustering:{name}");
            reports.push(r);
        }
    }
    if wants("relatedness") {
        if let Some(g) = &gold.relatedness {
            reports.push(eval_relatedness(emb, g, cfg).map_err(err)?);
        }
    }
    if wants("qt_similarity") {
        if let Some(g) = &gold.similarity {
            reports.push(eval_qt_similarity(emb, g, cfg).map_err(err)?);
        }
    }
    Ok(reports)
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    check_tasks(&a.tasks)?;
    let emb = load_embeddings(&a.embeddings).map_err(input(a.embeddings.display()))?;
    let manifest = Manifest::read(&manifest_path(&a.embeddings)).ok();
    let excluded = manifest.as_ref().and_then(|m| m.get("exclude_predicates")).map(labels_excluded);
    let cfg = EvalConfig { seed: a.seed, labels_excluded: Some(excluded.unwrap_or(false)), ..EvalConfig::default() };
    let gold = read_gold(&a.gold)?;
    let reports = evaluate(&emb, &gold, &a.tasks, &cfg, a.allow_leak)?;
    let mut out = String::from("task\tmetric\tvalue\n");
    for r in &reports {
        out.push_str(&r.to_tsv());
    }
    if let Some(m) = &manifest {
        if let Some(fp) = m.get("graph_fingerprint") {
            let _ = writeln!(out, "provenance\tgraph_fingerprint\t{fp}");
        }
    }
    match &a.output {
        Some(p) => write_file(p, &out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

/// The headline metric of each report.
fn primary_metric(task: &str) -> &'static str {
    match task.split(':').next().unwrap_or(task) {
        "relatedness" => "kendall_tau_b",
        "qt_similarity" => "harmonic_mean",
        _ => "accuracy",
    }
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    check_tasks(&a.tasks)?;
    if a.seeds.is_empty() {
        return Err(CliError::Input("at least one seed is required".into()));
    }
    let alphas = if a.alphas.is_empty() { vec![a.walk.alpha] } else { a.alphas.clone() };
    let betas = if a.betas.is_empty() { vec![a.walk.beta] } else { a.betas.clone() };
    let depths = if a.depths.is_empty() { vec![a.walk.depth] } else { a.depths.clone() };
    let (g, excluded) = load_graph(&a.graph, &a.walk.exclude_predicate)?;
    let gold = read_gold(&a.gold)?;
    let eval_cfg = EvalConfig { labels_excluded: Some(labels_excluded(&excluded.join(","))), ..EvalConfig::default() };
    let mut out = String::from("alpha\tbeta\tdepth\ttask\tmetric\tvalue\n");
    for &alpha in &alphas {
        for &beta in &betas {
            for &depth in &depths {
                let mut sums: Vec<(String, &'static str, f64)> = Vec::new();
                for &seed in &a.seeds {
                    let flags = WalkFlags { alpha, beta, depth, ..a.walk.clone() };
                    let p = walk_params(&flags, seed)?;
                    let corpus = generate_corpus(&g, &p).map_err(|e| CliError::Input(e.to_string()))?;
                    let model = train_corpus(&corpus, &train_config(&a.train, seed))?;
                    let cfg = EvalConfig { seed, ..eval_cfg.clone() };
                    let reports = evaluate(&model.embeddings(), &gold, &a.tasks, &cfg, a.allow_leak)?;
                    for (i, r) in reports.iter().enumerate() {
                        let metric = primary_metric(&r.task);
                        let v = r.get(metric).ok_or_else(|| CliError::Internal(format!("{} lacks {metric}", r.task)))?;
                        match sums.get_mut(i) {
                            Some(entry) => entry.2 += v,
                            None => sums.push((r.task.clone(), metric, v)),
                        }
                    }
                }
                for (task, metric, total) in sums {
                    let mean = total / a.seeds.len() as f64;
                    let _ = writeln!(out, "{alpha}\t{beta}\t{depth}\t{task}\t{metric}\t{mean}");
                }
            }
        }
    }
    write_file(&a.output, &out)
}

fn cmd_gen_fixture(a: &FixtureArgs) -> Result<()> {
    let cfg = FixtureConfig {
        seed: a.seed,
        per_class: a.per_class,
        scenes_per_person: a.scenes_per_person,
        max_depth: a.max_depth,
        ..FixtureConfig::default()
    };
    if cfg.per_class < 10 {
        return Err(CliError::Input("--per-class must be at least 10 for 10-fold gold sets".into()));
    }
    let fixture = generate(&cfg);
    fixture.write_to(&a.output).map_err(input(a.output.display()))?;
    eprintln!("wrote {} KGRC triples and {} RDF-star triples", fixture.kgrc.len(), fixture.graph.len());
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Convert(a) => cmd_convert(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Walk(a) => cmd_walk(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::GenFixture(a) => cmd_gen_fixture(a),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match std::panic::catch_unwind(|| execute(&cli)) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("{e}");
            e.exit_code()
        }
        Err(_) => 2,
    }
}
