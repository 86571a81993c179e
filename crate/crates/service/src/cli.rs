//! The `topicmap` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error (bad flags,
//! missing inputs). `RTOPMAP_LOG` sets the log filter, e.g. `info` or
//! `topicmap=debug`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use topicmap::graph::{build_graph, compute_stats, filter_graph, GraphStats, RankedTopic};
use topicmap::ingest::{
    load_universities, parse_profiles, synth_corpus, BaseSet, Corpus, ErrorMode, SynthSpec,
    DESK_SCALE_PROFILES,
};
use topicmap::normalize::{canonicalize, TopicLexicon};
use topicmap::overlay::{
    citations_overlay, department_overlay, document_overlay, hr_overlay,
    normalized_citations_overlay, CitationMode, NormalizeMode, OverlayResult,
};
use topicmap::TopicGraph;
use tracing_subscriber::EnvFilter;

use crate::bundle::{build_bundle, BuildStatus, Bundle, BundleError};
use crate::config::BuildConfig;
use crate::server;

#[derive(Debug, Parser)]
#[command(
    name = "topicmap",
    version,
    about = "Build, inspect and serve research-topic maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a map bundle from profile and university files.
    Build(BuildArgs),
    /// Serve a bundle over HTTP.
    Serve(ServeArgs),
    /// Print network statistics of a bundle or corpus.
    Stats(StatsArgs),
    /// Evaluate an overlay and print it as JSON.
    Overlay(OverlayArgs),
    /// Write a deterministic synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Line-delimited JSON researcher profiles.
    #[arg(long)]
    pub profiles: PathBuf,
    /// Line-delimited JSON universities.
    #[arg(long)]
    pub universities: PathBuf,
    /// Abort on the first malformed record instead of skipping it.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML file with build settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub min_node_weight: Option<u32>,
    #[arg(long)]
    pub min_edge_weight: Option<u32>,
    /// Number of clusters (countries).
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Basemap: WORLD, US or EU.
    #[arg(long)]
    pub variant: Option<BaseSet>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<BuildConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                require_file(path)?;
                BuildConfig::from_toml_file(path).map_err(|e| CliError::Usage(e.to_string()))?
            }
            None => BuildConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.min_node_weight {
            cfg.min_node_weight = v;
        }
        if let Some(v) = self.min_edge_weight {
            cfg.min_edge_weight = v;
        }
        if let Some(v) = self.clusters {
            cfg.clusters = v;
        }
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Bundle directory; may also come from `out` in the config file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
}

/// A bundle, or a corpus plus build settings.
#[derive(Debug, Args)]
pub struct SourceArgs {
    #[arg(long, conflicts_with_all = ["profiles", "universities"])]
    pub bundle: Option<PathBuf>,
    #[arg(long, requires = "universities")]
    pub profiles: Option<PathBuf>,
    #[arg(long, requires = "profiles")]
    pub universities: Option<PathBuf>,
    #[arg(long)]
    pub strict: bool,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct OverlayArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(subcommand)]
    pub kind: OverlayKindArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizeArg {
    None,
    Rate,
    Literal,
}

#[derive(Debug, Subcommand)]
pub enum OverlayKindArgs {
    /// Citation sums, optionally normalized by the base set.
    Citations {
        #[arg(long)]
        university: String,
        #[arg(long, default_value = "full")]
        mode: CitationMode,
        #[arg(long, value_enum, default_value_t = NormalizeArg::None)]
        normalize: NormalizeArg,
        #[arg(long, default_value = "WORLD")]
        base: BaseSet,
    },
    /// Human-resource strengths and weaknesses against a base set.
    Hr {
        #[arg(long)]
        university: String,
        #[arg(long, default_value = "WORLD")]
        base: BaseSet,
    },
    /// Topics of researchers whose affiliation contains a keyword.
    Department {
        #[arg(long)]
        keyword: String,
    },
    /// Topics mentioned in a text document.
    Document {
        #[arg(long, conflicts_with = "file", required_unless_present = "file")]
        text: Option<String>,
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory for profiles.jsonl and universities.jsonl.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = DESK_SCALE_PROFILES)]
    pub count: usize,
    /// Use the small default vocabulary instead of the desk-scale one.
    #[arg(long)]
    pub small: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<BundleError> for CliError {
    fn from(e: BundleError) -> Self {
        match e {
            BundleError::NotFound(_) | BundleError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn init_logging() {
    let filter = EnvFilter::try_from_env("RTOPMAP_LOG").unwrap_or_else(|_| EnvFilter::new("warn"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    init_logging();
    let result = match cli.command {
        Command::Build(a) => run_build(&a),
        Command::Serve(a) => run_serve(&a),
        Command::Stats(a) => run_stats(&a),
        Command::Overlay(a) => run_overlay(&a),
        Command::Synth(a) => run_synth(&a),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "input file not found: {}",
            path.display()
        )))
    }
}

/// Reads a corpus. Malformed records are skipped with a warning unless
/// `strict` is set.
pub fn load_corpus(profiles: &Path, universities: &Path, strict: bool) -> Result<Corpus, CliError> {
    require_file(profiles)?;
    require_file(universities)?;
    let open = |p: &Path| {
        File::open(p)
            .map(BufReader::new)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))
    };
    let mode = if strict {
        ErrorMode::Strict
    } else {
        ErrorMode::SkipAndReport
    };
    let parsed = parse_profiles(open(profiles)?, mode)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", profiles.display())))?;
    for err in &parsed.errors {
        eprintln!(
            "warning: {}:{}: {}",
            profiles.display(),
            err.line,
            err.message
        );
    }
    let unis = load_universities(open(universities)?)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", universities.display())))?;
    if strict {
        Corpus::new(parsed.profiles, unis).map_err(|e| CliError::Runtime(e.to_string()))
    } else {
        let (corpus, dropped) = Corpus::new_lenient(parsed.profiles, unis)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        for d in dropped {
            eprintln!("warning: {d}");
        }
        Ok(corpus)
    }
}

/// `SOURCE_DATE_EPOCH` when set, otherwise the Unix epoch, so that rebuilds
/// are byte-identical.
fn created_timestamp() -> Result<i64, CliError> {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("SOURCE_DATE_EPOCH {v:?} is not an integer"))),
        Err(_) => Ok(0),
    }
}

fn run_build(a: &BuildArgs) -> Result<String, CliError> {
    let cfg = a.config.resolve()?;
    let out = a.out.clone().or_else(|| cfg.out.clone()).ok_or_else(|| {
        CliError::Usage("no output directory: pass --out or set out in the config".into())
    })?;
    let corpus = load_corpus(&a.corpus.profiles, &a.corpus.universities, a.corpus.strict)?;
    let report = build_bundle(&corpus, &cfg, &out, created_timestamp()?)?;
    let mut text = String::new();
    let c = &report.manifest.counts;
    match report.status {
        BuildStatus::UpToDate => {
            let _ = writeln!(
                text,
                "bundle at {} is up-to-date (config {})",
                out.display(),
                &report.manifest.config_digest[..12]
            );
        }
        BuildStatus::Built => {
            for (stage, elapsed) in &report.timings {
                let _ = writeln!(text, "{stage:<10} {:>9.3} s", elapsed.as_secs_f64());
            }
            let total: f64 = report.timings.iter().map(|(_, d)| d.as_secs_f64()).sum();
            let _ = writeln!(text, "{:<10} {total:>9.3} s", "total");
            let _ = writeln!(
                text,
                "built {} bundle at {}: {} topics on the map ({} in the lexicon), {} edges, {} countries",
                report.manifest.variant,
                out.display(),
                c.nodes,
                c.topics,
                c.edges,
                c.clusters
            );
        }
    }
    Ok(text)
}

fn run_serve(a: &ServeArgs) -> Result<String, CliError> {
    let bundle = Arc::new(Bundle::load(&a.bundle)?);
    let addr = SocketAddr::new(a.host, a.port);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
    runtime.block_on(async {
        let listener = server::bind(addr)
            .await
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let local = listener
            .local_addr()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        println!("serving {} on http://{local}", a.bundle.display());
        server::serve(listener, bundle)
            .await
            .map_err(|e| CliError::Runtime(e.to_string()))
    })?;
    Ok(String::new())
}

/// Annotated corpus, lexicon and map graph for stats and overlays.
struct Source {
    corpus: Corpus,
    lexicon: TopicLexicon,
    graph: TopicGraph,
    variant: BaseSet,
}

fn load_source(a: &SourceArgs) -> Result<Source, CliError> {
    if let Some(dir) = &a.bundle {
        let b = Bundle::load(dir)?;
        return Ok(Source {
            variant: b.manifest.variant,
            corpus: b.corpus,
            lexicon: b.lexicon,
            graph: b.graph,
        });
    }
    let (Some(profiles), Some(universities)) = (&a.profiles, &a.universities) else {
        return Err(CliError::Usage(
            "pass --bundle, or --profiles with --universities".into(),
        ));
    };
    let cfg = a.config.resolve()?;
    let corpus = load_corpus(profiles, universities, a.strict)?;
    let (lexicon, corpus) = canonicalize(&corpus);
    let full = build_graph(&corpus.restrict(cfg.variant), &lexicon);
    let graph = filter_graph(&full, cfg.min_node_weight, cfg.min_edge_weight);
    Ok(Source {
        corpus,
        lexicon,
        graph,
        variant: cfg.variant,
    })
}

fn run_stats(a: &StatsArgs) -> Result<String, CliError> {
    let src = load_source(&a.source)?;
    let stats = compute_stats(&src.graph, Some(&src.corpus.restrict(src.variant)));
    Ok(match a.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&stats).expect("stats serialize");
            s.push('\n');
            s
        }
        Format::Text => stats_text(&stats),
    })
}

/// Human-readable summary of [`GraphStats`].
pub fn stats_text(s: &GraphStats) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "nodes {}", s.node_count);
    let _ = writeln!(t, "edges {}", s.edge_count);
    let _ = writeln!(
        t,
        "components {} (giant component {} nodes, {} edges)",
        s.component_count, s.giant_component.nodes, s.giant_component.edges
    );
    let _ = writeln!(
        t,
        "clustering coefficient {:.3}",
        s.global_clustering_coefficient
    );
    match &s.average_shortest_path {
        Some(p) => {
            let how = if p.sampled { "sampled" } else { "exact" };
            let _ = writeln!(t, "average path {:.3} ({how}, {} pairs)", p.length, p.pairs);
        }
        None => {
            let _ = writeln!(t, "average path n/a");
        }
    }
    let table = |t: &mut String, title: &str, rows: &[RankedTopic], integer: bool| {
        if rows.is_empty() {
            return;
        }
        let _ = writeln!(t, "top by {title}");
        for (i, r) in rows.iter().enumerate() {
            if integer {
                let _ = writeln!(t, "{:>4}. {} ({})", i + 1, r.label, r.value);
            } else {
                let _ = writeln!(t, "{:>4}. {} ({:.1})", i + 1, r.label, r.value);
            }
        }
    };
    table(&mut t, "degree", &s.top_by_degree, true);
    table(&mut t, "researchers", &s.top_by_weight, true);
    table(
        &mut t,
        "citations per person",
        &s.top_by_citations_per_person,
        false,
    );
    t
}

fn run_overlay(a: &OverlayArgs) -> Result<String, CliError> {
    let src = load_source(&a.source)?;
    let usage = |e: topicmap::overlay::OverlayError| CliError::Usage(e.to_string());
    let result: OverlayResult = match &a.kind {
        OverlayKindArgs::Citations {
            university,
            mode,
            normalize,
            base,
        } => match normalize {
            NormalizeArg::None => citations_overlay(&src.corpus, university, *mode),
            NormalizeArg::Rate => normalized_citations_overlay(
                &src.corpus,
                university,
                *base,
                *mode,
                NormalizeMode::Rate,
            ),
            NormalizeArg::Literal => normalized_citations_overlay(
                &src.corpus,
                university,
                *base,
                *mode,
                NormalizeMode::Literal,
            ),
        }
        .map_err(usage)?,
        OverlayKindArgs::Hr { university, base } => {
            hr_overlay(&src.corpus, university, *base).map_err(usage)?
        }
        OverlayKindArgs::Department { keyword } => {
            department_overlay(&src.corpus, keyword).map_err(usage)?
        }
        OverlayKindArgs::Document { text, file } => {
            let text = match (text, file) {
                (Some(t), _) => t.clone(),
                (None, Some(path)) => {
                    require_file(path)?;
                    std::fs::read_to_string(path)
                        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?
                }
                (None, None) => return Err(CliError::Usage("pass --text or --file".into())),
            };
            document_overlay(&text, &src.lexicon)
        }
    };
    let mut s = serde_json::to_string_pretty(&result).expect("overlay serializes");
    s.push('\n');
    Ok(s)
}

fn run_synth(a: &SynthArgs) -> Result<String, CliError> {
    let spec = if a.small {
        SynthSpec::default()
    } else {
        SynthSpec::desk_scale()
    };
    let synth = synth_corpus(a.seed, a.count, &spec);
    std::fs::create_dir_all(&a.out)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", a.out.display())))?;
    let write = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| {
        let path = a.out.join(name);
        File::create(&path)
            .and_then(|file| {
                let mut w = BufWriter::new(file);
                f(&mut w)?;
                w.flush()
            })
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    };
    write("profiles.jsonl", &|w| synth.corpus.write_profiles(w))?;
    write("universities.jsonl", &|w| {
        synth.corpus.write_universities(w)
    })?;
    Ok(format!(
        "wrote {} profiles and {} universities to {}\n",
        synth.corpus.len(),
        synth.corpus.universities().len(),
        a.out.display()
    ))
}
