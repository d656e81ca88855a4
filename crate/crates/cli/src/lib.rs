//! The `edgar` command line.
//!
//! Exit codes: 0 ok, 1 ingest or store load failure, 2 invalid query, options
//! or config, 3 unknown curie or candidate, 4 internal fault.

use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edgar_core::message::ResultEntry;
use edgar_core::store::{IngestOptions, InputFiles};
use edgar_core::synth::{ad_fixture, generate, PlantSpec};
use edgar_core::{
    answer, format_p, parse_request, Curie, Error, LocalResolver, MethodChoice, NameResolver,
    PipelineConfig, QueryRequest, ResultMessage, StageTimings, Store, Template,
};
use edgar_service::{AppState, ServeError, STORE_PATH_ENV};

pub const TSV_HEADER: &str = "rank\tcurie\tname\tbest_p\tn_rules\tin_lookup";

#[derive(Debug, Parser)]
#[command(
    name = "edgar",
    version,
    about = "Enrichment-driven knowledge graph reasoner"
)]
pub struct Cli {
    /// Store directory written by `edgar ingest`.
    #[arg(long, global = true, env = STORE_PATH_ENV)]
    pub store: Option<PathBuf>,
    /// Pipeline config (JSON); command-line options override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for enrichment and inference. Defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Pretty)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Tsv,
    Pretty,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a store directory from nodes, edges and the two ontologies.
    Ingest(IngestArgs),
    /// Materialize ancestor-predicate edges in an existing store.
    Expand {
        /// Write the expanded store here instead of in place.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a one-hop query and print the ranked candidates.
    Query(QueryArgs),
    /// Show the rules behind one candidate.
    Explain {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long)]
        candidate: String,
    },
    /// Look up curies by node name.
    Resolve {
        text: String,
        #[arg(long, default_value_t = 10)]
        limit: usize,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
    /// Write a synthetic graph with planted structure, or the bundled fixture.
    Synth {
        /// Generator spec (JSON).
        #[arg(
            long,
            conflicts_with = "ad_fixture",
            required_unless_present = "ad_fixture"
        )]
        spec: Option<PathBuf>,
        /// Write the Alzheimer disease fixture instead.
        #[arg(long)]
        ad_fixture: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory holding nodes.jsonl, edges.jsonl and the ontology files.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub nodes: Option<PathBuf>,
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long)]
    pub predicates: Option<PathBuf>,
    #[arg(long)]
    pub categories: Option<PathBuf>,
    /// Output store directory; defaults to --store.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Skip edges with unknown endpoints instead of failing.
    #[arg(long)]
    pub lenient: bool,
    /// Leave the store unexpanded.
    #[arg(long)]
    pub no_expand: bool,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// Request file (`{"message": {"query_graph": ...}}`).
    #[arg(long, conflicts_with = "template")]
    pub query: Option<PathBuf>,
    /// drug-treats-disease, gene-associated-disease or process-affects-gene.
    #[arg(long, requires = "curie")]
    pub template: Option<String>,
    /// Curie pinned by the template.
    #[arg(long)]
    pub curie: Option<String>,
    #[arg(long)]
    pub p0: Option<f64>,
    #[arg(long)]
    pub max_rules: Option<usize>,
    #[arg(long)]
    pub min_k: Option<usize>,
    #[arg(long)]
    pub stats_method: Option<MethodChoice>,
    #[arg(long)]
    pub poisson_threshold_n: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Store(#[source] Error),
    #[error("{0}")]
    Query(#[source] Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    NotFound(String),
    #[error(transparent)]
    Serve(#[from] ServeError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Store(_) => 1,
            CliError::Usage(_) => 2,
            CliError::NotFound(_) => 3,
            CliError::Query(e) if e.is_validation() => 2,
            CliError::Query(e) if e.is_not_found() => 3,
            CliError::Query(_) | CliError::Serve(_) | CliError::Io { .. } => 4,
        }
    }

    /// The reader went away, e.g. output piped into `head`.
    pub fn is_broken_pipe(&self) -> bool {
        matches!(self, CliError::Io { source, .. } if source.kind() == std::io::ErrorKind::BrokenPipe)
    }

    /// One line per problem.
    pub fn report(&self) -> Vec<String> {
        match self {
            CliError::Query(e) | CliError::Store(e) => {
                let prefix = e
                    .stage()
                    .map(|s| format!("{s} stage: "))
                    .unwrap_or_default();
                e.messages()
                    .into_iter()
                    .map(|m| format!("{prefix}{m}"))
                    .collect()
            }
            other => vec![other.to_string()],
        }
    }
}

fn output_err(source: std::io::Error) -> CliError {
    CliError::Io {
        context: "writing output".into(),
        source,
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let Cli {
        store,
        config,
        threads,
        format,
        command,
    } = cli;
    let base = match &config {
        Some(path) => PipelineConfig::load(path).map_err(|e| CliError::Usage(e.to_string()))?,
        None => PipelineConfig::default(),
    };
    if threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let store_path = || {
        store
            .clone()
            .ok_or_else(|| CliError::Usage(format!("--store or {STORE_PATH_ENV} is required")))
    };

    match command {
        Command::Ingest(args) => {
            let dest = args.out.clone().or(store.clone()).ok_or_else(|| {
                CliError::Usage("ingest needs --out or --store for the output directory".into())
            })?;
            ingest(&args, &dest, format, out)
        }
        Command::Expand { out: dest } => {
            let path = store_path()?;
            let store = Store::load_dir(&path).map_err(CliError::Store)?;
            let expanded = store.expand_redundant();
            let dest = dest.unwrap_or(path);
            expanded.save_dir(&dest).map_err(CliError::Store)?;
            write_manifest(&expanded, format, out)
        }
        Command::Query(args) => {
            let store = load_store(&store_path()?)?;
            let config = apply_stats_flags(base, &args);
            let request = build_request(&args)?;
            let (message, timings) = with_threads(threads, || answer(&store, &request, &config))?
                .map_err(CliError::Query)?;
            eprintln!("{}", timing_line(&message, &timings));
            write_message(&message, format, out)
        }
        Command::Explain {
            query: args,
            candidate,
        } => {
            let store = load_store(&store_path()?)?;
            let config = apply_stats_flags(base, &args);
            let request = build_request(&args)?;
            let (message, _) = with_threads(threads, || answer(&store, &request, &config))?
                .map_err(CliError::Query)?;
            explain(&store, &message, &candidate, format, out)
        }
        Command::Resolve { text, limit } => {
            if limit == 0 {
                return Err(CliError::Usage("--limit must be at least 1".into()));
            }
            let store = load_store(&store_path()?)?;
            let hits = LocalResolver::from_store(&store).resolve(&text, limit);
            match format {
                Format::Json => {
                    let body = serde_json::to_string_pretty(&hits).expect("matches serialize");
                    writeln!(out, "{body}").map_err(output_err)
                }
                _ => {
                    for h in hits {
                        let kind = if h.match_kind == edgar_core::MatchKind::Exact {
                            "exact"
                        } else {
                            "prefix"
                        };
                        writeln!(out, "{}\t{}\t{kind}", h.curie, h.name).map_err(output_err)?;
                    }
                    Ok(())
                }
            }
        }
        Command::Serve { port, host } => {
            let path = store_path()?;
            let store = load_store(&path)?;
            let state = AppState::new(store, base).with_store_path(path);
            let mut runtime = tokio::runtime::Builder::new_multi_thread();
            if let Some(n) = threads {
                runtime.worker_threads(n);
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
            }
            let runtime = runtime
                .enable_all()
                .build()
                .map_err(|source| CliError::Io {
                    context: "starting runtime".into(),
                    source,
                })?;
            runtime.block_on(edgar_service::serve(state, SocketAddr::new(host, port)))?;
            Ok(())
        }
        Command::Synth {
            spec,
            ad_fixture: fixture,
            out: dir,
        } => synth(spec.as_deref(), fixture, &dir, out),
    }
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Loads a store, expanding it in memory when it was saved unexpanded.
pub fn load_store(path: &Path) -> Result<Store, CliError> {
    let store = Store::load_dir(path).map_err(CliError::Store)?;
    if store.is_expanded() {
        Ok(store)
    } else {
        eprintln!(
            "note: {} is not expanded; expanding in memory",
            path.display()
        );
        Ok(store.expand_redundant())
    }
}

fn ingest(
    args: &IngestArgs,
    dest: &Path,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut files = match &args.input {
        Some(dir) => InputFiles::in_dir(dir),
        None => InputFiles::in_dir(Path::new(".")),
    };
    let overrides = [
        (&args.nodes, &mut files.nodes),
        (&args.edges, &mut files.edges),
        (&args.predicates, &mut files.predicates),
        (&args.categories, &mut files.categories),
    ];
    let mut explicit = 0;
    for (arg, slot) in overrides {
        if let Some(p) = arg {
            *slot = p.clone();
            explicit += 1;
        }
    }
    if args.input.is_none() && explicit < 4 {
        return Err(CliError::Usage(
            "ingest needs --input DIR or all of --nodes, --edges, --predicates, --categories"
                .into(),
        ));
    }
    let started = Instant::now();
    let (store, report) = Store::ingest(
        &files,
        IngestOptions {
            lenient: args.lenient,
        },
    )
    .map_err(CliError::Store)?;
    let store = if args.no_expand {
        store
    } else {
        store.expand_redundant()
    };
    store.save_dir(dest).map_err(CliError::Store)?;
    if report.skipped_dangling > 0 {
        eprintln!(
            "skipped {} edges with unknown endpoints",
            report.skipped_dangling
        );
    }
    if report.duplicate_edges > 0 {
        eprintln!("merged {} duplicate edges", report.duplicate_edges);
    }
    eprintln!(
        "ingested in {:.1} ms",
        started.elapsed().as_secs_f64() * 1e3
    );
    match format {
        Format::Json => {
            let body = serde_json::json!({ "manifest": store.manifest(), "report": report });
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&body).expect("serializes")
            )
            .map_err(output_err)
        }
        _ => {
            write_manifest(&store, format, out)?;
            writeln!(out, "skipped_dangling\t{}", report.skipped_dangling).map_err(output_err)
        }
    }
}

fn write_manifest(store: &Store, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    let m = store.manifest();
    if format == Format::Json {
        return writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&m).expect("serializes")
        )
        .map_err(output_err);
    }
    let mut lines = vec![
        format!("nodes\t{}", m.stats.node_count),
        format!("edges\t{}", m.stats.edge_count),
        format!("asserted_edges\t{}", m.asserted_edge_count),
        format!("derived_edges\t{}", m.derived_edge_count),
        format!("expanded\t{}", m.expanded),
    ];
    lines.extend(
        m.stats
            .type_counts
            .iter()
            .map(|(c, n)| format!("type\t{c}\t{n}")),
    );
    for line in lines {
        writeln!(out, "{line}").map_err(output_err)?;
    }
    Ok(())
}

fn apply_stats_flags(mut config: PipelineConfig, args: &QueryArgs) -> PipelineConfig {
    if let Some(m) = args.stats_method {
        config.stats.method = m;
    }
    if let Some(n) = args.poisson_threshold_n {
        config.stats.poisson_threshold_n = n;
    }
    config
}

/// The request from `--query` or `--template`, with option flags folded in.
pub fn build_request(args: &QueryArgs) -> Result<QueryRequest, CliError> {
    let mut request = match (&args.query, &args.template) {
        (Some(path), _) => {
            let bytes = std::fs::read(path).map_err(|source| CliError::Io {
                context: path.display().to_string(),
                source,
            })?;
            parse_request(&bytes).map_err(CliError::Query)?
        }
        (None, Some(name)) => {
            let template = Template::from_name(name).ok_or_else(|| {
                let known: Vec<&str> = Template::ALL.iter().map(|t| t.name()).collect();
                CliError::Usage(format!(
                    "unknown template {name:?}; expected one of {}",
                    known.join(", ")
                ))
            })?;
            let raw = args.curie.as_deref().unwrap_or_default();
            let curie = Curie::new(raw).map_err(CliError::Query)?;
            template.request(&curie)
        }
        (None, None) => {
            return Err(CliError::Usage(
                "give --query FILE or --template NAME --curie C".into(),
            ))
        }
    };
    let opts = &mut request.options;
    opts.p0 = args.p0.or(opts.p0);
    opts.max_rules = args.max_rules.or(opts.max_rules);
    opts.min_k = args.min_k.or(opts.min_k);
    Ok(request)
}

pub fn timing_line(message: &ResultMessage, t: &StageTimings) -> String {
    let m = &message.meta;
    format!(
        "lookup: n={} ({:.3} ms) | enrichment: {}/{} pre/post filter ({:.3} ms) | inference: m={} ({} novel) ({:.3} ms)",
        m.lookup_n,
        t.lookup_ms,
        m.rules_pre_filter,
        m.rules_post_filter,
        t.enrichment_ms,
        m.inferred_m,
        m.novel_m,
        t.inference_ms
    )
}

fn write_message(
    message: &ResultMessage,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    match format {
        Format::Json => out.write_all(&message.to_json_bytes()).map_err(output_err),
        Format::Tsv => {
            writeln!(out, "{TSV_HEADER}").map_err(output_err)?;
            for (i, r) in message.results.iter().enumerate() {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    i + 1,
                    r.node_binding,
                    r.name.replace(['\t', '\n'], " "),
                    r.best_p,
                    r.enrichments.len(),
                    r.in_lookup
                )
                .map_err(output_err)?;
            }
            Ok(())
        }
        Format::Pretty => write_pretty(message, out).map_err(output_err),
    }
}

fn write_pretty(message: &ResultMessage, out: &mut dyn Write) -> std::io::Result<()> {
    let m = &message.meta;
    writeln!(
        out,
        "{} ({}) {} {} via {}",
        m.anchor.id,
        m.anchor.name,
        m.direction,
        m.answer_type,
        m.predicates.join("|")
    )?;
    writeln!(
        out,
        "lookup n={}  rules {}/{}  inferred m={} ({} novel)",
        m.lookup_n, m.rules_pre_filter, m.rules_post_filter, m.inferred_m, m.novel_m
    )?;
    writeln!(out)?;
    let rows: Vec<[String; 6]> = message
        .results
        .iter()
        .enumerate()
        .map(|(i, r)| {
            [
                (i + 1).to_string(),
                r.node_binding.to_string(),
                r.name.clone(),
                r.best_p.clone(),
                r.enrichments.len().to_string(),
                if r.in_lookup { "yes".into() } else { "".into() },
            ]
        })
        .collect();
    let header = ["rank", "curie", "name", "best_p", "n_rules", "in_lookup"].map(String::from);
    let mut widths = header.each_ref().map(|h| h.chars().count());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count().min(48));
        }
    }
    for row in std::iter::once(&header).chain(&rows) {
        let cells: Vec<String> = row
            .iter()
            .zip(widths)
            .map(|(cell, w)| {
                let cell: String = cell.chars().take(48).collect();
                format!("{cell:<w$}")
            })
            .collect();
        writeln!(out, "{}", cells.join("  ").trim_end())?;
    }
    Ok(())
}

fn explain(
    store: &Store,
    message: &ResultMessage,
    candidate: &str,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let entry = Curie::new(candidate).ok().and_then(|c| message.result(&c));
    let Some(entry) = entry else {
        return Err(CliError::NotFound(not_found_message(
            store, message, candidate,
        )));
    };
    if format == Format::Json {
        let body = serde_json::to_string_pretty(entry).expect("serializes");
        return writeln!(out, "{body}").map_err(output_err);
    }
    write_explanation(entry, out).map_err(output_err)
}

fn write_explanation(entry: &ResultEntry, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{} ({}): best p {}, {} supporting rules",
        entry.node_binding,
        entry.name,
        entry.best_p,
        entry.enrichments.len()
    )?;
    if entry.in_lookup {
        writeln!(
            out,
            "note: {} is already a lookup answer; the rules below also explain its own membership",
            entry.node_binding
        )?;
    }
    for (i, e) in entry.enrichments.iter().enumerate() {
        let r = &e.rule;
        let c = &r.counts;
        let relation = r
            .predicate
            .as_deref()
            .map(|p| format!(" {p}"))
            .unwrap_or_default();
        writeln!(
            out,
            "{}. [rule {}] {} {}{} ({})  p={}  N={} K={} n={} k={}  {}",
            i + 1,
            r.rule_rank,
            r.kind,
            r.target_id,
            relation,
            r.target_name,
            r.p,
            c.population,
            c.successes,
            c.draws,
            c.observed,
            r.method
        )?;
        writeln!(out, "   {}", e.path)?;
    }
    Ok(())
}

/// Names the closest candidate by curie or name.
fn not_found_message(store: &Store, message: &ResultMessage, wanted: &str) -> String {
    let lowered = wanted.to_lowercase();
    let best = message
        .results
        .iter()
        .map(|r| {
            let by_id = strsim::jaro_winkler(&lowered, &r.node_binding.as_str().to_lowercase());
            let by_name = strsim::jaro_winkler(&lowered, &r.name.to_lowercase());
            (by_id.max(by_name), r)
        })
        .max_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then_with(|| b.1.node_binding.cmp(&a.1.node_binding))
        });
    let mut msg = match Curie::new(wanted).ok().and_then(|c| store.node(&c)) {
        Some(node) => format!(
            "{wanted} ({}) is not among the {} inferred candidates",
            node.name,
            message.results.len()
        ),
        None => format!("{wanted} is not a candidate"),
    };
    if let Some((score, r)) = best {
        if score >= 0.7 {
            msg.push_str(&format!("; did you mean {} ({})?", r.node_binding, r.name));
        }
    }
    msg
}

fn synth(
    spec: Option<&Path>,
    fixture: bool,
    dir: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if fixture {
        let fx = ad_fixture();
        fx.write(dir).map_err(CliError::Store)?;
        return writeln!(
            out,
            "wrote fixture: {} nodes, {} edges, {} lookup drugs, {} features",
            fx.nodes.len(),
            fx.edges.len(),
            fx.manifest.lookup.len(),
            fx.manifest.features.len()
        )
        .map_err(output_err);
    }
    let path = spec.expect("clap requires --spec without --ad-fixture");
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        context: path.display().to_string(),
        source,
    })?;
    let spec: PlantSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let generated = generate(&spec).map_err(CliError::Query)?;
    generated.write(dir).map_err(CliError::Store)?;
    writeln!(
        out,
        "wrote {} nodes, {} edges, {} planted targets, {} hidden candidates",
        generated.nodes.len(),
        generated.edges.len(),
        generated.truth.targets.len(),
        generated.truth.hidden_candidates.len()
    )
    .map_err(output_err)?;
    for t in &generated.truth.targets {
        writeln!(out, "{}\tp={}", t.target, format_p(t.expected_p)).map_err(output_err)?;
    }
    Ok(())
}
