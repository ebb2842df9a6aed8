//! Command-line front end.
//!
//! Subcommands: `ingest` (compile a corpus, optionally writing a cache),
//! `query` (controlled-language text, a query file, or a figure file),
//! `stats` (figure count and census totals), and `dot` (Graphviz export of a
//! figure graph or its dependency lattice).
//!
//! Exit codes: 0 matches found; 1 no matches (even after reductions);
//! 2 query parse/semantic error; 3 corpus error; 4 internal invariant
//! violation.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::engine::{answer_query, EngineError, QueryAnswer, QuerySource, SearchOptions};
use crate::inference::AngleMode;
use crate::matcher::{find_embeddings, MatchResult};
use crate::onto::{ConceptKind, OntoGraph, Rational, RelationKind};
use crate::store::{ingest, load_corpus, write_cache, CompiledStore, StoreError};
use crate::{construction, dot};

pub const EXIT_MATCHES: i32 = 0;
pub const EXIT_NO_MATCHES: i32 = 1;
pub const EXIT_QUERY_ERROR: i32 = 2;
pub const EXIT_CORPUS_ERROR: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Parser)]
#[command(
    name = "figsearch",
    about = "Search geometric constructions by structure",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AngleArg {
    Constrained,
    Full,
}

impl From<AngleArg> for AngleMode {
    fn from(value: AngleArg) -> AngleMode {
        match value {
            AngleArg::Constrained => AngleMode::ConstrainedOnly,
            AngleArg::Full => AngleMode::Full,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a corpus, report what was built, optionally write a cache.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "constrained")]
        angles: AngleArg,
    },
    /// Run a query against a corpus.
    Query {
        #[arg(long)]
        corpus: PathBuf,
        /// Query text in the controlled language.
        #[arg(long)]
        cql: Option<String>,
        /// File holding the query text.
        #[arg(long)]
        cql_file: Option<PathBuf>,
        /// File holding a figure (JSON, same schema as a corpus line).
        #[arg(long)]
        figure: Option<PathBuf>,
        #[arg(long, default_value_t = 32)]
        max_reductions: usize,
        /// Embeddings reported per figure.
        #[arg(long, default_value_t = 10)]
        limit: usize,
        /// Let query lines match figure segments and vice versa.
        #[arg(long)]
        loose_linear: bool,
        /// List each applied reduction with its lattice justification.
        #[arg(long)]
        explain: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Score factor applied once per reduction (a fraction like 9/10).
        #[arg(long, default_value = "1")]
        reduction_penalty: String,
        #[arg(long, value_enum, default_value = "constrained")]
        angles: AngleArg,
    },
    /// Figure count and census totals of a corpus.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "constrained")]
        angles: AngleArg,
    },
    /// Graphviz export of a figure graph or its dependency lattice.
    Dot {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        id: String,
        /// Export the dependency lattice instead of the graph.
        #[arg(long)]
        lattice: bool,
        /// Emphasize this query's matched pattern in the graph.
        #[arg(long)]
        cql: Option<String>,
        #[arg(long, value_enum, default_value = "constrained")]
        angles: AngleArg,
    },
}

/// Run with the given arguments (`argv[0]` included), writing to stdout.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut stdout = std::io::stdout();
    run_to(args, &mut stdout)
}

/// Same as [`run`] but writing to the given sink; used by the tests.
pub fn run_to<I, S, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
    W: Write,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are not errors.
            let code = if e.use_stderr() { EXIT_QUERY_ERROR } else { 0 };
            let _ = write!(out, "{e}");
            return code;
        }
    };
    match cli.command {
        Command::Ingest {
            corpus,
            cache,
            angles,
        } => cmd_ingest(&corpus, cache.as_deref(), angles.into(), out),
        Command::Stats { corpus, angles } => cmd_stats(&corpus, angles.into(), out),
        Command::Dot {
            corpus,
            id,
            lattice,
            cql,
            angles,
        } => cmd_dot(&corpus, &id, lattice, cql.as_deref(), angles.into(), out),
        Command::Query {
            corpus,
            cql,
            cql_file,
            figure,
            max_reductions,
            limit,
            loose_linear,
            explain,
            format,
            reduction_penalty,
            angles,
        } => {
            let source = match query_source(cql, cql_file, figure) {
                Ok(source) => source,
                Err(message) => {
                    eprintln!("error: {message}");
                    return EXIT_QUERY_ERROR;
                }
            };
            let Some(penalty) = parse_rational(&reduction_penalty) else {
                eprintln!("error: --reduction-penalty must be an integer or a fraction like 9/10");
                return EXIT_QUERY_ERROR;
            };
            let options = SearchOptions {
                max_reductions,
                limit_per_figure: limit,
                loose_linear,
                reduction_penalty: penalty,
            };
            cmd_query(&corpus, source, &options, explain, format, angles.into(), out)
        }
    }
}

fn query_source(
    cql: Option<String>,
    cql_file: Option<PathBuf>,
    figure: Option<PathBuf>,
) -> Result<QuerySource, String> {
    match (cql, cql_file, figure) {
        (Some(text), None, None) => Ok(QuerySource::Cql(text)),
        (None, Some(path), None) => std::fs::read_to_string(&path)
            .map(|text| QuerySource::Cql(text.trim().to_string()))
            .map_err(|e| format!("cannot read {}: {e}", path.display())),
        (None, None, Some(path)) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str::<construction::Figure>(&text)
                .map(QuerySource::Figure)
                .map_err(|e| format!("{} is not a figure file: {e}", path.display()))
        }
        _ => Err("exactly one of --cql, --cql-file, --figure is required".into()),
    }
}

fn parse_rational(text: &str) -> Option<Rational> {
    match text.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            (d != 0).then(|| Rational::new(n, d))
        }
        None => text.trim().parse::<i64>().ok().map(Rational::from_integer),
    }
}

fn load_store(path: &Path, mode: AngleMode) -> Result<(CompiledStore, Vec<construction::Figure>), StoreError> {
    let figures = load_corpus(path)?;
    let store = ingest(&figures, mode)?;
    Ok((store, figures))
}

fn cmd_ingest(
    corpus: &Path,
    cache: Option<&Path>,
    mode: AngleMode,
    out: &mut impl Write,
) -> i32 {
    let (store, _) = match load_store(corpus, mode) {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CORPUS_ERROR;
        }
    };
    let (count, totals) = store.totals();
    let _ = writeln!(
        out,
        "ingested {count} figure(s): {} concept instance(s), {} relation instance(s)",
        totals.total_nodes(),
        totals.total_relations()
    );
    if let Some(cache_path) = cache {
        let text = match std::fs::read_to_string(corpus) {
            Ok(text) => text,
            Err(e) => {
                eprintln!("error: cannot re-read {}: {e}", corpus.display());
                return EXIT_CORPUS_ERROR;
            }
        };
        if let Err(e) = write_cache(&store, &text, cache_path) {
            eprintln!("error: {e}");
            return EXIT_CORPUS_ERROR;
        }
        let _ = writeln!(out, "cache written to {}", cache_path.display());
    }
    EXIT_MATCHES
}

fn cmd_stats(corpus: &Path, mode: AngleMode, out: &mut impl Write) -> i32 {
    let (store, _) = match load_store(corpus, mode) {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CORPUS_ERROR;
        }
    };
    let (count, totals) = store.totals();
    let _ = writeln!(out, "figures: {count}");
    let _ = writeln!(
        out,
        "concept instances: {} (+ {} ratio node(s))",
        totals.total_nodes() - totals.ratio_nodes,
        totals.ratio_nodes
    );
    for kind in ConceptKind::ALL {
        let _ = writeln!(out, "  {}: {}", kind.name(), totals.concept(kind));
    }
    let _ = writeln!(out, "relation instances: {}", totals.total_relations());
    for kind in RelationKind::ALL {
        let n = totals.relation(kind);
        if n > 0 {
            let _ = writeln!(out, "  {}: {n}", kind.name());
        }
    }
    EXIT_MATCHES
}

fn cmd_dot(
    corpus: &Path,
    id: &str,
    want_lattice: bool,
    cql: Option<&str>,
    mode: AngleMode,
    out: &mut impl Write,
) -> i32 {
    let (store, _) = match load_store(corpus, mode) {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CORPUS_ERROR;
        }
    };
    let Some(entry) = store.get(id) else {
        eprintln!("error: no figure with id `{id}`");
        return EXIT_CORPUS_ERROR;
    };
    if want_lattice {
        let _ = write!(out, "{}", dot::lattice_dot(&entry.lattice, id));
        return EXIT_MATCHES;
    }
    let highlight = match cql {
        None => Vec::new(),
        Some(text) => match crate::cql::compile_query(text)
            .map_err(EngineError::from)
            .and_then(crate::engine::Query::new)
        {
            Ok(query) => find_embeddings(&query.graph, &entry.graph, 1, false),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_QUERY_ERROR;
            }
        },
    };
    let _ = write!(out, "{}", dot::graph_dot(&entry.graph, id, &highlight));
    EXIT_MATCHES
}

fn embedding_names(query: &OntoGraph, figure: &OntoGraph, e: &crate::matcher::Embedding) -> Vec<(String, String)> {
    e.pairs()
        .map(|(q, f)| {
            let qname = query
                .node(q)
                .and_then(|n| n.label().map(str::to_owned))
                .unwrap_or_else(|| q.to_string());
            let fname = figure
                .node(f)
                .and_then(|n| n.label().map(str::to_owned))
                .unwrap_or_else(|| f.to_string());
            (qname, fname)
        })
        .collect()
}

fn cmd_query(
    corpus: &Path,
    source: QuerySource,
    options: &SearchOptions,
    explain: bool,
    format: Format,
    mode: AngleMode,
    out: &mut impl Write,
) -> i32 {
    let (store, _) = match load_store(corpus, mode) {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CORPUS_ERROR;
        }
    };
    let answer = match answer_query(&source, &store, options) {
        Ok(answer) => answer,
        Err(EngineError::Internal(message)) => {
            eprintln!("internal error: {message}");
            return EXIT_INTERNAL;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_QUERY_ERROR;
        }
    };
    match format {
        Format::Text => render_text(&answer, &store, explain, out),
        Format::Json => render_json(&answer, &store, out),
        Format::Dot => render_dot(&answer, &store, out),
    }
    if answer.results.is_empty() {
        EXIT_NO_MATCHES
    } else {
        EXIT_MATCHES
    }
}

fn render_text(answer: &QueryAnswer, store: &CompiledStore, explain: bool, out: &mut impl Write) {
    if answer.log.is_empty() {
        let _ = writeln!(out, "{} match(es), no reductions", answer.results.len());
    } else {
        let _ = writeln!(
            out,
            "{} match(es) after {} reduction(s)",
            answer.results.len(),
            answer.log.len()
        );
    }
    if explain {
        for (i, action) in answer.log.iter().enumerate() {
            let _ = writeln!(
                out,
                "  reduction {}: {} [bottom node {}, op {}]",
                i + 1,
                action,
                action.lattice_node(),
                action.op().letter()
            );
        }
    }
    for result in &answer.results {
        let _ = writeln!(
            out,
            "score {}  figure {}  {}",
            result.score, result.figure_id, result.title
        );
        if let (Some(embedding), Some(entry)) =
            (result.embeddings.first(), store.get(&result.figure_id))
        {
            let pairs = embedding_names(&answer.query.graph, &entry.graph, embedding);
            let rendered: Vec<String> = pairs
                .iter()
                .map(|(q, f)| format!("{q} -> {f}"))
                .collect();
            let _ = writeln!(out, "  {}", rendered.join(", "));
        }
    }
}

fn render_json(answer: &QueryAnswer, store: &CompiledStore, out: &mut impl Write) {
    let results: Vec<serde_json::Value> = answer
        .results
        .iter()
        .map(|result: &MatchResult| {
            let embeddings: Vec<Vec<(String, String)>> = store
                .get(&result.figure_id)
                .map(|entry| {
                    result
                        .embeddings
                        .iter()
                        .map(|e| embedding_names(&answer.query.graph, &entry.graph, e))
                        .collect()
                })
                .unwrap_or_default();
            serde_json::json!({
                "figure": result.figure_id,
                "title": result.title,
                "score": result.score.to_string(),
                "figure_size": result.figure_size,
                "embeddings": embeddings,
            })
        })
        .collect();
    let body = serde_json::json!({
        "stop": answer.stop,
        "reductions": answer.log,
        "results": results,
    });
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&body).unwrap());
}

fn render_dot(answer: &QueryAnswer, store: &CompiledStore, out: &mut impl Write) {
    let Some(top) = answer.results.first() else {
        return;
    };
    let Some(entry) = store.get(&top.figure_id) else {
        return;
    };
    let _ = write!(
        out,
        "{}",
        dot::graph_dot(&entry.graph, &top.figure_id, &top.embeddings)
    );
}
