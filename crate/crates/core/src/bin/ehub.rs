use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use ehub_core::eval::{load_corpus, run_evaluation, validate_corpus};
use ehub_core::network::{build_graph, generate_synthetic_grid, load_scenario};
use ehub_core::rag::{
    generate_mschema, Embedder, FixtureEmbedder, HashingEmbedder, LiveBackend, LiveBackendConfig, LlmBackend, RagError,
    RagPipeline, ReplayBackend, DEFAULT_DB_ID,
};
use ehub_core::routing::{od_benchmark, BenchmarkOptions};
use ehub_core::service::{serve, ApiError, AppState};
use ehub_core::sim::{run_scenario, JsonlSink, TrafficLevel};
use ehub_core::store::Datastore;

#[derive(Parser)]
#[command(name = "ehub", version, about = "Shared e-mobility simulation, routing and Text-to-SQL evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Network utilities.
    #[command(subcommand)]
    Net(NetCommand),
    /// Traffic simulation.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Routing benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Schema retrieval and Text-to-SQL evaluation.
    #[command(subcommand)]
    Rag(RagCommand),
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Subcommand)]
enum NetCommand {
    /// Write a synthetic grid network as JSON lines.
    Grid {
        #[arg(long, default_value_t = 10)]
        rows: usize,
        #[arg(long, default_value_t = 10)]
        cols: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SimCommand {
    /// Simulate a scenario and print its summary.
    Run {
        scenario: PathBuf,
        /// Write every edge record as JSON lines.
        #[arg(long)]
        export: Option<PathBuf>,
        /// Override the scenario's traffic level.
        #[arg(long)]
        level: Option<TrafficLevel>,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Travel-time increase across traffic levels over random OD pairs.
    Od {
        scenario: PathBuf,
        #[arg(long, default_value_t = 400)]
        pairs: usize,
        #[arg(long, value_delimiter = ',', default_value = "low,medium,high")]
        levels: Vec<TrafficLevel>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        snapshot_time: Option<i64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write one CSV row per pair.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct StoreArgs {
    /// Directory of `<table>.jsonl` files to seed the database from.
    #[arg(long)]
    db_dir: Option<PathBuf>,
    /// SQLite file; in-memory when absent.
    #[arg(long)]
    db: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct RagArgs {
    /// `hashing` or `fixture:<vectors.json>`.
    #[arg(long, default_value = "hashing")]
    embeddings: String,
}

#[derive(Subcommand)]
enum RagCommand {
    /// Print the M-Schema documents of every table.
    SchemaExport {
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long, default_value = DEFAULT_DB_ID)]
        db_id: String,
    },
    /// Evaluate a backend on a QA corpus.
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        /// `replay:<cassette.json>` or `live:<config.json>`.
        #[arg(long)]
        backend: String,
        #[command(flatten)]
        store: StoreArgs,
        #[command(flatten)]
        rag: RagArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the per-model summary as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Save responses of a live backend as a cassette.
        #[arg(long)]
        record: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[command(flatten)]
    store: StoreArgs,
    #[command(flatten)]
    rag: RagArgs,
    /// Default SQL backend, `replay:<cassette.json>` or `live:<config.json>`.
    #[arg(long)]
    backend: Option<String>,
}

fn io_err(path: &Path, e: std::io::Error) -> ApiError {
    ApiError::new(axum::http::StatusCode::BAD_REQUEST, "IoError", format!("{}: {e}", path.display()))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), ApiError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn open_store(args: &StoreArgs) -> Result<Datastore, ApiError> {
    let store = match &args.db {
        Some(path) => Datastore::open(path)?,
        None => Datastore::in_memory()?,
    };
    if store.table_names()?.is_empty() {
        store.init_schema()?;
    }
    if let Some(dir) = &args.db_dir {
        store.seed_from_dir(dir)?;
    }
    Ok(store)
}

fn embedder(spec: &str) -> Result<Box<dyn Embedder>, RagError> {
    match spec.split_once(':') {
        None if spec == "hashing" => Ok(Box::new(HashingEmbedder::default())),
        Some(("fixture", path)) => Ok(Box::new(FixtureEmbedder::from_file(Path::new(path))?)),
        _ => Err(RagError::Provider(format!("unknown embedding provider `{spec}`"))),
    }
}

enum Backend {
    Replay(ReplayBackend),
    Live(LiveBackend),
}

impl Backend {
    fn parse(spec: &str) -> Result<Self, ApiError> {
        match spec.split_once(':') {
            Some(("replay", path)) => {
                let path = Path::new(path);
                let id = path.file_stem().map_or("replay".into(), |s| s.to_string_lossy().into_owned());
                Ok(Backend::Replay(ReplayBackend::from_file(id, path)?))
            }
            Some(("live", path)) => {
                let path = Path::new(path);
                let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
                let config: LiveBackendConfig =
                    serde_json::from_str(&text).map_err(|e| ApiError::bad_request(format!("{}: {e}", path.display())))?;
                Ok(Backend::Live(LiveBackend::new(config)))
            }
            _ => Err(ApiError::bad_request(format!("backend must be replay:<path> or live:<path>, got `{spec}`"))),
        }
    }

    fn as_dyn(&self) -> &dyn LlmBackend {
        match self {
            Backend::Replay(b) => b,
            Backend::Live(b) => b,
        }
    }

    fn into_arc(self) -> Arc<dyn LlmBackend> {
        match self {
            Backend::Replay(b) => Arc::new(b),
            Backend::Live(b) => Arc::new(b),
        }
    }
}

fn run(cli: Cli) -> Result<(), ApiError> {
    match cli.command {
        Command::Net(NetCommand::Grid { rows, cols, seed, out }) => {
            write_or_print(out.as_deref(), generate_synthetic_grid(rows, cols, seed)?.trim_end())
        }
        Command::Sim(SimCommand::Run { scenario, export, level }) => {
            let mut config = load_scenario(&scenario)?;
            if let Some(level) = level {
                config.traffic_level = level;
            }
            let graph = build_graph(&config)?;
            let summary = match export {
                Some(path) => {
                    let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
                    run_scenario(&graph, &config, JsonlSink(std::io::BufWriter::new(file)))?
                }
                None => run_scenario(&graph, &config, ehub_core::sim::SinkFn(|_: &[_]| Ok(())))?,
            };
            write_or_print(None, &serde_json::to_string_pretty(&summary).expect("summary serializes"))
        }
        Command::Bench(BenchCommand::Od { scenario, pairs, levels, seed, snapshot_time, out, csv }) => {
            let config = load_scenario(&scenario)?;
            let graph = build_graph(&config)?;
            let options = BenchmarkOptions { pairs, levels, seed, snapshot_time_s: snapshot_time, ..Default::default() };
            let report = od_benchmark(&graph, &config, &options)?;
            if let Some(path) = csv {
                fs::write(&path, report.to_csv()).map_err(|e| io_err(&path, e))?;
            }
            for extra in &report.extra_time {
                eprintln!(
                    "{} - {}: mean extra {:.2} s over {} pairs",
                    extra.level.as_str(),
                    extra.baseline.as_str(),
                    extra.mean_s,
                    extra.values_s.len()
                );
            }
            write_or_print(out.as_deref(), &report.to_json())
        }
        Command::Rag(RagCommand::SchemaExport { store, db_id }) => {
            let store = open_store(&store)?;
            let docs = generate_mschema(&store, &db_id)?;
            let bodies: Vec<_> = docs.iter().map(|d| &d.body).collect();
            write_or_print(None, &serde_json::to_string_pretty(&bodies).expect("docs serialize"))
        }
        Command::Rag(RagCommand::Eval { corpus, backend, store, rag, out, csv, record }) => {
            let store = open_store(&store)?;
            let cases = load_corpus(&corpus)?;
            validate_corpus(&cases, &store)?;
            let pipeline = RagPipeline::build(&store, embedder(&rag.embeddings)?)?;
            let backend = Backend::parse(&backend)?;
            let report = run_evaluation(&cases, &pipeline, backend.as_dyn(), &store)?;
            if let (Some(path), Backend::Live(live)) = (&record, &backend) {
                live.recorded().save(path)?;
            }
            if let Some(path) = csv {
                fs::write(&path, report.to_csv()).map_err(|e| io_err(&path, e))?;
            }
            for g in &report.groups {
                eprintln!(
                    "{} / {}: execution accuracy {:.4} over {} cases",
                    g.model,
                    g.user_class.label(),
                    g.execution_accuracy,
                    g.cases
                );
            }
            write_or_print(out.as_deref(), &report.to_json())?;
            match report.aborted {
                Some(reason) => Err(ApiError::new(axum::http::StatusCode::BAD_GATEWAY, "BackendUnavailable", reason)),
                None => Ok(()),
            }
        }
        Command::Serve(args) => {
            let store = open_store(&args.store)?;
            let spec = args.rag.embeddings.clone();
            embedder(&spec)?;
            let mut state = AppState::new(store).with_embedder(move || embedder(&spec));
            if let Some(b) = &args.backend {
                state = state.with_backend(Backend::parse(b)?.into_arc());
            }
            let addr: SocketAddr = format!("{}:{}", args.host, args.port)
                .parse()
                .map_err(|e| ApiError::bad_request(format!("bad listen address: {e}")))?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| ApiError::internal(e.to_string()))?;
            eprintln!("listening on http://{addr}");
            runtime.block_on(serve(Arc::new(state), addr)).map_err(|e| ApiError::internal(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code, e.message);
            ExitCode::FAILURE
        }
    }
}
