//! The `linkcoref` command line: argument parsing, dispatch, run manifests
//! and the validation HTTP server.

pub mod args;
pub mod commands;
pub mod manifest;
pub mod server;

use std::ffi::OsString;
use std::io::Write;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::Parser;
use tracing::error;

use linkcoref::validation::{Candidate, Store, StoreOptions};
use linkcoref::Exec;

use args::{Cli, Command, ServeArgs};
use manifest::RunManifest;

/// Exit status for usage errors.
pub const EXIT_USAGE: i32 = 2;

fn init_logging(filter: &str) {
    let filter =
        tracing_subscriber::EnvFilter::try_new(filter).unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info"));
    // a second call (tests run many commands in one process) keeps the first subscriber
    let _ = tracing_subscriber::fmt()
        .json()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_current_span(false)
        .try_init();
}

fn exec_for(workers: usize) -> Exec {
    if workers > 1 {
        // fails harmlessly if the global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
    Exec::from_workers(workers)
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status. Command output goes to `out`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    init_logging(&cli.log);
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            error!(error = %chain.join(": "), "command failed");
            eprintln!("error: {}", chain.join(": "));
            1
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    run_with(argv, &mut lock)
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let exec = exec_for(cli.workers);
    match &cli.command {
        Command::Extract(a) => commands::extract_cmd(a, exec, RunManifest::new("extract", a)),
        Command::Stats(a) => Ok(out.write_all(commands::stats_cmd(a)?.as_bytes())?),
        Command::Resolve(a) => commands::resolve_cmd(a, exec, RunManifest::new("resolve", a)),
        Command::Eval(a) => Ok(out.write_all(commands::eval_cmd(a)?.as_bytes())?),
        Command::Serve(a) => serve(a),
        Command::Convert(c) => commands::convert_cmd(c),
    }
}

/// Opens the store for `a` and builds the router state.
pub fn serve_state(a: &ServeArgs) -> Result<server::AppState> {
    let candidates: Vec<Candidate> = linkcoref::io::read_jsonl(&a.candidates)
        .with_context(|| format!("reading candidates from {}", a.candidates.display()))?;
    let opts = StoreOptions {
        consolidator: a.consolidator.clone(),
        compact_after: a.compact_after,
    };
    let store =
        Store::open(&a.store, candidates, opts).with_context(|| format!("opening store {}", a.store.display()))?;
    let train = a
        .train
        .as_ref()
        .map(|p| commands::read_split(p))
        .transpose()?
        .map(Arc::new);
    Ok(server::AppState {
        store: Arc::new(store),
        train,
        export_dir: a.export_dir.clone().unwrap_or_else(|| a.store.join("export")),
    })
}

fn serve(a: &ServeArgs) -> Result<()> {
    let state = serve_state(a)?;
    let tasks = state.store.len();
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port))
            .await
            .with_context(|| format!("binding {}:{}", a.host, a.port))?;
        tracing::info!(addr = %listener.local_addr()?, tasks, "validation service listening");
        axum::serve(listener, server::router(state)).await?;
        Ok(())
    })
}
