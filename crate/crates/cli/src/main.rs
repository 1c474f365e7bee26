mod commands;
mod config;
mod layout;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use narrmine_core::compare::CompareOptions;

use commands::{Format, MineArgs, Outcome, Project};
use config::SourceKind;

/// Mine viewpoint-specific event narratives from a news corpus, bind them to
/// a knowledge graph and compare them.
#[derive(Debug, Parser)]
#[command(name = "narrmine", version)]
struct Cli {
    /// Project directory holding narrmine.toml, the corpus, caches and the store.
    #[arg(long, global = true, default_value = ".")]
    root: PathBuf,

    /// Print stage timings to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read a JSONL manifest, filter the documents and save the accepted ones.
    Ingest {
        manifest: PathBuf,
    },
    /// Mine the narrative of an event from one viewpoint's documents.
    Mine {
        #[arg(long)]
        event: String,
        #[arg(long)]
        viewpoint: String,
        /// Maximum recursion depth below the top level.
        #[arg(long)]
        depth: Option<usize>,
        /// e.g. "2003", "2003-03 to 2003-05"; defaults to [mining] timespan.
        #[arg(long)]
        timespan: Option<String>,
    },
    /// Bind a narrative and its sub-narratives to knowledge-graph entities.
    Bind {
        #[arg(long)]
        narrative: String,
        #[arg(long, value_enum)]
        source: Option<SourceKind>,
    },
    /// Align narratives and report commonalities, unique events and starts.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        narratives: Vec<String>,
        /// Compare sub-narratives too.
        #[arg(long)]
        flatten: bool,
        /// Cosine threshold for aligning event labels.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Print a narrative as JSON or Graphviz DOT.
    Export {
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        narrative: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Inspect or empty the response caches.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Debug, Subcommand)]
enum CacheAction {
    Stats,
    Clear,
}

fn run(cli: Cli) -> Outcome {
    let project = Project::open(&cli.root)?;
    let _lock = project.layout.lock()?;
    match cli.command {
        Command::Ingest { manifest } => commands::ingest_cmd(&project, &manifest),
        Command::Mine {
            event,
            viewpoint,
            depth,
            timespan,
        } => commands::mine_cmd(
            &project,
            MineArgs {
                event: &event,
                viewpoint: &viewpoint,
                depth,
                timespan: timespan.as_deref(),
            },
            cli.verbose,
        ),
        Command::Bind { narrative, source } => commands::bind_cmd(&project, &narrative, source),
        Command::Compare {
            narratives,
            flatten,
            threshold,
            format,
        } => {
            let mut options: CompareOptions = project.config.compare;
            options.flatten |= flatten;
            if let Some(t) = threshold {
                options.sim_threshold = t;
            }
            commands::compare_cmd(&project, &narratives, options, format)
        }
        Command::Export {
            format,
            narrative,
            output,
        } => commands::export_cmd(&project, &narrative, format, output.as_deref()),
        Command::Cache { action } => match action {
            CacheAction::Stats => commands::cache_stats(&project),
            CacheAction::Clear => commands::cache_clear(&project),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if cli.verbose {
        tracing_subscriber::fmt()
            .with_writer(std::io::stderr)
            .with_max_level(tracing_subscriber::filter::LevelFilter::INFO)
            .with_target(false)
            .without_time()
            .init();
    }
    match run(cli) {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(text.as_bytes());
            let _ = out.flush();
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}

