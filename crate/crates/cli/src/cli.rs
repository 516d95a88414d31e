//! Command line: parse, dispatch to [`App`], print the JSON result or the error.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use archbot_core::analysis::{Lexicon, RefinementOp};
use archbot_core::model::{AnnotationKey, DiagramKind};
use archbot_core::synthesis::SensitiveFields;

use crate::app::{App, BackendSpec};
use crate::config::Config;
use crate::error::ApiError;

#[derive(Debug, Parser)]
#[command(name = "archbot", version, about = "Bot-assisted architecting: analysis, synthesis and evaluation")]
pub struct Cli {
    /// Project directory.
    #[arg(short = 'C', long, global = true, default_value = ".")]
    pub project: PathBuf,
    /// Configuration file (default: $ARCHBOT_CONFIG, else built-in defaults).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct BackendArg {
    /// `live` or `replay:<fixture>`; defaults to the configured backend.
    #[arg(long)]
    pub backend: Option<String>,
}

impl BackendArg {
    fn spec(&self) -> Result<Option<BackendSpec>, ApiError> {
        self.backend.as_deref().map(str::parse).transpose()
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a project in the project directory.
    Init {
        /// Project id (default: the directory name).
        #[arg(long)]
        id: Option<String>,
    },
    /// Story commands.
    Story {
        #[command(subcommand)]
        command: StoryCommand,
    },
    /// Feed the story to the bot and collect proposed requirements.
    Analyze(BackendArg),
    /// Apply one refinement: inline JSON or `@file`.
    Refine { op_json: String },
    /// Accept requirements by id.
    Accept {
        #[arg(required = true, value_delimiter = ',')]
        ids: Vec<String>,
    },
    /// Flag unquantified qualities and vague terms.
    Lint {
        /// File with one vague term per line.
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Ask the bot for a model script.
    Synthesize {
        /// `class` or `component`.
        kind: String,
        #[command(flatten)]
        backend: BackendArg,
    },
    /// Check a tactic or pattern on an element of the latest model.
    Check {
        /// singleton, cached, data_minimized, encrypted or any other stereotype.
        pattern: String,
        element: String,
        /// Comma-separated sensitive field names for data_minimized.
        #[arg(long, value_delimiter = ',')]
        sensitive: Option<Vec<String>>,
    },
    /// Requirement-to-element traceability of the latest model.
    Trace {
        /// Print the matrix as a markdown table.
        #[arg(long)]
        markdown: bool,
    },
    /// Elicit SAAM scenarios for the latest model.
    Scenarios {
        #[arg(long)]
        focus: Option<String>,
        #[command(flatten)]
        backend: BackendArg,
    },
    /// Classify scenarios and build the evaluation report.
    Evaluate {
        #[arg(long, default_value_t = archbot_core::evaluation::DEFAULT_HOTSPOT_THRESHOLD)]
        hotspot_threshold: usize,
    },
    /// Mark the project reported and print the latest report as markdown.
    Report {
        /// Print the JSON payload instead.
        #[arg(long)]
        json: bool,
    },
    /// Send a free-form architect turn.
    Turn {
        content: String,
        #[command(flatten)]
        backend: BackendArg,
    },
    /// Replay a fixture against itself and report whether the turns reproduce byte for byte.
    Replay { fixture: String },
    /// Ask one prompt n times without shared context and report the divergence.
    Probe {
        prompt: String,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        backend: BackendArg,
    },
    /// Print the provenance ledger after verifying its hash chain.
    Ledger {
        #[arg(long, default_value_t = 0)]
        since: u64,
    },
    /// Counts of ledger records per artifact kind and origin.
    Provenance,
    /// Rebuild the project from its logs and compare with the persisted state.
    Rebuild,
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        port: Option<u16>,
    },
}

#[derive(Debug, Subcommand)]
pub enum StoryCommand {
    /// Import a story markdown file.
    Import { file: PathBuf },
}

/// What a successful command prints.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Json(Value),
    Text(String),
    None,
}

fn read_file(path: &Path) -> Result<String, ApiError> {
    std::fs::read_to_string(path).map_err(|e| ApiError::new("io_error", format!("{}: {e}", path.display())))
}

fn parse_op(arg: &str) -> Result<RefinementOp, ApiError> {
    let text = match arg.strip_prefix('@') {
        Some(path) => read_file(Path::new(path))?,
        None => arg.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| ApiError::schema(format!("refinement op: {e}")))
}

/// Runs a parsed command line (except `serve`, see [`run_main`]).
pub fn execute(app: &App, project: &Path, command: Command) -> Result<Output, ApiError> {
    let json = |r: Result<Value, ApiError>| r.map(Output::Json);
    match command {
        Command::Init { id } => {
            let id = match id {
                Some(id) => id,
                None => std::path::absolute(project)
                    .ok()
                    .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                    .ok_or_else(|| ApiError::usage("cannot derive a project id from the directory; pass --id"))?,
            };
            json(app.init(project, &id))
        }
        Command::Story { command: StoryCommand::Import { file } } => json(app.import_story(project, &read_file(&file)?)),
        Command::Analyze(b) => json(app.analyze(project, b.spec()?.as_ref())),
        Command::Refine { op_json } => json(app.refine(project, parse_op(&op_json)?)),
        Command::Accept { ids } => {
            let ids: Vec<String> = ids.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            json(app.accept(project, ids))
        }
        Command::Lint { lexicon } => {
            let lexicon = match lexicon {
                Some(p) => Lexicon::parse(&read_file(&p)?),
                None => Lexicon::default(),
            };
            json(app.lint(project, &lexicon))
        }
        Command::Synthesize { kind, backend } => {
            let kind = DiagramKind::from_short_name(&kind)
                .ok_or_else(|| ApiError::usage(format!("diagram kind must be class or component, got {kind:?}")))?;
            json(app.synthesize(project, kind, backend.spec()?.as_ref()))
        }
        Command::Check { pattern, element, sensitive } => {
            let sensitive = match sensitive {
                Some(list) => SensitiveFields::new(list),
                None => SensitiveFields::default(),
            };
            json(app.check(project, &AnnotationKey::from_stereotype(&pattern), &element, &sensitive))
        }
        Command::Trace { markdown } => {
            let v = app.trace(project)?;
            Ok(if markdown { Output::Text(v["markdown"].as_str().unwrap_or_default().to_string()) } else { Output::Json(v) })
        }
        Command::Scenarios { focus, backend } => json(app.scenarios(project, focus.as_deref(), backend.spec()?.as_ref())),
        Command::Evaluate { hotspot_threshold } => json(app.evaluate(project, hotspot_threshold)),
        Command::Report { json: as_json } => {
            let v = app.report(project)?;
            Ok(if as_json { Output::Json(v) } else { Output::Text(v["markdown"].as_str().unwrap_or_default().to_string()) })
        }
        Command::Turn { content, backend } => json(app.turn(project, &content, backend.spec()?.as_ref())),
        Command::Replay { fixture } => {
            let v = app.replay(&fixture)?;
            if v["identical"] != Value::Bool(true) {
                return Err(ApiError::new("replay_mismatch", "replayed turns differ from the recording").with_detail(v));
            }
            Ok(Output::Json(v))
        }
        Command::Probe { prompt, n, backend } => json(app.probe(&prompt, n, backend.spec()?.as_ref())),
        Command::Ledger { since } => {
            crate::app::verify_ledger_file(project)?;
            json(app.ledger(project, since))
        }
        Command::Provenance => json(app.provenance(project)),
        Command::Rebuild => json(app.rebuild(project)),
        Command::Serve { .. } => Err(ApiError::usage("serve is run by the binary entry point")),
    }
}

fn print_error(e: &ApiError) {
    eprintln!("{}", serde_json::to_string(e).expect("errors serialize"));
}

/// Entry point of the binary; returns the process exit code.
pub fn run_main(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            print_error(&ApiError::usage(e.to_string().trim().to_string()));
            return ApiError::usage("").exit_code();
        }
    };
    let result = Config::load(cli.config.as_deref()).and_then(App::new).and_then(|app| match cli.command {
        Command::Serve { port } => {
            let port = port.unwrap_or(app.config.port);
            let rt = tokio::runtime::Runtime::new().map_err(|e| ApiError::new("internal", e.to_string()))?;
            rt.block_on(crate::http::serve(app, port))
                .map_err(|e| ApiError::new("io_error", e.to_string()))?;
            Ok(Output::None)
        }
        command => execute(&app, &cli.project, command),
    });
    // a closed stdout (e.g. piped into `head`) is not a command failure
    let mut out = std::io::stdout().lock();
    match result {
        Ok(Output::Json(v)) => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("values serialize"));
            0
        }
        Ok(Output::Text(t)) => {
            let _ = write!(out, "{t}");
            if !t.ends_with('\n') {
                let _ = writeln!(out);
            }
            0
        }
        Ok(Output::None) => 0,
        Err(e) => {
            print_error(&e);
            e.exit_code()
        }
    }
}
