//! `frozencheck` command line: lint, classify, run and dump MiniRuby programs.

pub mod config;
pub mod render;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use frozencheck_core::model::{build_model, ModelError};
use frozencheck_core::patterns::{lint, LintConfig};
use frozencheck_core::runtime::evaluate;
use frozencheck_core::syntax::{parse_source, pretty_print, FileId, SourceSpan, SyntaxError, SyntaxTree};

use config::{load_config, ConfigError, Format, Overrides};
use render::FileReport;

pub const EXIT_OK: i32 = 0;
pub const EXIT_LINT_ERRORS: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;
pub const EXIT_RUNTIME_FAULT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "frozencheck", version, about = "Immutability pattern checker for MiniRuby")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report immutability defects.
    Lint(AnalyzeArgs),
    /// Show each class's pattern and the criteria behind it.
    Classify(AnalyzeArgs),
    /// Execute a program.
    Run { file: PathBuf },
    /// Print the syntax tree as JSON, or canonical source with --canonical.
    Ast {
        file: PathBuf,
        #[arg(long)]
        canonical: bool,
    },
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Config file (default: ./frozencheck.config.json if present).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Every class must be immutable unless allow-listed.
    #[arg(long)]
    immutable_by_default: bool,
    /// Class allowed to be mutable; repeatable, replaces the config list.
    #[arg(long, value_name = "CLASS")]
    allow_mutable: Vec<String>,
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

/// Exit code plus captured streams.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: cannot read: {source}", .path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}", render_syntax(.file, .error))]
    Syntax { file: String, error: SyntaxError },
    #[error("{file}:{}: error: {error}", location(&.error.span()))]
    Model { file: String, error: ModelError },
}

fn location(span: &SourceSpan) -> String {
    format!("{}:{}", span.start_line, span.start_col)
}

fn render_syntax(file: &str, error: &SyntaxError) -> String {
    error
        .messages()
        .iter()
        .map(|(span, msg)| format!("{file}:{}: error: {msg}", location(span)))
        .collect::<Vec<_>>()
        .join("\n")
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn parse_file(path: &Path, id: u32) -> Result<SyntaxTree, CliError> {
    let src = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_source(&src, FileId(id)).map_err(|error| CliError::Syntax {
        file: display(path),
        error,
    })
}

fn analyze(path: &Path, id: u32, config: &LintConfig) -> Result<FileReport, CliError> {
    let tree = parse_file(path, id)?;
    let graph = build_model(&tree).map_err(|error| CliError::Model {
        file: display(path),
        error,
    })?;
    let report = lint(&tree, &graph, config);
    Ok(FileReport {
        file: display(path),
        classifications: report.classifications,
        diagnostics: report.diagnostics,
    })
}

/// Runs the tool with `args` (including the program name) and captures
/// what it would print. Never panics on malformed input.
pub fn run_cli<I, T>(args: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CliOutput {
                    code: EXIT_FAILURE,
                    stderr: text,
                    ..Default::default()
                }
            } else {
                CliOutput {
                    code: EXIT_OK,
                    stdout: text,
                    ..Default::default()
                }
            };
        }
    };
    match cli.command {
        Command::Lint(a) => analyze_command(a, true),
        Command::Classify(a) => analyze_command(a, false),
        Command::Run { file } => run_command(&file),
        Command::Ast { file, canonical } => ast_command(&file, canonical),
    }
}

fn failure(err: impl std::fmt::Display) -> CliOutput {
    CliOutput {
        code: EXIT_FAILURE,
        stderr: format!("{err}\n"),
        ..Default::default()
    }
}

fn analyze_command(args: AnalyzeArgs, is_lint: bool) -> CliOutput {
    let config = match load_config(args.config.as_deref()) {
        Ok(c) => c.with_overrides(&Overrides {
            immutable_by_default: args.immutable_by_default,
            allow_mutable: args.allow_mutable.clone(),
            format: args.format,
        }),
        Err(e) => return failure(e),
    };
    let lint_config = config.lint_config();

    // per-file work in parallel; collect keeps argument order
    let results: Vec<Result<FileReport, CliError>> = args
        .files
        .par_iter()
        .enumerate()
        .map(|(i, path)| analyze(path, i as u32, &lint_config))
        .collect();

    let mut reports = Vec::new();
    let mut stderr = String::new();
    for r in results {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => {
                stderr.push_str(&e.to_string());
                stderr.push('\n');
            }
        }
    }

    let stdout = match (config.format, is_lint) {
        (Format::Text, true) => render::lint_text(&reports),
        (Format::Text, false) => render::classify_text(&reports),
        (Format::Json, with_diags) => render::json(&reports, with_diags),
    };
    let code = if !stderr.is_empty() {
        EXIT_FAILURE
    } else if is_lint && render::Summary::of(&reports).errors > 0 {
        EXIT_LINT_ERRORS
    } else {
        EXIT_OK
    };
    CliOutput { code, stdout, stderr }
}

fn run_command(file: &Path) -> CliOutput {
    let tree = match parse_file(file, 0) {
        Ok(t) => t,
        Err(e) => return failure(e),
    };
    let result = evaluate(&tree);
    let stdout = result.stdout();
    match result.error {
        None => CliOutput {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        },
        Some(fault) => CliOutput {
            code: EXIT_RUNTIME_FAULT,
            stdout,
            stderr: format!("{fault}\n    at {}:{}\n", display(file), location(&fault.span)),
        },
    }
}

fn ast_command(file: &Path, canonical: bool) -> CliOutput {
    let tree = match parse_file(file, 0) {
        Ok(t) => t,
        Err(e) => return failure(e),
    };
    let stdout = if canonical {
        pretty_print(&tree)
    } else {
        let mut s = serde_json::to_string_pretty(&tree).expect("syntax tree serializes");
        s.push('\n');
        s
    };
    CliOutput {
        code: EXIT_OK,
        stdout,
        stderr: String::new(),
    }
}
