//! Command-line front end for debt-gauge.
//!
//! Every command runs through [`run`], which takes its streams as arguments so
//! the whole tool can be driven from tests without a terminal.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufRead, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use debt_gauge_core::bank::{canonical_bank_json, content_hash};
use debt_gauge_core::{
    build_report, canonical_bank, load_bank, render, validate_bank, Audience, BankDocument,
    BankError, Format, QuestionBank, Role, SessionId, SessionStore, StoreError,
};

mod output;
pub mod wizard;

pub use wizard::{parse_answers, AnswerScript, WizardOutcome};

pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const BANK_INVALID: i32 = 2;
    pub const NOT_FOUND: i32 = 3;
    pub const PRECONDITION: i32 = 4;
}

pub const DEFAULT_DATA_DIR: &str = "debt-gauge-data";

#[derive(Debug, Parser)]
#[command(
    name = "debt-gauge",
    version,
    about = "Technical debt self-assessment for AI competition platforms"
)]
pub struct Cli {
    /// Directory holding saved sessions.
    #[arg(long, global = true, env = "DEBT_GAUGE_DATA_DIR", default_value = DEFAULT_DATA_DIR)]
    pub data_dir: PathBuf,

    /// Question bank file to use instead of the built-in one.
    #[arg(long, global = true)]
    pub bank: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Question bank maintenance.
    Bank {
        #[command(subcommand)]
        action: BankAction,
    },
    /// Start a new assessment.
    Assess {
        #[arg(long, value_enum)]
        role: RoleArg,
        /// Name of the platform being assessed.
        #[arg(long)]
        label: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Continue an unfinished assessment.
    Resume {
        session_id: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print the report for a session.
    Report {
        session_id: String,
        #[arg(long, value_enum, default_value_t = AudienceArg::Respondent)]
        audience: AudienceArg,
        #[arg(long, value_enum, default_value_t = FormatArg::Markdown)]
        format: FormatArg,
    },
    /// Per-type score differences between two finalized sessions.
    Compare {
        baseline: String,
        comparison: String,
        #[arg(long, value_enum, default_value_t = FormatArg::Markdown)]
        format: FormatArg,
    },
    /// Per-role and combined totals for one platform.
    Combine {
        organizer: String,
        participant: String,
        #[arg(long, value_enum, default_value_t = FormatArg::Markdown)]
        format: FormatArg,
    },
    /// List saved sessions.
    List,
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = debt_gauge_service::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Built webapp to serve at `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum BankAction {
    /// Check the bank and print findings to stderr.
    Validate,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Read answers from a file (one of Y/N/A/D/S per line) instead of prompting.
    #[arg(long)]
    pub answers: Option<PathBuf>,
    /// Format of the report printed at the end.
    #[arg(long, value_enum, default_value_t = FormatArg::Markdown)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoleArg {
    Organizer,
    Participant,
}

impl From<RoleArg> for Role {
    fn from(r: RoleArg) -> Self {
        match r {
            RoleArg::Organizer => Role::Organizer,
            RoleArg::Participant => Role::Participant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AudienceArg {
    Respondent,
    Analyst,
}

impl From<AudienceArg> for Audience {
    fn from(a: AudienceArg) -> Self {
        match a {
            AudienceArg::Respondent => Audience::Respondent,
            AudienceArg::Analyst => Audience::Analyst,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Markdown,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Markdown => Format::Markdown,
            FormatArg::Csv => Format::Csv,
        }
    }
}

/// A failed command: message for stderr plus process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    fn io(context: impl std::fmt::Display, e: io::Error) -> Self {
        CliError::new(exit::IO, format!("{context}: {e}"))
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        let code = match &e {
            StoreError::InvalidSessionId(_) | StoreError::SessionNotFound(_) => exit::NOT_FOUND,
            StoreError::EmptyLabel
            | StoreError::SessionFinalized(_)
            | StoreError::AlreadyFinalized(_)
            | StoreError::NotFinalized(_)
            | StoreError::UnknownQuestion(_)
            | StoreError::QuestionNotApplicable { .. }
            | StoreError::RevisionConflict { .. }
            | StoreError::IncompleteSession { .. }
            | StoreError::BankMismatch { .. }
            | StoreError::RoleMismatch { .. } => exit::PRECONDITION,
            StoreError::Scoring(_)
            | StoreError::Corrupt { .. }
            | StoreError::Storage { .. }
            | StoreError::InjectedCrash(_) => exit::IO,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<BankError> for CliError {
    fn from(e: BankError) -> Self {
        let code = match &e {
            BankError::Io(_) => exit::IO,
            BankError::Parse(p) if p.is_data() => exit::BANK_INVALID,
            BankError::Parse(_) => exit::IO,
            BankError::Validation(_) | BankError::HashMismatch { .. } => exit::BANK_INVALID,
        };
        CliError::new(code, e.to_string())
    }
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run_from<I, T>(
    args: I,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, input, out, err),
        Err(e) => {
            let code = if e.use_stderr() {
                exit::PRECONDITION
            } else {
                exit::OK
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            code
        }
    }
}

pub fn run(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = dispatch(cli, input, out, err).and_then(|()| {
        out.flush()
            .map_err(|e| CliError::io("failed to write output", e))
    });
    match result {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(
    cli: Cli,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    match cli.command {
        Command::Bank {
            action: BankAction::Validate,
        } => validate(cli.bank.as_deref(), out, err),
        Command::Assess {
            role,
            ref label,
            ref run,
        } => {
            let store = open_store(&cli)?;
            let session = store.create_session(role.into(), label)?;
            writeln!(err, "session {}", session.session_id)
                .map_err(|e| CliError::io("failed to write output", e))?;
            administer(&store, &session.session_id, run, input, out)
        }
        Command::Resume {
            ref session_id,
            ref run,
        } => {
            let store = open_store(&cli)?;
            let id = parse_id(session_id)?;
            let session = store.load(&id)?;
            if session.is_finalized() {
                return Err(StoreError::SessionFinalized(id).into());
            }
            administer(&store, &id, run, input, out)
        }
        Command::Report {
            ref session_id,
            audience,
            format,
        } => {
            let store = open_store(&cli)?;
            let id = parse_id(session_id)?;
            print_report(&store, &id, audience.into(), format.into(), out)
        }
        Command::Compare {
            ref baseline,
            ref comparison,
            format,
        } => {
            let store = open_store(&cli)?;
            let delta = store.compare(&parse_id(baseline)?, &parse_id(comparison)?)?;
            let bytes = output::render_delta(&delta, format.into());
            out.write_all(&bytes)
                .map_err(|e| CliError::io("failed to write output", e))
        }
        Command::Combine {
            ref organizer,
            ref participant,
            format,
        } => {
            let store = open_store(&cli)?;
            let combined = store.combine(&parse_id(organizer)?, &parse_id(participant)?)?;
            let bytes = output::render_combined(&combined, format.into());
            out.write_all(&bytes)
                .map_err(|e| CliError::io("failed to write output", e))
        }
        Command::List => {
            let store = open_store(&cli)?;
            let sessions = store.list()?;
            out.write_all(output::render_list(&sessions).as_bytes())
                .map_err(|e| CliError::io("failed to write output", e))
        }
        Command::Serve {
            port,
            bind,
            ref static_dir,
        } => {
            let store = Arc::new(open_store(&cli)?);
            serve(SocketAddr::new(bind, port), store, static_dir.clone())
        }
    }
}

fn parse_id(raw: &str) -> Result<SessionId, CliError> {
    raw.parse()
        .map_err(|_| CliError::new(exit::NOT_FOUND, format!("session {raw} not found")))
}

/// Loads the configured bank, falling back to the built-in one.
pub fn load_configured_bank(path: Option<&Path>) -> Result<QuestionBank, CliError> {
    match path {
        None => Ok(canonical_bank().clone()),
        Some(p) => {
            let file = File::open(p)
                .map_err(|e| CliError::io(format!("cannot open {}", p.display()), e))?;
            load_bank(file).map_err(CliError::from)
        }
    }
}

fn open_store(cli: &Cli) -> Result<SessionStore, CliError> {
    let bank = load_configured_bank(cli.bank.as_deref())?;
    Ok(SessionStore::open(&cli.data_dir, Arc::new(bank))?)
}

fn validate(path: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let text = match path {
        None => canonical_bank_json().to_string(),
        Some(p) => fs::read_to_string(p)
            .map_err(|e| CliError::io(format!("cannot read {}", p.display()), e))?,
    };
    let doc: BankDocument =
        serde_json::from_str(&text).map_err(|e| CliError::from(BankError::Parse(e)))?;
    let findings = validate_bank(&doc);
    let write_err = |e| CliError::io("failed to write output", e);
    for f in &findings {
        writeln!(err, "{f}").map_err(write_err)?;
    }
    let errors = findings.iter().filter(|f| f.is_error()).count();
    if errors > 0 {
        return Err(CliError::new(
            exit::BANK_INVALID,
            format!("bank is invalid ({errors} errors)"),
        ));
    }
    let computed = content_hash(&doc);
    if let Some(declared) = &doc.content_hash {
        if !declared.eq_ignore_ascii_case(&computed) {
            return Err(BankError::HashMismatch {
                declared: declared.clone(),
                computed,
            }
            .into());
        }
    }
    writeln!(
        out,
        "bank {} ok: {} questions, {} warnings, sha256 {computed}",
        doc.bank_version,
        doc.questions.len(),
        findings.len()
    )
    .map_err(write_err)
}

fn administer(
    store: &SessionStore,
    id: &SessionId,
    run: &RunArgs,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let outcome = match &run.answers {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
            let script = parse_answers(&text).map_err(|m| CliError::new(exit::PRECONDITION, m))?;
            wizard::apply_script(store, id, &script)?
        }
        None => wizard::interactive(store, id, input, out)?,
    };
    if outcome == WizardOutcome::Quit {
        return Ok(());
    }
    print_report(store, id, Audience::Respondent, run.format.into(), out)
}

fn print_report(
    store: &SessionStore,
    id: &SessionId,
    audience: Audience,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let session = store.load(id)?;
    let report = build_report(store.bank(), &session, audience)
        .map_err(|e| CliError::new(exit::PRECONDITION, e.to_string()))?;
    out.write_all(&render(&report, format))
        .map_err(|e| CliError::io("failed to write output", e))
}

fn serve(
    addr: SocketAddr,
    store: Arc<SessionStore>,
    static_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    let _ = tracing_subscriber::fmt().with_writer(io::stderr).try_init();
    let runtime =
        tokio::runtime::Runtime::new().map_err(|e| CliError::io("cannot start runtime", e))?;
    runtime
        .block_on(debt_gauge_service::serve(addr, store, static_dir))
        .map_err(|e| CliError::io(format!("cannot serve on {addr}"), e))
}
