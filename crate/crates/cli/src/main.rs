//! `curricula`: command-line front door for the curriculum engine.
//!
//! Exit codes: 0 success or pass, 1 a domain negative (violations,
//! resume conflict, reverted files, unfinished steps), 2 usage or internal
//! error. `observe` always exits 0.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

mod commands;
mod registry;

#[derive(Debug, Parser)]
#[command(name = "curricula", version, about = "Persona-staged curriculum engine")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Machine,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the corpus against every structural rule.
    Validate(ValidateArgs),
    /// Classify the latest learner message into the profile (hook; silent).
    Observe(ObserveArgs),
    /// Print the session-start teaching note, if there is one.
    InjectContext(InjectArgs),
    /// Apply the module-boundary level decision.
    AdaptBoundary(BoundaryArgs),
    /// Onboarding state machine.
    #[command(subcommand)]
    Onboard(OnboardCommand),
    /// Record a completed step in the markers file.
    TrackStep(TrackArgs),
    /// List unfinished steps of the current module.
    PreAdvance(PreAdvanceArgs),
    /// Apply changelog-driven updates to the corpus.
    Sync(SyncArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Corpus root.
    #[arg(env = "CURRICULA_ROOT")]
    pub root: PathBuf,
    /// Comma-separated rule ids to run (default: all).
    #[arg(long)]
    pub rules: Option<String>,
    /// Persona schedule override file.
    #[arg(long, env = "CURRICULA_SCHEDULE")]
    pub schedule: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ObserveArgs {
    /// Line-delimited transcript of the session.
    #[arg(long, env = "CURRICULA_TRANSCRIPT")]
    pub transcript: PathBuf,
    /// Learner profile JSON.
    #[arg(long, env = "CURRICULA_PROFILE")]
    pub profile: PathBuf,
    /// Lexicon TOML layered over the built-in phrases.
    #[arg(long, env = "CURRICULA_LEXICON")]
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    #[arg(long, env = "CURRICULA_PROFILE")]
    pub profile: PathBuf,
    /// Markers file; adds the persona line for the current module.
    #[arg(long, env = "CURRICULA_STATE")]
    pub state: Option<PathBuf>,
    /// Note templates TOML.
    #[arg(long, env = "CURRICULA_TEMPLATES")]
    pub templates: Option<PathBuf>,
    #[arg(long, env = "CURRICULA_SCHEDULE")]
    pub schedule: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BoundaryArgs {
    #[arg(long, env = "CURRICULA_PROFILE")]
    pub profile: PathBuf,
    /// Markers file holding the effective level.
    #[arg(long, env = "CURRICULA_STATE")]
    pub state: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum OnboardCommand {
    /// Answer the current stage and move on.
    ///
    /// Answers by stage: version_check takes `<curriculum> <latest>`;
    /// project_selection a path id; os_detection and language_selection
    /// free text; experience_level beginner|intermediate|advanced;
    /// progress_resume yes|no; every other stage takes no answer.
    Advance(AdvanceArgs),
    /// Show the current stage and answers.
    Status(StatusArgs),
    /// Compare earlier progress markers with the current answers.
    ResumeCheck(ResumeArgs),
}

#[derive(Debug, Args)]
pub struct AdvanceArgs {
    #[arg(long, env = "CURRICULA_ONBOARDING")]
    pub onboarding: PathBuf,
    /// Markers file; its presence enables the resume stage.
    #[arg(long, env = "CURRICULA_STATE")]
    pub state: Option<PathBuf>,
    /// Refuse to advance unless the flow is at this stage.
    #[arg(long)]
    pub expect: Option<String>,
    pub answer: Vec<String>,
}

#[derive(Debug, Args)]
pub struct StatusArgs {
    #[arg(long, env = "CURRICULA_ONBOARDING")]
    pub onboarding: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ResumeArgs {
    #[arg(long, env = "CURRICULA_ONBOARDING")]
    pub onboarding: PathBuf,
    #[arg(long, env = "CURRICULA_STATE")]
    pub state: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    #[arg(long, env = "CURRICULA_ROOT")]
    pub root: PathBuf,
    #[arg(long, env = "CURRICULA_STATE")]
    pub state: PathBuf,
    /// Step label such as `7.3`.
    pub step: String,
}

#[derive(Debug, Args)]
pub struct PreAdvanceArgs {
    #[arg(long, env = "CURRICULA_ROOT")]
    pub root: PathBuf,
    #[arg(long, env = "CURRICULA_STATE")]
    pub state: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SyncArgs {
    #[arg(long, env = "CURRICULA_ROOT")]
    pub root: PathBuf,
    #[arg(long)]
    pub changelog: PathBuf,
    #[arg(long)]
    pub feature_map: PathBuf,
    /// Directory of payload files.
    #[arg(long)]
    pub payloads: PathBuf,
    /// Only touch module files of this path.
    #[arg(long, conflicts_with = "all")]
    pub scope: Option<String>,
    /// Touch every path (the default).
    #[arg(long)]
    pub all: bool,
    /// Override the last-synced version read from the corpus.
    #[arg(long)]
    pub from: Option<String>,
    /// Override the target version (default: newest in the changelog).
    #[arg(long)]
    pub to: Option<String>,
    #[arg(long)]
    pub dry_run: bool,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

fn main() -> ExitCode {
    let matches = Cli::command()
        .after_long_help(registry::render())
        .get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match commands::dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
