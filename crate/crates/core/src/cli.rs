//! Command-line front end.
//!
//! Exit codes: 0 success (or no issues), 1 validation issues found,
//! 2 parse, usage or I/O error, 3 role or gate violation.

use std::collections::BTreeSet;
use std::io::{Read as _, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::actions::{self, ActionError, Applied};
use crate::compiler::{self, CompileError};
use crate::model::*;
use crate::repository::Repository;
use crate::store::{self, StoreError, WriteLock};
use crate::validation::{
    check_mitigation, check_traceability, readiness_report, ConfigError, Severity, ValidationIssue,
};
use crate::views::{status_view, traceability_view};
use crate::workflow::{replay, EventKind, EventPayload, WorkflowError, WorkflowState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ISSUES: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_GATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "release-gate", version, about = "Release process as code for automated-vehicle prototypes")]
pub struct Cli {
    /// Repository root.
    #[arg(long, global = true, env = "RELEASE_GATE_REPO", default_value = ".")]
    pub repo: PathBuf,
    /// Acting actor id (must exist in actors/).
    #[arg(long, global = true, env = "RELEASE_GATE_ACTOR")]
    pub actor: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AddKind {
    Actor,
    Prototype,
    Scenario,
    Malfunction,
    Hazard,
    HazardousScenario,
    SafetyGoal,
    Fsr,
    Tsr,
    Component,
    Crd,
    SystemDoc,
}

impl AddKind {
    fn kind(self) -> Option<RecordKind> {
        Some(match self {
            AddKind::Actor => return None,
            AddKind::Prototype => RecordKind::Prototype,
            AddKind::Scenario => RecordKind::OperationalScenario,
            AddKind::Malfunction => RecordKind::Malfunction,
            AddKind::Hazard => RecordKind::Hazard,
            AddKind::HazardousScenario => RecordKind::HazardousScenario,
            AddKind::SafetyGoal => RecordKind::SafetyGoal,
            AddKind::Fsr => RecordKind::FunctionalRequirement,
            AddKind::Tsr => RecordKind::TechnicalRequirement,
            AddKind::Component => RecordKind::Component,
            AddKind::Crd => RecordKind::ComponentRelease,
            AddKind::SystemDoc => RecordKind::SystemDocument,
        })
    }

    fn dir(self) -> &'static str {
        self.kind().map(store::kind_dir).unwrap_or(store::ACTORS_DIR)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecommendationArg {
    For,
    Against,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerdictArg {
    Granted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EventArg {
    InitialAnalyses,
    PreliminaryConcept,
    AccompanyTest,
    Operation,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create an empty repository (or the reference fixture).
    Init {
        #[arg(long)]
        fixture: bool,
    },
    /// Add a record from a JSON file (or stdin); a missing id is allocated.
    Add {
        #[arg(value_enum)]
        kind: AddKind,
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Create unassessed hazardous scenarios for scenario x malfunction pairs.
    DeriveHazards {
        /// Restrict to `OS-xxxx:MF-xxxx` pairs; default is every pair.
        #[arg(long = "pair")]
        pairs: Vec<String>,
    },
    /// Classify a hazardous scenario.
    Assess {
        id: RecordId,
        #[arg(long = "s")]
        severity: u8,
        #[arg(long = "e")]
        exposure: u8,
        #[arg(long = "c")]
        controllability: u8,
        /// Attach the scenario to a hazard as well.
        #[arg(long)]
        hazard: Option<RecordId>,
    },
    /// Add a trace edge: HS->HZ, TSR->CMP, CRD->TSR, CRD->HZ or CMP->PRO.
    Link { from: RecordId, to: RecordId },
    /// Print (or add) an empty component release document.
    Template {
        component: RecordId,
        #[arg(long)]
        stage: i64,
        #[arg(long)]
        add: bool,
    },
    /// Submit a component implementation with its release document.
    SubmitCrd { crd: RecordId },
    /// Record that submitted documentation was examined.
    Examine { crd: RecordId },
    /// Flag a mismatch between documentation and implementation.
    FlagMismatch {
        crd: RecordId,
        #[arg(long)]
        note: Option<String>,
    },
    /// Record an update of a system-wide safety document.
    UpdateDocs {
        document: RecordId,
        #[arg(long)]
        note: Option<String>,
    },
    /// Issue the component release.
    ReleaseComponent { crd: RecordId },
    /// Mark released documents of a modified component as stale.
    MarkStale { component: RecordId },
    /// Record a review recommendation for a stage.
    Review {
        #[arg(long)]
        prototype: Option<RecordId>,
        #[arg(long)]
        stage: i64,
        #[arg(long, value_enum, default_value_t = RecommendationArg::For)]
        recommendation: RecommendationArg,
        #[arg(long, default_value = "")]
        notes: String,
    },
    /// Decide on the release of a stage.
    Decide {
        #[arg(long)]
        prototype: Option<RecordId>,
        #[arg(long)]
        stage: i64,
        #[arg(long, value_enum, default_value_t = VerdictArg::Granted)]
        verdict: VerdictArg,
        #[arg(long, default_value = "")]
        conditions: String,
    },
    /// Record one of the remaining workflow events.
    Event {
        #[arg(value_enum)]
        kind: EventArg,
        #[arg(long)]
        prototype: Option<RecordId>,
        #[arg(long)]
        stage: Option<i64>,
        #[arg(long)]
        note: Option<String>,
    },
    /// Readiness grid, hazard summary and pending mismatches.
    Status,
    /// Hazard -> goal -> FSR -> TSR -> release chains.
    Trace,
    /// Check records, or a prototype's readiness for a stage.
    Validate {
        #[arg(long)]
        prototype: Option<RecordId>,
        #[arg(long)]
        stage: Option<i64>,
    },
    /// Compile the release document for a stage.
    Compile {
        #[arg(long)]
        prototype: Option<RecordId>,
        #[arg(long)]
        stage: i64,
        /// Output directory; defaults to <repo>/releases.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compile without recording a journal event.
        #[arg(long)]
        no_record: bool,
    },
    /// Serve the review API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// JSON object mapping bearer tokens to actor ids.
        #[arg(long)]
        tokens: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Store(StoreError),
    Gate(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Store(_) => EXIT_ERROR,
            CliError::Gate(_) => EXIT_GATE,
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        CliError::Store(e)
    }
}

impl From<ActionError> for CliError {
    fn from(e: ActionError) -> Self {
        match e {
            ActionError::Journal(e) => CliError::Usage(format!("journal does not replay: {e}")),
            ActionError::Workflow(e) => workflow_error(e),
        }
    }
}

fn workflow_error(e: WorkflowError) -> CliError {
    match &e {
        WorkflowError::MissingPayload { .. } | WorkflowError::UnknownRecord { .. } => CliError::Usage(e.to_string()),
        _ => {
            let mut message = e.to_string();
            if let Some(report) = e.readiness() {
                message.push('\n');
                message.push_str(report.to_text().trim_end());
            }
            CliError::Gate(message)
        }
    }
}

type CliResult = Result<i32, CliError>;

struct Ctx<'a> {
    root: PathBuf,
    actor: Option<ActorId>,
    format: OutputFormat,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn emit<T: Serialize>(&mut self, value: &T, text: impl FnOnce() -> String) {
        let s = match self.format {
            OutputFormat::Json => store::to_canonical_json(value),
            OutputFormat::Text => text(),
        };
        let _ = self.out.write_all(s.as_bytes());
    }

    /// Resolves the acting actor and checks its role before anything runs.
    fn actor_with(&self, repo: &Repository, role: Role) -> Result<ActorId, CliError> {
        let id = self
            .actor
            .clone()
            .ok_or_else(|| CliError::Usage("no acting actor: pass --actor or set RELEASE_GATE_ACTOR".into()))?;
        let actor =
            repo.actor(&id).ok_or_else(|| CliError::Gate(format!("actor {id} is not registered in actors/")))?;
        if actor.role != role {
            return Err(CliError::Gate(format!("this action requires {role}; actor {id} is {}", actor.role)));
        }
        Ok(id)
    }
}

/// Runs the command line with the process environment and stdio.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(rendered.as_bytes());
            } else {
                let _ = out.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    let mut ctx = Ctx { root: cli.repo.clone(), actor: cli.actor.clone().map(ActorId::new), format: cli.format, out };
    match dispatch(&mut ctx, cli.command) {
        Ok(code) => code,
        Err(e) => {
            let message = match &e {
                CliError::Usage(m) | CliError::Gate(m) => m.clone(),
                CliError::Store(s) => s.to_string(),
            };
            let _ = writeln!(err, "error: {message}");
            e.code()
        }
    }
}

fn dispatch(ctx: &mut Ctx, command: Command) -> CliResult {
    match command {
        Command::Init { fixture } => init(ctx, fixture),
        Command::Add { kind, file } => add(ctx, kind, file),
        Command::DeriveHazards { pairs } => derive(ctx, pairs),
        Command::Assess { id, severity, exposure, controllability, hazard } => {
            assess(ctx, id, RiskParameters::new(severity, exposure, controllability), hazard)
        }
        Command::Link { from, to } => link(ctx, from, to),
        Command::Template { component, stage, add } => template(ctx, component, parse_stage(stage)?, add),
        Command::SubmitCrd { crd } => crd_event(ctx, EventKind::ImplementationSubmitted, crd, None),
        Command::Examine { crd } => crd_event(ctx, EventKind::DocumentationExamined, crd, None),
        Command::FlagMismatch { crd, note } => crd_event(ctx, EventKind::MismatchFound, crd, note),
        Command::UpdateDocs { document, note } => crd_event(ctx, EventKind::SafetyDocumentationUpdated, document, note),
        Command::ReleaseComponent { crd } => crd_event(ctx, EventKind::ComponentReleaseIssued, crd, None),
        Command::MarkStale { component } => stale(ctx, component),
        Command::Review { prototype, stage, recommendation, notes } => {
            let stage = parse_stage(stage)?;
            let recommendation = match recommendation {
                RecommendationArg::For => Recommendation::For,
                RecommendationArg::Against => Recommendation::Against,
            };
            gated(ctx, EventKind::ReviewCompleted, |repo, actor| {
                let prototype = resolve_prototype(repo, prototype)?;
                Ok(actions::submit_review(repo, actor, prototype, stage, recommendation, &notes, &actions::now())?)
            })
        }
        Command::Decide { prototype, stage, verdict, conditions } => {
            let stage = parse_stage(stage)?;
            let verdict = match verdict {
                VerdictArg::Granted => DecisionVerdict::Granted,
                VerdictArg::Rejected => DecisionVerdict::Rejected,
            };
            gated(ctx, EventKind::ReleaseDecided, |repo, actor| {
                let prototype = resolve_prototype(repo, prototype)?;
                Ok(actions::submit_decision(repo, actor, prototype, stage, verdict, &conditions, &actions::now())?)
            })
        }
        Command::Event { kind, prototype, stage, note } => {
            let kind = match kind {
                EventArg::InitialAnalyses => EventKind::InitialAnalysesCompleted,
                EventArg::PreliminaryConcept => EventKind::PreliminarySafetyConceptIssued,
                EventArg::AccompanyTest => EventKind::TestAccompanied,
                EventArg::Operation => EventKind::OperationRecorded,
            };
            let stage = stage.map(parse_stage).transpose()?;
            gated(ctx, kind, |repo, actor| {
                let payload = EventPayload {
                    prototype: Some(resolve_prototype(repo, prototype)?),
                    stage,
                    note,
                    ..Default::default()
                };
                Ok(actions::record_event(repo, actor, kind, payload, &actions::now())?)
            })
        }
        Command::Status => status(ctx),
        Command::Trace => trace(ctx),
        Command::Validate { prototype, stage } => validate(ctx, prototype, stage.map(parse_stage).transpose()?),
        Command::Compile { prototype, stage, out, no_record } => {
            compile(ctx, prototype, parse_stage(stage)?, out, no_record)
        }
        Command::Serve { bind, tokens } => serve(ctx, &bind, &tokens),
    }
}

fn parse_stage(value: i64) -> Result<StageNumber, CliError> {
    StageNumber::new(value).map_err(|e| CliError::Usage(format!("--stage: {e}")))
}

fn resolve_prototype(repo: &Repository, given: Option<RecordId>) -> Result<RecordId, CliError> {
    match given {
        Some(p) if repo.prototypes.contains_key(&p) => Ok(p),
        Some(p) => Err(CliError::Usage(format!("--prototype: unknown prototype {p}"))),
        None if repo.prototypes.len() == 1 => Ok(*repo.prototypes.keys().next().expect("one prototype")),
        None => Err(CliError::Usage(format!(
            "--prototype is required (repository has {} prototypes)",
            repo.prototypes.len()
        ))),
    }
}

fn load(ctx: &Ctx) -> Result<Repository, CliError> {
    Ok(store::load(&ctx.root)?)
}

fn load_with_state(ctx: &Ctx) -> Result<(Repository, WorkflowState), CliError> {
    let repo = load(ctx)?;
    let state = replay(&repo.journal, &repo).map_err(|e| CliError::Usage(format!("journal does not replay: {e}")))?;
    Ok((repo, state))
}

/// Runs one journal-writing action under the write lock.
fn gated(
    ctx: &mut Ctx,
    kind: EventKind,
    action: impl FnOnce(&Repository, &ActorId) -> Result<Applied, CliError>,
) -> CliResult {
    let _lock = WriteLock::acquire(&ctx.root)?;
    let repo = load(ctx)?;
    let actor = ctx.actor_with(&repo, kind.required_role())?;
    let applied = action(&repo, &actor)?;
    store::save(&applied.repo)?;
    let event = applied.event;
    ctx.emit(&event, || format!("recorded #{} {:?} by {}\n", event.seq, event.kind, event.actor));
    Ok(EXIT_OK)
}

fn crd_event(ctx: &mut Ctx, kind: EventKind, record: RecordId, note: Option<String>) -> CliResult {
    gated(ctx, kind, |repo, actor| {
        let payload = EventPayload { record: Some(record), note, ..Default::default() };
        Ok(actions::record_event(repo, actor, kind, payload, &actions::now())?)
    })
}

/// Runs an ungated record edit under the write lock; refuses edits that
/// leave dangling references.
fn edit(ctx: &mut Ctx, change: impl FnOnce(&mut Repository) -> Result<String, CliError>) -> CliResult {
    let _lock = WriteLock::acquire(&ctx.root)?;
    let mut repo = load(ctx)?;
    let message = change(&mut repo)?;
    if let Err(e) = repo.check_integrity() {
        let _ = writeln!(ctx.out, "{e}");
        return Ok(EXIT_ISSUES);
    }
    store::save(&repo)?;
    let _ = ctx.out.write_all(message.as_bytes());
    Ok(EXIT_OK)
}

fn init(ctx: &mut Ctx, fixture: bool) -> CliResult {
    if ctx.root.join(store::CONFIG_FILE).exists() {
        return Err(CliError::Usage(format!("{} already contains a repository", ctx.root.display())));
    }
    let mut repo = if fixture { crate::fixture::unicaragil() } else { Repository::default() };
    repo.root = ctx.root.clone();
    store::save(&repo)?;
    let _ = writeln!(ctx.out, "initialized {} ({} records)", ctx.root.display(), repo.record_count());
    Ok(EXIT_OK)
}

fn add(ctx: &mut Ctx, kind: AddKind, file: Option<PathBuf>) -> CliResult {
    let (source, text) = match &file {
        Some(path) => {
            (path.clone(), std::fs::read_to_string(path).map_err(|e| StoreError::Io { path: path.clone(), source: e })?)
        }
        None => {
            let mut text = String::new();
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| StoreError::Io { path: "<stdin>".into(), source: e })?;
            (PathBuf::from("<stdin>"), text)
        }
    };
    let _lock = WriteLock::acquire(&ctx.root)?;
    let mut repo = load(ctx)?;
    let text = match kind.kind() {
        Some(k) => with_allocated_id(&source, &text, repo.next_id(k))?,
        None => text,
    };
    let record = store::parse_record(kind.dir(), &source, &text)?;
    if let (Some(expected), Some(id)) = (kind.kind(), record.record_id()) {
        if id.kind() != expected {
            return Err(CliError::Usage(format!(
                "{}: field `id`: expected a {expected} id, found {id}",
                source.display()
            )));
        }
    }
    let label = record.label();
    repo.insert(record.clone()).map_err(|e| CliError::Usage(e.to_string()))?;

    let mut problems: Vec<String> = validate_record(&record, &repo).iter().map(|v| v.to_string()).collect();
    problems.extend(repo.dangling_references().iter().map(|d| format!("dangling reference {d}")));
    if !problems.is_empty() {
        for p in &problems {
            let _ = writeln!(ctx.out, "{p}");
        }
        return Ok(EXIT_ISSUES);
    }
    store::save(&repo)?;
    let _ = writeln!(ctx.out, "added {label}");
    Ok(EXIT_OK)
}

fn with_allocated_id(source: &Path, text: &str, id: RecordId) -> Result<String, CliError> {
    let mut value: serde_json::Value = store::parse_json(source, text)?;
    match value.as_object_mut() {
        Some(obj) => {
            obj.entry("id").or_insert_with(|| serde_json::Value::String(id.to_string()));
        }
        None => return Err(CliError::Usage(format!("{}: expected a JSON object", source.display()))),
    }
    Ok(serde_json::to_string(&value).expect("re-serializing parsed JSON"))
}

fn derive(ctx: &mut Ctx, pairs: Vec<String>) -> CliResult {
    let wanted: Option<BTreeSet<(RecordId, RecordId)>> = if pairs.is_empty() {
        None
    } else {
        let mut set = BTreeSet::new();
        for p in &pairs {
            let (os, mf) =
                p.split_once(':').ok_or_else(|| CliError::Usage(format!("--pair `{p}` is not OS-xxxx:MF-xxxx")))?;
            let parse = |s: &str| s.parse::<RecordId>().map_err(|e| CliError::Usage(format!("--pair: {e}")));
            set.insert((parse(os)?, parse(mf)?));
        }
        Some(set)
    };
    edit(ctx, |repo| {
        let existing: BTreeSet<(RecordId, RecordId)> =
            repo.hazardous_scenarios.values().map(|h| (h.scenario, h.malfunction)).collect();
        let scenarios: Vec<_> = repo.scenarios.values().cloned().collect();
        let malfunctions: Vec<_> = repo.malfunctions.values().cloned().collect();
        let first = repo.next_id(RecordKind::HazardousScenario).serial();
        let derived = crate::risk::derive_hazardous_scenarios(
            &scenarios,
            &malfunctions,
            |os, mf| !existing.contains(&(os.id, mf.id)) && wanted.as_ref().is_none_or(|w| w.contains(&(os.id, mf.id))),
            first,
        );
        let mut message = String::new();
        for hs in derived {
            message.push_str(&format!("{} {} x {}\n", hs.id, hs.scenario, hs.malfunction));
            repo.insert(Record::HazardousScenario(hs)).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        if message.is_empty() {
            message.push_str("no new hazardous scenarios\n");
        }
        Ok(message)
    })
}

fn assess(ctx: &mut Ctx, id: RecordId, params: RiskParameters, hazard: Option<RecordId>) -> CliResult {
    edit(ctx, |repo| {
        let hs = repo
            .hazardous_scenarios
            .get(&id)
            .ok_or_else(|| CliError::Usage(format!("unknown hazardous scenario {id}")))?;
        let mut classified = crate::risk::classify(hs, params).map_err(|e| CliError::Usage(format!("{id}: {e}")))?;
        if hazard.is_some() {
            classified.hazard = hazard;
        }
        let a = classified.assessment.expect("just classified");
        repo.upsert(Record::HazardousScenario(classified));
        Ok(format!("{id} {} -> {} -> {} ({})\n", a.parameters, a.asil, a.rsil, a.rsil.band()))
    })
}

fn link(ctx: &mut Ctx, from: RecordId, to: RecordId) -> CliResult {
    edit(ctx, |repo| {
        use RecordKind as K;
        let missing = |id: RecordId| CliError::Usage(format!("unknown record {id}"));
        if !repo.contains(&to) {
            return Err(missing(to));
        }
        let push = |v: &mut Vec<RecordId>| {
            if !v.contains(&to) {
                v.push(to);
                v.sort();
            }
        };
        match (from.kind(), to.kind()) {
            (K::HazardousScenario, K::Hazard) => {
                repo.hazardous_scenarios.get_mut(&from).ok_or_else(|| missing(from))?.hazard = Some(to)
            }
            (K::TechnicalRequirement, K::Component) => {
                push(&mut repo.requirements.get_mut(&from).ok_or_else(|| missing(from))?.allocated_to)
            }
            (K::ComponentRelease, K::TechnicalRequirement) => {
                push(&mut repo.component_releases.get_mut(&from).ok_or_else(|| missing(from))?.covered_requirements)
            }
            (K::ComponentRelease, K::Hazard) => {
                push(&mut repo.component_releases.get_mut(&from).ok_or_else(|| missing(from))?.hazards_caused)
            }
            (K::Component, K::Prototype) => {
                repo.components.get_mut(&from).ok_or_else(|| missing(from))?.prototypes.insert(to);
            }
            (a, b) => return Err(CliError::Usage(format!("cannot link {a} to {b} ({from} -> {to})"))),
        }
        Ok(format!("linked {from} -> {to}\n"))
    })
}

fn template(ctx: &mut Ctx, component: RecordId, stage: StageNumber, add: bool) -> CliResult {
    if add {
        return edit(ctx, |repo| {
            if !repo.components.contains_key(&component) {
                return Err(CliError::Usage(format!("unknown component {component}")));
            }
            let skeleton = compiler::component_template(repo, &component, stage);
            let id = skeleton.id;
            repo.insert(Record::ComponentRelease(skeleton)).expect("fresh id");
            Ok(format!("added {id}\n"))
        });
    }
    let repo = load(ctx)?;
    if !repo.components.contains_key(&component) {
        return Err(CliError::Usage(format!("unknown component {component}")));
    }
    let skeleton = compiler::component_template(&repo, &component, stage);
    let _ = ctx.out.write_all(store::to_canonical_json(&skeleton).as_bytes());
    Ok(EXIT_OK)
}

fn stale(ctx: &mut Ctx, component: RecordId) -> CliResult {
    edit(ctx, |repo| {
        if !repo.components.contains_key(&component) {
            return Err(CliError::Usage(format!("unknown component {component}")));
        }
        let before: BTreeSet<RecordId> = repo.component_releases.values().filter(|c| c.stale).map(|c| c.id).collect();
        *repo = crate::workflow::mark_stale(repo, &component);
        let marked: Vec<String> = repo
            .component_releases
            .values()
            .filter(|c| c.stale && !before.contains(&c.id))
            .map(|c| c.id.to_string())
            .collect();
        Ok(format!("marked stale: {}\n", if marked.is_empty() { "none".into() } else { marked.join(", ") }))
    })
}

fn status(ctx: &mut Ctx) -> CliResult {
    let (repo, state) = load_with_state(ctx)?;
    let view = status_view(&repo, &state).map_err(StoreError::from)?;
    ctx.emit(&view, || view.to_text());
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct RepositoryValidation {
    violations: Vec<InvariantViolation>,
    issues: Vec<ValidationIssue>,
    warnings: Vec<ValidationIssue>,
}

fn validate(ctx: &mut Ctx, prototype: Option<RecordId>, stage: Option<StageNumber>) -> CliResult {
    let (repo, state) = load_with_state(ctx)?;
    if prototype.is_none() && stage.is_none() {
        let mut all = check_traceability(&repo);
        all.extend(check_mitigation(&repo));
        all.sort();
        let (issues, warnings): (Vec<_>, Vec<_>) = all.into_iter().partition(|i| i.severity == Severity::Blocking);
        let report = RepositoryValidation { violations: validate_repository(&repo), issues, warnings };
        ctx.emit(&report, || {
            let mut s = format!(
                "repository: {} invariant violation(s), {} issue(s), {} warning(s)\n",
                report.violations.len(),
                report.issues.len(),
                report.warnings.len()
            );
            for v in &report.violations {
                s.push_str(&format!("  {v}\n"));
            }
            for i in &report.issues {
                s.push_str(&format!("  {i}\n"));
            }
            for w in &report.warnings {
                s.push_str(&format!("  warning: {w}\n"));
            }
            s
        });
        return Ok(if report.violations.is_empty() && report.issues.is_empty() { EXIT_OK } else { EXIT_ISSUES });
    }

    let prototype = resolve_prototype(&repo, prototype)?;
    let stages: Vec<StageNumber> = match stage {
        Some(s) => vec![s],
        None => StageNumber::all().filter(|s| repo.config.composition(&prototype, *s).is_some()).collect(),
    };
    let mut reports = Vec::new();
    for s in stages {
        reports.push(readiness_report(&repo, &state, &prototype, s).map_err(|e| match e {
            ConfigError::MissingComposition { .. } | ConfigError::UnknownPrototype(_) => CliError::Usage(e.to_string()),
        })?);
    }
    let ready = reports.iter().all(|r| r.is_ready());
    if reports.len() == 1 {
        let r = &reports[0];
        ctx.emit(r, || r.to_text());
    } else {
        ctx.emit(&reports, || reports.iter().map(|r| r.to_text()).collect());
    }
    Ok(if ready { EXIT_OK } else { EXIT_ISSUES })
}

#[derive(Serialize)]
struct CompileOutput<'a> {
    prototype: RecordId,
    stage: StageNumber,
    content_digest: &'a str,
    files: Vec<PathBuf>,
    disclosed_issues: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    event: Option<crate::workflow::WorkflowEvent>,
}

fn compile(
    ctx: &mut Ctx,
    prototype: Option<RecordId>,
    stage: StageNumber,
    out: Option<PathBuf>,
    no_record: bool,
) -> CliResult {
    let _lock = if no_record { None } else { Some(WriteLock::acquire(&ctx.root)?) };
    let (repo, state) = load_with_state(ctx)?;
    let actor = if no_record { None } else { Some(ctx.actor_with(&repo, Role::SafetyEngineer)?) };
    let prototype = resolve_prototype(&repo, prototype)?;
    let doc = match compiler::compile(&repo, &state, &prototype, stage) {
        Ok(doc) => doc,
        Err(CompileError::MissingModules(report)) => {
            ctx.emit(&report, || format!("compilation refused\n{}", report.to_text()));
            return Ok(EXIT_ISSUES);
        }
        Err(CompileError::Config(e)) => return Err(CliError::Usage(e.to_string())),
        Err(CompileError::Integrity(e)) => return Err(StoreError::from(e).into()),
        Err(e @ CompileError::UnknownStage(_)) => return Err(CliError::Usage(e.to_string())),
    };

    let mut event = None;
    if let Some(actor) = actor {
        let payload = EventPayload {
            prototype: Some(prototype),
            stage: Some(stage),
            digest: Some(doc.content_digest.clone()),
            ..Default::default()
        };
        let applied =
            actions::record_event(&repo, &actor, EventKind::ReleaseDocumentCompiled, payload, &actions::now())?;
        store::save(&applied.repo)?;
        event = Some(applied.event);
    }
    let dir = out.unwrap_or_else(|| ctx.root.join("releases"));
    let files = compiler::write_outputs(&doc, &dir).map_err(|e| StoreError::Io { path: dir.clone(), source: e })?;
    let output = CompileOutput {
        prototype,
        stage,
        content_digest: &doc.content_digest,
        files,
        disclosed_issues: doc.disclosed_issues.len(),
        event,
    };
    ctx.emit(&output, || {
        let mut s = format!("compiled {} stage {}: {}\n", prototype, stage, doc.content_digest);
        for f in &output.files {
            s.push_str(&format!("  wrote {}\n", f.display()));
        }
        if !doc.disclosed_issues.is_empty() {
            s.push_str(&format!("  {} issue(s) disclosed in the annex\n", doc.disclosed_issues.len()));
        }
        if let Some(e) = &output.event {
            s.push_str(&format!("recorded #{} {:?} by {}\n", e.seq, e.kind, e.actor));
        }
        s
    });
    Ok(EXIT_OK)
}

fn serve(ctx: &mut Ctx, bind: &str, tokens: &Path) -> CliResult {
    let tokens = crate::service::load_tokens(tokens)?;
    load(ctx)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start runtime: {e}")))?;
    let root = ctx.root.clone();
    let _ = writeln!(ctx.out, "serving {} on http://{bind}", root.display());
    let _ = ctx.out.flush();
    runtime.block_on(crate::service::serve(root, bind, tokens)).map_err(|e| CliError::Usage(format!("{bind}: {e}")))?;
    Ok(EXIT_OK)
}

fn trace(ctx: &mut Ctx) -> CliResult {
    let repo = load(ctx)?;
    let view = traceability_view(&repo);
    ctx.emit(&view, || trace_text(&view));
    Ok(if view.issues.is_empty() { EXIT_OK } else { EXIT_ISSUES })
}

fn trace_text(view: &crate::views::TraceabilityView) -> String {
    let mut out = String::new();
    let show = |id: &Option<RecordId>| id.map(|i| i.to_string()).unwrap_or_else(|| "--".into());
    for c in &view.chains {
        let releases: Vec<String> = c.component_releases.iter().map(|r| r.to_string()).collect();
        out.push_str(&format!(
            "{} {} {} {} {}{}\n",
            c.hazard,
            show(&c.safety_goal),
            show(&c.functional),
            show(&c.technical),
            if releases.is_empty() { "--".into() } else { releases.join(",") },
            if c.broken { "  BROKEN" } else { "" }
        ));
    }
    for i in &view.issues {
        out.push_str(&format!("{i}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_in(root: &Path, args: &[&str]) -> (i32, String, String) {
        let mut argv = vec!["release-gate", "--repo", root.to_str().unwrap()];
        argv.extend_from_slice(args);
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn fixture_validates_clean_and_decide_needs_committee() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run_in(dir.path(), &["init", "--fixture"]).0, 0);
        let (code, out, _) = run_in(dir.path(), &["validate", "--prototype", "PRO-0003", "--stage", "5"]);
        assert_eq!(code, 0, "{out}");
        let (code, _, err) = run_in(dir.path(), &["--actor", "fd-lift", "decide", "--stage", "3"]);
        assert_eq!(code, 3, "{err}");
    }

    #[test]
    fn missing_repository_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let (code, _, err) = run_in(&dir.path().join("nope"), &["status"]);
        assert_eq!(code, 2);
        assert!(err.contains("repo.json"), "{err}");
    }

    #[test]
    fn bad_stage_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        run_in(dir.path(), &["init", "--fixture"]);
        let (code, _, err) = run_in(dir.path(), &["validate", "--prototype", "PRO-0003", "--stage", "9"]);
        assert_eq!(code, 2);
        assert!(err.contains("--stage"));
    }
}
