use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use chrono::Utc;
use curricula_core::adaptation::{apply_boundary_file, make_note_with, NoteTemplates};
use curricula_core::corpus::{module_rel_path, ModuleDoc};
use curricula_core::session::{FlowContext, MarkerStore, OnboardingStore};
use curricula_core::sync::{load_payloads, sync_root, Outcome, SyncOptions, SyncPlan};
use curricula_core::{
    load_corpus, observe, parse_module, persona_for, pre_advance_check, record_step, resume_check,
    validate_all, EffectiveLevel, ExperienceLevel, FeatureMap, Lexicon, PathId, PersonaSchedule,
    ProfileStore, ResumeStatus, RuleSet, SessionMarkers, Stage, StageInput, StepLabel, StreakAlert,
    SyncScope,
};

use crate::{
    AdvanceArgs, BoundaryArgs, Command, Format, InjectArgs, ObserveArgs, OnboardCommand, PreAdvanceArgs,
    ResumeArgs, StatusArgs, SyncArgs, TrackArgs, ValidateArgs,
};

const OK: u8 = 0;
const NEGATIVE: u8 = 1;

pub fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Validate(a) => validate(a),
        Command::Observe(a) => Ok(observe_cmd(a)),
        Command::InjectContext(a) => inject_context(a),
        Command::AdaptBoundary(a) => adapt_boundary(a),
        Command::Onboard(OnboardCommand::Advance(a)) => onboard_advance(a),
        Command::Onboard(OnboardCommand::Status(a)) => onboard_status(a),
        Command::Onboard(OnboardCommand::ResumeCheck(a)) => onboard_resume(a),
        Command::TrackStep(a) => track_step(a),
        Command::PreAdvance(a) => pre_advance(a),
        Command::Sync(a) => sync(a),
    }
}

fn schedule(path: Option<&Path>) -> Result<PersonaSchedule> {
    match path {
        None => Ok(PersonaSchedule::builtin()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            PersonaSchedule::parse_override(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn validate(a: ValidateArgs) -> Result<u8> {
    let rules = match &a.rules {
        Some(list) => RuleSet::parse_list(list)?,
        None => RuleSet::all(),
    };
    // An override that breaks the schedule rules is reported as violations,
    // not refused.
    let schedule = schedule(a.schedule.as_deref())?;
    let corpus = load_corpus(&a.root)?;
    let report = validate_all(&corpus, &schedule, &rules);
    match a.format {
        Format::Text => print!("{}", report.render_text()),
        Format::Machine => print!("{}", report.render_machine()),
    }
    Ok(if report.pass { OK } else { NEGATIVE })
}

/// Never fails towards the host: every problem becomes a diagnostic line.
fn observe_cmd(a: ObserveArgs) -> u8 {
    let lexicon = match &a.lexicon {
        Some(p) => match Lexicon::load(p) {
            Ok(l) => l,
            Err(e) => {
                eprintln!("skipped: {e}");
                return OK;
            }
        },
        None => Lexicon::default(),
    };
    let status = observe(&a.transcript, &a.profile, &lexicon);
    if status.applied().is_none() {
        eprintln!("{}", status.reason());
    }
    OK
}

fn load_markers(path: &Path) -> Result<SessionMarkers> {
    MarkerStore::load(path)?.ok_or_else(|| anyhow!("{} has no progress markers", path.display()))
}

fn inject_context(a: InjectArgs) -> Result<u8> {
    let profile = ProfileStore::load_or_init(&a.profile)?;
    let templates = match &a.templates {
        Some(p) => NoteTemplates::load(p)?,
        None => NoteTemplates::default(),
    };
    let persona = match &a.state {
        Some(p) => match MarkerStore::load(p)? {
            Some(m) => {
                let schedule = schedule(a.schedule.as_deref())?;
                let persona = persona_for(&schedule, m.level.current, m.current_module)?;
                Some((persona, m.current_module, m.level.current))
            }
            None => None,
        },
        None => None,
    };
    let note = make_note_with(&profile, &templates);

    let mut out = String::new();
    match a.format {
        Format::Text => {
            if let Some((persona, module, level)) = persona {
                out.push_str(&format!("Persona: {persona} (module {module}, {level} level)\n"));
            }
            if let Some(n) = &note {
                out.push_str(&n.rendered);
            }
        }
        Format::Machine => {
            if let Some((persona, module, level)) = persona {
                out.push_str(&format!("persona\t{persona}\t{module}\t{level}\n"));
            }
            if let Some(n) = &note {
                let alert = match n.streak_alert {
                    Some(StreakAlert::Struggle) => "struggle",
                    Some(StreakAlert::Flow) => "flow",
                    None => "none",
                };
                out.push_str(&format!(
                    "note\t{}\t{}\t{}\t{:.2}\t{}\n",
                    n.trend.as_str(),
                    n.dominant_pattern,
                    n.tier,
                    n.productive_ratio,
                    alert
                ));
            }
        }
    }
    print!("{out}");
    Ok(OK)
}

fn adapt_boundary(a: BoundaryArgs) -> Result<u8> {
    let mut markers = load_markers(&a.state)?;
    let before = markers.level;
    let outcome = apply_boundary_file(&a.profile, before, Utc::now())?;
    markers.level = outcome.level;
    MarkerStore::save(&a.state, &markers)?;
    let d = outcome.decision;
    match a.format {
        Format::Text => println!(
            "{} (module average {:.2}, productive {:.2}, unproductive {:.2}); effective level {} -> {}",
            d.direction.as_str(),
            d.module_average,
            d.productive_share,
            d.unproductive_share,
            before.current,
            outcome.level.current
        ),
        Format::Machine => {
            println!(
                "decision\t{}\t{:.4}\t{:.4}\t{:.4}",
                d.direction.as_str(),
                d.module_average,
                d.productive_share,
                d.unproductive_share
            );
            println!("level\t{}\t{}", before.current, outcome.level.current);
        }
    }
    Ok(OK)
}

fn stage_input(stage: Stage, answer: &[String]) -> Result<StageInput> {
    let one = || -> Result<&str> {
        match answer {
            [a] => Ok(a.as_str()),
            _ => bail!("stage {stage} expects {}", stage.expects()),
        }
    };
    Ok(match stage {
        Stage::VersionCheck => match answer {
            [curriculum, latest] => StageInput::VersionCheck {
                curriculum: curriculum.clone(),
                latest: latest.clone(),
            },
            _ => bail!("stage {stage} expects {}", stage.expects()),
        },
        Stage::ProjectSelection => StageInput::Project(one()?.parse()?),
        Stage::OsDetection => StageInput::Os(one()?.to_string()),
        Stage::LanguageSelection => StageInput::Language(one()?.to_string()),
        Stage::ExperienceLevel => StageInput::Experience(one()?.parse()?),
        Stage::ProgressResume => StageInput::Resume(match one()? {
            "yes" | "true" => true,
            "no" | "false" => false,
            other => bail!("progress_resume expects yes or no, got {other:?}"),
        }),
        Stage::Complete => bail!("onboarding is already complete"),
        _ if answer.is_empty() => StageInput::Done,
        _ => bail!("stage {stage} takes no answer"),
    })
}

fn onboard_advance(a: AdvanceArgs) -> Result<u8> {
    let state = OnboardingStore::load(&a.onboarding)?;
    if let Some(expect) = &a.expect {
        let expect: Stage = expect.parse().map_err(|e: String| anyhow!(e))?;
        if expect != state.stage {
            bail!("onboarding is at {}, not {expect}", state.stage);
        }
    }
    let markers = match &a.state {
        Some(p) => MarkerStore::load(p)?,
        None => None,
    };
    let ctx = FlowContext {
        prior_markers: markers.is_some(),
    };
    let input = stage_input(state.stage, &a.answer)?;
    let next = OnboardingStore::advance(&a.onboarding, input, ctx, Utc::now())?;

    // Step tracking starts once module 1 is delivered, unless the learner
    // resumed earlier progress.
    if state.stage == Stage::Module1Delivery {
        if let Some(path) = &a.state {
            let keep = markers.is_some() && next.answers.resume == Some(true);
            if !keep {
                let project = next.answers.project.context("no project recorded")?;
                let level = next.answers.experience.unwrap_or(ExperienceLevel::Beginner);
                MarkerStore::save(path, &SessionMarkers::new(project, EffectiveLevel::new(level)))?;
            }
        }
    }
    println!("{}", next.stage);
    Ok(OK)
}

fn onboard_status(a: StatusArgs) -> Result<u8> {
    let s = OnboardingStore::load(&a.onboarding)?;
    let ans = &s.answers;
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".to_string());
    let fields = [
        ("curriculum_version", opt(ans.curriculum_version.clone())),
        ("latest_version", opt(ans.latest_version.clone())),
        ("project", opt(ans.project.map(|p| p.to_string()))),
        ("os", opt(ans.os.clone())),
        ("language", opt(ans.language.clone())),
        ("experience", opt(ans.experience.map(|e| e.to_string()))),
        ("resume", opt(ans.resume.map(|r| if r { "yes" } else { "no" }.to_string()))),
    ];
    match a.format {
        Format::Text => {
            println!("stage: {}", s.stage);
            for (k, v) in fields {
                println!("{k}: {v}");
            }
        }
        Format::Machine => {
            println!("stage\t{}", s.stage);
            for (k, v) in fields {
                println!("answer\t{k}\t{v}");
            }
        }
    }
    Ok(OK)
}

fn onboard_resume(a: ResumeArgs) -> Result<u8> {
    let s = OnboardingStore::load(&a.onboarding)?;
    let markers = MarkerStore::load(&a.state)?;
    let status = resume_check(&s, markers.as_ref());
    println!("{}", status.as_str());
    Ok(if status == ResumeStatus::ResumeConflict { NEGATIVE } else { OK })
}

fn read_module(root: &Path, path: PathId, number: u8) -> Option<ModuleDoc> {
    let text = fs::read_to_string(root.join(module_rel_path(path, number))).ok()?;
    Some(parse_module(&text, path, number).doc)
}

fn markers_with_project(state: &Path) -> Result<(SessionMarkers, PathId)> {
    let markers = load_markers(state)?;
    let project = markers
        .project
        .ok_or_else(|| anyhow!("{} does not name a project", state.display()))?;
    Ok((markers, project))
}

fn track_step(a: TrackArgs) -> Result<u8> {
    let label: StepLabel = a.step.parse()?;
    let (markers, project) = markers_with_project(&a.state)?;
    let mut docs = BTreeMap::new();
    for n in [markers.current_module, label.module] {
        if let Some(doc) = read_module(&a.root, project, n) {
            docs.insert(n, doc);
        }
    }
    match record_step(&markers, label, |n| docs.get(&n)) {
        Ok(next) => {
            MarkerStore::save(&a.state, &next)?;
            println!("Current Step: {label}");
            Ok(OK)
        }
        Err(e) => {
            eprintln!("refused: {e}");
            Ok(NEGATIVE)
        }
    }
}

fn pre_advance(a: PreAdvanceArgs) -> Result<u8> {
    let (markers, project) = markers_with_project(&a.state)?;
    let doc = read_module(&a.root, project, markers.current_module)
        .ok_or_else(|| anyhow!("module {} of {project} is not readable", markers.current_module))?;
    let missing = pre_advance_check(&markers, &doc);
    match a.format {
        Format::Text if missing.is_empty() => println!("module {} complete", markers.current_module),
        Format::Text => {
            let list: Vec<String> = missing.iter().map(StepLabel::to_string).collect();
            println!("module {} missing: {}", markers.current_module, list.join(", "));
        }
        Format::Machine => {
            for m in &missing {
                println!("missing\t{m}");
            }
            let verdict = if missing.is_empty() { "complete" } else { "incomplete" };
            println!("result\t{verdict}\t{}", missing.len());
        }
    }
    Ok(if missing.is_empty() { OK } else { NEGATIVE })
}

fn render_sync_text(plan: &SyncPlan) -> String {
    let mut out = format!("sync {} -> {}", plan.from_version, plan.to_version);
    if plan.dry_run {
        out.push_str(" (dry run)");
    }
    out.push('\n');
    for (e, t) in &plan.mapping.mapped {
        let modules: Vec<String> = t.modules.iter().map(u8::to_string).collect();
        out.push_str(&format!(
            "entry [{} {}] {} -> modules {} {}\n",
            e.version,
            e.section,
            e.text,
            modules.join(","),
            t.context_files.join(",")
        ));
    }
    for e in &plan.mapping.unmapped {
        out.push_str(&format!("unmapped [{} {}] {}\n", e.version, e.section, e.text));
    }
    for i in &plan.ignored {
        out.push_str(&format!("ignored {}: {}\n", i.name, i.reason));
    }
    for f in &plan.files {
        out.push_str(&format!("{:<9} {}", f.outcome.as_str(), f.rel.display()));
        if let Some(d) = &f.detail {
            out.push_str(&format!(" ({d})"));
        }
        out.push('\n');
    }
    out.push_str(&format!(
        "{} updated, {} reverted, {} unchanged\n",
        plan.count(Outcome::Updated),
        plan.count(Outcome::Reverted),
        plan.count(Outcome::Unchanged)
    ));
    out
}

fn sync(a: SyncArgs) -> Result<u8> {
    let scope = match &a.scope {
        Some(p) => SyncScope::Path(p.parse()?),
        None => SyncScope::All,
    };
    let changelog = fs::read_to_string(&a.changelog).with_context(|| format!("reading {}", a.changelog.display()))?;
    let fmap = FeatureMap::load(&a.feature_map)?;
    let payloads = load_payloads(&a.payloads)?;
    let opts = SyncOptions {
        from: a.from.as_deref().map(str::parse).transpose()?,
        to: a.to.as_deref().map(str::parse).transpose()?,
        dry_run: a.dry_run,
    };
    let plan = sync_root(&a.root, &changelog, &fmap, &payloads, scope, &opts)?;
    match a.format {
        Format::Text => print!("{}", render_sync_text(&plan)),
        Format::Machine => print!("{}", plan.render_machine()),
    }
    Ok(if plan.any_reverted() { NEGATIVE } else { OK })
}
