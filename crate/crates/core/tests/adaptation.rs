mod common;

use curricula_core::adaptation::{NOTE_MIN_NON_NEUTRAL, STRUGGLE_DIRECTIVE, FLOW_DIRECTIVE};
use curricula_core::{
    apply_boundary, decide_boundary, make_note, shift_level, Category, EffectiveLevel, ExperienceLevel,
    LearnerProfile, Shift, StreakAlert, Tier,
};
use proptest::prelude::*;

fn rank(level: ExperienceLevel) -> i32 {
    ExperienceLevel::ALL.iter().position(|l| *l == level).unwrap() as i32
}

#[test]
fn boundary_grid_matches_inequalities() {
    assert_eq!(common::criteria::threshold_grid(), (2, 2));
}

#[test]
fn empty_module_holds() {
    let d = decide_boundary(&LearnerProfile::new(4));
    assert_eq!(d.direction, Shift::Hold);
    let mut only_neutral = LearnerProfile::new(4);
    for _ in 0..20 {
        only_neutral.record(Category::Neutral, chrono::Utc::now());
    }
    assert_eq!(decide_boundary(&only_neutral).direction, Shift::Hold);
}

proptest! {
    /// Decisions obey the boundary inequalities for arbitrary counts.
    #[test]
    fn decision_respects_thresholds(counts in prop::collection::vec(0u64..30, 6)) {
        let mut p = LearnerProfile::new(2);
        for (c, n) in Category::ALL.into_iter().zip(&counts) {
            p.module_counts.insert(c, *n);
            p.module_quality_sum += u64::from(c.score()) * n;
        }
        let d = decide_boundary(&p);
        match d.direction {
            Shift::Up => prop_assert!(d.module_average >= 3.8 - 1e-12 && d.productive_share > 0.6),
            Shift::Down => prop_assert!(d.module_average <= 2.0 + 1e-12 && d.unproductive_share > 0.5),
            Shift::Hold => {}
        }
    }

    /// One boundary moves the level at most one notch and resets the module.
    #[test]
    fn boundary_moves_at_most_one_notch(cats in prop::collection::vec(0usize..6, 0..40), level in 0usize..3, declared in 0usize..3, module in 1u8..=10) {
        let mut p = LearnerProfile::new(module);
        for i in cats {
            p.record(Category::ALL[i], chrono::Utc::now());
        }
        let level = EffectiveLevel { declared: ExperienceLevel::ALL[declared], current: ExperienceLevel::ALL[level] };
        let out = apply_boundary(&p, level);
        prop_assert!((rank(out.level.current) - rank(level.current)).abs() <= 1);
        prop_assert_eq!(out.level, shift_level(level, out.decision.direction));
        prop_assert_eq!(out.level.declared, level.declared);
        prop_assert_eq!(out.profile.module_total(), 0);
        prop_assert_eq!(out.profile.module_quality_sum, 0);
        prop_assert_eq!(out.profile.module_id, (module + 1).min(10));
        prop_assert_eq!(out.profile.lifetime_counts, p.lifetime_counts);
    }

    /// A note needs five non-neutral interactions, and an alert always
    /// carries its directive verbatim.
    #[test]
    fn note_contract(cats in prop::collection::vec(0usize..6, 0..30)) {
        let mut p = LearnerProfile::default();
        for i in cats {
            p.record(Category::ALL[i], chrono::Utc::now());
        }
        match make_note(&p) {
            None => prop_assert!(p.lifetime_non_neutral() < NOTE_MIN_NON_NEUTRAL),
            Some(note) => {
                prop_assert!(p.lifetime_non_neutral() >= NOTE_MIN_NON_NEUTRAL);
                prop_assert_eq!(note.tier, Tier::for_counts(p.lifetime_productive(), p.lifetime_unproductive()));
                match note.streak_alert {
                    Some(StreakAlert::Struggle) => prop_assert!(note.rendered.contains(STRUGGLE_DIRECTIVE)),
                    Some(StreakAlert::Flow) => prop_assert!(note.rendered.contains(FLOW_DIRECTIVE)),
                    None => {
                        prop_assert!(!note.rendered.contains(STRUGGLE_DIRECTIVE));
                        prop_assert!(!note.rendered.contains(FLOW_DIRECTIVE));
                    }
                }
                prop_assert!(note.dominant_pattern != Category::Neutral && p.lifetime(note.dominant_pattern) > 0);
            }
        }
    }
}

#[test]
fn tier_bands() {
    assert_eq!(Tier::for_counts(7, 3), Tier::Encourage);
    assert_eq!(Tier::for_counts(69, 31), Tier::Redirect);
    assert_eq!(Tier::for_counts(4, 6), Tier::Redirect);
    assert_eq!(Tier::for_counts(39, 61), Tier::Structure);
}

#[test]
fn struggle_burst_alerts_now_and_moves_level_only_at_boundary() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..100 {
        let run = common::run_timescales(dir.path(), seed, Category::AnswerSeeking);
        assert_eq!(run.alert_after_burst, Some(StreakAlert::Struggle), "seed {seed}");
        assert!(run.levels_mid_module.iter().all(|l| *l == run.start), "seed {seed}");
        assert_eq!(run.after_boundary, shift_level(run.start, run.decision), "seed {seed}");
    }
}

#[test]
fn engagement_burst_flows_without_mid_module_level_change() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..100 {
        let run = common::run_timescales(dir.path(), seed, Category::ConceptQuestion);
        assert_eq!(run.alert_after_burst, Some(StreakAlert::Flow), "seed {seed}");
        assert!(run.levels_mid_module.iter().all(|l| *l == run.start), "seed {seed}");
        assert_eq!(run.after_boundary, shift_level(run.start, run.decision), "seed {seed}");
        assert!((rank(run.after_boundary.current) - rank(run.start.current)).abs() <= 1);
    }
}
