//! Input generators shared by the benchmarks.

use curricula_core::PathId;

/// A JSONL transcript of `lines` alternating assistant and learner records,
/// ending with a learner message.
pub fn transcript(lines: usize) -> String {
    let mut out = String::with_capacity(lines * 120);
    for i in 0..lines {
        let from_learner = (lines - i) % 2 == 1;
        let record = if from_learner {
            serde_json::json!({ "role": "user", "content": format!("why does step {i} need a hook?") })
        } else {
            serde_json::json!({ "role": "assistant", "content": "x".repeat(80 + i % 600) })
        };
        out.push_str(&record.to_string());
        out.push('\n');
    }
    out
}

/// A well-formed module file with `steps` steps, each closing on a STOP
/// block.
pub fn module_text(number: u8, steps: u32) -> String {
    let mut t = format!(
        "# Module {number}: Bench\n\n**Persona -- Peer:** terse\n\n**CC features:** hooks, skills\n\n"
    );
    for k in 1..=steps {
        t.push_str(&format!(
            "## {number}.{k} Step {k}\n\nDo the thing.\n\n```sh\n## not a heading\n```\n\n**STOP -- check in**\n\n"
        ));
    }
    t.push_str("## Checkpoint\n\n");
    for k in 1..=steps {
        t.push_str(&format!("- {number}.{k}\n"));
    }
    t
}

pub const BENCH_PATH: PathId = PathId::Canvas;
