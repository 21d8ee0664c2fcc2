//! Replays the bundled bulb, lemon and spray tasks end to end.
//!
//!     cargo run --release --example replay_tasks [-- OUT_DIR]

use std::path::{Path, PathBuf};

use kinsyn::evaluation::task::{replay_task, ReplayContext, TaskScript};
use kinsyn::hand::HandModel;
use kinsyn::perception::{reference_svm, DetectionParams};

fn main() -> kinsyn::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from);
    let svm = reference_svm(&DetectionParams::default(), 0)?;
    let ctx = ReplayContext::new(HandModel::default_model(), svm)?;
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/tasks");
    for name in ["bulb", "lemon", "spray"] {
        let script = TaskScript::load(dir.join(format!("{name}.task.v1.json")))?;
        let trace = replay_task(&script, &script.scene_spec()?, &ctx, 0)?;
        let s = &trace.summary;
        println!(
            "{name:6} force {:.3} -> {:.3} N (target {:.2} -> {:.2}), final e {:.3?}, success {}",
            s.grasp_force, s.final_force, s.force_range[0], s.force_range[1], s.final_coefficients, s.success
        );
        if let Some(out) = &out {
            trace.write(out.join(name))?;
        }
    }
    Ok(())
}
