//! Calibrates the current thresholds of the bundled tasks and writes the
//! task and grasp scenario files.
//!
//!     cargo run --release --example calibrate_tasks [-- OUT_DIR]

use std::path::PathBuf;

use kinsyn::evaluation::task::{calibrate_task, grasp_scenario, task_library, ReplayContext};
use kinsyn::hand::HandModel;
use kinsyn::perception::{reference_svm, DetectionParams};

fn main() -> kinsyn::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets/tasks"));
    let svm = reference_svm(&DetectionParams::default(), 0)?;
    let ctx = ReplayContext::new(HandModel::default_model(), svm)?;
    for mut script in task_library() {
        let scene = script.scene_spec()?;
        let cal = calibrate_task(&script, &scene, &ctx, 0)?;
        script.grasp_threshold = cal.grasp_threshold;
        script.final_threshold = cal.final_threshold;
        script.save(out.join(format!("{}.task.v1.json", script.name)))?;
        let scenario = grasp_scenario(&script, &scene, &ctx, 0, script.force_range[1])?;
        scenario.save(out.join(format!("{}.grasp.v1.json", script.name)))?;
        println!(
            "{:6} grasp threshold {:.6}  final threshold {:.6}  scenario threshold {:.6}",
            script.name, cal.grasp_threshold, cal.final_threshold, scenario.current_threshold
        );
    }
    Ok(())
}
