//! Grasp matrix, internal forces, and the closing simulation for the bundled
//! grasp scenarios.

use std::path::Path;

use kinsyn::demos::default_subspace;
use kinsyn::grasp::{build_grasp_matrix, internal_force_basis, GraspScenario};
use kinsyn::hand::HandModel;

fn main() -> kinsyn::Result<()> {
    let hand = HandModel::default_model();
    let sub = default_subspace(&hand)?;
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/tasks");
    for name in ["bulb", "lemon", "spray"] {
        let scenario = GraspScenario::load(dir.join(format!("{name}.grasp.v1.json")))?;
        let out = scenario.run(&hand, &sub)?;
        let contacts = out.contacts.as_ref().map_or(0, |c| c.len());
        print!("{name:6} {contacts} contacts, {} ticks, force {:.3} N", out.trace.len() - 1, out.final_force());
        if let Some(set) = &out.contacts {
            let g = build_grasp_matrix(set)?;
            let xi = internal_force_basis(&g.g);
            print!(", {} internal force directions, |G xi| = {:.1e}", xi.ncols(), (&g.g * &xi).amax());
        }
        println!(" (target {:.2} N)", scenario.target_force.unwrap_or(f64::NAN));
    }
    Ok(())
}
