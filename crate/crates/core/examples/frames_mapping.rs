//! Camera detections to the robot base, and grasp end-points from a virtual
//! copy of each object placed in the hand.

use kinsyn::demos::default_subspace;
use kinsyn::frames::{virtual_object_endpoints, FramesCalibration, MappingConfig, VirtualObjectOptions};
use kinsyn::grasp::default_compliance;
use kinsyn::hand::HandModel;
use kinsyn::perception::scene::{default_camera, find_class};
use kinsyn::pose::Pose;
use kinsyn::synergy::SynergyCoeffs;
use nalgebra::Vector3;

fn main() -> kinsyn::Result<()> {
    let frames = FramesCalibration::with_camera(&default_camera());
    let in_camera = Pose::from_translation(Vector3::new(0.02, 0.1, 0.6));
    let in_base = frames.to_base(&in_camera)?;
    println!("object at {:?} in the base frame", in_base.translation.as_slice());

    let hand = HandModel::default_model();
    let sub = default_subspace(&hand)?;
    let start = SynergyCoeffs::from_slice(&kinsyn::demos::PRE_SHAPE);
    let cfg = MappingConfig::at_posture(&hand, &sub.posture(&start)?, default_compliance(), sub.clone())?;
    for label in ["sphere_yellow", "sphere_white", "sphere_red", "cylinder_blue", "box_green"] {
        let shape = find_class(label)?.shape;
        match virtual_object_endpoints(&hand, &cfg, &shape, &in_base, &start, &VirtualObjectOptions::default()) {
            Ok(points) => println!("{label:14} end-point e = {:.4?}", points[0].mean.as_slice()),
            Err(e) => println!("{label:14} {e}"),
        }
    }
    Ok(())
}
