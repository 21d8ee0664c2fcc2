//! Tabletop scene with three catalog objects: plane removal, clustering and
//! recognition, with poses reported in the robot base frame.

use kinsyn::frames::FramesCalibration;
use kinsyn::perception::scene::{find_class, resting_pose, SceneObject};
use kinsyn::perception::{detect_objects, format_detections, generate_scene, reference_svm, DetectionParams, SceneSpec};

fn main() -> kinsyn::Result<()> {
    let placed = [("sphere_white", -0.15, 0.05), ("cylinder_blue", 0.0, -0.08), ("box_red", 0.15, 0.06)];
    let objects = placed
        .iter()
        .map(|&(label, x, y)| {
            let class = find_class(label)?;
            Ok(SceneObject {
                label: class.label,
                shape: class.shape,
                pose: (&resting_pose(&class.shape, x, y, 0.5, 0)).into(),
                color: class.color,
            })
        })
        .collect::<kinsyn::Result<Vec<_>>>()?;
    let spec = SceneSpec::new(objects);
    let scene = generate_scene(&spec, 0)?;
    println!("{} points", scene.cloud.len());

    let params = DetectionParams::default();
    let svm = reference_svm(&params, 0)?;
    let detections = detect_objects(&scene.cloud, &svm, &params)?;
    let frames = FramesCalibration::with_camera(&spec.camera.to_pose()?);
    print!("{}", format_detections(&detections, &frames.camera_to_base()?)?);
    Ok(())
}
