//! GMM over projected demonstrations, GMR reference, and KMP adaptation to a
//! new end-point and a via-point.

use kinsyn::demos::{benchmark_dataset, default_subspace, DatasetSpec};
use kinsyn::hand::HandModel;
use kinsyn::trajectory::{fit_gmm, gmr_condition, insert_via_point, uniform_grid, KmpModel, KmpParams, SynergyTrajectory};
use nalgebra::{DMatrix, DVector};

fn main() -> kinsyn::Result<()> {
    let hand = HandModel::default_model();
    let sub = default_subspace(&hand)?;
    let data = benchmark_dataset(&hand.nominal(), &DatasetSpec::default(), 0);
    let trajs = data
        .train
        .iter()
        .map(|d| SynergyTrajectory::from_joint_recording(&sub, &d.samples))
        .collect::<kinsyn::Result<Vec<_>>>()?;
    let gmm = fit_gmm(&trajs, 5, 0)?;
    let times = uniform_grid(0.0, 1.0, 51);
    let kmp = KmpModel::from_gmm(&gmm, &times, KmpParams::default())?;

    let end = DVector::from_vec(vec![0.05, 0.45]);
    let via = DVector::from_vec(vec![-0.2, 0.3]);
    let adapted = insert_via_point(&kmp, 1.0, &end, &(DMatrix::identity(2, 2) * 1e-6))?;
    let adapted = insert_via_point(&adapted, 0.3, &via, &(DMatrix::identity(2, 2) * 1e-4))?;
    let pred = adapted.predictor()?;
    println!("    t   gmr e1   gmr e2   kmp e1   kmp e2");
    for &t in times.iter().step_by(5) {
        let (g, _) = gmr_condition(&gmm, t)?;
        let (m, _) = pred.predict(t)?;
        println!("{t:5.2} {:8.4} {:8.4} {:8.4} {:8.4}", g[0], g[1], m[0], m[1]);
    }
    let (m, _) = pred.predict(1.0)?;
    println!("end-point error {:.2e}", (m - end).amax());
    Ok(())
}
