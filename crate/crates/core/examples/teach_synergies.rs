//! Postural synergies from synthetic demonstrations: PCA around the nominal
//! posture, explained variance, and the reconstruction error per component count.

use kinsyn::demos::{benchmark_dataset, DatasetSpec};
use kinsyn::hand::HandModel;
use kinsyn::synergy::{build_config_matrix, extract_synergies};

fn main() -> kinsyn::Result<()> {
    let hand = HandModel::default_model();
    let q0 = hand.nominal();
    let data = benchmark_dataset(&q0, &DatasetSpec::default(), 0);
    let samples = data.train_samples();
    let c = build_config_matrix(&samples, &q0)?;
    let full = extract_synergies(&c, 6)?;
    println!("{} samples from {} demonstrations", samples.len(), data.train.len());
    println!("component  singular value  explained");
    for (i, (s, r)) in full.singular_values.iter().zip(&full.explained_variance_ratio).enumerate() {
        println!("{:>9}  {s:>14.4}  {r:>9.4}", i + 1);
    }
    for s in 1..=6 {
        let sub = full.truncated(s)?;
        let err: f64 = samples
            .iter()
            .map(|q| {
                let e = sub.project(q).unwrap();
                (sub.reconstruct(&e, &q0).unwrap().angles - q.angles).norm_squared()
            })
            .sum::<f64>()
            / samples.len() as f64;
        println!("S = {s}: mean squared reconstruction error {err:.3e}");
    }
    Ok(())
}
