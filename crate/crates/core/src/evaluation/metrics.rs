//! Reproduction metrics over hand configurations.
//!
//! * NSE: mean over samples of `‖θg − θa‖² / ‖θg − q0‖²`, each term clipped to
//!   `[0, 1]`. Samples with `θg = q0` are skipped.
//! * PA: fraction of joint values (over all samples) within `tol` of ground truth.

use crate::error::{Error, Result};
use crate::hand::JointConfig;

pub const DEFAULT_PA_TOLERANCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NseResult {
    pub value: f64,
    /// Samples left out because the ground truth equals `q0`.
    pub skipped: usize,
}

fn check_lengths(ground: &[JointConfig], achieved: &[JointConfig]) -> Result<()> {
    if ground.len() != achieved.len() {
        return Err(Error::invalid(format!(
            "ground truth has {} samples, achieved has {}",
            ground.len(),
            achieved.len()
        )));
    }
    if ground.is_empty() {
        return Err(Error::invalid("metrics need at least one sample"));
    }
    Ok(())
}

pub fn nse_detailed(ground: &[JointConfig], achieved: &[JointConfig], q0: &JointConfig) -> Result<NseResult> {
    check_lengths(ground, achieved)?;
    let mut sum = 0.0;
    let mut used = 0usize;
    for (g, a) in ground.iter().zip(achieved) {
        let den = (g.angles - q0.angles).norm_squared();
        if den == 0.0 {
            continue;
        }
        sum += ((g.angles - a.angles).norm_squared() / den).clamp(0.0, 1.0);
        used += 1;
    }
    if used == 0 {
        return Err(Error::invalid("every ground-truth sample equals the nominal posture"));
    }
    Ok(NseResult {
        value: sum / used as f64,
        skipped: ground.len() - used,
    })
}

pub fn nse(ground: &[JointConfig], achieved: &[JointConfig], q0: &JointConfig) -> Result<f64> {
    nse_detailed(ground, achieved, q0).map(|r| r.value)
}

pub fn primitive_accuracy(ground: &[JointConfig], achieved: &[JointConfig], tol_rad: f64) -> Result<f64> {
    check_lengths(ground, achieved)?;
    if !(tol_rad > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol_rad}")));
    }
    let mut hits = 0usize;
    let mut total = 0usize;
    for (g, a) in ground.iter().zip(achieved) {
        for j in 0..g.angles.len() {
            total += 1;
            if (g.angles[j] - a.angles[j]).abs() <= tol_rad {
                hits += 1;
            }
        }
    }
    Ok(hits as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector6;

    fn jc(v: [f64; 6]) -> JointConfig {
        JointConfig::new(Vector6::from(v))
    }

    #[test]
    fn identity_and_anchor() {
        let q0 = jc([0.0; 6]);
        let g = vec![jc([0.1, 0.2, 0.0, 0.0, 0.0, 0.0]), jc([0.3, 0.0, 0.1, 0.0, 0.0, 0.0])];
        assert_eq!(nse(&g, &g, &q0).unwrap(), 0.0);
        assert_eq!(nse(&g, &[q0, q0], &q0).unwrap(), 1.0);
        assert_eq!(primitive_accuracy(&g, &g, 0.05).unwrap(), 1.0);
    }

    #[test]
    fn hand_computed_half() {
        let q0 = jc([0.0; 6]);
        let g = vec![jc([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]), jc([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])];
        let a = vec![jc([0.5, 0.0, 0.0, 0.0, 0.0, 0.0]), jc([1.0, 0.75f64.sqrt(), 0.0, 0.0, 0.0, 0.0])];
        assert!((nse(&g, &a, &q0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn half_miss_pa() {
        let g = vec![jc([0.0; 6]); 2];
        let a = vec![jc([0.5, 0.5, 0.5, 0.0, 0.0, 0.0]), jc([0.0, 0.0, 0.0, 0.5, 0.5, 0.5])];
        assert_eq!(primitive_accuracy(&g, &a, 0.05).unwrap(), 0.5);
    }

    #[test]
    fn length_mismatch() {
        let g = vec![jc([0.1; 6])];
        assert!(matches!(nse(&g, &[], &jc([0.0; 6])), Err(Error::InvalidInput(_))));
        assert!(matches!(primitive_accuracy(&g, &[], 0.1), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn skipped_samples_flagged() {
        let q0 = jc([0.0; 6]);
        let g = vec![q0, jc([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])];
        let r = nse_detailed(&g, &g, &q0).unwrap();
        assert_eq!(r.skipped, 1);
    }
}
