//! Probabilistic synergy trajectories: GMM/GMR reference, KMP adaptation and
//! prioritized fusion of task distributions.

pub mod gmm;
pub mod kmp;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hand::JointConfig;
use crate::linalg;
use crate::synergy::SynergySubspace;

pub use gmm::{fit_gmm, fit_gmm_with, gmr_condition, GmmFit, GmmModel, GmmOptions};
pub use kmp::{
    build_reference, insert_via_point, kmp_predict, uniform_grid, KmpModel, KmpParams, KmpPredictor,
    ReferencePoint, SqExpKernel,
};

/// Time-indexed synergy coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SynergyTrajectory {
    samples: Vec<(f64, DVector<f64>)>,
}

impl SynergyTrajectory {
    pub fn new(samples: Vec<(f64, DVector<f64>)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid("a trajectory needs at least two samples"));
        }
        let dim = samples[0].1.len();
        if dim == 0 || samples.iter().any(|(_, e)| e.len() != dim) {
            return Err(Error::invalid("trajectory samples have inconsistent dimensions"));
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::invalid("trajectory times must be strictly increasing"));
        }
        if samples
            .iter()
            .any(|(t, e)| !t.is_finite() || e.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::invalid("trajectory contains non-finite values"));
        }
        Ok(Self { samples })
    }

    /// Projects a time-stamped joint recording onto `sub`.
    pub fn from_joint_recording(sub: &SynergySubspace, recording: &[JointConfig]) -> Result<Self> {
        let samples = recording
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let t = q.timestamp.unwrap_or(i as f64);
                Ok((t, sub.project(q)?.e))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples)
    }

    pub fn samples(&self) -> &[(f64, DVector<f64>)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].1.len()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|(t, _)| *t).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|(t, e)| std::iter::once(*t).chain(e.iter().copied()).collect())
            .collect()
    }

    /// Builds from `t,e1..eS` rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|r| {
                    if r.len() < 2 {
                        Err(Error::invalid("trajectory row needs a time and coefficients"))
                    } else {
                        Ok((r[0], DVector::from_column_slice(&r[1..])))
                    }
                })
                .collect::<Result<Vec<_>>>()?,
        )
    }
}

/// Splits a CSV-style table into trajectories at every time reset.
pub fn split_at_time_resets(rows: &[Vec<f64>]) -> Result<Vec<SynergyTrajectory>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=rows.len() {
        if i == rows.len() || rows[i][0] <= rows[i - 1][0] {
            out.push(SynergyTrajectory::from_rows(&rows[start..i])?);
            start = i;
        }
    }
    Ok(out)
}

/// A Gaussian with a task priority in `(0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrioritizedGaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub priority: f64,
}

/// Product of Gaussians with covariances scaled by `1/priority`:
/// `Σ = (Σₘ Υₘ Σₘ⁻¹)⁻¹`, `μ = Σ Σₘ Υₘ Σₘ⁻¹ μₘ`.
pub fn fuse_priorities(components: &[PrioritizedGaussian]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let first = components
        .first()
        .ok_or_else(|| Error::invalid("no distributions to fuse"))?;
    let s = first.mean.len();
    let mut precision = DMatrix::zeros(s, s);
    let mut info = DVector::zeros(s);
    for c in components {
        if c.mean.len() != s || c.cov.nrows() != s {
            return Err(Error::invalid("fused distributions have different dimensions"));
        }
        if !(c.priority > 0.0 && c.priority <= 1.0) {
            return Err(Error::invalid(format!("priority {} outside (0, 1]", c.priority)));
        }
        let chol = linalg::symmetrize(&c.cov)
            .cholesky()
            .ok_or_else(|| Error::invalid("fused covariance is not positive definite"))?;
        let p = chol.inverse() * c.priority;
        info += &p * &c.mean;
        precision += p;
    }
    let chol = linalg::symmetrize(&precision)
        .cholesky()
        .ok_or_else(|| Error::Numeric("summed precision is singular".into()))?;
    let cov = linalg::symmetrize(&chol.inverse());
    // A mean shared by every term is a fixed point; skip the round-off of the solve.
    let mean = if components.iter().all(|c| c.mean == first.mean) {
        first.mean.clone()
    } else {
        chol.solve(&info)
    };
    Ok((mean, cov))
}
