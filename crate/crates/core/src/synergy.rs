//! Postural synergies: configuration matrix, PCA subspace, and the maps between
//! joint space and synergy coefficients.

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hand::{JointConfig, JOINT_COUNT};
use crate::linalg;

pub const SYNERGY_SCHEMA: &str = "synergy.v1";
pub const DEFAULT_COMPONENTS: usize = 2;

/// Offset-shifted hand configurations, one row per recorded posture.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigurationMatrix {
    pub rows: DMatrix<f64>,
    /// Posture subtracted from every row.
    pub offset: JointConfig,
    pub demo_ids: Vec<String>,
}

impl ConfigurationMatrix {
    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }
}

/// Rows are `demos[k] - q0`.
pub fn build_config_matrix(demos: &[JointConfig], q0: &JointConfig) -> Result<ConfigurationMatrix> {
    build_with_ids(demos, q0, None)
}

pub fn build_with_ids(
    demos: &[JointConfig],
    q0: &JointConfig,
    ids: Option<&[String]>,
) -> Result<ConfigurationMatrix> {
    if demos.is_empty() {
        return Err(Error::EmptyInput("no demonstrations".into()));
    }
    q0.validate()?;
    if let Some(ids) = ids {
        if ids.len() != demos.len() {
            return Err(Error::invalid("demo id count does not match demonstrations"));
        }
    }
    let mut rows = DMatrix::zeros(demos.len(), JOINT_COUNT);
    for (k, d) in demos.iter().enumerate() {
        d.validate()?;
        let shifted = d.angles - q0.angles;
        rows.row_mut(k).copy_from(&shifted.transpose());
    }
    let demo_ids = match ids {
        Some(ids) => ids.to_vec(),
        None => (0..demos.len()).map(|k| format!("demo{k}")).collect(),
    };
    Ok(ConfigurationMatrix {
        rows,
        offset: *q0,
        demo_ids,
    })
}

/// Variant that centers on the sample mean instead of the nominal posture.
pub fn build_mean_centered(demos: &[JointConfig]) -> Result<ConfigurationMatrix> {
    if demos.is_empty() {
        return Err(Error::EmptyInput("no demonstrations".into()));
    }
    let mean = demos.iter().fold(Vector6::zeros(), |acc, d| acc + d.angles) / demos.len() as f64;
    build_config_matrix(demos, &JointConfig::new(mean))
}

/// Synergy basis `E` (6 x S, orthonormal columns) and the posture it is centered on.
#[derive(Clone, Debug, PartialEq)]
pub struct SynergySubspace {
    pub basis: DMatrix<f64>,
    pub q0: JointConfig,
    pub singular_values: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

/// Phase label attached to a coefficient vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Grasp,
    Manipulation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynergyCoeffs {
    pub e: DVector<f64>,
    pub phase: Option<Phase>,
}

impl SynergyCoeffs {
    pub fn new(e: DVector<f64>) -> Self {
        Self { e, phase: None }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        Self::new(DVector::from_column_slice(values))
    }

    pub fn zeros(s: usize) -> Self {
        Self::new(DVector::zeros(s))
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = Some(phase);
        self
    }

    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }
}

/// Top-`s` principal directions of `c`, from the eigendecomposition of `CᵀC`.
pub fn extract_synergies(c: &ConfigurationMatrix, s: usize) -> Result<SynergySubspace> {
    if !(1..=JOINT_COUNT).contains(&s) {
        return Err(Error::invalid(format!(
            "component count must be in 1..={JOINT_COUNT}, got {s}"
        )));
    }
    linalg::check_finite(c.rows.iter().copied(), "configuration matrix")?;
    let gram = c.rows.transpose() * &c.rows;
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..JOINT_COUNT).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigvals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let top = eigvals[0];
    let cutoff = top * 1e-20 * JOINT_COUNT as f64;
    let rank = if top <= 0.0 {
        0
    } else {
        eigvals.iter().filter(|&&l| l > cutoff).count()
    };
    if rank < s {
        return Err(Error::DegenerateData(format!(
            "configuration matrix has rank {rank}, fewer than the {s} requested components"
        )));
    }
    let total: f64 = eigvals.iter().sum();
    let cols: Vec<DVector<f64>> = order[..s]
        .iter()
        .map(|&i| {
            let mut v: DVector<f64> = eig.eigenvectors.column(i).into_owned();
            v.normalize_mut();
            linalg::sign_normalize(&mut v);
            v
        })
        .collect();
    Ok(SynergySubspace {
        basis: DMatrix::from_columns(&cols),
        q0: c.offset,
        singular_values: eigvals[..s].iter().map(|l| l.sqrt()).collect(),
        explained_variance_ratio: eigvals[..s].iter().map(|l| l / total).collect(),
    })
}

impl SynergySubspace {
    pub fn components(&self) -> usize {
        self.basis.ncols()
    }

    /// Coefficients of `theta`: `Eᵀ(θ − q0)`; for orthonormal `E` this is the pseudo-inverse.
    pub fn project(&self, theta: &JointConfig) -> Result<SynergyCoeffs> {
        theta.validate()?;
        let d = DVector::from_column_slice((theta.angles - self.q0.angles).as_slice());
        Ok(SynergyCoeffs::new(self.basis.transpose() * d))
    }

    /// Joint configuration `E e + θ0`.
    pub fn reconstruct(&self, e: &SynergyCoeffs, theta0: &JointConfig) -> Result<JointConfig> {
        if e.len() != self.components() {
            return Err(Error::invalid(format!(
                "expected {} synergy coefficients, got {}",
                self.components(),
                e.len()
            )));
        }
        linalg::check_finite(e.e.iter().copied(), "synergy coefficients")?;
        let dq = &self.basis * &e.e;
        let mut out = *theta0;
        for i in 0..JOINT_COUNT {
            out.angles[i] += dq[i];
        }
        Ok(out)
    }

    /// Reconstruction around the subspace's own `q0`.
    pub fn posture(&self, e: &SynergyCoeffs) -> Result<JointConfig> {
        self.reconstruct(e, &self.q0)
    }

    /// Pseudo-inverse of the basis (`S x 6`).
    pub fn pinv(&self) -> DMatrix<f64> {
        linalg::pinv(&self.basis)
    }

    pub fn truncated(&self, s: usize) -> Result<SynergySubspace> {
        if s == 0 || s > self.components() {
            return Err(Error::invalid(format!("cannot truncate to {s} components")));
        }
        Ok(SynergySubspace {
            basis: self.basis.columns(0, s).into_owned(),
            q0: self.q0,
            singular_values: self.singular_values[..s].to_vec(),
            explained_variance_ratio: self.explained_variance_ratio[..s].to_vec(),
        })
    }

    pub fn to_file(&self) -> SynergyFile {
        SynergyFile {
            schema: SYNERGY_SCHEMA.to_string(),
            components: self.components(),
            basis: (0..JOINT_COUNT)
                .map(|r| self.basis.row(r).iter().copied().collect())
                .collect(),
            q0: self.q0.angles.iter().copied().collect(),
            singular_values: self.singular_values.clone(),
            explained_variance_ratio: self.explained_variance_ratio.clone(),
        }
    }

    pub fn from_file(f: &SynergyFile) -> Result<Self> {
        if f.schema != SYNERGY_SCHEMA {
            return Err(Error::Format(format!(
                "expected schema {SYNERGY_SCHEMA}, found {}",
                f.schema
            )));
        }
        if f.basis.len() != JOINT_COUNT || f.basis.iter().any(|r| r.len() != f.components) {
            return Err(Error::Format("basis must be 6 rows of `components` entries".into()));
        }
        let flat: Vec<f64> = f.basis.iter().flatten().copied().collect();
        let basis = DMatrix::from_row_slice(JOINT_COUNT, f.components, &flat);
        Ok(Self {
            basis,
            q0: JointConfig::from_slice(&f.q0)?,
            singular_values: f.singular_values.clone(),
            explained_variance_ratio: f.explained_variance_ratio.clone(),
        })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        crate::io::write_json(path, &self.to_file())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_file(&crate::io::read_json(path)?)
    }
}

/// On-disk form of a [`SynergySubspace`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynergyFile {
    pub schema: String,
    pub components: usize,
    /// Row-major 6 x S basis.
    pub basis: Vec<Vec<f64>>,
    pub q0: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}
