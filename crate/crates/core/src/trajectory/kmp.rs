//! Kernelized movement primitive over a GMR reference database.
//!
//! For a query time `t*` with kernel row `k*` against the reference times:
//!
//! ```text
//! mean = k* (K + λ Σ)^-1 μ
//! cov  = (N / λc) (k(t*, t*) − k* (K + λc Σ)^-1 k*ᵀ)
//! ```
//!
//! `K` is the block kernel matrix `k(tᵢ, tⱼ) I_S`, `Σ` the block diagonal of the
//! reference covariances and `N` the number of reference points. With identity
//! reference covariances the mean reduces to plain kernel ridge regression.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::gmm::{gmr_condition, matrix_to_rows, rows_to_matrix, GmmModel};
use crate::error::{Error, Result};
use crate::linalg;

pub const KMP_SCHEMA: &str = "kmp.v1";

#[derive(Clone, Debug, PartialEq)]
pub struct ReferencePoint {
    pub t: f64,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Squared-exponential kernel `σ² exp(−(t−t')² / (2ℓ²))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqExpKernel {
    pub length_scale: f64,
    pub amplitude: f64,
}

impl SqExpKernel {
    pub fn eval(&self, a: f64, b: f64) -> f64 {
        let d = a - b;
        self.amplitude * (-d * d / (2.0 * self.length_scale * self.length_scale)).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KmpParams {
    /// `None` selects 0.1 of the reference time span.
    pub length_scale: Option<f64>,
    pub amplitude: f64,
    pub lambda: f64,
    pub lambda_cov: f64,
}

impl Default for KmpParams {
    fn default() -> Self {
        Self {
            length_scale: None,
            amplitude: 1.0,
            lambda: 1.0,
            lambda_cov: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KmpModel {
    pub reference: Vec<ReferencePoint>,
    pub kernel: SqExpKernel,
    pub lambda: f64,
    pub lambda_cov: f64,
}

/// GMR queries at `times`.
pub fn build_reference(gmm: &GmmModel, times: &[f64]) -> Result<Vec<ReferencePoint>> {
    if times.is_empty() {
        return Err(Error::invalid("reference needs at least one time"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("reference times must be strictly increasing"));
    }
    times
        .iter()
        .map(|&t| {
            let (mean, cov) = gmr_condition(gmm, t)?;
            Ok(ReferencePoint { t, mean, cov })
        })
        .collect()
}

/// `n` evenly spaced times on `[start, end]`.
pub fn uniform_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    (0..n)
        .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
        .collect()
}

impl KmpModel {
    pub fn new(reference: Vec<ReferencePoint>, params: KmpParams) -> Result<Self> {
        let span = match (reference.first(), reference.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => return Err(Error::invalid("reference database is empty")),
        };
        let length_scale = params
            .length_scale
            .unwrap_or(if span > 0.0 { 0.1 * span } else { 1.0 });
        let model = Self {
            reference,
            kernel: SqExpKernel {
                length_scale,
                amplitude: params.amplitude,
            },
            lambda: params.lambda,
            lambda_cov: params.lambda_cov,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn from_gmm(gmm: &GmmModel, times: &[f64], params: KmpParams) -> Result<Self> {
        Self::new(build_reference(gmm, times)?, params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reference.is_empty() {
            return Err(Error::invalid("reference database is empty"));
        }
        let s = self.dim();
        for p in &self.reference {
            if !p.t.is_finite() || p.mean.len() != s || p.cov.nrows() != s || p.cov.ncols() != s {
                return Err(Error::invalid("reference point has inconsistent dimensions"));
            }
        }
        if self.reference.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::invalid("reference times must be strictly increasing"));
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("lambda_cov", self.lambda_cov),
            ("length scale", self.kernel.length_scale),
            ("amplitude", self.kernel.amplitude),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.reference[0].mean.len()
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.reference.iter().map(|p| p.t).collect()
    }

    /// Half the minimum spacing between reference times.
    pub fn merge_tolerance(&self) -> f64 {
        self.reference
            .windows(2)
            .map(|w| w[1].t - w[0].t)
            .fold(f64::INFINITY, f64::min)
            .min(f64::MAX)
            * 0.5
    }

    /// Block kernel matrix `K` (NS x NS).
    pub fn kernel_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let s = self.dim();
        let mut k = DMatrix::zeros(n * s, n * s);
        for i in 0..n {
            for j in 0..n {
                let v = self.kernel.eval(self.reference[i].t, self.reference[j].t);
                for d in 0..s {
                    k[(i * s + d, j * s + d)] = v;
                }
            }
        }
        k
    }

    /// Block diagonal of the reference covariances.
    pub fn covariance_blocks(&self) -> DMatrix<f64> {
        let n = self.len();
        let s = self.dim();
        let mut m = DMatrix::zeros(n * s, n * s);
        for (i, p) in self.reference.iter().enumerate() {
            m.view_mut((i * s, i * s), (s, s)).copy_from(&p.cov);
        }
        m
    }

    pub fn stacked_means(&self) -> DVector<f64> {
        let s = self.dim();
        let mut v = DVector::zeros(self.len() * s);
        for (i, p) in self.reference.iter().enumerate() {
            v.rows_mut(i * s, s).copy_from(&p.mean);
        }
        v
    }

    /// Factorizes both regularized systems once for repeated queries.
    pub fn predictor(&self) -> Result<KmpPredictor<'_>> {
        let k = self.kernel_matrix();
        let sigma = self.covariance_blocks();
        let mean_sys = factor(&(&k + &sigma * self.lambda), self.lambda, "mean")?;
        let cov_sys = factor(&(&k + &sigma * self.lambda_cov), self.lambda_cov, "covariance")?;
        let alpha = mean_sys.solve(&self.stacked_means());
        Ok(KmpPredictor {
            model: self,
            alpha,
            cov_sys,
        })
    }

    pub fn to_file(&self) -> KmpFile {
        KmpFile {
            schema: KMP_SCHEMA.into(),
            length_scale: self.kernel.length_scale,
            amplitude: self.kernel.amplitude,
            lambda: self.lambda,
            lambda_cov: self.lambda_cov,
            reference: self
                .reference
                .iter()
                .map(|p| KmpFilePoint {
                    t: p.t,
                    mean: p.mean.iter().copied().collect(),
                    cov: matrix_to_rows(&p.cov),
                })
                .collect(),
        }
    }

    pub fn from_file(f: &KmpFile) -> Result<Self> {
        if f.schema != KMP_SCHEMA {
            return Err(Error::Format(format!("expected schema {KMP_SCHEMA}, found {}", f.schema)));
        }
        let reference = f
            .reference
            .iter()
            .map(|p| {
                Ok(ReferencePoint {
                    t: p.t,
                    mean: DVector::from_column_slice(&p.mean),
                    cov: rows_to_matrix(&p.cov)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let model = Self {
            reference,
            kernel: SqExpKernel {
                length_scale: f.length_scale,
                amplitude: f.amplitude,
            },
            lambda: f.lambda,
            lambda_cov: f.lambda_cov,
        };
        model.validate()?;
        Ok(model)
    }
}

fn factor(m: &DMatrix<f64>, lambda: f64, what: &str) -> Result<Cholesky<f64, Dyn>> {
    m.clone().cholesky().ok_or_else(|| {
        let min_diag = m.diagonal().min();
        Error::Numeric(format!(
            "regularized kernel system for the {what} ({}x{}, lambda {lambda}, min diagonal {min_diag:e}) is not positive definite",
            m.nrows(),
            m.ncols()
        ))
    })
}

pub struct KmpPredictor<'a> {
    model: &'a KmpModel,
    alpha: DVector<f64>,
    cov_sys: Cholesky<f64, Dyn>,
}

impl KmpPredictor<'_> {
    pub fn predict(&self, t_star: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
        if !t_star.is_finite() {
            return Err(Error::invalid("query time is not finite"));
        }
        let m = self.model;
        let s = m.dim();
        let n = m.len();
        let kvals: Vec<f64> = m.reference.iter().map(|p| m.kernel.eval(t_star, p.t)).collect();
        let mut mean = DVector::zeros(s);
        let mut kstar = DMatrix::zeros(n * s, s);
        for (i, &kv) in kvals.iter().enumerate() {
            mean += self.alpha.rows(i * s, s) * kv;
            for d in 0..s {
                kstar[(i * s + d, d)] = kv;
            }
        }
        let solved = self.cov_sys.solve(&kstar);
        let quad = kstar.transpose() * solved;
        let kss = m.kernel.eval(t_star, t_star);
        let cov = (DMatrix::identity(s, s) * kss - quad) * (n as f64 / m.lambda_cov);
        Ok((mean, linalg::floor_eigenvalues(&cov, 0.0)))
    }

    pub fn predict_many(&self, times: &[f64]) -> Result<Vec<(f64, DVector<f64>, DMatrix<f64>)>> {
        times
            .iter()
            .map(|&t| self.predict(t).map(|(m, c)| (t, m, c)))
            .collect()
    }
}

pub fn kmp_predict(kmp: &KmpModel, t_star: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
    kmp.predictor()?.predict(t_star)
}

/// Adds a desired point `(t*, mean, cov)`. A reference point closer than the
/// merge tolerance is replaced instead.
pub fn insert_via_point(
    kmp: &KmpModel,
    t_star: f64,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
) -> Result<KmpModel> {
    if !t_star.is_finite() || mean.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("via-point is not finite"));
    }
    if mean.len() != kmp.dim() {
        return Err(Error::invalid(format!(
            "via-point has {} coefficients, model has {}",
            mean.len(),
            kmp.dim()
        )));
    }
    if cov.nrows() != kmp.dim() || !linalg::is_spd(cov) {
        return Err(Error::invalid("via-point covariance must be symmetric positive definite"));
    }
    let point = ReferencePoint {
        t: t_star,
        mean: mean.clone(),
        cov: linalg::symmetrize(cov),
    };
    let tol = kmp.merge_tolerance();
    let mut out = kmp.clone();
    let nearest = out
        .reference
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.t - t_star).abs().total_cmp(&(b.1.t - t_star).abs()))
        .map(|(i, p)| (i, (p.t - t_star).abs()));
    match nearest {
        Some((i, d)) if d < tol || d == 0.0 => {
            // the via-point replaces its neighbor outright, time included,
            // so a query at `t_star` sees it exactly
            out.reference[i] = point;
        }
        _ => {
            let pos = out.reference.partition_point(|p| p.t < t_star);
            out.reference.insert(pos, point);
        }
    }
    out.validate()?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmpFile {
    pub schema: String,
    pub length_scale: f64,
    pub amplitude: f64,
    pub lambda: f64,
    pub lambda_cov: f64,
    pub reference: Vec<KmpFilePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmpFilePoint {
    pub t: f64,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}
