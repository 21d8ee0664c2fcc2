//! Gaussian mixture over joint `(t, e)` space, fitted by EM, and Gaussian
//! mixture regression on time.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SynergyTrajectory;
use crate::error::{Error, Result};
use crate::linalg;

pub const GMM_SCHEMA: &str = "gmm.v1";
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Debug, PartialEq)]
pub struct GmmModel {
    pub priors: Vec<f64>,
    /// Means over `(t, e1..eS)`.
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
}

#[derive(Clone, Debug)]
pub struct GmmOptions {
    pub components: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Relative log-likelihood change that ends the iteration.
    pub tolerance: f64,
    /// Lower bound on covariance eigenvalues.
    pub covariance_floor: f64,
    pub restarts: usize,
}

impl Default for GmmOptions {
    fn default() -> Self {
        Self {
            components: 5,
            seed: 0,
            max_iterations: 500,
            tolerance: 1e-8,
            covariance_floor: 1e-8,
            restarts: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GmmFit {
    pub model: GmmModel,
    /// Log-likelihood after every E-step of the winning restart.
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
}

impl GmmModel {
    pub fn components(&self) -> usize {
        self.priors.len()
    }

    /// Dimension of the coefficient part (the output of regression).
    pub fn output_dim(&self) -> usize {
        self.means[0].len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.priors.len();
        if n == 0 || self.means.len() != n || self.covariances.len() != n {
            return Err(Error::invalid("mixture component arrays are inconsistent"));
        }
        let d = self.means[0].len();
        if d < 2 {
            return Err(Error::invalid("mixture must cover time plus at least one coefficient"));
        }
        if (self.priors.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("mixture priors do not sum to one"));
        }
        for (m, c) in self.means.iter().zip(&self.covariances) {
            if m.len() != d || c.nrows() != d || !linalg::is_spd(c) {
                return Err(Error::invalid("mixture component is malformed or not SPD"));
            }
        }
        Ok(())
    }

    pub fn log_likelihood(&self, data: &DMatrix<f64>) -> Result<f64> {
        let comps = self.prepared()?;
        Ok((0..data.nrows())
            .map(|i| {
                let x = data.row(i).transpose();
                let logs: Vec<f64> = comps.iter().map(|c| c.log_weighted_pdf(&x)).collect();
                log_sum_exp(&logs)
            })
            .sum())
    }

    fn prepared(&self) -> Result<Vec<PreparedComponent>> {
        self.priors
            .iter()
            .zip(self.means.iter().zip(&self.covariances))
            .map(|(&p, (m, c))| PreparedComponent::new(p, m, c))
            .collect()
    }

    pub fn to_file(&self) -> GmmFile {
        GmmFile {
            schema: GMM_SCHEMA.into(),
            priors: self.priors.clone(),
            means: self.means.iter().map(|m| m.iter().copied().collect()).collect(),
            covariances: self
                .covariances
                .iter()
                .map(|c| (0..c.nrows()).map(|r| c.row(r).iter().copied().collect()).collect())
                .collect(),
        }
    }

    pub fn from_file(f: &GmmFile) -> Result<Self> {
        if f.schema != GMM_SCHEMA {
            return Err(Error::Format(format!("expected schema {GMM_SCHEMA}, found {}", f.schema)));
        }
        let model = GmmModel {
            priors: f.priors.clone(),
            means: f.means.iter().map(|m| DVector::from_column_slice(m)).collect(),
            covariances: f.covariances.iter().map(|rows| rows_to_matrix(rows)).collect::<Result<_>>()?,
        };
        model.validate()?;
        Ok(model)
    }
}

pub(crate) fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Format("ragged matrix rows".into()));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(n, m, &flat))
}

pub(crate) fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmFile {
    pub schema: String,
    pub priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
}

struct PreparedComponent {
    log_prior: f64,
    mean: DVector<f64>,
    chol_l: DMatrix<f64>,
    log_norm: f64,
}

impl PreparedComponent {
    fn new(prior: f64, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numeric("mixture covariance is not positive definite".into()))?;
        let l = chol.l();
        let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self {
            log_prior: prior.ln(),
            mean: mean.clone(),
            chol_l: l,
            log_norm: -0.5 * (mean.len() as f64 * LN_2PI + log_det),
        })
    }

    fn log_weighted_pdf(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.mean;
        let z = self
            .chol_l
            .solve_lower_triangular(&d)
            .expect("cholesky factor is non-singular");
        self.log_prior + self.log_norm - 0.5 * z.norm_squared()
    }
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Stacks trajectories into an `n x (1+S)` data matrix of `(t, e)` rows.
pub fn stack_samples(trajs: &[SynergyTrajectory]) -> Result<DMatrix<f64>> {
    let first = trajs
        .first()
        .ok_or_else(|| Error::EmptyInput("no trajectories".into()))?;
    let s = first.dim();
    if trajs.iter().any(|t| t.dim() != s) {
        return Err(Error::invalid("trajectories have different coefficient dimensions"));
    }
    let n: usize = trajs.iter().map(SynergyTrajectory::len).sum();
    let mut data = DMatrix::zeros(n, s + 1);
    let mut row = 0;
    for traj in trajs {
        for (t, e) in traj.samples() {
            data[(row, 0)] = *t;
            for j in 0..s {
                data[(row, j + 1)] = e[j];
            }
            row += 1;
        }
    }
    Ok(data)
}

pub fn fit_gmm(trajs: &[SynergyTrajectory], components: usize, seed: u64) -> Result<GmmModel> {
    let opts = GmmOptions {
        components,
        seed,
        ..GmmOptions::default()
    };
    Ok(fit_gmm_with(trajs, &opts)?.model)
}

pub fn fit_gmm_with(trajs: &[SynergyTrajectory], opts: &GmmOptions) -> Result<GmmFit> {
    let data = stack_samples(trajs)?;
    fit_gmm_data(&data, opts)
}

/// EM on raw rows; the first column is treated like any other dimension.
pub fn fit_gmm_data(data: &DMatrix<f64>, opts: &GmmOptions) -> Result<GmmFit> {
    let k = opts.components;
    if k == 0 {
        return Err(Error::invalid("component count must be at least 1"));
    }
    if data.nrows() < 10 * k {
        return Err(Error::InsufficientData(format!(
            "{} samples cannot support {k} components (need at least {})",
            data.nrows(),
            10 * k
        )));
    }
    linalg::check_finite(data.iter().copied(), "trajectory samples")
        .map_err(|_| Error::invalid("trajectory samples contain non-finite values"))?;

    let mut best: Option<GmmFit> = None;
    for restart in 0..opts.restarts.max(1) {
        let fit = run_em(data, opts, restart as u64)?;
        let better = match &best {
            None => true,
            Some(b) => fit.log_likelihood.last() > b.log_likelihood.last(),
        };
        if better {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn run_em(data: &DMatrix<f64>, opts: &GmmOptions, restart: u64) -> Result<GmmFit> {
    let n = data.nrows();
    let k = opts.components;
    let centers = kmeans_pp(data, k, &mut crate::rng::keyed(opts.seed, "gmm-init", restart));

    // hard assignment to the seeds gives the initial responsibilities
    let mut resp = DMatrix::zeros(n, k);
    for i in 0..n {
        let x = data.row(i);
        let nearest = (0..k)
            .min_by(|&a, &b| {
                let da = (x - centers.row(a)).norm_squared();
                let db = (x - centers.row(b)).norm_squared();
                da.total_cmp(&db)
            })
            .expect("k >= 1");
        resp[(i, nearest)] = 1.0;
    }

    let mut model = m_step(data, &resp, opts.covariance_floor);
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iterations {
        let ll = e_step(data, &model, &mut resp)?;
        if let Some(&prev) = trace.last() {
            let prev: f64 = prev;
            if (ll - prev).abs() <= opts.tolerance * prev.abs().max(1e-300) {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        model = m_step(data, &resp, opts.covariance_floor);
    }
    Ok(GmmFit {
        model,
        log_likelihood: trace,
        converged,
    })
}

fn kmeans_pp<R: Rng>(data: &DMatrix<f64>, k: usize, rng: &mut R) -> DMatrix<f64> {
    let n = data.nrows();
    let mut centers = DMatrix::zeros(k, data.ncols());
    let first = rng.random_range(0..n);
    centers.row_mut(0).copy_from(&data.row(first));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| (data.row(i) - centers.row(0)).norm_squared())
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        centers.row_mut(c).copy_from(&data.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min((data.row(i) - centers.row(c)).norm_squared());
        }
    }
    centers
}

fn e_step(data: &DMatrix<f64>, model: &GmmModel, resp: &mut DMatrix<f64>) -> Result<f64> {
    let comps = model.prepared()?;
    let mut ll = 0.0;
    let mut logs = vec![0.0; comps.len()];
    for i in 0..data.nrows() {
        let x = data.row(i).transpose();
        for (j, c) in comps.iter().enumerate() {
            logs[j] = c.log_weighted_pdf(&x);
        }
        let lse = log_sum_exp(&logs);
        ll += lse;
        for j in 0..comps.len() {
            resp[(i, j)] = (logs[j] - lse).exp();
        }
    }
    Ok(ll)
}

fn m_step(data: &DMatrix<f64>, resp: &DMatrix<f64>, floor: f64) -> GmmModel {
    let n = data.nrows();
    let d = data.ncols();
    let k = resp.ncols();
    let mut priors = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k);
    let mut covs = Vec::with_capacity(k);
    for j in 0..k {
        let w = resp.column(j);
        let nk: f64 = w.sum();
        if nk <= f64::MIN_POSITIVE {
            // empty component: keep it alive as a broad, negligible one
            priors.push(f64::MIN_POSITIVE);
            means.push(data.row(j % n).transpose());
            covs.push(DMatrix::identity(d, d));
            continue;
        }
        let mean = (data.transpose() * w) / nk;
        let mut cov = DMatrix::zeros(d, d);
        for i in 0..n {
            let diff = data.row(i).transpose() - &mean;
            cov += (&diff * diff.transpose()) * w[i];
        }
        cov /= nk;
        priors.push(nk / n as f64);
        means.push(mean);
        covs.push(linalg::floor_eigenvalues(&cov, floor));
    }
    let total: f64 = priors.iter().sum();
    priors.iter_mut().for_each(|p| *p /= total);
    GmmModel {
        priors,
        means,
        covariances: covs,
    }
}

/// Conditional distribution of `e` given `t` (moment-matched mixture).
pub fn gmr_condition(gmm: &GmmModel, t: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if !t.is_finite() {
        return Err(Error::invalid("query time is not finite"));
    }
    let s = gmm.output_dim();
    let k = gmm.components();
    let mut log_h = Vec::with_capacity(k);
    let mut cond_means = Vec::with_capacity(k);
    let mut cond_covs = Vec::with_capacity(k);
    for j in 0..k {
        let mu = &gmm.means[j];
        let sig = &gmm.covariances[j];
        let var_t = sig[(0, 0)];
        let dt = t - mu[0];
        log_h.push(gmm.priors[j].ln() - 0.5 * (LN_2PI + var_t.ln() + dt * dt / var_t));
        let cross = sig.view((1, 0), (s, 1)).into_owned();
        let m = mu.rows(1, s).into_owned() + &cross * (dt / var_t);
        let c = sig.view((1, 1), (s, s)).into_owned() - (&cross * cross.transpose()) / var_t;
        cond_means.push(m);
        cond_covs.push(c);
    }
    let lse = log_sum_exp(&log_h);
    let mut mean = DVector::zeros(s);
    let mut second = DMatrix::zeros(s, s);
    for j in 0..k {
        let h = (log_h[j] - lse).exp();
        mean += &cond_means[j] * h;
        second += (&cond_covs[j] + &cond_means[j] * cond_means[j].transpose()) * h;
    }
    let cov = second - &mean * mean.transpose();
    Ok((mean, linalg::floor_eigenvalues(&cov, 1e-12)))
}
