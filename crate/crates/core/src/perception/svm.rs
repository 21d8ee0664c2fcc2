//! One-vs-one RBF support vector machines trained with SMO.
//!
//! Each binary problem uses maximal-violating-pair working set selection and
//! stops when the KKT gap falls below the tolerance. Training is fully
//! deterministic.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SVM_SCHEMA: &str = "svm.v1";
pub const DEFAULT_C: f64 = 10.0;
pub const DEFAULT_GAMMA: f64 = 2.0;
pub const DEFAULT_REJECT: f64 = 0.35;
pub const KKT_TOLERANCE: f64 = 1e-3;
const MAX_SMO_ITERS: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    pub reject_threshold: f64,
    pub tolerance: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: DEFAULT_C,
            gamma: DEFAULT_GAMMA,
            reject_threshold: DEFAULT_REJECT,
            tolerance: KKT_TOLERANCE,
        }
    }
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    /// Class indices voted for by positive / negative decisions.
    pub positive: usize,
    pub negative: usize,
    pub support_vectors: Vec<Vec<f64>>,
    /// `αᵢ yᵢ` for each support vector.
    pub coefficients: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64], gamma: f64) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * rbf(sv, x, gamma))
            .sum::<f64>()
            - self.rho
    }

    /// Largest KKT violation over labelled points (`y = ±1`) for box bound `c`.
    pub fn kkt_residual(&self, xs: &[Vec<f64>], ys: &[f64], alphas: &[f64], c: f64, gamma: f64) -> f64 {
        xs.iter()
            .zip(ys)
            .zip(alphas)
            .map(|((x, &y), &a)| {
                let m = y * self.decision(x, gamma) - 1.0;
                if a <= 0.0 {
                    (-m).max(0.0)
                } else if a >= c {
                    m.max(0.0)
                } else {
                    m.abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Result of the dual solve, with the multipliers for every training point.
pub struct BinaryFit {
    pub svm: BinarySvm,
    pub alphas: Vec<f64>,
}

/// Solves the soft-margin dual for labels `ys ∈ {+1, −1}`.
pub fn train_binary(xs: &[Vec<f64>], ys: &[f64], params: &SvmParams) -> Result<BinaryFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::invalid("binary problem needs at least two labelled samples"));
    }
    let c = params.c;
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| rbf(&xs[i], &xs[j], params.gamma)).collect())
        .collect();
    let q = |i: usize, j: usize| ys[i] * ys[j] * k[i][j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);
    let mut iters = 0;
    loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let v = -ys[t] * grad[t];
            if in_up(alpha[t], ys[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(alpha[t], ys[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < params.tolerance {
            break;
        }
        if iters >= MAX_SMO_ITERS {
            return Err(Error::Numeric(format!(
                "SMO did not converge in {MAX_SMO_ITERS} iterations (gap {:e})",
                gmax - gmin
            )));
        }
        iters += 1;
        let (ai, aj) = (alpha[i], alpha[j]);
        let tau = 1e-12;
        if ys[i] != ys[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(tau);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(tau);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
    }
    // bias from free multipliers, or the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = ys[t] * grad[t];
        if alpha[t] >= c {
            if ys[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if ys[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum_free += yg;
            n_free += 1;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };
    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(xs[t].clone());
            coefficients.push(alpha[t] * ys[t]);
        }
    }
    Ok(BinaryFit {
        svm: BinarySvm {
            positive: 0,
            negative: 0,
            support_vectors,
            coefficients,
            rho,
            iterations: iters,
        },
        alphas: alpha,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub schema: String,
    pub classes: Vec<String>,
    pub dim: usize,
    pub gamma: f64,
    pub c: f64,
    pub reject_threshold: f64,
    pub seed: u64,
    pub pairs: Vec<BinarySvm>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Recognition {
    Detected { label: String, confidence: f64 },
    NotFound { confidence: f64 },
}

impl Recognition {
    pub fn label(&self) -> Option<&str> {
        match self {
            Recognition::Detected { label, .. } => Some(label),
            Recognition::NotFound { .. } => None,
        }
    }

    pub fn confidence(&self) -> f64 {
        match self {
            Recognition::Detected { confidence, .. } | Recognition::NotFound { confidence } => *confidence,
        }
    }
}

/// Trains one binary machine per class pair. Classes are ordered by label.
pub fn svm_train(data: &[(Vec<f64>, String)], params: &SvmParams, seed: u64) -> Result<SvmModel> {
    if !(params.c > 0.0) || !(params.gamma > 0.0) {
        return Err(Error::invalid("C and gamma must be positive"));
    }
    let dim = data.first().map(|d| d.0.len()).ok_or_else(|| Error::invalid("empty training set"))?;
    if data.iter().any(|(x, _)| x.len() != dim || x.iter().any(|v| !v.is_finite())) {
        return Err(Error::invalid("training features must be finite and of equal length"));
    }
    let mut by_class: BTreeMap<&str, Vec<&Vec<f64>>> = BTreeMap::new();
    for (x, y) in data {
        by_class.entry(y.as_str()).or_default().push(x);
    }
    if by_class.len() < 2 {
        return Err(Error::invalid("training needs at least two classes"));
    }
    if let Some((label, v)) = by_class.iter().find(|(_, v)| v.len() < 2) {
        return Err(Error::invalid(format!("class `{label}` has {} sample(s), need 2", v.len())));
    }
    let classes: Vec<String> = by_class.keys().map(|s| s.to_string()).collect();
    let groups: Vec<&Vec<&Vec<f64>>> = by_class.values().collect();
    let mut pairs = Vec::new();
    for a in 0..classes.len() {
        for b in a + 1..classes.len() {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for x in groups[a] {
                xs.push((*x).clone());
                ys.push(1.0);
            }
            for x in groups[b] {
                xs.push((*x).clone());
                ys.push(-1.0);
            }
            let mut fit = train_binary(&xs, &ys, params)?.svm;
            fit.positive = a;
            fit.negative = b;
            pairs.push(fit);
        }
    }
    Ok(SvmModel {
        schema: SVM_SCHEMA.into(),
        classes,
        dim,
        gamma: params.gamma,
        c: params.c,
        reject_threshold: params.reject_threshold,
        seed,
        pairs,
    })
}

impl SvmModel {
    pub fn votes(&self, x: &[f64]) -> Result<Vec<usize>> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "feature has {} entries, model expects {}",
                x.len(),
                self.dim
            )));
        }
        let mut votes = vec![0usize; self.classes.len()];
        for p in &self.pairs {
            if p.decision(x, self.gamma) > 0.0 {
                votes[p.positive] += 1;
            } else {
                votes[p.negative] += 1;
            }
        }
        Ok(votes)
    }

    /// Majority winner, ties to the lowest class index.
    pub fn predict_index(&self, x: &[f64]) -> Result<usize> {
        let votes = self.votes(x)?;
        let max = *votes.iter().max().unwrap_or(&0);
        Ok(votes.iter().position(|&v| v == max).unwrap_or(0))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let m: Self = crate::io::read_json(path)?;
        if m.schema != SVM_SCHEMA {
            return Err(Error::Format(format!("expected schema {SVM_SCHEMA}, found {}", m.schema)));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_json(path, self)
    }
}

/// Vote-based recognition. Confidence is the winner's share of the `k − 1`
/// contests it took part in; a tie for first place is not a detection.
pub fn svm_classify(model: &SvmModel, x: &[f64]) -> Result<Recognition> {
    let votes = model.votes(x)?;
    let max = *votes.iter().max().unwrap_or(&0);
    let confidence = max as f64 / (model.classes.len() - 1) as f64;
    let leaders: Vec<usize> = (0..votes.len()).filter(|&i| votes[i] == max).collect();
    if leaders.len() != 1 || confidence < model.reject_threshold {
        return Ok(Recognition::NotFound { confidence });
    }
    Ok(Recognition::Detected {
        label: model.classes[leaders[0]].clone(),
        confidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_minimal_case() {
        let data = vec![
            (vec![0.0, 0.0], "a".to_string()),
            (vec![0.0, 0.0], "a".to_string()),
            (vec![1.0, 1.0], "b".to_string()),
            (vec![1.0, 1.0], "b".to_string()),
        ];
        let m = svm_train(&data, &SvmParams::default(), 0).unwrap();
        assert_eq!(svm_classify(&m, &[0.0, 0.0]).unwrap().label(), Some("a"));
        assert_eq!(svm_classify(&m, &[1.0, 1.0]).unwrap().label(), Some("b"));
    }

    #[test]
    fn single_class_rejected() {
        let data = vec![(vec![0.0], "a".to_string()), (vec![1.0], "a".to_string())];
        assert!(matches!(svm_train(&data, &SvmParams::default(), 0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let data = vec![
            (vec![0.0], "a".to_string()),
            (vec![0.1], "a".to_string()),
            (vec![1.0], "b".to_string()),
            (vec![1.1], "b".to_string()),
        ];
        let m = svm_train(&data, &SvmParams::default(), 0).unwrap();
        assert!(svm_classify(&m, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn kkt_holds_after_training() {
        let xs: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| if x[0] + 0.3 * x[1] > 0.1 { 1.0 } else { -1.0 }).collect();
        let p = SvmParams::default();
        let fit = train_binary(&xs, &ys, &p).unwrap();
        assert!(fit.svm.kkt_residual(&xs, &ys, &fit.alphas, p.c, p.gamma) < 2.0 * p.tolerance);
    }
}
