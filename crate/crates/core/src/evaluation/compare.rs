//! Method comparison on the synthetic demonstration benchmark.
//!
//! * `a`, kernelized synergies: PCA subspace of the training set, GMM/GMR
//!   reference, KMP adapted with via-points at the test demonstration's
//!   projected key frames (every 0.1 s by default) and then sampled.
//! * `b`, per-object PCA: a fresh mean-centered subspace fitted to the test
//!   object's own grasp phase, then used for the whole demonstration.
//! * `c`, fixed grasp basis from the training grasp phases plus correction
//!   components fitted to the training manipulation residuals.
//!
//! `b` and `c` reconstruct every test sample by projection onto their
//! subspace, which is the best they can do. Metrics pool grasp and
//! manipulation samples.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::metrics::{nse, primitive_accuracy, DEFAULT_PA_TOLERANCE};
use crate::demos::{DemoDataset, Demonstration};
use crate::error::{Error, Result};
use crate::frames::DEFAULT_END_COV;
use crate::hand::{JointConfig, JOINT_COUNT};
use crate::synergy::{build_config_matrix, build_mean_centered, extract_synergies, SynergyCoeffs, SynergySubspace};
use crate::trajectory::{fit_gmm, insert_via_point, KmpModel, KmpParams, SynergyTrajectory};

pub const DEFAULT_GMM_COMPONENTS: usize = 5;
pub const REPORT_HEADER: [&str; 5] = ["method", "components", "nse", "pa", "runtime_ms"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    KernelizedSynergies,
    PerObjectPca,
    AppendedCorrection,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::KernelizedSynergies, Method::PerObjectPca, Method::AppendedCorrection];

    pub fn id(&self) -> &'static str {
        match self {
            Method::KernelizedSynergies => "a",
            Method::PerObjectPca => "b",
            Method::AppendedCorrection => "c",
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::KernelizedSynergies => "kernelized",
            Method::PerObjectPca => "per_object_pca",
            Method::AppendedCorrection => "appended_correction",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s || m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method `{s}` (expected a, b or c)")))
    }
}

/// Parses a comma-separated method list such as `a,b`.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',').map(|s| s.trim().parse()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectMetric {
    pub object: String,
    pub nse: f64,
    pub pa: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub method: Method,
    pub components: usize,
    pub nse: f64,
    pub pa: f64,
    pub per_object: Vec<ObjectMetric>,
    pub runtime_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareOptions {
    pub gmm_components: usize,
    pub kmp: KmpParams,
    pub via_cov: f64,
    /// Times at which the test demonstration is observed by method (a).
    pub key_times: Vec<f64>,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            gmm_components: DEFAULT_GMM_COMPONENTS,
            kmp: KmpParams::default(),
            via_cov: DEFAULT_END_COV,
            key_times: (0..=10).map(|k| k as f64 * 0.1).collect(),
            tolerance: DEFAULT_PA_TOLERANCE,
            seed: 0,
        }
    }
}

fn project_all(sub: &SynergySubspace, qs: &[JointConfig]) -> Result<Vec<JointConfig>> {
    qs.iter()
        .map(|q| {
            let mut r = sub.posture(&sub.project(q)?)?;
            r.timestamp = q.timestamp;
            Ok(r)
        })
        .collect()
}

fn sample_at(demo: &Demonstration, t: f64) -> Result<&JointConfig> {
    demo.samples
        .iter()
        .min_by(|a, b| {
            (a.timestamp.unwrap_or(0.0) - t)
                .abs()
                .total_cmp(&(b.timestamp.unwrap_or(0.0) - t).abs())
        })
        .ok_or_else(|| Error::EmptyInput(format!("demonstration `{}` is empty", demo.object)))
}

/// Trained state of method (a) at one component count.
pub struct KernelizedModel {
    pub subspace: SynergySubspace,
    pub kmp: KmpModel,
    pub via_cov: f64,
    pub key_times: Vec<f64>,
}

impl KernelizedModel {
    pub fn train(data: &DemoDataset, components: usize, opts: &CompareOptions) -> Result<Self> {
        let c = build_config_matrix(&data.train_samples(), &data.q0)?;
        let subspace = extract_synergies(&c, components)?;
        let trajs = data
            .train
            .iter()
            .map(|d| SynergyTrajectory::from_joint_recording(&subspace, &d.samples))
            .collect::<Result<Vec<_>>>()?;
        let gmm = fit_gmm(&trajs, opts.gmm_components, opts.seed)?;
        let times = trajs[0].times();
        let kmp = KmpModel::from_gmm(&gmm, &times, opts.kmp)?;
        Ok(Self {
            subspace,
            kmp,
            via_cov: opts.via_cov,
            key_times: opts.key_times.clone(),
        })
    }

    /// Adapts to `demo`'s key frames and reproduces it at its sample times.
    pub fn reproduce(&self, demo: &Demonstration) -> Result<Vec<JointConfig>> {
        let s = self.subspace.components();
        let cov = DMatrix::identity(s, s) * self.via_cov;
        let mut kmp = self.kmp.clone();
        for &t in &self.key_times {
            let e = self.subspace.project(sample_at(demo, t)?)?;
            kmp = insert_via_point(&kmp, t, &e.e, &cov)?;
        }
        let pred = kmp.predictor()?;
        demo.samples
            .iter()
            .map(|q| {
                let t = q.timestamp.unwrap_or(0.0);
                let (mean, _) = pred.predict(t)?;
                let mut r = self.subspace.posture(&SynergyCoeffs::new(mean))?;
                r.timestamp = q.timestamp;
                Ok(r)
            })
            .collect()
    }
}

fn per_object_pca(demo: &Demonstration, components: usize) -> Result<Vec<JointConfig>> {
    let grasp = demo.grasp_phase();
    let sub = extract_synergies(&build_mean_centered(&grasp)?, components.min(JOINT_COUNT))?;
    project_all(&sub, &demo.samples)
}

/// Orthonormal basis of training grasp directions followed by correction
/// directions for the manipulation residuals.
pub fn appended_basis(data: &DemoDataset, components: usize) -> Result<SynergySubspace> {
    let s = components.min(JOINT_COUNT);
    let grasp_count = s.div_ceil(2);
    let grasp: Vec<JointConfig> = data.train.iter().flat_map(|d| d.grasp_phase()).collect();
    let g = extract_synergies(&build_config_matrix(&grasp, &data.q0)?, grasp_count)?;
    let mut cols: Vec<DVector<f64>> = g.basis.column_iter().map(|c| c.into_owned()).collect();
    if s > grasp_count {
        let manip: Vec<JointConfig> = data.train.iter().flat_map(|d| d.manipulation_phase()).collect();
        let p = &g.basis * g.basis.transpose();
        let residuals: Vec<JointConfig> = manip
            .iter()
            .map(|q| {
                let d = DVector::from_column_slice((q.angles - data.q0.angles).as_slice());
                let r = &d - &p * &d;
                let mut out = data.q0;
                for i in 0..JOINT_COUNT {
                    out.angles[i] += r[i];
                }
                out
            })
            .collect();
        let corr = extract_synergies(&build_config_matrix(&residuals, &data.q0)?, s - grasp_count)?;
        for c in corr.basis.column_iter() {
            // re-orthogonalize against round-off
            let mut v = c.into_owned();
            for u in &cols {
                v -= u * u.dot(&v);
            }
            cols.push(v.normalize());
        }
    }
    Ok(SynergySubspace {
        basis: DMatrix::from_columns(&cols),
        q0: data.q0,
        singular_values: vec![0.0; cols.len()],
        explained_variance_ratio: vec![0.0; cols.len()],
    })
}

fn score(
    method: Method,
    components: usize,
    data: &DemoDataset,
    achieved: Vec<(String, Vec<JointConfig>, Vec<JointConfig>)>,
    tol: f64,
    started: Instant,
) -> Result<MetricReport> {
    let per_object = achieved
        .iter()
        .map(|(object, ground, got)| {
            Ok(ObjectMetric {
                object: object.clone(),
                nse: nse(ground, got, &data.q0)?,
                pa: primitive_accuracy(ground, got, tol)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_object.len() as f64;
    Ok(MetricReport {
        method,
        components,
        nse: per_object.iter().map(|o| o.nse).sum::<f64>() / n,
        pa: per_object.iter().map(|o| o.pa).sum::<f64>() / n,
        per_object,
        runtime_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

pub fn run_method(method: Method, data: &DemoDataset, components: usize, opts: &CompareOptions) -> Result<MetricReport> {
    if components == 0 {
        return Err(Error::invalid("component count must be at least 1"));
    }
    if data.test.is_empty() {
        return Err(Error::invalid("dataset has no test demonstrations"));
    }
    let started = Instant::now();
    let mut achieved = Vec::new();
    match method {
        Method::KernelizedSynergies => {
            let model = KernelizedModel::train(data, components.min(JOINT_COUNT), opts)?;
            for d in &data.test {
                achieved.push((d.object.clone(), d.samples.clone(), model.reproduce(d)?));
            }
        }
        Method::PerObjectPca => {
            for d in &data.test {
                achieved.push((d.object.clone(), d.samples.clone(), per_object_pca(d, components)?));
            }
        }
        Method::AppendedCorrection => {
            let sub = appended_basis(data, components)?;
            for d in &data.test {
                achieved.push((d.object.clone(), d.samples.clone(), project_all(&sub, &d.samples)?));
            }
        }
    }
    score(method, components, data, achieved, opts.tolerance, started)
}

/// Every method at every component count, in method then component order.
pub fn compare_methods(
    data: &DemoDataset,
    methods: &[Method],
    components: &[usize],
    opts: &CompareOptions,
) -> Result<Vec<MetricReport>> {
    let mut out = Vec::new();
    for &m in methods {
        for &s in components {
            out.push(run_method(m, data, s, opts)?);
        }
    }
    Ok(out)
}

pub fn report_csv(reports: &[MetricReport]) -> String {
    let mut s = REPORT_HEADER.join(",");
    s.push('\n');
    for r in reports {
        let _ = writeln!(s, "{},{},{},{},{:.3}", r.method.id(), r.components, r.nse, r.pa, r.runtime_ms);
    }
    s
}

/// Two panels, NSE and PA against component count, one polyline per method.
pub fn report_svg(reports: &[MetricReport]) -> String {
    let (w, h, pad) = (320.0, 240.0, 40.0);
    let max_s = reports.iter().map(|r| r.components).max().unwrap_or(1).max(2) as f64;
    let min_s = reports.iter().map(|r| r.components).min().unwrap_or(1) as f64;
    let colors = ["#1f77b4", "#d62728", "#2ca02c"];
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">"#,
        2.0 * w,
        h + 30.0
    );
    for (panel, title) in ["NSE", "PA"].iter().enumerate() {
        let x0 = panel as f64 * w;
        let sx = |c: f64| x0 + pad + (c - min_s) / (max_s - min_s).max(1.0) * (w - 2.0 * pad);
        let sy = |v: f64| h - pad - v.clamp(0.0, 1.0) * (h - 2.0 * pad);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{title}</text>"#,
            x0 + w / 2.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            sx(min_s),
            sy(0.0),
            sx(max_s),
            sy(0.0),
            sx(min_s),
            sy(0.0),
            sx(min_s),
            sy(1.0)
        );
        for v in [0.0, 0.5, 1.0] {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{v}</text>"#,
                sx(min_s) - 4.0,
                sy(v) + 4.0
            );
        }
        let mut c = min_s as usize;
        while c as f64 <= max_s {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{c}</text>"#,
                sx(c as f64),
                sy(0.0) + 14.0
            );
            c += 1;
        }
        for (k, m) in Method::ALL.iter().enumerate() {
            let mut pts: Vec<&MetricReport> = reports.iter().filter(|r| r.method == *m).collect();
            if pts.is_empty() {
                continue;
            }
            pts.sort_by_key(|r| r.components);
            let path: Vec<String> = pts
                .iter()
                .map(|r| {
                    let v = if panel == 0 { r.nse } else { r.pa };
                    format!("{:.2},{:.2}", sx(r.components as f64), sy(v))
                })
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                path.join(" "),
                colors[k]
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{}">{}</text>"#,
                x0 + w - pad - 100.0,
                pad + 14.0 * k as f64,
                colors[k],
                m.name()
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
