//! Shape and color histograms of a cluster.
//!
//! * 32 bins: angle between each point's estimated normal (10-NN plane fit)
//!   and the cluster's first principal axis, uniform on [0°, 90°].
//! * 8 bins: the two extent ratios `e₂/e₁`, `e₃/e₁` along the principal axes,
//!   each spread over 4 bins with linear (tent) weights.
//! * 24 bins: 12 hue sectors × 2 saturation levels.
//!
//! Each block sums to one.

use nalgebra::{Matrix3, Vector3};

use super::cloud::PointCloud;
use super::cluster::Cluster;
use super::kdtree::KdTree;
use crate::error::{Error, Result};

pub const NORMAL_BINS: usize = 32;
pub const EXTENT_BINS: usize = 8;
pub const COLOR_BINS: usize = 24;
pub const FEATURE_DIM: usize = NORMAL_BINS + EXTENT_BINS + COLOR_BINS;
pub const NORMAL_NEIGHBORS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub shape_hist: Vec<f64>,
    pub extent_hist: Vec<f64>,
    pub color_hist: Vec<f64>,
    /// Too few points for normals; the normal block is uniform.
    pub fallback: bool,
}

impl FeatureVector {
    pub fn to_vec(&self) -> Vec<f64> {
        self.shape_hist
            .iter()
            .chain(&self.extent_hist)
            .chain(&self.color_hist)
            .copied()
            .collect()
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != FEATURE_DIM {
            return Err(Error::invalid(format!("feature has {} entries, expected {FEATURE_DIM}", v.len())));
        }
        Ok(Self {
            shape_hist: v[..NORMAL_BINS].to_vec(),
            extent_hist: v[NORMAL_BINS..NORMAL_BINS + EXTENT_BINS].to_vec(),
            color_hist: v[NORMAL_BINS + EXTENT_BINS..].to_vec(),
            fallback: false,
        })
    }
}

fn normalize(h: &mut [f64]) {
    let s: f64 = h.iter().sum();
    if s > 0.0 {
        h.iter_mut().for_each(|v| *v /= s);
    }
}

/// Smallest-variance direction of the `k` nearest neighbors of each point.
pub fn estimate_normals(pts: &[Vector3<f64>], k: usize) -> Vec<Vector3<f64>> {
    let tree = KdTree::build(pts);
    pts.iter()
        .map(|p| {
            let nn = tree.knn(p, k);
            let mean = nn.iter().map(|(i, _)| pts[*i]).sum::<Vector3<f64>>() / nn.len() as f64;
            let mut cov = Matrix3::zeros();
            for (i, _) in &nn {
                let d = pts[*i] - mean;
                cov += d * d.transpose();
            }
            let eig = cov.symmetric_eigen();
            eig.eigenvectors.column(eig.eigenvalues.imin()).into_owned()
        })
        .collect()
}

/// Hue in degrees [0, 360) and saturation in [0, 1].
pub fn hue_saturation(rgb: [u8; 3]) -> (f64, f64) {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    if delta == 0.0 {
        return (0.0, s);
    }
    let h = if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (h.rem_euclid(360.0), s)
}

fn tent_bins(ratio: f64, out: &mut [f64]) {
    let n = out.len();
    let x = ratio.clamp(0.0, 1.0) * n as f64 - 0.5;
    if x <= 0.0 {
        out[0] += 1.0;
    } else if x >= (n - 1) as f64 {
        out[n - 1] += 1.0;
    } else {
        let lo = x.floor() as usize;
        let w = x - lo as f64;
        out[lo] += 1.0 - w;
        out[lo + 1] += w;
    }
}

pub fn compute_features(cloud: &PointCloud, cluster: &Cluster) -> Result<FeatureVector> {
    if cluster.indices.is_empty() {
        return Err(Error::invalid("cannot compute features of an empty cluster"));
    }
    if let Some(&bad) = cluster.indices.iter().find(|&&i| i >= cloud.len()) {
        return Err(Error::invalid(format!("cluster index {bad} outside the cloud")));
    }
    let pts: Vec<Vector3<f64>> = cluster.indices.iter().map(|&i| cloud.points[i].position).collect();
    let axis = cluster.principal_axes.column(0).into_owned();

    let mut shape_hist = vec![0.0; NORMAL_BINS];
    let fallback = pts.len() < NORMAL_NEIGHBORS;
    if fallback {
        shape_hist.iter_mut().for_each(|v| *v = 1.0 / NORMAL_BINS as f64);
    } else {
        for n in estimate_normals(&pts, NORMAL_NEIGHBORS) {
            let c = n.dot(&axis).abs().min(1.0);
            let angle = c.acos() / std::f64::consts::FRAC_PI_2;
            let bin = ((angle * NORMAL_BINS as f64) as usize).min(NORMAL_BINS - 1);
            shape_hist[bin] += 1.0;
        }
        normalize(&mut shape_hist);
    }

    let mut ext = [0.0f64; 3];
    for k in 0..3 {
        let a = cluster.principal_axes.column(k);
        let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let v = a.dot(&(p - cluster.centroid));
            (lo.min(v), hi.max(v))
        });
        ext[k] = hi - lo;
    }
    ext.sort_by(|a, b| b.total_cmp(a));
    let mut extent_hist = vec![0.0; EXTENT_BINS];
    let half = EXTENT_BINS / 2;
    let (r1, r2) = if ext[0] > 0.0 { (ext[1] / ext[0], ext[2] / ext[0]) } else { (1.0, 1.0) };
    tent_bins(r1, &mut extent_hist[..half]);
    tent_bins(r2, &mut extent_hist[half..]);
    normalize(&mut extent_hist);

    let mut color_hist = vec![0.0; COLOR_BINS];
    for &i in &cluster.indices {
        let (h, s) = hue_saturation(cloud.points[i].rgb);
        let hb = ((h / 30.0) as usize).min(11);
        let sb = usize::from(s >= 0.5);
        color_hist[hb * 2 + sb] += 1.0;
    }
    normalize(&mut color_hist);

    Ok(FeatureVector {
        shape_hist,
        extent_hist,
        color_hist,
        fallback,
    })
}
