//! Dominant-plane extraction by random sample consensus.
//!
//! Iteration `i` draws its three points from its own keyed random stream, so
//! the result does not depend on evaluation order.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use super::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_ITERATIONS: usize = 200;
pub const DEFAULT_DISTANCE: f64 = 0.008;

#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    /// Unit normal; the plane is `normal · p = offset`.
    pub normal: Vector3<f64>,
    pub offset: f64,
    pub inliers: Vec<usize>,
}

impl Plane {
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

fn inliers_of(points: &[Vector3<f64>], normal: &Vector3<f64>, offset: f64, thresh: f64) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| (normal.dot(&points[i]) - offset).abs() <= thresh)
        .collect()
}

/// Least-squares plane through `idx`: normal is the smallest-variance direction.
pub fn fit_plane(points: &[Vector3<f64>], idx: &[usize]) -> Option<(Vector3<f64>, f64)> {
    if idx.len() < 3 {
        return None;
    }
    let n = idx.len() as f64;
    let centroid = idx.iter().map(|&i| points[i]).sum::<Vector3<f64>>() / n;
    let mut cov = Matrix3::zeros();
    for &i in idx {
        let d = points[i] - centroid;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let k = eig.eigenvalues.imin();
    let normal = eig.eigenvectors.column(k).into_owned();
    if !(normal.norm() > 0.5) {
        return None;
    }
    let normal = orient(normal.normalize());
    Some((normal, normal.dot(&centroid)))
}

/// Sign convention: the largest-magnitude component is positive.
fn orient(n: Vector3<f64>) -> Vector3<f64> {
    if n[n.iamax()] < 0.0 {
        -n
    } else {
        n
    }
}

pub fn ransac_plane(cloud: &PointCloud, max_iters: usize, dist_thresh: f64, seed: u64) -> Result<(Plane, PointCloud)> {
    if cloud.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "plane fitting needs at least 3 points, got {}",
            cloud.len()
        )));
    }
    if !(dist_thresh > 0.0) {
        return Err(Error::invalid(format!("distance threshold must be positive, got {dist_thresh}")));
    }
    let pts = cloud.positions();
    let n = pts.len();
    let scale = pts.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1.0);
    let mut best: Option<(usize, Vector3<f64>, f64)> = None;
    for it in 0..max_iters {
        let mut r = rng::keyed(seed, "ransac", it as u64);
        let a = r.random_range(0..n);
        let mut b = r.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let mut c = r.random_range(0..n - 2);
        for taken in [a.min(b), a.max(b)] {
            if c >= taken {
                c += 1;
            }
        }
        let cross = (pts[b] - pts[a]).cross(&(pts[c] - pts[a]));
        if cross.norm() <= 1e-12 * scale * scale {
            continue;
        }
        let normal = orient(cross.normalize());
        let offset = normal.dot(&pts[a]);
        let count = (0..n)
            .filter(|&i| (normal.dot(&pts[i]) - offset).abs() <= dist_thresh)
            .count();
        if best.as_ref().is_none_or(|b| count > b.0) {
            best = Some((count, normal, offset));
        }
    }
    let (_, mut normal, mut offset) = best.ok_or_else(|| {
        Error::DegenerateData(format!("all {max_iters} samples were collinear"))
    })?;
    let mut inliers = inliers_of(&pts, &normal, offset, dist_thresh);
    if let Some((rn, ro)) = fit_plane(&pts, &inliers) {
        let refined = inliers_of(&pts, &rn, ro, dist_thresh);
        if refined.len() >= inliers.len() {
            normal = rn;
            offset = ro;
            inliers = refined;
        }
    }
    let mut is_inlier = vec![false; n];
    for &i in &inliers {
        is_inlier[i] = true;
    }
    let outliers: Vec<usize> = (0..n).filter(|&i| !is_inlier[i]).collect();
    Ok((
        Plane {
            normal,
            offset,
            inliers,
        },
        cloud.subset(&outliers),
    ))
}
