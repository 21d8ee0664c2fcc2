//! Euclidean clustering and per-cluster pose.

use nalgebra::{Matrix3, Vector3};

use super::cloud::PointCloud;
use super::kdtree::KdTree;
use crate::error::{Error, Result};
use crate::pose::Pose;

pub const DEFAULT_EPSILON: f64 = 0.02;
pub const DEFAULT_MIN_PTS: usize = 30;

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    /// Ascending member indices into the clustered cloud.
    pub indices: Vec<usize>,
    pub centroid: Vector3<f64>,
    /// Axis-aligned extents.
    pub extents: Vector3<f64>,
    /// Principal axes as columns, by decreasing variance, right-handed.
    pub principal_axes: Matrix3<f64>,
    /// Variances along the principal axes.
    pub principal_variances: Vector3<f64>,
}

impl Cluster {
    pub fn from_indices(cloud: &PointCloud, mut indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("cluster has no points"));
        }
        indices.sort_unstable();
        let pts: Vec<Vector3<f64>> = indices.iter().map(|&i| cloud.points[i].position).collect();
        let centroid = pts.iter().sum::<Vector3<f64>>() / pts.len() as f64;
        let mut min = Vector3::repeat(f64::INFINITY);
        let mut max = Vector3::repeat(f64::NEG_INFINITY);
        for p in &pts {
            min = min.inf(p);
            max = max.sup(p);
        }
        let (principal_axes, principal_variances) = principal_frame(&pts, &centroid);
        Ok(Self {
            indices,
            centroid,
            extents: max - min,
            principal_axes,
            principal_variances,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Eigenvectors of the scatter matrix, sorted by decreasing eigenvalue, each
/// with its largest-magnitude entry positive, third axis flipped if needed so
/// the frame is right-handed. Degenerate spreads fall back to identity.
pub fn principal_frame(pts: &[Vector3<f64>], centroid: &Vector3<f64>) -> (Matrix3<f64>, Vector3<f64>) {
    let mut cov = Matrix3::zeros();
    for p in pts {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= pts.len() as f64;
    if cov.amax() < 1e-18 {
        return (Matrix3::identity(), Vector3::zeros());
    }
    let eig = cov.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut axes = Matrix3::zeros();
    let mut vars = Vector3::zeros();
    for (k, &o) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(o).into_owned();
        if v[v.iamax()] < 0.0 {
            v = -v;
        }
        axes.set_column(k, &v);
        vars[k] = eig.eigenvalues[o].max(0.0);
    }
    if axes.determinant() < 0.0 {
        let c = -axes.column(2);
        axes.set_column(2, &c);
    }
    (axes, vars)
}

/// Connected components of the ε-neighbor graph; components with fewer than
/// `min_pts` points are dropped. Sorted by size, then by smallest index.
pub fn euclidean_cluster(cloud: &PointCloud, epsilon: f64, min_pts: usize) -> Result<Vec<Cluster>> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if min_pts == 0 {
        return Err(Error::invalid("min_pts must be at least 1"));
    }
    let pts = cloud.positions();
    let tree = KdTree::build(&pts);
    let mut label = vec![usize::MAX; pts.len()];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for seed in 0..pts.len() {
        if label[seed] != usize::MAX {
            continue;
        }
        let id = components.len();
        label[seed] = id;
        let mut members = vec![seed];
        let mut head = 0;
        while head < members.len() {
            let i = members[head];
            head += 1;
            for j in tree.radius_search(&pts[i], epsilon) {
                if label[j] == usize::MAX {
                    label[j] = id;
                    members.push(j);
                }
            }
        }
        components.push(members);
    }
    let mut kept: Vec<Vec<usize>> = components.into_iter().filter(|c| c.len() >= min_pts).collect();
    for c in &mut kept {
        c.sort_unstable();
    }
    kept.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    kept.into_iter().map(|c| Cluster::from_indices(cloud, c)).collect()
}

/// Position at the centroid, orientation from the principal axes.
pub fn centroid_pose(cluster: &Cluster) -> Pose {
    Pose {
        rotation: cluster.principal_axes,
        translation: cluster.centroid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::cloud::Point;

    fn cloud(pts: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(pts.iter().map(|p| Point::new(Vector3::from(*p), [0; 3])).collect())
    }

    #[test]
    fn singleton() {
        let c = euclidean_cluster(&cloud(&[[0.0, 0.0, 0.0]]), 0.1, 1).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(centroid_pose(&c[0]).rotation, Matrix3::identity());
    }

    #[test]
    fn discard_rule() {
        let pc = cloud(&[[0.0, 0.0, 0.0], [0.2, 0.0, 0.0]]);
        assert_eq!(euclidean_cluster(&pc, 0.1, 1).unwrap().len(), 2);
        assert!(euclidean_cluster(&pc, 0.1, 2).unwrap().is_empty());
    }

    #[test]
    fn distance_equal_to_epsilon_connects() {
        let pc = cloud(&[[0.0, 0.0, 0.0], [0.25, 0.0, 0.0]]);
        assert_eq!(euclidean_cluster(&pc, 0.25, 1).unwrap().len(), 1);
    }

    #[test]
    fn cube_grid_centroid_and_frame() {
        let mut pts = Vec::new();
        for i in 0..4 {
            for j in 0..3 {
                for k in 0..2 {
                    pts.push([0.1 + (i as f64 - 1.5) * 0.01, 0.2 + (j as f64 - 1.0) * 0.01, 0.3 + (k as f64 - 0.5) * 0.01]);
                }
            }
        }
        let c = euclidean_cluster(&cloud(&pts), 0.011, 1).unwrap();
        let pose = centroid_pose(&c[0]);
        assert!((pose.translation - Vector3::new(0.1, 0.2, 0.3)).norm() < 1e-15);
        assert!(pose.validate().is_ok());
        assert!((pose.rotation.column(0).into_owned() - Vector3::x()).norm() < 1e-9);
    }
}
