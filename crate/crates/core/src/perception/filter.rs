use std::collections::BTreeMap;

use nalgebra::Vector3;

use super::cloud::{Point, PointCloud};
use crate::error::{Error, Result};

pub const DEFAULT_LEAF: f64 = 0.005;

pub fn voxel_key(p: &Vector3<f64>, leaf: f64) -> [i64; 3] {
    [
        (p.x / leaf).floor() as i64,
        (p.y / leaf).floor() as i64,
        (p.z / leaf).floor() as i64,
    ]
}

/// One centroid per occupied voxel, colors averaged and rounded. Output is
/// ordered by voxel key.
pub fn voxel_downsample(cloud: &PointCloud, leaf: f64) -> Result<PointCloud> {
    if !(leaf > 0.0 && leaf.is_finite()) {
        return Err(Error::invalid(format!("voxel leaf must be positive, got {leaf}")));
    }
    let mut cells: BTreeMap<[i64; 3], (Vector3<f64>, [f64; 3], usize)> = BTreeMap::new();
    for p in &cloud.points {
        let cell = cells
            .entry(voxel_key(&p.position, leaf))
            .or_insert((Vector3::zeros(), [0.0; 3], 0));
        cell.0 += p.position;
        for k in 0..3 {
            cell.1[k] += p.rgb[k] as f64;
        }
        cell.2 += 1;
    }
    Ok(PointCloud::new(
        cells
            .into_values()
            .map(|(sum, color, n)| {
                let n_f = n as f64;
                Point::new(
                    sum / n_f,
                    [0, 1, 2].map(|k| (color[k] / n_f).round().clamp(0.0, 255.0) as u8),
                )
            })
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_voxel_collapses() {
        let cloud = PointCloud::new(vec![
            Point::new(Vector3::new(0.001, 0.001, 0.001), [10, 20, 30]),
            Point::new(Vector3::new(0.003, 0.002, 0.001), [20, 30, 41]),
        ]);
        let out = voxel_downsample(&cloud, 0.01).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out.points[0].position - Vector3::new(0.002, 0.0015, 0.001)).norm() < 1e-15);
        assert_eq!(out.points[0].rgb, [15, 25, 36]);
    }

    #[test]
    fn bad_leaf_rejected() {
        assert!(voxel_downsample(&PointCloud::default(), 0.0).is_err());
        assert!(voxel_downsample(&PointCloud::default(), -1.0).is_err());
    }
}
