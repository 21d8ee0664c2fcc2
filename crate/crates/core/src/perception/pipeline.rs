//! Detection pipeline: downsample, remove the table, cluster, recognize.

use nalgebra::Vector3;

use super::cloud::PointCloud;
use super::cluster::{centroid_pose, euclidean_cluster, Cluster, DEFAULT_EPSILON, DEFAULT_MIN_PTS};
use super::features::{compute_features, FeatureVector};
use super::filter::{voxel_downsample, DEFAULT_LEAF};
use super::ransac::{ransac_plane, DEFAULT_DISTANCE, DEFAULT_ITERATIONS};
use super::svm::{svm_classify, Recognition, SvmModel};
use crate::error::{Error, Result};
use crate::pose::Pose;

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionParams {
    pub leaf: f64,
    pub ransac_iters: usize,
    pub ransac_distance: f64,
    /// Number of dominant planes to strip.
    pub planes: usize,
    pub epsilon: f64,
    pub min_pts: usize,
    pub seed: u64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            leaf: DEFAULT_LEAF,
            ransac_iters: DEFAULT_ITERATIONS,
            ransac_distance: DEFAULT_DISTANCE,
            planes: 1,
            epsilon: DEFAULT_EPSILON,
            min_pts: DEFAULT_MIN_PTS,
            seed: 0,
        }
    }
}

/// Candidate objects after plane removal, with the cloud their indices refer to.
pub struct Segmentation {
    pub objects: PointCloud,
    pub clusters: Vec<Cluster>,
}

pub fn segment(cloud: &PointCloud, params: &DetectionParams) -> Result<Segmentation> {
    cloud.validate()?;
    let mut rest = voxel_downsample(cloud, params.leaf)?;
    for k in 0..params.planes {
        if rest.len() < 3 {
            break;
        }
        match ransac_plane(&rest, params.ransac_iters, params.ransac_distance, params.seed.wrapping_add(k as u64)) {
            Ok((_, outliers)) => rest = outliers,
            Err(Error::DegenerateData(_)) => break,
            Err(e) => return Err(e),
        }
    }
    let clusters = if rest.is_empty() {
        Vec::new()
    } else {
        euclidean_cluster(&rest, params.epsilon, params.min_pts)?
    };
    Ok(Segmentation { objects: rest, clusters })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub recognition: Recognition,
    /// Object to camera.
    pub pose: Pose,
    pub points: usize,
    /// Extents along the principal axes, largest first.
    pub extents: Vector3<f64>,
    pub features: FeatureVector,
}

fn principal_extents(cloud: &PointCloud, c: &Cluster) -> Vector3<f64> {
    Vector3::from_fn(|k, _| {
        let a = c.principal_axes.column(k);
        let (lo, hi) = c.indices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let v = a.dot(&(cloud.points[i].position - c.centroid));
            (lo.min(v), hi.max(v))
        });
        hi - lo
    })
}

/// Runs the full pipeline; one detection per surviving cluster, largest first.
pub fn detect_objects(cloud: &PointCloud, model: &SvmModel, params: &DetectionParams) -> Result<Vec<Detection>> {
    let seg = segment(cloud, params)?;
    seg.clusters
        .iter()
        .map(|c| {
            let features = compute_features(&seg.objects, c)?;
            Ok(Detection {
                recognition: svm_classify(model, &features.to_vec())?,
                pose: centroid_pose(c),
                points: c.len(),
                extents: principal_extents(&seg.objects, c),
                features,
            })
        })
        .collect()
}

pub const DETECTIONS_HEADER: [&str; 13] = [
    "label", "confidence", "points", "x", "y", "z", "qw", "qx", "qy", "qz", "extent_1", "extent_2", "extent_3",
];

/// One row per detection. Poses are mapped through `to_frame` (for example
/// camera to robot base); rejected candidates get the label `unknown`.
pub fn format_detections(detections: &[Detection], to_frame: &Pose) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DETECTIONS_HEADER)?;
    for d in detections {
        let pose = to_frame.compose(&d.pose);
        let mut row = vec![
            d.recognition.label().unwrap_or("unknown").to_string(),
            format!("{}", d.recognition.confidence()),
            d.points.to_string(),
        ];
        row.extend(pose.translation.iter().map(|v| format!("{v}")));
        row.extend(pose.quaternion().iter().map(|v| format!("{v}")));
        row.extend(d.extents.iter().map(|v| format!("{v}")));
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// Features of the largest candidate in a single-object scene.
pub fn largest_cluster_features(cloud: &PointCloud, params: &DetectionParams) -> Result<FeatureVector> {
    let seg = segment(cloud, params)?;
    let c = seg
        .clusters
        .first()
        .ok_or_else(|| Error::EmptyInput("no cluster survived segmentation".into()))?;
    compute_features(&seg.objects, c)
}
