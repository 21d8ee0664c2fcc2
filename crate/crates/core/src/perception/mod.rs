//! Tabletop object perception: point clouds, segmentation, features and
//! recognition.

pub mod cloud;
pub mod cluster;
pub mod corpus;
pub mod features;
pub mod filter;
pub mod kdtree;
pub mod pipeline;
pub mod ransac;
pub mod scene;
pub mod svm;

pub use cloud::{load_pcd, save_pcd, Point, PointCloud};
pub use cluster::{centroid_pose, euclidean_cluster, Cluster};
pub use corpus::{build_corpus, evaluate_confusion, reference_svm, Confusion, Corpus};
pub use features::{compute_features, FeatureVector};
pub use filter::voxel_downsample;
pub use pipeline::{detect_objects, format_detections, Detection, DetectionParams};
pub use ransac::{ransac_plane, Plane};
pub use scene::{generate_scene, Scene, SceneSpec};
pub use svm::{svm_classify, svm_train, Recognition, SvmModel, SvmParams};
