//! Synthetic grasp-and-manipulate demonstrations over parametric objects.
//!
//! Each demonstration runs on `t ∈ [0, 1]`: the hand moves from a pre-shape to
//! an object-dependent grasp posture by `t = 0.5`, then follows a manipulation
//! ramp. Postures are `q0 + v₁e₁(t) + v₂e₂(t)` plus a small object-specific
//! joint pattern and measurement noise.

use nalgebra::{Vector2, Vector6};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::frames::min_jerk;
use crate::hand::{HandModel, JointConfig};
use crate::rng;
use crate::synergy::{build_config_matrix, extract_synergies, SynergySubspace, DEFAULT_COMPONENTS};

pub const GRASP_TIME: f64 = 0.5;
pub const END_TIME: f64 = 1.0;
pub const DEFAULT_SAMPLES: usize = 51;
pub const DEFAULT_NOISE: f64 = 0.003;
pub const PRE_SHAPE: [f64; 2] = [-0.6, 0.12];

/// The two underlying joint-space directions.
pub fn synergy_directions() -> (Vector6<f64>, Vector6<f64>) {
    let v1 = Vector6::new(0.55, 0.45, 0.45, 0.4, 0.35, 0.1).normalize();
    let raw = Vector6::new(-0.2, 0.5, 0.1, -0.3, -0.5, 0.6);
    let v2 = (raw - v1 * v1.dot(&raw)).normalize();
    (v1, v2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemoObject {
    pub name: String,
    pub grasp: Vector2<f64>,
    pub manip_end: Vector2<f64>,
    /// Object-specific joint pattern (unit) and its amplitude in radians.
    pub detail: Vector6<f64>,
    pub detail_amp: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Demonstration {
    pub object: String,
    pub samples: Vec<JointConfig>,
}

impl Demonstration {
    pub fn grasp_phase(&self) -> Vec<JointConfig> {
        self.samples
            .iter()
            .filter(|q| q.timestamp.unwrap_or(0.0) <= GRASP_TIME + 1e-12)
            .copied()
            .collect()
    }

    pub fn manipulation_phase(&self) -> Vec<JointConfig> {
        self.samples
            .iter()
            .filter(|q| q.timestamp.unwrap_or(0.0) >= GRASP_TIME - 1e-12)
            .copied()
            .collect()
    }
}

/// Noise-free synergy coefficients of `obj` at time `t`.
pub fn coefficient_path(obj: &DemoObject, t: f64) -> Vector2<f64> {
    let pre = Vector2::from(PRE_SHAPE);
    if t <= GRASP_TIME {
        pre + (obj.grasp - pre) * min_jerk(t / GRASP_TIME)
    } else {
        let s = min_jerk((t - GRASP_TIME) / (END_TIME - GRASP_TIME));
        obj.grasp + (obj.manip_end - obj.grasp) * s
    }
}

/// `count` objects with seeded sizes, grasp postures and manipulation ramps.
pub fn demo_objects(seed: u64, prefix: &str, count: usize) -> Vec<DemoObject> {
    (0..count)
        .map(|i| {
            let mut r = rng::keyed(seed, prefix, i as u64);
            let radius = r.random_range(0.02..0.036);
            let family = i % 3;
            let g1 = 0.9 - 30.0 * radius + r.random_range(-0.03..0.03);
            let g2 = [0.2, 0.34, 0.28][family] + r.random_range(-0.04..0.04);
            let angle = r.random_range(0.0..std::f64::consts::TAU);
            let len = r.random_range(0.12..0.24);
            let manip = Vector2::new(g1 + len * angle.cos(), (g2 + len * angle.sin()).max(0.15));
            let detail = Vector6::from_fn(|_, _| r.random_range(-1.0..1.0)).normalize();
            DemoObject {
                name: format!("{prefix}{i:02}"),
                grasp: Vector2::new(g1, g2),
                manip_end: manip,
                detail,
                detail_amp: r.random_range(0.012..0.025),
            }
        })
        .collect()
}

pub fn generate_demo<R: Rng + ?Sized>(
    obj: &DemoObject,
    q0: &JointConfig,
    samples: usize,
    noise: f64,
    rng: &mut R,
) -> Demonstration {
    let (v1, v2) = synergy_directions();
    let n = Normal::new(0.0, noise.max(0.0)).expect("finite noise");
    let out = (0..samples)
        .map(|k| {
            let t = END_TIME * k as f64 / (samples - 1) as f64;
            let e = coefficient_path(obj, t);
            let bump = (std::f64::consts::PI * t).sin() * obj.detail_amp;
            let jitter = Vector6::from_fn(|_, _| n.sample(rng));
            JointConfig::at(t, q0.angles + v1 * e.x + v2 * e.y + obj.detail * bump + jitter)
        })
        .collect();
    Demonstration {
        object: obj.name.clone(),
        samples: out,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemoDataset {
    pub q0: JointConfig,
    pub train: Vec<Demonstration>,
    pub test: Vec<Demonstration>,
}

impl DemoDataset {
    pub fn train_samples(&self) -> Vec<JointConfig> {
        self.train.iter().flat_map(|d| d.samples.iter().copied()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DatasetSpec {
    pub train_objects: usize,
    pub repeats: usize,
    pub test_objects: usize,
    pub samples: usize,
    pub noise: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            train_objects: 8,
            repeats: 3,
            test_objects: 4,
            samples: DEFAULT_SAMPLES,
            noise: DEFAULT_NOISE,
        }
    }
}

pub fn benchmark_dataset(q0: &JointConfig, spec: &DatasetSpec, seed: u64) -> DemoDataset {
    let train_objs = demo_objects(seed, "train", spec.train_objects);
    let test_objs = demo_objects(seed, "test", spec.test_objects);
    let mut train = Vec::new();
    for (i, o) in train_objs.iter().enumerate() {
        for rep in 0..spec.repeats {
            let mut r = rng::keyed(seed, "train-noise", (i * spec.repeats + rep) as u64);
            train.push(generate_demo(o, q0, spec.samples, spec.noise, &mut r));
        }
    }
    let test = test_objs
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let mut r = rng::keyed(seed, "test-noise", i as u64);
            generate_demo(o, q0, spec.samples, spec.noise, &mut r)
        })
        .collect();
    DemoDataset {
        q0: *q0,
        train,
        test,
    }
}

/// The two-component subspace learned from the seed-0 benchmark training set.
pub fn default_subspace(model: &HandModel) -> Result<SynergySubspace> {
    let data = benchmark_dataset(&model.nominal(), &DatasetSpec::default(), 0);
    let c = build_config_matrix(&data.train_samples(), &model.nominal())?;
    extract_synergies(&c, DEFAULT_COMPONENTS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_orthonormal() {
        let (a, b) = synergy_directions();
        assert!((a.norm() - 1.0).abs() < 1e-15 && (b.norm() - 1.0).abs() < 1e-15);
        assert!(a.dot(&b).abs() < 1e-15);
    }

    #[test]
    fn dataset_is_deterministic() {
        let q0 = HandModel::default_model().nominal();
        let a = benchmark_dataset(&q0, &DatasetSpec::default(), 4);
        let b = benchmark_dataset(&q0, &DatasetSpec::default(), 4);
        assert_eq!(a, b);
        assert_eq!(a.train.len(), 24);
        assert_eq!(a.test[0].samples.len(), DEFAULT_SAMPLES);
    }

    #[test]
    fn path_hits_grasp_at_grasp_time() {
        let obj = &demo_objects(1, "x", 1)[0];
        assert!((coefficient_path(obj, GRASP_TIME) - obj.grasp).norm() < 1e-15);
        assert!((coefficient_path(obj, END_TIME) - obj.manip_end).norm() < 1e-15);
    }

    #[test]
    fn default_subspace_first_component_closes_the_hand() {
        let sub = default_subspace(&HandModel::default_model()).unwrap();
        assert_eq!(sub.components(), 2);
        // flexion joints all increase with the first coefficient
        assert!((0..5).all(|j| sub.basis[(j, 0)] > 0.0), "{}", sub.basis);
    }
}
