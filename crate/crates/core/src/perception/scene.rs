//! Synthetic tabletop scenes with ground truth.
//!
//! The world frame is the table (marker) frame: the table top is `z = 0` and
//! objects rest on it. Points are emitted in the camera frame, keeping only
//! surface samples that face the camera.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::cloud::{Point, PointCloud};
use crate::error::{Error, Result};
use crate::geometry::{PlacedShape, Shape};
use crate::pose::{Pose, PoseRecord};
use crate::rng;

pub const SCENE_SCHEMA: &str = "scene.v1";
pub const DEFAULT_DENSITY: f64 = 60_000.0;
pub const DEFAULT_NOISE: f64 = 0.001;
pub const DEFAULT_TABLE: [f64; 2] = [0.6, 0.6];
pub const DEFAULT_CAMERA_EYE: [f64; 3] = [0.0, -0.45, 0.55];

/// Camera pose (camera to world) looking from `eye` towards `target`.
/// Camera axes: `x` right, `y` down, `z` forward.
pub fn look_at(eye: Vector3<f64>, target: Vector3<f64>) -> Result<Pose> {
    let f = (target - eye)
        .try_normalize(1e-12)
        .ok_or_else(|| Error::invalid("camera eye and target coincide"))?;
    let right = f
        .cross(&Vector3::z())
        .try_normalize(1e-9)
        .ok_or_else(|| Error::invalid("camera cannot look straight up or down"))?;
    let down = f.cross(&right);
    Ok(Pose {
        rotation: Matrix3::from_columns(&[right, down, f]),
        translation: eye,
    })
}

pub fn default_camera() -> Pose {
    look_at(Vector3::from(DEFAULT_CAMERA_EYE), Vector3::zeros()).expect("valid default camera")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub label: String,
    #[serde(flatten)]
    pub shape: Shape,
    /// Object to world.
    pub pose: PoseRecord,
    pub color: [u8; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub schema: String,
    /// Table extents along world x and y; `None` for a scene without a table.
    pub table: Option<[f64; 2]>,
    pub table_color: [u8; 3],
    /// Camera to world.
    pub camera: PoseRecord,
    pub objects: Vec<SceneObject>,
    /// Surface samples per square meter before visibility culling.
    pub density: f64,
    pub noise_sigma: f64,
    /// Uniform clutter points as a fraction of the surface points.
    pub outlier_fraction: f64,
}

impl SceneSpec {
    pub fn new(objects: Vec<SceneObject>) -> Self {
        Self {
            schema: SCENE_SCHEMA.into(),
            table: Some(DEFAULT_TABLE),
            table_color: [150, 110, 70],
            camera: (&default_camera()).into(),
            objects,
            density: DEFAULT_DENSITY,
            noise_sigma: DEFAULT_NOISE,
            outlier_fraction: 0.0,
        }
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let s: Self = crate::io::read_json(path)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCENE_SCHEMA {
            return Err(Error::Format(format!("expected schema {SCENE_SCHEMA}, found {}", self.schema)));
        }
        if let Some(t) = self.table {
            if !t.iter().all(|v| v.is_finite() && *v > 0.0) {
                return Err(Error::invalid("table extents must be positive"));
            }
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::invalid("density must be positive"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid("noise sigma must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.outlier_fraction) {
            return Err(Error::invalid("outlier fraction must lie in [0, 1]"));
        }
        self.camera.to_pose()?;
        for o in &self.objects {
            o.shape.validate()?;
            o.pose.to_pose()?;
        }
        Ok(())
    }
}

/// What the generator knows about its output, expressed in the camera frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneTruth {
    pub plane_normal: Vector3<f64>,
    pub plane_offset: f64,
    /// Per point: `Some(k)` for object `k`, `None` for table or clutter.
    pub membership: Vec<Option<usize>>,
    pub labels: Vec<String>,
    /// Object to camera.
    pub poses: Vec<Pose>,
    /// Two objects' bounding spheres intersect.
    pub overlap_warning: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub cloud: PointCloud,
    pub truth: SceneTruth,
}

fn shaded(color: [u8; 3], normal: &Vector3<f64>, view: &Vector3<f64>) -> [u8; 3] {
    let k = 0.75 + 0.25 * normal.dot(view).clamp(0.0, 1.0);
    color.map(|c| (c as f64 * k).round() as u8)
}

fn surface_area(shape: &Shape) -> f64 {
    use std::f64::consts::PI;
    match *shape {
        Shape::Sphere { radius } => 4.0 * PI * radius * radius,
        Shape::Box { size: [a, b, c] } => 2.0 * (a * b + b * c + a * c),
        Shape::Cylinder { radius, height } => 2.0 * PI * radius * (radius + height),
        Shape::Cone { radius, height } => PI * radius * (radius + radius.hypot(height)),
    }
}

/// Samples a scene. Sample positions and noise depend on `seed`; geometry,
/// labels and poses do not.
pub fn generate_scene(spec: &SceneSpec, seed: u64) -> Result<Scene> {
    spec.validate()?;
    let camera = spec.camera.to_pose()?;
    let world_to_cam = camera.inverse();
    let eye = camera.translation;
    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0)).map_err(|e| Error::invalid(e.to_string()))?;

    let placed: Vec<PlacedShape> = spec
        .objects
        .iter()
        .map(|o| Ok(PlacedShape { shape: o.shape, pose: o.pose.to_pose()? }))
        .collect::<Result<_>>()?;
    let mut overlap_warning = false;
    for i in 0..placed.len() {
        for j in i + 1..placed.len() {
            let d = (placed[i].center() - placed[j].center()).norm();
            if d < placed[i].shape.bounding_radius() + placed[j].shape.bounding_radius() {
                overlap_warning = true;
            }
        }
    }

    let mut world_pts: Vec<(Vector3<f64>, [u8; 3], Option<usize>)> = Vec::new();
    if let Some([tx, ty]) = spec.table {
        let mut r = rng::keyed(seed, "scene-table", 0);
        let n = (tx * ty * spec.density).round() as usize;
        for _ in 0..n {
            let p = Vector3::new((r.random::<f64>() - 0.5) * tx, (r.random::<f64>() - 0.5) * ty, 0.0);
            // hidden under an object
            if placed.iter().any(|s| s.signed_distance(&p) < 0.0) {
                continue;
            }
            let view = (eye - p).normalize();
            world_pts.push((p, shaded(spec.table_color, &Vector3::z(), &view), None));
        }
    }
    for (k, (obj, s)) in spec.objects.iter().zip(&placed).enumerate() {
        let mut r = rng::keyed(seed, "scene-object", k as u64);
        let n = (surface_area(&obj.shape) * spec.density).round() as usize;
        for _ in 0..n {
            let sp = obj.shape.sample_surface(&mut r);
            let p = s.pose.transform_point(&sp.point);
            let normal = s.pose.transform_vector(&sp.normal);
            let view = (eye - p).normalize();
            if normal.dot(&view) <= 0.0 || p.z < 0.0 {
                continue;
            }
            world_pts.push((p, shaded(obj.color, &normal, &view), Some(k)));
        }
    }

    let mut r = rng::keyed(seed, "scene-noise", 0);
    let mut points = Vec::with_capacity(world_pts.len());
    let mut membership = Vec::with_capacity(world_pts.len());
    for (p, c, m) in world_pts {
        let jitter = Vector3::from_fn(|_, _| noise.sample(&mut r));
        points.push(Point::new(world_to_cam.transform_point(&(p + jitter)), c));
        membership.push(m);
    }

    let n_out = (points.len() as f64 * spec.outlier_fraction).round() as usize;
    if n_out > 0 {
        let mut r = rng::keyed(seed, "scene-outliers", 0);
        let [tx, ty] = spec.table.unwrap_or([0.5, 0.5]);
        for _ in 0..n_out {
            let p = Vector3::new(
                (r.random::<f64>() - 0.5) * tx,
                (r.random::<f64>() - 0.5) * ty,
                r.random::<f64>() * 0.3,
            );
            let c = [r.random(), r.random(), r.random()];
            points.push(Point::new(world_to_cam.transform_point(&p), c));
            membership.push(None);
        }
    }

    let plane_normal = world_to_cam.transform_vector(&Vector3::z());
    let plane_offset = plane_normal.dot(&world_to_cam.translation);
    Ok(Scene {
        cloud: PointCloud::new(points),
        truth: SceneTruth {
            plane_normal,
            plane_offset,
            membership,
            labels: spec.objects.iter().map(|o| o.label.clone()).collect(),
            poses: placed.iter().map(|s| world_to_cam.compose(&s.pose)).collect(),
            overlap_warning,
        },
    })
}

/// Object classes of the synthetic corpus: four primitive families in six
/// colors, each with its own size.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectClass {
    pub label: String,
    pub shape: Shape,
    pub color: [u8; 3],
}

pub const COLORS: [(&str, [u8; 3]); 6] = [
    ("white", [235, 235, 230]),
    ("red", [210, 40, 35]),
    ("yellow", [235, 215, 40]),
    ("green", [50, 170, 60]),
    ("blue", [40, 80, 200]),
    ("magenta", [200, 50, 190]),
];

pub fn class_catalog() -> Vec<ObjectClass> {
    let spheres = [0.030, 0.036, 0.025, 0.040, 0.033, 0.028];
    let boxes = [
        [0.06, 0.04, 0.08],
        [0.05, 0.05, 0.05],
        [0.09, 0.05, 0.03],
        [0.07, 0.07, 0.04],
        [0.04, 0.04, 0.10],
        [0.08, 0.06, 0.05],
    ];
    let cylinders = [(0.030, 0.10), (0.035, 0.07), (0.022, 0.12), (0.040, 0.09), (0.025, 0.15), (0.030, 0.13)];
    let cones = [(0.035, 0.08), (0.040, 0.10), (0.030, 0.09), (0.045, 0.07), (0.032, 0.11), (0.038, 0.12)];
    let mut out = Vec::new();
    for (k, (name, color)) in COLORS.iter().enumerate() {
        let shapes = [
            Shape::Sphere { radius: spheres[k] },
            Shape::Box { size: boxes[k] },
            Shape::Cylinder { radius: cylinders[k].0, height: cylinders[k].1 },
            Shape::Cone { radius: cones[k].0, height: cones[k].1 },
        ];
        for shape in shapes {
            out.push(ObjectClass {
                label: format!("{}_{name}", shape.family()),
                shape,
                color: *color,
            });
        }
    }
    out.sort_by(|a, b| a.label.cmp(&b.label));
    out
}

pub fn find_class(label: &str) -> Result<ObjectClass> {
    class_catalog()
        .into_iter()
        .find(|c| c.label == label)
        .ok_or_else(|| Error::invalid(format!("unknown object class `{label}`")))
}

/// Resting pose on the table at `(x, y)`, turned by `yaw`. Cylinders with odd
/// `variant` lie on their side.
pub fn resting_pose(shape: &Shape, x: f64, y: f64, yaw: f64, variant: usize) -> Pose {
    let yaw_rot = Pose::from_axis_angle(&Vector3::z(), yaw, Vector3::zeros()).rotation;
    let (tilt, height) = match *shape {
        Shape::Sphere { radius } => (Matrix3::identity(), radius),
        Shape::Box { size } => (Matrix3::identity(), size[2] / 2.0),
        Shape::Cylinder { radius, height } => {
            if variant % 2 == 1 {
                (Pose::from_axis_angle(&Vector3::x(), std::f64::consts::FRAC_PI_2, Vector3::zeros()).rotation, radius)
            } else {
                (Matrix3::identity(), height / 2.0)
            }
        }
        Shape::Cone { height, .. } => (Matrix3::identity(), height / 2.0),
    };
    Pose {
        rotation: yaw_rot * tilt,
        translation: Vector3::new(x, y, height),
    }
}

/// Single-object scene for class `class` in orientation `k`.
pub fn instance_spec(class: &ObjectClass, k: usize, tag: &str, seed: u64) -> SceneSpec {
    let mut r = rng::keyed(seed, &format!("instance-{tag}-{}", class.label), k as u64);
    let yaw = r.random::<f64>() * std::f64::consts::TAU;
    let x = (r.random::<f64>() - 0.5) * 0.12;
    let y = (r.random::<f64>() - 0.5) * 0.12;
    let pose = resting_pose(&class.shape, x, y, yaw, k);
    SceneSpec::new(vec![SceneObject {
        label: class.label.clone(),
        shape: class.shape,
        pose: (&pose).into(),
        color: class.color,
    }])
}
