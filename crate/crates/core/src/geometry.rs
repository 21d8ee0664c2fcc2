//! Primitive solids: spheres, boxes, cylinders and cones.
//!
//! Cylinders and cones have their axis along local `z` and are centered at
//! mid-height. Closest points on them are found on the revolved (ρ, z) profile.

use nalgebra::{Vector2, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::Pose;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    Sphere { radius: f64 },
    Box { size: [f64; 3] },
    Cylinder { radius: f64, height: f64 },
    Cone { radius: f64, height: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub point: Vector3<f64>,
    pub normal: Vector3<f64>,
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        let dims: Vec<f64> = match *self {
            Shape::Sphere { radius } => vec![radius],
            Shape::Box { size } => size.to_vec(),
            Shape::Cylinder { radius, height } | Shape::Cone { radius, height } => vec![radius, height],
        };
        if dims.iter().all(|d| d.is_finite() && *d > 0.0) {
            Ok(())
        } else {
            Err(Error::invalid(format!("object dimensions must be positive: {self:?}")))
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Shape::Sphere { .. } => "sphere",
            Shape::Box { .. } => "box",
            Shape::Cylinder { .. } => "cylinder",
            Shape::Cone { .. } => "cone",
        }
    }

    /// Full extents along local x, y, z.
    pub fn extents(&self) -> Vector3<f64> {
        match *self {
            Shape::Sphere { radius } => Vector3::repeat(2.0 * radius),
            Shape::Box { size } => Vector3::from(size),
            Shape::Cylinder { radius, height } | Shape::Cone { radius, height } => {
                Vector3::new(2.0 * radius, 2.0 * radius, height)
            }
        }
    }

    /// Distance from the center to the farthest surface point.
    pub fn bounding_radius(&self) -> f64 {
        self.extents().norm() * 0.5
    }

    fn profile(&self) -> Option<Vec<Vector2<f64>>> {
        match *self {
            Shape::Cylinder { radius: r, height: h } => Some(vec![
                Vector2::new(0.0, -h / 2.0),
                Vector2::new(r, -h / 2.0),
                Vector2::new(r, h / 2.0),
                Vector2::new(0.0, h / 2.0),
            ]),
            Shape::Cone { radius: r, height: h } => Some(vec![
                Vector2::new(0.0, -h / 2.0),
                Vector2::new(r, -h / 2.0),
                Vector2::new(0.0, h / 2.0),
            ]),
            _ => None,
        }
    }

    fn contains_local(&self, p: &Vector3<f64>) -> bool {
        match *self {
            Shape::Sphere { radius } => p.norm() <= radius,
            Shape::Box { size } => (0..3).all(|k| p[k].abs() <= size[k] / 2.0),
            Shape::Cylinder { radius, height } => p.xy().norm() <= radius && p.z.abs() <= height / 2.0,
            Shape::Cone { radius, height } => {
                p.z.abs() <= height / 2.0 && p.xy().norm() <= radius * (height / 2.0 - p.z) / height
            }
        }
    }

    /// Closest surface point (and outward normal) to `p`, in the local frame.
    pub fn closest_surface_local(&self, p: &Vector3<f64>) -> SurfacePoint {
        match *self {
            Shape::Sphere { radius } => {
                let n = if p.norm() > 1e-15 { p.normalize() } else { Vector3::z() };
                SurfacePoint {
                    point: n * radius,
                    normal: n,
                }
            }
            Shape::Box { size } => closest_on_box(&(Vector3::from(size) * 0.5), p),
            _ => {
                let profile = self.profile().expect("revolved shape");
                closest_on_revolved(&profile, p)
            }
        }
    }

    /// Negative inside, positive outside.
    pub fn signed_distance_local(&self, p: &Vector3<f64>) -> f64 {
        let d = (self.closest_surface_local(p).point - p).norm();
        if self.contains_local(p) {
            -d
        } else {
            d
        }
    }

    /// Area-weighted uniform sample of the surface.
    pub fn sample_surface<R: Rng + ?Sized>(&self, rng: &mut R) -> SurfacePoint {
        match *self {
            Shape::Sphere { radius } => {
                let v = Vector3::from_fn(|_, _| StandardNormal.sample(rng));
                let n = if v.norm() > 1e-12 { v.normalize() } else { Vector3::z() };
                SurfacePoint {
                    point: n * radius,
                    normal: n,
                }
            }
            Shape::Box { size } => {
                let areas = [size[1] * size[2], size[0] * size[2], size[0] * size[1]];
                let total = 2.0 * (areas[0] + areas[1] + areas[2]);
                let mut pick = rng.random::<f64>() * total;
                let mut face = 5;
                for f in 0..6 {
                    if pick < areas[f / 2] {
                        face = f;
                        break;
                    }
                    pick -= areas[f / 2];
                }
                let axis = face / 2;
                let sign = if face % 2 == 0 { 1.0 } else { -1.0 };
                let mut point = Vector3::from_fn(|k, _| (rng.random::<f64>() - 0.5) * size[k]);
                point[axis] = sign * size[axis] / 2.0;
                let mut normal = Vector3::zeros();
                normal[axis] = sign;
                SurfacePoint { point, normal }
            }
            Shape::Cylinder { radius: r, height: h } => {
                let side = 2.0 * std::f64::consts::PI * r * h;
                let cap = std::f64::consts::PI * r * r;
                let pick = rng.random::<f64>() * (side + 2.0 * cap);
                let phi = rng.random::<f64>() * std::f64::consts::TAU;
                let (s, c) = phi.sin_cos();
                if pick < side {
                    let z = (rng.random::<f64>() - 0.5) * h;
                    SurfacePoint {
                        point: Vector3::new(r * c, r * s, z),
                        normal: Vector3::new(c, s, 0.0),
                    }
                } else {
                    let rho = r * rng.random::<f64>().sqrt();
                    let top = pick < side + cap;
                    let z = if top { h / 2.0 } else { -h / 2.0 };
                    SurfacePoint {
                        point: Vector3::new(rho * c, rho * s, z),
                        normal: Vector3::new(0.0, 0.0, z.signum()),
                    }
                }
            }
            Shape::Cone { radius: r, height: h } => {
                let slant = (r * r + h * h).sqrt();
                let lateral = std::f64::consts::PI * r * slant;
                let base = std::f64::consts::PI * r * r;
                let phi = rng.random::<f64>() * std::f64::consts::TAU;
                let (s, c) = phi.sin_cos();
                if rng.random::<f64>() * (lateral + base) < lateral {
                    let u = rng.random::<f64>().sqrt();
                    let rho = r * u;
                    let z = h / 2.0 - h * u;
                    let n = Vector2::new(h, r).normalize();
                    SurfacePoint {
                        point: Vector3::new(rho * c, rho * s, z),
                        normal: Vector3::new(n.x * c, n.x * s, n.y),
                    }
                } else {
                    let rho = r * rng.random::<f64>().sqrt();
                    SurfacePoint {
                        point: Vector3::new(rho * c, rho * s, -h / 2.0),
                        normal: -Vector3::z(),
                    }
                }
            }
        }
    }
}

fn closest_on_box(half: &Vector3<f64>, p: &Vector3<f64>) -> SurfacePoint {
    let outside = (0..3).any(|k| p[k].abs() > half[k]);
    let mut point = *p;
    let mut normal = Vector3::zeros();
    if outside {
        let mut axis = 0;
        let mut excess = f64::NEG_INFINITY;
        for k in 0..3 {
            point[k] = p[k].clamp(-half[k], half[k]);
            let e = p[k].abs() - half[k];
            if e > excess {
                excess = e;
                axis = k;
            }
        }
        normal[axis] = p[axis].signum();
    } else {
        let axis = (0..3)
            .min_by(|&a, &b| (half[a] - p[a].abs()).total_cmp(&(half[b] - p[b].abs())))
            .unwrap_or(0);
        let sign = if p[axis] >= 0.0 { 1.0 } else { -1.0 };
        point[axis] = sign * half[axis];
        normal[axis] = sign;
    }
    SurfacePoint { point, normal }
}

fn closest_on_revolved(profile: &[Vector2<f64>], p: &Vector3<f64>) -> SurfacePoint {
    let rho = p.xy().norm();
    let (c, s) = if rho > 1e-15 { (p.x / rho, p.y / rho) } else { (1.0, 0.0) };
    let q = Vector2::new(rho, p.z);
    let mut best = (f64::INFINITY, Vector2::zeros(), Vector2::zeros());
    for w in profile.windows(2) {
        let d = w[1] - w[0];
        let t = ((q - w[0]).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
        let on = w[0] + d * t;
        let dist = (q - on).norm();
        if dist < best.0 {
            // outward normal of a counter-clockwise profile edge
            best = (dist, on, Vector2::new(d.y, -d.x).normalize());
        }
    }
    let (_, on, n) = best;
    SurfacePoint {
        point: Vector3::new(on.x * c, on.x * s, on.y),
        normal: Vector3::new(n.x * c, n.x * s, n.y),
    }
}

/// A shape placed in some frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlacedShape {
    pub shape: Shape,
    pub pose: Pose,
}

impl PlacedShape {
    pub fn closest_surface(&self, p: &Vector3<f64>) -> SurfacePoint {
        let local = self.pose.inverse().transform_point(p);
        let sp = self.shape.closest_surface_local(&local);
        SurfacePoint {
            point: self.pose.transform_point(&sp.point),
            normal: self.pose.transform_vector(&sp.normal),
        }
    }

    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        let local = self.pose.inverse().transform_point(p);
        self.shape.signed_distance_local(&local)
    }

    pub fn center(&self) -> Vector3<f64> {
        self.pose.translation
    }
}
