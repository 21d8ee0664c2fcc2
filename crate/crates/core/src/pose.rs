//! Rigid transforms.

use nalgebra::{Matrix3, Matrix4, Quaternion, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ORTHONORMAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let p = Self {
            rotation,
            translation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Rotation about `axis` by `angle` followed by a translation.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64, t: Vector3<f64>) -> Self {
        let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle);
        Self {
            rotation: *r.matrix(),
            translation: t,
        }
    }

    /// Quaternion in `[w, x, y, z]` order; it is normalized first.
    pub fn from_quaternion(q: [f64; 4], t: [f64; 3]) -> Result<Self> {
        let raw = Quaternion::new(q[0], q[1], q[2], q[3]);
        let n = raw.norm();
        if !(n.is_finite() && n > 1e-12) || t.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("pose quaternion must be finite and nonzero"));
        }
        let uq = UnitQuaternion::from_quaternion(raw);
        Ok(Self {
            rotation: *uq.to_rotation_matrix().matrix(),
            translation: Vector3::from(t),
        })
    }

    pub fn quaternion(&self) -> [f64; 4] {
        let r = Rotation3::from_matrix_unchecked(self.rotation);
        let q = UnitQuaternion::from_rotation_matrix(&r);
        [q.w, q.i, q.j, q.k]
    }

    pub fn validate(&self) -> Result<()> {
        if self.rotation.iter().chain(self.translation.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("pose contains non-finite values"));
        }
        let ortho = (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax();
        let det = self.rotation.determinant();
        if ortho > ORTHONORMAL_TOL || (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::invalid(format!(
                "rotation is not proper orthonormal (|RᵀR − I| = {ortho:e}, det = {det})"
            )));
        }
        Ok(())
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn from_homogeneous(m: &Matrix4<f64>) -> Result<Self> {
        Self::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
        )
    }
}

/// Serialized pose: unit quaternion `[w, x, y, z]` and translation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub quaternion: [f64; 4],
    pub translation: [f64; 3],
}

impl PoseRecord {
    pub fn to_pose(&self) -> Result<Pose> {
        Pose::from_quaternion(self.quaternion, self.translation)
    }
}

impl From<&Pose> for PoseRecord {
    fn from(p: &Pose) -> Self {
        PoseRecord {
            quaternion: p.quaternion(),
            translation: p.translation.into(),
        }
    }
}
