//! Kinematic model of a six-actuator, five-finger hand.
//!
//! Joint layout (actuator indices):
//!
//! | index | joint                                   |
//! |-------|-----------------------------------------|
//! | 0     | thumb flexion                           |
//! | 1..=4 | index, middle, ring, little flexion     |
//! | 5     | thumb base rotation about palm normal   |
//!
//! Every finger is a serial chain of revolute joints. A chain joint is driven by
//! one actuator through a fixed coupling ratio, which is how the under-actuated
//! medial joints follow their proximal joints.
//!
//! The palm frame has `x` pointing toward the fingers, `y` lateral (index side
//! positive) and `z` along the palm normal, toward the grasped object.

use nalgebra::{DMatrix, Matrix3, Rotation3, Unit, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const JOINT_COUNT: usize = 6;
pub const FINGER_COUNT: usize = 5;
pub const HAND_MODEL_SCHEMA: &str = "hand_model.v1";

const DEFAULT_MODEL: &str = include_str!("../assets/hand_model.v1.json");

/// Hand joint angles in radians, optionally time-stamped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointConfig {
    pub angles: Vector6<f64>,
    pub timestamp: Option<f64>,
}

impl JointConfig {
    pub fn new(angles: Vector6<f64>) -> Self {
        Self {
            angles,
            timestamp: None,
        }
    }

    pub fn at(t: f64, angles: Vector6<f64>) -> Self {
        Self {
            angles,
            timestamp: Some(t),
        }
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() != JOINT_COUNT {
            return Err(Error::invalid(format!(
                "joint configuration needs {JOINT_COUNT} angles, got {}",
                values.len()
            )));
        }
        Ok(Self::new(Vector6::from_column_slice(values)))
    }

    pub fn zeros() -> Self {
        Self::new(Vector6::zeros())
    }

    pub fn is_finite(&self) -> bool {
        self.angles.iter().all(|a| a.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid("joint configuration has non-finite angles"))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainJoint {
    /// Actuator that drives this joint.
    pub actuator: usize,
    /// Joint angle = ratio * actuator angle.
    pub ratio: f64,
    /// Rotation axis in the joint's parent frame.
    pub axis: [f64; 3],
    /// Translation to the next joint (or fingertip) in the rotated frame.
    pub link: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FingerChain {
    pub name: String,
    pub base_position: [f64; 3],
    /// Row-major base orientation in the palm frame.
    pub base_rotation: [[f64; 3]; 3],
    pub joints: Vec<ChainJoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandModel {
    pub schema: String,
    pub fingers: Vec<FingerChain>,
    pub joint_limits: [[f64; 2]; JOINT_COUNT],
    pub nominal_posture: [f64; JOINT_COUNT],
    /// Point in the palm frame where virtual objects are placed.
    pub grasp_center: [f64; 3],
}

impl HandModel {
    /// The shipped default model.
    pub fn default_model() -> Self {
        Self::from_json(DEFAULT_MODEL).expect("bundled hand model is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: HandModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != HAND_MODEL_SCHEMA {
            return Err(Error::Format(format!(
                "expected schema {HAND_MODEL_SCHEMA}, found {}",
                self.schema
            )));
        }
        if self.fingers.len() != FINGER_COUNT {
            return Err(Error::invalid(format!(
                "hand needs {FINGER_COUNT} finger chains, got {}",
                self.fingers.len()
            )));
        }
        for f in &self.fingers {
            if f.joints.is_empty() {
                return Err(Error::invalid(format!("finger `{}` has no joints", f.name)));
            }
            let r = row_major(&f.base_rotation);
            if (r.transpose() * r - Matrix3::identity()).amax() > 1e-9 || (r.determinant() - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!(
                    "finger `{}` base rotation is not a rotation",
                    f.name
                )));
            }
            for j in &f.joints {
                if j.actuator >= JOINT_COUNT {
                    return Err(Error::invalid(format!(
                        "finger `{}` references actuator {}",
                        f.name, j.actuator
                    )));
                }
                let axis = Vector3::from(j.axis);
                if (axis.norm() - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid(format!("finger `{}` has a non-unit axis", f.name)));
                }
                if Vector3::from(j.link).norm() <= 0.0 {
                    return Err(Error::invalid(format!(
                        "finger `{}` has a zero-length link",
                        f.name
                    )));
                }
            }
        }
        for (i, [lo, hi]) in self.joint_limits.iter().enumerate() {
            if !(lo < hi) {
                return Err(Error::invalid(format!("joint {i} limits are not ordered")));
            }
            let q = self.nominal_posture[i];
            if q < *lo || q > *hi {
                return Err(Error::invalid(format!(
                    "nominal posture joint {i} lies outside its limits"
                )));
            }
        }
        Ok(())
    }

    pub fn nominal(&self) -> JointConfig {
        JointConfig::new(Vector6::from(self.nominal_posture))
    }

    pub fn grasp_center(&self) -> Vector3<f64> {
        Vector3::from(self.grasp_center)
    }

    /// Actuators that move finger `finger`.
    pub fn finger_actuators(&self, finger: usize) -> Vec<usize> {
        let mut acts: Vec<usize> = self.fingers[finger].joints.iter().map(|j| j.actuator).collect();
        acts.sort_unstable();
        acts.dedup();
        acts
    }

    /// Upper bound on the fingertip speed per unit joint speed, usable as a
    /// Lipschitz constant for forward kinematics.
    pub fn lipschitz_bound(&self) -> f64 {
        self.fingers
            .iter()
            .map(|f| {
                let reach: f64 = f.joints.iter().map(|j| Vector3::from(j.link).norm()).sum();
                let ratio: f64 = f.joints.iter().map(|j| j.ratio.abs()).sum();
                reach * ratio
            })
            .sum::<f64>()
    }

    fn chain_frames(&self, finger: usize, q: &JointConfig) -> (Vector3<f64>, Vec<(Vector3<f64>, Vector3<f64>, usize, f64)>) {
        let chain = &self.fingers[finger];
        let mut rot = row_major(&chain.base_rotation);
        let mut pos = Vector3::from(chain.base_position);
        let mut joints = Vec::with_capacity(chain.joints.len());
        for j in &chain.joints {
            let axis_world = rot * Vector3::from(j.axis);
            joints.push((pos, axis_world, j.actuator, j.ratio));
            let angle = j.ratio * q.angles[j.actuator];
            let r = Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::from(j.axis)), angle);
            rot *= r.matrix();
            pos += rot * Vector3::from(j.link);
        }
        (pos, joints)
    }

    /// Fingertip positions (thumb, index, middle, ring, little) in the palm frame.
    pub fn forward_kinematics(&self, q: &JointConfig) -> Result<[Vector3<f64>; FINGER_COUNT]> {
        q.validate()?;
        Ok(std::array::from_fn(|f| self.chain_frames(f, q).0))
    }

    /// Stacked 15x6 linear-velocity Jacobian of all fingertips.
    pub fn fingertip_jacobian(&self, q: &JointConfig) -> Result<DMatrix<f64>> {
        q.validate()?;
        let mut jac = DMatrix::zeros(3 * FINGER_COUNT, JOINT_COUNT);
        for f in 0..FINGER_COUNT {
            let (tip, joints) = self.chain_frames(f, q);
            for (origin, axis, act, ratio) in joints {
                let col = axis.cross(&(tip - origin)) * ratio;
                for k in 0..3 {
                    jac[(3 * f + k, act)] += col[k];
                }
            }
        }
        Ok(jac)
    }

    pub fn clamp_to_limits(&self, q: &JointConfig) -> JointConfig {
        self.clamp_with_report(q).0
    }

    /// Clamps into the joint limits and reports which joints were clipped.
    pub fn clamp_with_report(&self, q: &JointConfig) -> (JointConfig, Vec<usize>) {
        let mut out = *q;
        let mut clipped = Vec::new();
        for i in 0..JOINT_COUNT {
            let [lo, hi] = self.joint_limits[i];
            let v = q.angles[i].clamp(lo, hi);
            if v != q.angles[i] {
                clipped.push(i);
            }
            out.angles[i] = v;
        }
        (out, clipped)
    }

    pub fn within_limits(&self, q: &JointConfig) -> bool {
        (0..JOINT_COUNT).all(|i| {
            let [lo, hi] = self.joint_limits[i];
            q.angles[i] >= lo && q.angles[i] <= hi
        })
    }
}

fn row_major(m: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::new(
        m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_joint_model() -> HandModel {
        let mut m = HandModel::default_model();
        m.fingers[1].joints = vec![ChainJoint {
            actuator: 1,
            ratio: 1.0,
            axis: [0.0, 0.0, 1.0],
            link: [0.05, 0.0, 0.0],
        }];
        m
    }

    #[test]
    fn default_model_validates() {
        let m = HandModel::default_model();
        assert_eq!(m.fingers.len(), FINGER_COUNT);
        assert!(m.within_limits(&m.nominal()));
    }

    #[test]
    fn nan_angle_is_rejected() {
        let m = HandModel::default_model();
        let mut q = m.nominal();
        q.angles[2] = f64::NAN;
        assert!(matches!(m.forward_kinematics(&q), Err(Error::InvalidInput(_))));
        assert!(m.fingertip_jacobian(&q).is_err());
    }

    #[test]
    fn single_joint_rotation_matches_rotation_matrix() {
        let m = one_joint_model();
        let mut q = JointConfig::zeros();
        let base = Vector3::from(m.fingers[1].base_position);
        let tip0 = m.forward_kinematics(&q).unwrap()[1];
        q.angles[1] = std::f64::consts::FRAC_PI_2;
        let tip = m.forward_kinematics(&q).unwrap()[1];
        let rz = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let expected = base + rz * (tip0 - base);
        assert!((tip - expected).amax() < 1e-12);
    }

    #[test]
    fn single_link_jacobian_is_perpendicular_with_link_length() {
        let m = one_joint_model();
        let j = m.fingertip_jacobian(&JointConfig::zeros()).unwrap();
        let col = Vector3::new(j[(3, 1)], j[(4, 1)], j[(5, 1)]);
        assert!((col - Vector3::new(0.0, 0.05, 0.0)).amax() < 1e-12);
    }

    #[test]
    fn fingers_do_not_depend_on_foreign_actuators() {
        let m = HandModel::default_model();
        let j = m.fingertip_jacobian(&m.nominal()).unwrap();
        // index finger rows vs. middle finger actuator
        for r in 3..6 {
            assert_eq!(j[(r, 2)], 0.0);
            assert_eq!(j[(r, 5)], 0.0);
        }
    }

    #[test]
    fn clamp_behaviour() {
        let m = HandModel::default_model();
        let q = m.nominal();
        assert_eq!(m.clamp_to_limits(&q), q);
        let mut over = q;
        over.angles[3] = m.joint_limits[3][1] + 0.1;
        let (c, clipped) = m.clamp_with_report(&over);
        assert_eq!(c.angles[3], m.joint_limits[3][1]);
        assert_eq!(clipped, vec![3]);
    }
}
