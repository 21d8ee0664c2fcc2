//! Detected object poses in the robot base frame, and mapping of fingertip
//! goal motion into synergy coefficients.
//!
//! The velocity chain is `ė = Ê† W A_m† ṗ`, where `ṗ` stacks the five
//! fingertip goal velocities, `A_m` is the fingertip Jacobian and `W` is the
//! hand compliance normalized to unit mean diagonal.

use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PlacedShape, Shape};
use crate::hand::{HandModel, JointConfig, FINGER_COUNT, JOINT_COUNT};
use crate::linalg;
use crate::pose::{Pose, PoseRecord};
use crate::synergy::{SynergyCoeffs, SynergySubspace};

pub const FRAMES_SCHEMA: &str = "frames.v1";
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_END_COV: f64 = 1e-4;
pub const DEFAULT_VIA_COV: f64 = 1e-2;
pub const DEFAULT_ARM_REACH: f64 = 1.0;
/// Marker position in the robot base frame used by the bundled calibration.
pub const DEFAULT_MARKER_OFFSET: [f64; 3] = [0.40, 0.0, 0.0];
/// Largest fingertip displacement the virtual-object mapping accepts.
pub const DEFAULT_FINGER_WORKSPACE: f64 = 0.08;

/// `P_o^b = T_m^b · T_c^m · P_o^c`.
pub fn compose_to_base(t_m_b: &Pose, t_c_m: &Pose, p_o_c: &Pose) -> Result<Pose> {
    t_m_b.validate()?;
    t_c_m.validate()?;
    p_o_c.validate()?;
    Ok(t_m_b.compose(&t_c_m.compose(p_o_c)))
}

/// Calibration file with the marker-to-base and camera-to-marker transforms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FramesCalibration {
    pub schema: String,
    pub marker_to_base: PoseRecord,
    pub camera_to_marker: PoseRecord,
}

impl FramesCalibration {
    pub fn new(marker_to_base: &Pose, camera_to_marker: &Pose) -> Self {
        Self {
            schema: FRAMES_SCHEMA.into(),
            marker_to_base: marker_to_base.into(),
            camera_to_marker: camera_to_marker.into(),
        }
    }

    /// Marker at [`DEFAULT_MARKER_OFFSET`] with axes aligned to the base.
    pub fn with_camera(camera_to_marker: &Pose) -> Self {
        Self::new(&Pose::from_translation(Vector3::from(DEFAULT_MARKER_OFFSET)), camera_to_marker)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f: Self = crate::io::read_json(path)?;
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != FRAMES_SCHEMA {
            return Err(Error::Format(format!("expected schema {FRAMES_SCHEMA}, found {}", self.schema)));
        }
        self.poses().map(|_| ())
    }

    pub fn poses(&self) -> Result<(Pose, Pose)> {
        Ok((self.marker_to_base.to_pose()?, self.camera_to_marker.to_pose()?))
    }

    /// Camera frame to robot base frame.
    pub fn camera_to_base(&self) -> Result<Pose> {
        let (m_b, c_m) = self.poses()?;
        Ok(m_b.compose(&c_m))
    }

    pub fn to_base(&self, p_o_c: &Pose) -> Result<Pose> {
        let (m_b, c_m) = self.poses()?;
        compose_to_base(&m_b, &c_m, p_o_c)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MappingConfig {
    /// Motion transfer matrix, 15x6.
    pub a_m: DMatrix<f64>,
    pub c_h: DMatrix<f64>,
    pub subspace: SynergySubspace,
    pub dt: f64,
}

impl MappingConfig {
    pub fn new(a_m: DMatrix<f64>, c_h: DMatrix<f64>, subspace: SynergySubspace) -> Result<Self> {
        let cfg = Self {
            a_m,
            c_h,
            subspace,
            dt: DEFAULT_DT,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `A_m` from the fingertip Jacobian at posture `q`.
    pub fn at_posture(model: &HandModel, q: &JointConfig, c_h: DMatrix<f64>, subspace: SynergySubspace) -> Result<Self> {
        Self::new(model.fingertip_jacobian(q)?, c_h, subspace)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if self.a_m.shape() != (3 * FINGER_COUNT, JOINT_COUNT) {
            return Err(Error::invalid(format!("A_m is {:?}, expected 15x6", self.a_m.shape())));
        }
        if self.c_h.shape() != (JOINT_COUNT, JOINT_COUNT) {
            return Err(Error::invalid("compliance must be 6x6"));
        }
        let mean = self.c_h.trace() / JOINT_COUNT as f64;
        if !(mean > 0.0) {
            return Err(Error::invalid("compliance must have a positive mean diagonal"));
        }
        Ok(())
    }

    /// The full `S x 15` map from fingertip velocity to synergy velocity.
    pub fn chain(&self) -> DMatrix<f64> {
        let w = &self.c_h / (self.c_h.trace() / JOINT_COUNT as f64);
        self.subspace.pinv() * w * linalg::pinv(&self.a_m)
    }
}

pub fn object_to_synergy_velocity(cfg: &MappingConfig, p_dot: &DVector<f64>) -> Result<DVector<f64>> {
    cfg.validate()?;
    if p_dot.len() != 3 * FINGER_COUNT {
        return Err(Error::invalid(format!(
            "fingertip velocity has {} entries, expected {}",
            p_dot.len(),
            3 * FINGER_COUNT
        )));
    }
    Ok(cfg.chain() * p_dot)
}

/// Number of Euler samples on `[0, T]` including both ends.
pub fn sample_count(t_total: f64, dt: f64) -> usize {
    (t_total / dt + 1e-9).floor() as usize + 1
}

/// Explicit Euler with a state-dependent derivative. Returns `(t, e)` samples.
pub fn integrate_with_state<F>(
    dt: f64,
    e0: &DVector<f64>,
    t_total: f64,
    mut f: F,
) -> Result<Vec<(f64, DVector<f64>)>>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    if !(t_total > 0.0 && t_total.is_finite()) || !(dt > 0.0) {
        return Err(Error::invalid("integration horizon and step must be positive"));
    }
    let n = sample_count(t_total, dt);
    let mut out = Vec::with_capacity(n);
    let mut e = e0.clone();
    out.push((0.0, e.clone()));
    for k in 1..n {
        let t = (k - 1) as f64 * dt;
        let d = f(t, &e)?;
        if d.len() != e.len() {
            return Err(Error::invalid("derivative has the wrong dimension"));
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite derivative at step {}", k - 1)));
        }
        e += d * dt;
        out.push((k as f64 * dt, e.clone()));
    }
    Ok(out)
}

/// Euler integration of `ė = e_dot_fn(t)` at `cfg.dt`.
pub fn integrate_synergy<F>(
    cfg: &MappingConfig,
    e0: &SynergyCoeffs,
    mut e_dot_fn: F,
    t_total: f64,
) -> Result<Vec<(f64, SynergyCoeffs)>>
where
    F: FnMut(f64) -> DVector<f64>,
{
    let samples = integrate_with_state(cfg.dt, &e0.e, t_total, |t, _| Ok(e_dot_fn(t)))?;
    Ok(samples
        .into_iter()
        .map(|(t, e)| (t, SynergyCoeffs { e, phase: e0.phase }))
        .collect())
}

/// Minimum-jerk position profile on `[0, 1]`.
pub fn min_jerk(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

pub fn min_jerk_rate(s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    30.0 * s * s * (1.0 - s) * (1.0 - s)
}

/// A via- or end-point for KMP insertion.
#[derive(Clone, Debug, PartialEq)]
pub struct ViaPoint {
    pub t: f64,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl ViaPoint {
    pub fn to_row(&self) -> Vec<f64> {
        std::iter::once(self.t)
            .chain(self.mean.iter().copied())
            .chain(self.cov.diagonal().iter().copied())
            .collect()
    }

    /// Parses `t,mean_1..mean_S,cov_1..cov_S` (diagonal covariance).
    pub fn from_row(row: &[f64]) -> Result<Self> {
        if row.len() < 3 || !(row.len() - 1).is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "expected t followed by S means and S variances, got {} values",
                row.len()
            )));
        }
        let s = (row.len() - 1) / 2;
        let mean = DVector::from_column_slice(&row[1..=s]);
        let var = DVector::from_column_slice(&row[s + 1..]);
        if row.iter().any(|v| !v.is_finite()) || var.iter().any(|v| *v <= 0.0) {
            return Err(Error::invalid("via-point values must be finite with positive variances"));
        }
        Ok(Self {
            t: row[0],
            mean,
            cov: DMatrix::from_diagonal(&var),
        })
    }
}

pub fn via_header(s: usize) -> Vec<String> {
    std::iter::once("t".to_string())
        .chain((1..=s).map(|i| format!("mean_{i}")))
        .chain((1..=s).map(|i| format!("cov_diag_{i}")))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct VirtualObjectOptions {
    /// Time at which the end-point is inserted into the trajectory.
    pub t_end: f64,
    pub end_cov: f64,
    /// Hand base in the robot base frame; the reach check is measured from it.
    pub arm_base: Pose,
    pub arm_reach: f64,
    pub finger_workspace: f64,
}

impl Default for VirtualObjectOptions {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            end_cov: DEFAULT_END_COV,
            arm_base: Pose::identity(),
            arm_reach: DEFAULT_ARM_REACH,
            finger_workspace: DEFAULT_FINGER_WORKSPACE,
        }
    }
}

/// Pose of the virtual object in the palm frame: at the grasp center, with
/// revolved shapes lying across the fingers.
pub fn virtual_object_pose(model: &HandModel, shape: &Shape) -> Pose {
    let rotation = match shape {
        Shape::Cylinder { .. } | Shape::Cone { .. } => {
            Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0)
        }
        _ => Matrix3::identity(),
    };
    Pose {
        rotation,
        translation: model.grasp_center(),
    }
}

/// End-point that shapes the hand around a virtual copy of `shape`.
///
/// Fingertip goal displacements to the virtual surface are played back with a
/// minimum-jerk unit-time profile through the velocity chain (re-linearized at
/// every step) and integrated with Euler steps of `cfg.dt`.
pub fn virtual_object_endpoints(
    model: &HandModel,
    cfg: &MappingConfig,
    shape: &Shape,
    object_pose_base: &Pose,
    e_current: &SynergyCoeffs,
    opts: &VirtualObjectOptions,
) -> Result<Vec<ViaPoint>> {
    shape.validate()?;
    object_pose_base.validate()?;
    cfg.validate()?;
    let distance = (object_pose_base.translation - opts.arm_base.translation).norm();
    if distance > opts.arm_reach {
        return Err(Error::Reachability(format!(
            "object is {distance:.3} m from the arm base, reach is {:.3} m",
            opts.arm_reach
        )));
    }
    let virt = PlacedShape {
        shape: *shape,
        pose: virtual_object_pose(model, shape),
    };
    let sub = &cfg.subspace;
    let q_start = sub.posture(e_current)?;
    let tips = model.forward_kinematics(&q_start)?;
    let mut disp = DVector::zeros(3 * FINGER_COUNT);
    for (f, tip) in tips.iter().enumerate() {
        let d: Vector3<f64> = virt.closest_surface(tip).point - tip;
        if d.norm() > opts.finger_workspace {
            return Err(Error::Reachability(format!(
                "fingertip {f} would need to move {:.3} m, workspace is {:.3} m",
                d.norm(),
                opts.finger_workspace
            )));
        }
        disp.rows_mut(3 * f, 3).copy_from(&d);
    }
    let samples = integrate_with_state(cfg.dt, &e_current.e, 1.0, |t, e| {
        if disp.iter().all(|v| *v == 0.0) {
            return Ok(DVector::zeros(e.len()));
        }
        let q = sub.posture(&SynergyCoeffs::new(e.clone()))?;
        let mut step_cfg = cfg.clone();
        step_cfg.a_m = model.fingertip_jacobian(&q)?;
        Ok(step_cfg.chain() * (&disp * min_jerk_rate(t)))
    })?;
    let (_, e_end) = samples.last().cloned().expect("at least one sample");
    let s = e_end.len();
    Ok(vec![ViaPoint {
        t: opts.t_end,
        mean: e_end,
        cov: DMatrix::identity(s, s) * opts.end_cov,
    }])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_jerk_profile_endpoints() {
        assert_eq!(min_jerk(0.0), 0.0);
        assert_eq!(min_jerk(1.0), 1.0);
        assert!((min_jerk(0.5) - 0.5).abs() < 1e-15);
        // rate integrates to one
        let n = 10_000;
        let total: f64 = (0..n).map(|k| min_jerk_rate((k as f64 + 0.5) / n as f64) / n as f64).sum();
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn sample_count_matches_floor() {
        assert_eq!(sample_count(1.0, 1e-3), 1001);
        assert_eq!(sample_count(0.0105, 1e-3), 11);
    }

    #[test]
    fn non_finite_derivative_reports_step() {
        let err = integrate_with_state(0.1, &DVector::zeros(1), 1.0, |t, _| {
            Ok(DVector::from_element(1, if t > 0.25 { f64::NAN } else { 0.0 }))
        })
        .unwrap_err();
        assert!(matches!(err, Error::Numeric(ref m) if m.contains("step 3")), "{err:?}");
    }

    #[test]
    fn via_row_round_trip() {
        let v = ViaPoint::from_row(&[1.0, 0.1, 0.2, 1e-4, 2e-4]).unwrap();
        assert_eq!(v.to_row(), vec![1.0, 0.1, 0.2, 1e-4, 2e-4]);
        assert!(ViaPoint::from_row(&[1.0, 0.1, 0.2, 1e-4]).is_err());
        assert!(ViaPoint::from_row(&[1.0, 0.1, -1.0]).is_err());
    }
}
