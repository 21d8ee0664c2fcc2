use std::collections::BTreeMap;

use kinsyn::demos::default_subspace;
use kinsyn::grasp::{close_grasp, GraspScenario};
use kinsyn::hand::{HandModel, JointConfig};
use kinsyn::perception::filter::{voxel_downsample, voxel_key};
use kinsyn::perception::svm::{svm_classify, BinarySvm, Recognition, SvmModel, SVM_SCHEMA};
use kinsyn::perception::{Point, PointCloud};
use kinsyn::pose::Pose;
use kinsyn::synergy::{build_config_matrix, extract_synergies, SynergyCoeffs};
use kinsyn::trajectory::{fuse_priorities, PrioritizedGaussian};
use nalgebra::{DMatrix, DVector, Vector3, Vector6};
use proptest::prelude::*;

fn vec3(range: f64) -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-range..range).prop_map(Vector3::from)
}

fn pose() -> impl Strategy<Value = Pose> {
    (vec3(1.0), 0.0..std::f64::consts::TAU, vec3(2.0)).prop_filter_map("zero axis", |(axis, angle, t)| {
        (axis.norm() > 1e-3).then(|| Pose::from_axis_angle(&axis.normalize(), angle, t))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pose_inverse_composes_to_identity(p in pose(), x in vec3(1.0)) {
        let back = p.inverse().transform_point(&p.transform_point(&x));
        prop_assert!((back - x).norm() < 1e-12);
        let id = p.compose(&p.inverse());
        prop_assert!((id.rotation - nalgebra::Matrix3::identity()).amax() < 1e-12);
    }

    #[test]
    fn full_subspace_round_trips(rows in prop::collection::vec(prop::array::uniform6(-1.0f64..1.0), 8..30),
                                 probe in prop::array::uniform6(-1.0f64..1.0)) {
        let demos: Vec<JointConfig> = rows.iter().map(|r| JointConfig::new(Vector6::from_row_slice(r))).collect();
        let c = build_config_matrix(&demos, &JointConfig::zeros()).unwrap();
        // random rows can be nearly rank deficient; only full-rank draws are checked
        if let Ok(sub) = extract_synergies(&c, 6) {
            let q = JointConfig::new(Vector6::from_row_slice(&probe));
            let back = sub.posture(&sub.project(&q).unwrap()).unwrap();
            prop_assert!((back.angles - q.angles).amax() < 1e-10);
            let gram = &sub.basis.transpose() * &sub.basis;
            prop_assert!((gram - DMatrix::identity(6, 6)).amax() < 1e-10);
        }
    }

    #[test]
    fn fused_mean_is_inside_the_inputs(terms in prop::collection::vec((-1.0f64..1.0, 0.001f64..1.0, 0.01f64..=1.0), 1..6)) {
        let comps: Vec<PrioritizedGaussian> = terms.iter().map(|&(m, v, p)| PrioritizedGaussian {
            mean: DVector::from_element(1, m),
            cov: DMatrix::from_element(1, 1, v),
            priority: p,
        }).collect();
        let (mean, cov) = fuse_priorities(&comps).unwrap();
        let lo = terms.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
        let hi = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(mean[0] >= lo - 1e-12 && mean[0] <= hi + 1e-12);
        let tightest = terms.iter().map(|&(_, v, p)| v / p).fold(f64::INFINITY, f64::min);
        prop_assert!(cov[(0, 0)] <= tightest * (1.0 + 1e-12));
    }

    #[test]
    fn voxel_filter_matches_grouping(pts in prop::collection::vec((vec3(0.05), prop::array::uniform3(0u8..=255)), 1..300),
                                     leaf in 0.002f64..0.02) {
        let cloud = PointCloud::new(pts.iter().map(|(p, c)| Point::new(*p, *c)).collect());
        let out = voxel_downsample(&cloud, leaf).unwrap();
        let mut groups: BTreeMap<[i64; 3], Vec<Vector3<f64>>> = BTreeMap::new();
        for (p, _) in &pts {
            groups.entry(voxel_key(p, leaf)).or_default().push(*p);
        }
        prop_assert_eq!(out.len(), groups.len());
        for (got, members) in out.points.iter().zip(groups.values()) {
            let centroid = members.iter().sum::<Vector3<f64>>() / members.len() as f64;
            prop_assert!((got.position - centroid).norm() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn closing_force_never_decreases(d1 in -0.02f64..0.02, d2 in -0.02f64..0.02) {
        let hand = HandModel::default_model();
        let sub = default_subspace(&hand).unwrap();
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/tasks/bulb.grasp.v1.json");
        let sc = GraspScenario::load(path).unwrap();
        let e = SynergyCoeffs::from_slice(&[sc.e_start[0] + d1, sc.e_start[1] + d2]);
        let out = close_grasp(&hand, &sub, sc.config().unwrap(), &e,
                              &DVector::from_column_slice(&sc.squeeze_direction), f64::INFINITY).unwrap();
        prop_assert!(!out.reached);
        let forces: Vec<f64> = out.trace.iter().map(|r| r.fc_norm).collect();
        prop_assert!(forces.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }
}

#[test]
fn zero_threshold_stops_immediately() {
    let hand = HandModel::default_model();
    let sub = default_subspace(&hand).unwrap();
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/tasks/lemon.grasp.v1.json");
    let mut sc = GraspScenario::load(path).unwrap();
    sc.current_threshold = 0.0;
    let out = sc.run(&hand, &sub).unwrap();
    assert!(out.reached);
    assert_eq!(out.trace.len(), 1);
}

#[test]
fn cyclic_votes_are_not_a_detection() {
    // no support vectors: each decision is −rho, giving 0 > 1, 2 > 0, 1 > 2
    let pair = |positive, negative, rho| BinarySvm {
        positive,
        negative,
        support_vectors: Vec::new(),
        coefficients: Vec::new(),
        rho,
        iterations: 0,
    };
    let model = SvmModel {
        schema: SVM_SCHEMA.into(),
        classes: vec!["a".into(), "b".into(), "c".into()],
        dim: 2,
        gamma: 1.0,
        c: 1.0,
        reject_threshold: 0.0,
        seed: 0,
        pairs: vec![pair(0, 1, -1.0), pair(0, 2, 1.0), pair(1, 2, -1.0)],
    };
    assert_eq!(model.votes(&[0.0, 0.0]).unwrap(), vec![1, 1, 1]);
    assert!(matches!(svm_classify(&model, &[0.0, 0.0]).unwrap(), Recognition::NotFound { .. }));
}
