//! Acceptance suite. One line per criterion; exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use kinsyn::demos::{benchmark_dataset, default_subspace, DatasetSpec};
use kinsyn::evaluation::compare::{compare_methods, CompareOptions, Method};
use kinsyn::frames::{compose_to_base, integrate_synergy, integrate_with_state, MappingConfig};
use kinsyn::grasp::{
    build_grasp_matrix, contact_forces, internal_force_basis, Contact, ContactSet, GraspScenario, GraspState,
};
use kinsyn::hand::{HandModel, JointConfig};
use kinsyn::perception::cloud::{Point, PointCloud};
use kinsyn::perception::cluster::euclidean_cluster;
use kinsyn::perception::corpus::{build_corpus, evaluate_confusion, reference_svm, ORIENTATIONS};
use kinsyn::perception::pipeline::DetectionParams;
use kinsyn::perception::ransac::ransac_plane;
use kinsyn::perception::svm::{svm_classify, svm_train, Recognition, SvmParams};
use kinsyn::pose::Pose;
use kinsyn::synergy::{build_config_matrix, extract_synergies, SynergyCoeffs};
use kinsyn::trajectory::gmm::{gmr_condition, GmmModel};
use kinsyn::trajectory::kmp::{insert_via_point, kmp_predict, KmpModel, KmpParams, ReferencePoint};
use kinsyn::trajectory::{fuse_priorities, PrioritizedGaussian};
use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Check = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, format!("took {:.1} s, limit {:.0} s", took.as_secs_f64(), limit.as_secs_f64()))
}

fn random_spd(r: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| r.random::<f64>() - 0.5);
    (&a * a.transpose() + DMatrix::identity(n, n) * 0.1) * scale
}

fn random_rotation(r: &mut ChaCha8Rng) -> Matrix3<f64> {
    let axis = Vector3::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5, r.random::<f64>() - 0.5);
    let angle = r.random::<f64>() * std::f64::consts::TAU;
    Pose::from_axis_angle(&axis.normalize(), angle, Vector3::zeros()).rotation
}

// ---------------------------------------------------------------- oracles

/// Cyclic Jacobi eigensolver for symmetric matrices. Returns eigenpairs sorted by decreasing eigenvalue.
fn jacobi_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-30 * a.norm_squared().max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let vals = order.iter().map(|&i| a[(i, i)]).collect();
    let vecs = DMatrix::from_columns(&order.iter().map(|&i| v.column(i).into_owned()).collect::<Vec<_>>());
    (vals, vecs)
}

fn svd_pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let smax = svd.singular_values.max();
    let tol = smax * 1e-12 * m.nrows().max(m.ncols()) as f64;
    let inv = DMatrix::from_diagonal(&svd.singular_values.map(|s| if s > tol { 1.0 / s } else { 0.0 }));
    vt.transpose() * inv * u.transpose()
}

fn gauss_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

fn union_find_clusters(pts: &[Vector3<f64>], eps: f64, min_pts: usize) -> Vec<Vec<usize>> {
    let n = pts.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (pts[i] - pts[j]).norm() <= eps {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().filter(|g| g.len() >= min_pts).collect();
    out.sort();
    out
}

fn homogeneous(p: &Pose) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = p.rotation[(i, j)];
        }
        m[(i, 3)] = p.translation[i];
    }
    m
}

// ---------------------------------------------------------------- criteria

fn c01_pca_oracle() -> Check {
    let start = Instant::now();
    let mut worst_basis = 0.0f64;
    let mut worst_sv = 0.0f64;
    for seed in 0..100u64 {
        let mut r = rng(seed);
        let scales: Vec<f64> = (0..6).map(|k| 1.0 / (1.0 + k as f64) * (0.8 + 0.4 * r.random::<f64>())).collect();
        let mix = random_rotation6(&mut r);
        let q0 = JointConfig::new(Vector6::from_fn(|_, _| r.random::<f64>() - 0.5));
        let n = 20 + (seed as usize % 30);
        let demos: Vec<JointConfig> = (0..n)
            .map(|_| {
                let z = Vector6::from_fn(|i, _| scales[i] * (r.random::<f64>() * 2.0 - 1.0));
                JointConfig::new(q0.angles + mix * z)
            })
            .collect();
        let c = build_config_matrix(&demos, &q0).map_err(|e| e.to_string())?;
        let sub = extract_synergies(&c, 6).map_err(|e| e.to_string())?;
        let gram = c.rows.transpose() * &c.rows;
        let (vals, vecs) = jacobi_eigen(&gram);
        for k in 0..6 {
            let u = sub.basis.column(k);
            let v = vecs.column(k);
            let d = (u - v).norm().min((u + v).norm());
            worst_basis = worst_basis.max(d);
            let sv = vals[k].max(0.0).sqrt();
            worst_sv = worst_sv.max((sub.singular_values[k] - sv).abs() / sv.max(1e-300));
        }
    }
    ensure(worst_basis < 1e-8, format!("basis deviation {worst_basis:e}"))?;
    ensure(worst_sv < 1e-8, format!("singular value deviation {worst_sv:e}"))?;
    within_time(start, Duration::from_secs(5))?;
    Ok(format!("basis dev {worst_basis:.1e}, sv rel dev {worst_sv:.1e} over 100 datasets"))
}

fn random_rotation6(r: &mut ChaCha8Rng) -> nalgebra::Matrix6<f64> {
    let a = nalgebra::Matrix6::from_fn(|_, _| r.random::<f64>() - 0.5);
    a.qr().q()
}

fn c02_round_trip() -> Check {
    let mut r = rng(2);
    let q0 = JointConfig::new(Vector6::from_fn(|_, _| r.random::<f64>() - 0.5));
    let demos: Vec<JointConfig> = (0..60)
        .map(|_| JointConfig::new(q0.angles + Vector6::from_fn(|i, _| (r.random::<f64>() - 0.5) / (1.0 + i as f64))))
        .collect();
    let c = build_config_matrix(&demos, &q0).map_err(|e| e.to_string())?;
    let full = extract_synergies(&c, 6).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for q in &demos {
        let back = full.posture(&full.project(q).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        worst = worst.max((back.angles - q.angles).amax());
    }
    ensure(worst < 1e-10, format!("S=6 round trip error {worst:e}"))?;
    let mut errors = Vec::new();
    for s in 1..=6 {
        let sub = full.truncated(s).map_err(|e| e.to_string())?;
        let err: f64 = demos
            .iter()
            .map(|q| {
                let back = sub.posture(&sub.project(q).unwrap()).unwrap();
                (back.angles - q.angles).norm_squared()
            })
            .sum();
        errors.push(err);
    }
    ensure(
        errors.windows(2).all(|w| w[1] <= w[0] + 1e-12),
        format!("reconstruction error not monotone: {errors:?}"),
    )?;
    Ok(format!("round trip {worst:.1e}, error by S {:.3e} .. {:.1e}", errors[0], errors[5]))
}

fn c03_gmr_exactness() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..200u64 {
        let mut r = rng(1000 + seed);
        let k = 1 + (seed as usize % 4);
        let s = 1 + (seed as usize % 3);
        let mut priors: Vec<f64> = (0..k).map(|_| 0.2 + r.random::<f64>()).collect();
        let total: f64 = priors.iter().sum();
        priors.iter_mut().for_each(|p| *p /= total);
        let means: Vec<DVector<f64>> = (0..k)
            .map(|j| {
                let mut m = DVector::from_fn(s + 1, |_, _| r.random::<f64>() - 0.5);
                m[0] = (j as f64 + r.random::<f64>()) / k as f64;
                m
            })
            .collect();
        let covs: Vec<DMatrix<f64>> = (0..k).map(|_| random_spd(&mut r, s + 1, 0.05)).collect();
        let gmm = GmmModel { priors, means, covariances: covs };
        let t = r.random::<f64>();
        let (mean, cov) = gmr_condition(&gmm, t).map_err(|e| e.to_string())?;
        // Oracle: plain-space responsibilities and the law of total covariance.
        let h: Vec<f64> = (0..k).map(|j| gmm.priors[j] * gauss_pdf(t, gmm.means[j][0], gmm.covariances[j][(0, 0)])).collect();
        let hs: f64 = h.iter().sum();
        let mut om = DVector::zeros(s);
        let mut conds = Vec::new();
        for j in 0..k {
            let sig = &gmm.covariances[j];
            let sxx = sig[(0, 0)];
            let syx = sig.view((1, 0), (s, 1)).into_owned();
            let syy = sig.view((1, 1), (s, s)).into_owned();
            let mj = gmm.means[j].rows(1, s).into_owned() + &syx * ((t - gmm.means[j][0]) / sxx);
            let cj = syy - &syx * syx.transpose() / sxx;
            om += &mj * (h[j] / hs);
            conds.push((mj, cj));
        }
        let mut oc = DMatrix::zeros(s, s);
        for j in 0..k {
            let d = &conds[j].0 - &om;
            oc += (&conds[j].1 + &d * d.transpose()) * (h[j] / hs);
        }
        worst = worst.max((mean - om).amax()).max((cov - oc).amax());
    }
    ensure(worst < 1e-8, format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e} over 200 cases"))
}

fn c04_kmp_exactness() -> Check {
    let mut worst_mean = 0.0f64;
    let mut worst_via = 0.0f64;
    let mut min_eig = f64::INFINITY;
    for seed in 0..200u64 {
        let mut r = rng(2000 + seed);
        let n = 8 + (seed as usize % 20);
        let s = 1 + (seed as usize % 3);
        let identity_cov = seed % 2 == 0;
        let reference: Vec<ReferencePoint> = (0..n)
            .map(|i| ReferencePoint {
                t: i as f64 / (n - 1) as f64,
                mean: DVector::from_fn(s, |_, _| r.random::<f64>() - 0.5),
                cov: if identity_cov {
                    DMatrix::identity(s, s)
                } else {
                    random_spd(&mut r, s, 0.02)
                },
            })
            .collect();
        let lambda = 0.1 + r.random::<f64>();
        let params = KmpParams {
            lambda,
            ..KmpParams::default()
        };
        let kmp = KmpModel::new(reference.clone(), params).map_err(|e| e.to_string())?;
        let t = r.random::<f64>();
        let (mean, cov) = kmp_predict(&kmp, t).map_err(|e| e.to_string())?;
        // Dense oracle: k*ᵀ (K + λΣ)⁻¹ μ solved by LU; Σ = I makes it the plain (K + λI) form.
        let ell = 0.1;
        let kern = |a: f64, b: f64| (-(a - b).powi(2) / (2.0 * ell * ell)).exp();
        let mut big = DMatrix::zeros(n * s, n * s);
        let mut mu = DVector::zeros(n * s);
        let mut kstar = DMatrix::zeros(s, n * s);
        for i in 0..n {
            for j in 0..n {
                for d in 0..s {
                    big[(i * s + d, j * s + d)] = kern(reference[i].t, reference[j].t);
                }
            }
            let block = if identity_cov { DMatrix::identity(s, s) } else { reference[i].cov.clone() };
            let mut v = big.view_mut((i * s, i * s), (s, s));
            v += block * lambda;
            mu.rows_mut(i * s, s).copy_from(&reference[i].mean);
            for d in 0..s {
                kstar[(d, i * s + d)] = kern(t, reference[i].t);
            }
        }
        let oracle = &kstar * big.lu().solve(&mu).ok_or("oracle solve failed")?;
        worst_mean = worst_mean.max((mean - oracle).amax());
        min_eig = min_eig.min(cov.symmetric_eigen().eigenvalues.min());

        let tv = r.random::<f64>();
        let target = DVector::from_fn(s, |_, _| r.random::<f64>() * 2.0 - 1.0);
        let via = insert_via_point(&kmp, tv, &target, &(DMatrix::identity(s, s) * 1e-6)).map_err(|e| e.to_string())?;
        let (pulled, _) = kmp_predict(&via, tv).map_err(|e| e.to_string())?;
        worst_via = worst_via.max((pulled - target).amax());
    }
    ensure(worst_mean < 1e-8, format!("mean deviation {worst_mean:e}"))?;
    ensure(worst_via < 1e-3, format!("via-point miss {worst_via:e}"))?;
    ensure(min_eig >= -1e-12, format!("covariance eigenvalue {min_eig:e}"))?;
    Ok(format!(
        "mean dev {worst_mean:.1e}, via miss {worst_via:.1e}, min cov eig {min_eig:.1e} over 200 cases"
    ))
}

fn c05_priority_fusion() -> Check {
    let mut r = rng(5);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let m = 1 + r.random_range(0..4);
        let terms: Vec<(f64, f64, f64)> = (0..m)
            .map(|_| (r.random::<f64>() * 2.0 - 1.0, 0.01 + r.random::<f64>(), 0.05 + 0.95 * r.random::<f64>()))
            .collect();
        let comps: Vec<PrioritizedGaussian> = terms
            .iter()
            .map(|&(mu, var, p)| PrioritizedGaussian {
                mean: DVector::from_element(1, mu),
                cov: DMatrix::from_element(1, 1, var),
                priority: p,
            })
            .collect();
        let (mean, cov) = fuse_priorities(&comps).map_err(|e| e.to_string())?;
        let prec: f64 = terms.iter().map(|&(_, v, p)| p / v).sum();
        let om = terms.iter().map(|&(mu, v, p)| p * mu / v).sum::<f64>() / prec;
        worst = worst.max((mean[0] - om).abs()).max((cov[(0, 0)] - 1.0 / prec).abs());
    }
    ensure(worst < 1e-10, format!("1-D deviation {worst:e}"))?;
    let shared = DVector::from_vec(vec![0.14, 0.48]);
    let sym = [
        PrioritizedGaussian {
            mean: shared.clone(),
            cov: DMatrix::from_diagonal(&DVector::from_vec(vec![1e-4, 4e-4])),
            priority: 0.5,
        },
        PrioritizedGaussian {
            mean: shared.clone(),
            cov: DMatrix::from_diagonal(&DVector::from_vec(vec![4e-4, 1e-4])),
            priority: 0.5,
        },
    ];
    let (mean, _) = fuse_priorities(&sym).map_err(|e| e.to_string())?;
    ensure(mean == shared, format!("shared mean changed to {mean:?}"))?;
    Ok(format!("1-D dev {worst:.1e}, shared mean exact"))
}

fn c06_grasp_mechanics() -> Check {
    let start = Instant::now();
    let mut r = rng(6);
    let mut worst_null = 0.0f64;
    let mut worst_pinv = 0.0f64;
    let mut min_norm_ok = true;
    for _ in 0..100 {
        let c = 2 + r.random_range(0..4);
        let center = Vector3::new(r.random::<f64>(), r.random::<f64>(), r.random::<f64>()) * 0.1;
        let contacts: Vec<Contact> = (0..c)
            .map(|i| {
                let n = Vector3::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5, r.random::<f64>() - 0.5).normalize();
                Contact {
                    position: center + n * 0.03,
                    normal: n,
                    finger: i,
                }
            })
            .collect();
        let set = ContactSet {
            contacts,
            object_frame: Pose::from_translation(center),
        };
        let gm = build_grasp_matrix(&set).map_err(|e| e.to_string())?;
        let xi = internal_force_basis(&gm.g);
        worst_null = worst_null.max((&gm.g * &xi).amax());
        let state = GraspState::new(&set, DMatrix::identity(6, 6) * 0.02).map_err(|e| e.to_string())?;
        let omega = DVector::from_fn(6, |_, _| r.random::<f64>() - 0.5);
        let zero = DVector::zeros(2);
        let coupling = DMatrix::zeros(state.internal_dim(), 2);
        let f = contact_forces(&state, &omega, &zero, &coupling).map_err(|e| e.to_string())?;
        let oracle = svd_pinv(&gm.g) * &omega;
        worst_pinv = worst_pinv.max((&f - &oracle).amax());
        // Minimum norm: f is orthogonal to null(G), so any internal force only adds norm.
        if xi.ncols() > 0 {
            let z = DVector::from_fn(xi.ncols(), |_, _| r.random::<f64>() - 0.5);
            let other = &f + &xi * z;
            min_norm_ok &= other.norm() >= f.norm() - 1e-12 && (xi.transpose() * &f).amax() < 1e-9;
        }
    }
    ensure(worst_null < 1e-10, format!("|G xi| {worst_null:e}"))?;
    ensure(worst_pinv < 1e-9, format!("f_c vs SVD oracle {worst_pinv:e}"))?;
    ensure(min_norm_ok, "minimum-norm property violated")?;

    let hand = HandModel::default_model();
    let sub = default_subspace(&hand).map_err(|e| e.to_string())?;
    let mut forces = Vec::new();
    for (name, target) in [("bulb", 3.57), ("lemon", 4.16), ("spray", 4.76)] {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("assets/tasks/{name}.grasp.v1.json"));
        let scenario = GraspScenario::load(&path).map_err(|e| e.to_string())?;
        let out = scenario.run(&hand, &sub).map_err(|e| e.to_string())?;
        let f = out.final_force();
        ensure(out.reached, format!("{name}: threshold not reached"))?;
        ensure((f - target).abs() <= 0.05 * target, format!("{name}: {f:.3} N vs {target} N"))?;
        forces.push(format!("{name} {f:.3} N"));
    }
    within_time(start, Duration::from_secs(10))?;
    Ok(format!("|G xi| {worst_null:.1e}, pinv dev {worst_pinv:.1e}, {}", forces.join(", ")))
}

fn blob_cloud(seed: u64) -> PointCloud {
    let mut r = rng(7000 + seed);
    let n_total = 300 + r.random_range(0..1700);
    let blobs = 1 + r.random_range(0..6);
    let centers: Vec<Vector3<f64>> = (0..blobs)
        .map(|_| Vector3::new(r.random::<f64>(), r.random::<f64>(), r.random::<f64>() * 0.3) * 0.5)
        .collect();
    let spread = Normal::new(0.0, 0.01 + 0.02 * r.random::<f64>()).unwrap();
    let pts = (0..n_total)
        .map(|i| {
            let p = if i % 10 == 0 {
                Vector3::new(r.random::<f64>(), r.random::<f64>(), r.random::<f64>()) * 0.6
            } else {
                let c = centers[r.random_range(0..blobs)];
                c + Vector3::new(spread.sample(&mut r), spread.sample(&mut r), spread.sample(&mut r))
            };
            Point::new(p, [0, 0, 0])
        })
        .collect();
    PointCloud::new(pts)
}

fn c07_clustering() -> Check {
    let start = Instant::now();
    let (eps, min_pts) = (0.02, 30);
    let mut clusters_seen = 0;
    for seed in 0..50u64 {
        let cloud = blob_cloud(seed);
        let mut got: Vec<Vec<usize>> = euclidean_cluster(&cloud, eps, min_pts)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|c| c.indices)
            .collect();
        got.sort();
        let expected = union_find_clusters(&cloud.positions(), eps, min_pts);
        ensure(got == expected, format!("seed {seed}: partitions differ ({} vs {})", got.len(), expected.len()))?;
        ensure(got.iter().all(|c| c.len() >= min_pts), format!("seed {seed}: undersized cluster kept"))?;
        clusters_seen += got.len();
    }
    within_time(start, Duration::from_secs(30))?;
    Ok(format!("50 clouds identical to union-find, {clusters_seen} clusters"))
}

fn c08_ransac() -> Check {
    let start = Instant::now();
    let mut good = 0;
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut r = rng(8000 + seed);
        let rot = random_rotation(&mut r);
        let normal = rot * Vector3::z();
        let origin = Vector3::new(r.random::<f64>(), r.random::<f64>(), r.random::<f64>()) * 0.2;
        let noise = Normal::new(0.0, 0.001).unwrap();
        let n = 1000;
        let pts: Vec<Point> = (0..n)
            .map(|i| {
                let p = if i % 10 < 3 {
                    origin + Vector3::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5, r.random::<f64>() - 0.5) * 0.6
                } else {
                    let local = Vector3::new((r.random::<f64>() - 0.5) * 0.6, (r.random::<f64>() - 0.5) * 0.6, noise.sample(&mut r));
                    origin + rot * local
                };
                Point::new(p, [0, 0, 0])
            })
            .collect();
        let (plane, _) = ransac_plane(&PointCloud::new(pts), 200, 0.008, seed).map_err(|e| e.to_string())?;
        let angle = plane.normal.dot(&normal).abs().min(1.0).acos().to_degrees();
        worst = worst.max(angle);
        if angle <= 1.0 {
            good += 1;
        }
    }
    ensure(good >= 95, format!("{good}/100 seeds within 1°"))?;
    within_time(start, Duration::from_secs(10))?;
    Ok(format!("{good}/100 seeds within 1°, worst {worst:.3}°"))
}

fn c09_svm() -> Check {
    let start = Instant::now();
    let mut r = rng(9);
    let centers = [[0.0, 0.0, 0.0], [1.5, 0.0, 0.5], [0.0, 1.5, -0.5]];
    let noise = Normal::new(0.0, 0.4).unwrap();
    let mut sample = |k: usize| -> (Vec<f64>, String) {
        (centers[k].iter().map(|c| c + noise.sample(&mut r)).collect(), format!("blob{k}"))
    };
    let train: Vec<_> = (0..150).map(|i| sample(i % 3)).collect();
    let test: Vec<_> = (0..300).map(|i| sample(i % 3)).collect();
    let params = SvmParams {
        gamma: 0.5,
        ..SvmParams::default()
    };
    let model = svm_train(&train, &params, 0).map_err(|e| e.to_string())?;
    let correct = test
        .iter()
        .filter(|(x, y)| matches!(svm_classify(&model, x), Ok(Recognition::Detected { ref label, .. }) if label == y))
        .count();
    let blob_acc = correct as f64 / test.len() as f64;
    ensure(blob_acc >= 0.95, format!("3-blob accuracy {blob_acc:.3}"))?;

    let det = DetectionParams::default();
    let svm = reference_svm(&det, 0).map_err(|e| e.to_string())?;
    let testset = build_corpus(ORIENTATIONS, "test", 1, &det).map_err(|e| e.to_string())?;
    ensure(testset.samples.len() == 240, format!("{} test instances", testset.samples.len()))?;
    let conf = evaluate_confusion(&svm, &testset.pairs()).map_err(|e| e.to_string())?;
    ensure(conf.accuracy >= 0.80, format!("corpus accuracy {:.4}", conf.accuracy))?;
    let svg = conf.to_svg();
    ensure(svg.starts_with("<svg") && conf.counts.len() == 24, "confusion matrix not rendered")?;
    within_time(start, Duration::from_secs(60))?;
    Ok(format!("3-blob {blob_acc:.3}, corpus {:.4} on 240 instances", conf.accuracy))
}

fn c10_frames() -> Check {
    let mut r = rng(10);
    let mut worst_pose = 0.0f64;
    for _ in 0..200 {
        let mut p = || Pose {
            rotation: random_rotation(&mut r),
            translation: Vector3::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5, r.random::<f64>() - 0.5),
        };
        let (a, b, c) = (p(), p(), p());
        let got = homogeneous(&compose_to_base(&a, &b, &c).map_err(|e| e.to_string())?);
        let oracle = homogeneous(&a) * homogeneous(&b) * homogeneous(&c);
        worst_pose = worst_pose.max((got - oracle).amax());
    }
    ensure(worst_pose < 1e-12, format!("pose composition {worst_pose:e}"))?;

    let hand = HandModel::default_model();
    let sub = default_subspace(&hand).map_err(|e| e.to_string())?;
    let mut worst_chain = 0.0f64;
    for _ in 0..50 {
        let q = JointConfig::new(Vector6::from_fn(|_, _| 0.2 + 0.8 * r.random::<f64>()));
        let c_h = DMatrix::from_diagonal(&DVector::from_fn(6, |_, _| 0.01 + 0.03 * r.random::<f64>()));
        let cfg = MappingConfig::at_posture(&hand, &q, c_h.clone(), sub.clone()).map_err(|e| e.to_string())?;
        let w = &c_h / (c_h.trace() / 6.0);
        let oracle = svd_pinv(&sub.basis) * w * svd_pinv(&hand.fingertip_jacobian(&q).map_err(|e| e.to_string())?);
        worst_chain = worst_chain.max((cfg.chain() - oracle).amax());
    }
    ensure(worst_chain < 1e-10, format!("pseudo-inverse chain {worst_chain:e}"))?;

    // Euler battery: |error| ≤ C·dt with C = T·max|ë|/2.
    let cfg = MappingConfig::at_posture(&hand, &hand.nominal(), DMatrix::identity(6, 6) * 0.02, sub.clone())
        .map_err(|e| e.to_string())?;
    let dt = cfg.dt;
    ensure(dt == 1e-3, format!("dt {dt}"))?;
    let two_pi = std::f64::consts::TAU;
    type Case = (&'static str, fn(f64) -> f64, fn(f64) -> f64, f64);
    let battery: [Case; 4] = [
        ("constant", |_| 0.3, |t| 0.3 * t, 0.0),
        ("linear", |t| 2.0 * t, |t| t * t, 2.0),
        ("sine", |t| (std::f64::consts::TAU * t).cos(), |t| (std::f64::consts::TAU * t).sin() / std::f64::consts::TAU, two_pi),
        ("exp", |t| t.exp(), |t| t.exp() - 1.0, std::f64::consts::E),
    ];
    let mut worst_ratio = 0.0f64;
    for (name, f, exact, bound) in battery {
        let out = integrate_synergy(&cfg, &SynergyCoeffs::zeros(2), |t| DVector::from_element(2, f(t)), 1.0)
            .map_err(|e| e.to_string())?;
        let err = out.iter().map(|(t, e)| (e.e[0] - exact(*t)).abs()).fold(0.0, f64::max);
        let c = 0.5 * bound + 1e-9 / dt;
        ensure(err <= c * dt, format!("{name}: error {err:e} > {c}·dt"))?;
        worst_ratio = worst_ratio.max(err / dt);
    }
    let decay = integrate_with_state(dt, &DVector::from_element(1, 1.0), 1.0, |_, e| Ok(-e)).map_err(|e| e.to_string())?;
    let err = decay.iter().map(|(t, e)| (e[0] - (-t).exp()).abs()).fold(0.0, f64::max);
    ensure(err <= 0.5 * dt, format!("decay: error {err:e}"))?;
    Ok(format!(
        "pose dev {worst_pose:.1e}, chain dev {worst_chain:.1e}, Euler max err/dt {worst_ratio:.3}"
    ))
}

fn c11_comparison() -> Check {
    let hand = HandModel::default_model();
    let data = benchmark_dataset(&hand.nominal(), &DatasetSpec::default(), 0);
    let opts = CompareOptions::default();
    let reports = compare_methods(&data, &[Method::KernelizedSynergies, Method::PerObjectPca], &[2], &opts).map_err(|e| e.to_string())?;
    let (a, b) = (&reports[0], &reports[1]);
    ensure(a.nse <= b.nse, format!("NSE a {:.4} > b {:.4}", a.nse, b.nse))?;
    ensure(a.pa >= b.pa, format!("PA a {:.4} < b {:.4}", a.pa, b.pa))?;
    let sweep = compare_methods(&data, &[Method::PerObjectPca], &[1, 2, 3, 4, 5, 6], &opts).map_err(|e| e.to_string())?;
    let nse: Vec<f64> = sweep.iter().map(|r| r.nse).collect();
    let pa: Vec<f64> = sweep.iter().map(|r| r.pa).collect();
    ensure(nse.windows(2).all(|w| w[1] <= w[0]), format!("baseline NSE not monotone: {nse:?}"))?;
    ensure(pa.windows(2).all(|w| w[1] >= w[0]), format!("baseline PA not monotone: {pa:?}"))?;
    Ok(format!(
        "S=2 a NSE {:.4} PA {:.4} vs b NSE {:.4} PA {:.4}; b sweep monotone",
        a.nse, a.pa, b.nse, b.pa
    ))
}

fn cli(args: &[&str]) -> Result<(), String> {
    let argv: Vec<String> = std::iter::once("kinsyn").chain(args.iter().copied()).map(String::from).collect();
    match kinsyn::cli::run(argv) {
        0 => Ok(()),
        code => Err(format!("`{}` exited {code}", args.join(" "))),
    }
}

fn pipeline_run(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let task = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/tasks/bulb.task.v1.json");
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let task = task.to_string_lossy().into_owned();
    let seed = ["--seed", "0"];
    let run = |args: &[&str]| cli(&[&seed[..], args].concat());
    run(&["gen-scene", "--task", &task, "--out", &p("scene.pcd"), "--spec-out", &p("scene.json"), "--frames-out", &p("frames.json")])?;
    run(&["train-svm", "--out", &p("svm.json")])?;
    run(&["detect", "--scene", &p("scene.pcd"), "--svm", &p("svm.json"), "--frames", &p("frames.json"), "--out", &p("detections.csv")])?;
    run(&["gen-demos", "--out", &p("demos.csv")])?;
    run(&["teach", "--demos", &p("demos.csv"), "--out", &p("synergy.json"), "--gmm-out", &p("gmm.json")])?;
    run(&["adapt", "--gmm", &p("gmm.json"), "--end", "1.0,-0.05,0.37,0.0001,0.0001", "--out", &p("kmp.json"), "--trajectory-out", &p("adapted.csv")])?;
    run(&[
        "replay", "--task", &task, "--scene", &p("scene.json"), "--svm", &p("svm.json"), "--kmp", &p("kmp.json"),
        "--synergy", &p("synergy.json"), "--frames", &p("frames.json"), "--out", &p("replay"),
    ])?;
    let mut files = Vec::new();
    for name in [
        "detections.csv", "synergy.json", "gmm.json", "kmp.json", "adapted.csv", "replay/detections.csv",
        "replay/trajectory.csv", "replay/grasp_trace.csv", "replay/summary.json",
    ] {
        files.push((name.to_string(), std::fs::read(dir.join(name)).map_err(|e| format!("{name}: {e}"))?));
    }
    Ok(files)
}

fn c12_determinism() -> Check {
    let start = Instant::now();
    let first = tempfile::tempdir().map_err(|e| e.to_string())?;
    let second = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = pipeline_run(first.path())?;
    let b = pipeline_run(second.path())?;
    for ((name, x), (_, y)) in a.iter().zip(&b) {
        ensure(x == y, format!("{name} differs between runs"))?;
    }
    let summary: serde_json::Value = serde_json::from_slice(&a.last().unwrap().1).map_err(|e| e.to_string())?;
    ensure(summary["success"] == true, "bulb replay did not succeed")?;
    within_time(start, Duration::from_secs(120))?;
    Ok(format!("{} files byte-identical, {:.1} s for two runs", a.len(), start.elapsed().as_secs_f64()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("01 PCA oracle equivalence", c01_pca_oracle),
        ("02 projection round trip", c02_round_trip),
        ("03 GMR exactness", c03_gmr_exactness),
        ("04 KMP exactness", c04_kmp_exactness),
        ("05 priority fusion", c05_priority_fusion),
        ("06 grasp mechanics", c06_grasp_mechanics),
        ("07 clustering", c07_clustering),
        ("08 RANSAC", c08_ransac),
        ("09 SVM", c09_svm),
        ("10 frames and integration", c10_frames),
        ("11 comparison harness", c11_comparison),
        ("12 end-to-end determinism", c12_determinism),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name} ({secs:.2} s): {detail}"),
            Err(why) => {
                println!("FAIL {name} ({secs:.2} s): {why}");
                failed.push(name);
            }
        }
    }
    println!("{} of 12 criteria passed", 12 - failed.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
