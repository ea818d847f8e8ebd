mod common;

use common::{random_vec, rng};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use tmop_core::mesh::{build_box, MeshSpec};
use tmop_core::metrics::{MetricId, TargetData, TargetSpec};
use tmop_core::operator::{build_targets, LimitingConfig, ObjectiveConfig, Tmop};
use tmop_core::solvers::{
    jacobi_preconditioner, minres, newton_solve, MinresConfig, NewtonConfig, NewtonStatus,
};

type NoPrec = fn(&[f64], &mut [f64]);

fn random_symmetric(n: usize, seed: u64, spd: bool) -> DMatrix<f64> {
    let mut r = rng(seed);
    let a = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let s = &a + a.transpose();
    if spd {
        &a * a.transpose() + DMatrix::identity(n, n) * (n as f64 * 0.1)
    } else {
        s + DMatrix::identity(n, n) * 0.5
    }
}

fn apply_dense(m: &DMatrix<f64>) -> impl FnMut(&[f64], &mut [f64]) + '_ {
    move |v, o| {
        let y = m * DVector::from_column_slice(v);
        o.copy_from_slice(y.as_slice());
    }
}

#[test]
fn minres_matches_dense_solve_on_indefinite_system() {
    let n = 20;
    let a = random_symmetric(n, 42, false);
    let b: Vec<f64> = random_vec(&mut rng(43), n);
    let exact = a.clone().lu().solve(&DVector::from_column_slice(&b)).unwrap();
    let cfg = MinresConfig {
        max_iter: 500,
        rtol: 1e-10,
        precondition: false,
    };
    let r = minres(apply_dense(&a), &b, None::<NoPrec>, &cfg).unwrap();
    assert!(r.converged);
    let err = (DVector::from_column_slice(&r.x) - &exact).norm() / exact.norm();
    assert!(err <= 1e-8, "{err}");
    for w in r.history.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12));
    }
}

#[test]
fn preconditioned_minres_on_spd_systems() {
    for (k, n) in [5usize, 17, 33, 50].into_iter().enumerate() {
        let mut a = random_symmetric(n, 7 + k as u64, true);
        // badly scaled rows and columns, which Jacobi undoes
        for i in 0..n {
            let s = 10f64.powi((i % 5) as i32 - 2);
            a.row_mut(i).scale_mut(s);
            a.column_mut(i).scale_mut(s);
        }
        let b = random_vec(&mut rng(99 + k as u64), n);
        let exact = a.clone().cholesky().unwrap().solve(&DVector::from_column_slice(&b));
        let diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        let p = jacobi_preconditioner(&diag);
        let cfg = MinresConfig {
            max_iter: 2000,
            rtol: 1e-12,
            precondition: true,
        };
        let r = minres(apply_dense(&a), &b, Some(|r: &[f64], z: &mut [f64]| p.apply(r, z)), &cfg).unwrap();
        let err = (DVector::from_column_slice(&r.x) - &exact).norm() / exact.norm();
        assert!(err <= 1e-8, "n={n}: {err}");
        for w in r.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }
}

#[test]
fn newton_returns_immediately_at_the_optimum() {
    let m = build_box(&MeshSpec::new_3d(3, 3, 3, 2)).unwrap();
    let t = build_targets(&m, TargetSpec::IdealEqualSize, 4).unwrap();
    let o = Tmop::new(&m, 4, ObjectiveConfig::new(MetricId::Mu303, t)).unwrap();
    let r = newton_solve(&o, m.coords(), &NewtonConfig::default());
    assert_eq!(r.status, NewtonStatus::Converged);
    assert_eq!(r.trace.newton_iterations(), 0);
    assert_eq!(r.x, m.coords());
}

#[test]
fn newton_recovers_a_displaced_node_in_2d() {
    let m = build_box(&MeshSpec::new_2d(4, 4, 2)).unwrap();
    let n = m.num_nodes();
    let mut x = m.coords().to_vec();
    // interior node at lattice (3, 5)
    let g = 3 + 9 * 5;
    x[g] += 0.05;
    x[n + g] -= 0.05;
    let t = build_targets(&m, TargetSpec::IdealEqualSize, 4).unwrap();
    let o = Tmop::new(&m, 4, ObjectiveConfig::new(MetricId::Mu2, t)).unwrap();
    for precondition in [false, true] {
        let cfg = NewtonConfig {
            minres: MinresConfig {
                precondition,
                ..Default::default()
            },
            ..Default::default()
        };
        let r = newton_solve(&o, &x, &cfg);
        assert_eq!(r.status, NewtonStatus::Converged, "{:?}", r.trace.iterations);
        assert!(r.trace.newton_iterations() <= 20);
        assert!(r.trace.rel_grad_final() <= 1e-10);
        assert!(r.trace.f_final() <= r.trace.f_initial);
        assert!(r.trace.iterations.iter().all(|it| it.min_det > 0.0));
        let dev = r.x.iter().zip(m.coords()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-6, "{dev}");
    }
}

#[test]
fn quadratic_objective_takes_one_newton_step() {
    let m = build_box(&MeshSpec::new_3d(2, 2, 2, 2)).unwrap();
    let x0 = m.coords().to_vec();
    let cfg = ObjectiveConfig {
        metric: None,
        target: TargetData::unit(3),
        weight: 1.0,
        limiting: Some(LimitingConfig::new(x0.clone(), 0.3)),
    };
    let o = Tmop::new(&m, 3, cfg).unwrap();
    let mut x = x0.clone();
    let mut r = rng(5);
    for (v, &c) in x.iter_mut().zip(m.constrained()) {
        if !c {
            *v += r.random_range(-0.02..0.02);
        }
    }
    let ncfg = NewtonConfig {
        minres: MinresConfig {
            max_iter: 1000,
            rtol: 1e-14,
            precondition: true,
        },
        ..Default::default()
    };
    let res = newton_solve(&o, &x, &ncfg);
    assert_eq!(res.status, NewtonStatus::Converged);
    assert_eq!(res.trace.newton_iterations(), 1);
    assert_eq!(res.trace.iterations[0].alpha, 1.0);
}

#[test]
fn inverted_start_is_rejected() {
    let m = build_box(&MeshSpec::new_3d(2, 2, 2, 1)).unwrap();
    let mut x = m.coords().to_vec();
    let center = 1 + 3 * (1 + 3);
    x[center] = 1.3;
    let o = Tmop::new(&m, 3, ObjectiveConfig::new(MetricId::Mu303, TargetData::unit(3))).unwrap();
    let r = newton_solve(&o, &x, &NewtonConfig::default());
    assert!(matches!(r.status, NewtonStatus::InvalidInitialMesh(_)));
    assert!(!r.status.is_success());
}
