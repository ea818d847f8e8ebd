use super::*;
use crate::mesh::{apply_kershaw, build_box, build_cartesian, MeshSpec};
use crate::metrics::TargetSpec;

fn cube(n: usize, p: usize) -> Mesh {
    build_box(&MeshSpec::new_3d(n, n, n, p)).unwrap()
}

fn tmop(mesh: &Mesh, nq: usize, metric: MetricId, target: TargetData) -> Tmop {
    Tmop::new(mesh, nq, ObjectiveConfig::new(metric, target)).unwrap()
}

#[test]
fn uniform_mesh_is_optimal_for_shape() {
    let m = cube(2, 2);
    let t = build_targets(&m, TargetSpec::IdealEqualSize, 4).unwrap();
    assert!((t.det_w() - 0.125).abs() < 1e-14);
    let op = tmop(&m, 4, MetricId::Mu303, t);
    assert!(op.objective(m.coords()).unwrap().abs() < 1e-13);
    let g = op.gradient(m.coords()).unwrap();
    assert!(g.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn size_metric_on_half_size_elements() {
    let m = cube(2, 1);
    let op = tmop(&m, 3, MetricId::Mu55, TargetData::unit(3));
    let f = op.objective(m.coords()).unwrap();
    assert!((f - 6.125).abs() < 1e-13, "{f}");
}

#[test]
fn deformed_mesh_has_positive_objective() {
    let m = build_cartesian(&MeshSpec::new_3d(6, 4, 4, 2)).unwrap();
    let k = apply_kershaw(&m, 0.3, 0.3).unwrap();
    let op = tmop(&k, 4, MetricId::Mu303, TargetData::unit(3));
    assert!(op.objective(k.coords()).unwrap() > 0.0);
}

#[test]
fn min_det_on_uniform_and_inverted() {
    let m = cube(2, 1);
    let op = tmop(&m, 3, MetricId::Mu303, TargetData::unit(3));
    assert!((op.min_det_jacobian(m.coords()) - 0.125).abs() < 1e-15);

    // swap the two x-end nodes of element 0 along x
    let mut x = m.coords().to_vec();
    let idx = m.restriction().element(0);
    let (g0, g1) = (idx[0], idx[1]);
    x.swap(g0, g1);
    assert!(op.min_det_jacobian(&x) < 0.0);
    match op.objective(&x) {
        Err(Error::InvalidMesh { element, .. }) => assert_eq!(element, 0),
        other => panic!("expected invalid mesh, got {other:?}"),
    }
    assert!(op.gradient(&x).is_err());
    assert!(op.hessian_setup(&x).is_err());
}

#[test]
fn constrained_dofs_have_zero_gradient_and_unit_diagonal() {
    let m = build_cartesian(&MeshSpec::new_3d(6, 2, 2, 2)).unwrap();
    let k = apply_kershaw(&m, 0.3, 0.3).unwrap();
    let op = tmop(&k, 4, MetricId::Mu303, TargetData::unit(3));
    let g = op.gradient(k.coords()).unwrap();
    let qd = op.hessian_setup(k.coords()).unwrap();
    let diag = op.hessian_diagonal(&qd);
    for (i, &c) in k.constrained().iter().enumerate() {
        if c {
            assert_eq!(g[i], 0.0);
            assert_eq!(diag[i], 1.0);
        }
        assert!(diag[i].is_finite());
    }
    assert!(g.iter().any(|v| *v != 0.0));
}

#[test]
fn hessian_constant_within_uniform_element() {
    let m = cube(2, 2);
    let op = tmop(&m, 4, MetricId::Mu303, TargetData::unit(3));
    let qd = op.hessian_setup(m.coords()).unwrap();
    let nqd = op.basis().num_quad();
    let w = op.basis().weights();
    for e in 0..m.num_elements() {
        let h0 = qd.block(e, 0);
        for q in 0..nqd {
            let h = qd.block(e, q);
            for k in 0..81 {
                // blocks carry the point weight; compare the unweighted values
                assert!((h[k] / w[q] - h0[k] / w[0]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn storage_accounting() {
    let m = cube(2, 2);
    let op = tmop(&m, 3, MetricId::Mu303, TargetData::unit(3));
    let qd = op.hessian_setup(m.coords()).unwrap();
    assert_eq!(qd.bytes_per_element(), 27 * 45 * 8);
    assert_eq!(qd.num_elements(), 8);
}

#[test]
fn symbolic_nnz_matches_assembly() {
    for (n, p) in [(2, 1), (2, 2), (3, 2)] {
        let m = cube(n, p);
        let op = tmop(&m, p + 1, MetricId::Mu303, TargetData::unit(3));
        let k = op.fa_assemble(m.coords()).unwrap();
        assert_eq!(k.nnz(), op.fa_nnz());
        // per axis: ends p+1, shared nodes 2p+1, element-interior nodes p+1
        let s = 2 * (p + 1) + (n - 1) * (2 * p + 1) + n * (p - 1) * (p + 1);
        assert_eq!(op.fa_nnz(), 9 * s * s * s);
    }
}

#[test]
fn assembly_guard() {
    let m = cube(8, 4);
    let op = tmop(&m, 5, MetricId::Mu303, TargetData::unit(3));
    assert!(matches!(
        op.fa_assemble(m.coords()),
        Err(Error::AssemblyTooLarge { .. })
    ));
}

#[test]
fn unit_row_for_constrained_dof() {
    let m = cube(2, 1);
    let op = tmop(&m, 3, MetricId::Mu303, TargetData::unit(3));
    let k = op.fa_assemble(m.coords()).unwrap();
    let r = m.constrained().iter().position(|&c| c).unwrap();
    let (cols, vals) = k.row(r);
    for (&c, &v) in cols.iter().zip(vals) {
        assert_eq!(v, if c == r { 1.0 } else { 0.0 });
    }
}

#[test]
fn limiting_basics() {
    let m = cube(2, 2);
    let x0 = m.coords().to_vec();
    let mut cfg = ObjectiveConfig::new(MetricId::Mu303, TargetData::unit(3));
    cfg.limiting = Some(LimitingConfig::new(x0.clone(), 0.5));
    let op = Tmop::new(&m, 4, cfg.clone()).unwrap();
    assert_eq!(op.limiting_value(&x0), 0.0);
    assert!(op.limiting_gradient(&x0).iter().all(|v| *v == 0.0));

    let x: Vec<f64> = x0.iter().enumerate().map(|(i, v)| v + 1e-3 * ((i % 7) as f64 - 3.0)).collect();
    let v1 = op.limiting_value(&x);
    cfg.limiting = Some(LimitingConfig::new(x0, 1.0));
    let op2 = Tmop::new(&m, 4, cfg).unwrap();
    let v2 = op2.limiting_value(&x);
    assert!(v1 > 0.0 && (v1 / v2 - 4.0).abs() < 1e-12);
}

#[test]
fn limiting_hessian_is_twice_the_mass_matrix() {
    let m = cube(1, 1);
    let x0 = m.coords().to_vec();
    let cfg = ObjectiveConfig {
        metric: None,
        target: TargetData::unit(3),
        weight: 1.0,
        limiting: Some(LimitingConfig::new(x0.clone(), 1.0)),
    };
    let op = Tmop::new(&m, 3, cfg).unwrap();
    let qd = op.hessian_setup(&x0).unwrap();
    // trilinear mass matrix on the unit cube: prod_k M1[i_k][j_k], M1 = [[1/3, 1/6], [1/6, 1/3]]
    let m1 = |i: usize, j: usize| if i == j { 1.0 / 3.0 } else { 1.0 / 6.0 };
    let idx = m.restriction().element(0);
    for col in 0..8 {
        let mut v = vec![0.0; 24];
        v[8 + idx[col]] = 1.0;
        let hv = op.limiting_hessian_apply(&qd, &v);
        for row in 0..8 {
            let bits = |k: usize, s: usize| (k >> s) & 1;
            let mass: f64 = (0..3).map(|s| m1(bits(row, s), bits(col, s))).product();
            assert!((hv[8 + idx[row]] - 2.0 * mass).abs() < 1e-12);
            assert_eq!(hv[idx[row]], 0.0);
        }
    }
}
