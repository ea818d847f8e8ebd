mod common;

use common::rng;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tmop_core::metrics::{
    evaluate, metric_first_derivative, metric_second_derivative, metric_value, MetricId,
};
use tmop_core::small;

const CASES: [(MetricId, usize); 4] = [
    (MetricId::Mu2, 2),
    (MetricId::Mu55, 2),
    (MetricId::Mu55, 3),
    (MetricId::Mu303, 3),
];

/// Random T with det(T) in [0.1, 10].
fn random_t(r: &mut ChaCha8Rng, d: usize) -> [f64; 9] {
    loop {
        let mut t = [0.0; 9];
        for i in 0..d {
            for j in 0..d {
                t[i * d + j] = r.random_range(-1.0..1.0) + if i == j { 1.5 } else { 0.0 };
            }
        }
        let det = small::det(d, &t);
        if (0.1..=10.0).contains(&det) {
            return t;
        }
    }
}

fn fd_first(id: MetricId, d: usize, t: &[f64; 9], h: f64) -> [f64; 9] {
    let mut g = [0.0; 9];
    for k in 0..d * d {
        let (mut tp, mut tm) = (*t, *t);
        tp[k] += h;
        tm[k] -= h;
        g[k] = (metric_value(id, d, &tp).unwrap() - metric_value(id, d, &tm).unwrap()) / (2.0 * h);
    }
    g
}

fn fd_second(id: MetricId, d: usize, t: &[f64; 9], h: f64) -> [f64; 81] {
    let dd = d * d;
    let mut hs = [0.0; 81];
    for c in 0..dd {
        let (mut tp, mut tm) = (*t, *t);
        tp[c] += h;
        tm[c] -= h;
        let gp = metric_first_derivative(id, d, &tp).unwrap();
        let gm = metric_first_derivative(id, d, &tm).unwrap();
        for r in 0..dd {
            hs[r * dd + c] = (gp[r] - gm[r]) / (2.0 * h);
        }
    }
    hs
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

#[test]
fn first_derivative_matches_central_differences() {
    let mut r = rng(2024);
    for (id, d) in CASES {
        for _ in 0..100 {
            let t = random_t(&mut r, d);
            let g = metric_first_derivative(id, d, &t).unwrap();
            let fd = fd_first(id, d, &t, 1e-6);
            assert!(rel_err(&g[..d * d], &fd[..d * d]) <= 1e-6, "{id:?} {t:?}");
        }
    }
}

#[test]
fn second_derivative_matches_differences_of_first() {
    let mut r = rng(77);
    for (id, d) in CASES {
        for _ in 0..100 {
            let t = random_t(&mut r, d);
            let dd = d * d;
            let h = metric_second_derivative(id, d, &t).unwrap();
            let fd = fd_second(id, d, &t, 1e-5);
            assert!(rel_err(&h[..dd * dd], &fd[..dd * dd]) <= 1e-5, "{id:?}");
        }
    }
}

#[test]
fn documented_points() {
    let t = [2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    let g = metric_first_derivative(MetricId::Mu303, 3, &t).unwrap();
    let fd = fd_first(MetricId::Mu303, 3, &t, 1e-6);
    for k in 0..9 {
        assert!((g[k] - fd[k]).abs() <= 1e-6 * g[k].abs().max(1e-3));
    }
    let i3 = small::identity(3);
    let h = metric_second_derivative(MetricId::Mu55, 3, &i3).unwrap();
    assert!(rel_err(&h, &fd_second(MetricId::Mu55, 3, &i3, 1e-5)) <= 1e-5);
    let t2 = [2.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let h = metric_second_derivative(MetricId::Mu2, 2, &t2).unwrap();
    let fd = fd_second(MetricId::Mu2, 2, &t2, 1e-5);
    assert!(rel_err(&h[..16], &fd[..16]) <= 1e-5);
}

#[test]
fn evaluate_bundles_all_orders() {
    let mut r = rng(9);
    let t = random_t(&mut r, 3);
    let ev = evaluate(MetricId::Mu303, 3, &t, 2).unwrap();
    assert_eq!(ev.value, metric_value(MetricId::Mu303, 3, &t).unwrap());
    assert_eq!(ev.first, metric_first_derivative(MetricId::Mu303, 3, &t).unwrap());
    assert_eq!(ev.second, metric_second_derivative(MetricId::Mu303, 3, &t).unwrap());
    let ev0 = evaluate(MetricId::Mu303, 3, &t, 0).unwrap();
    assert!(ev0.first.iter().all(|v| *v == 0.0));
}

fn rotation(d: usize, a: f64, b: f64, c: f64) -> [f64; 9] {
    if d == 2 {
        return [a.cos(), -a.sin(), a.sin(), a.cos(), 0.0, 0.0, 0.0, 0.0, 0.0];
    }
    let rz = [a.cos(), -a.sin(), 0.0, a.sin(), a.cos(), 0.0, 0.0, 0.0, 1.0];
    let ry = [b.cos(), 0.0, b.sin(), 0.0, 1.0, 0.0, -b.sin(), 0.0, b.cos()];
    let rx = [1.0, 0.0, 0.0, 0.0, c.cos(), -c.sin(), 0.0, c.sin(), c.cos()];
    small::mul(3, &small::mul(3, &rz, &ry), &rx)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn shape_metrics_ignore_scaling(seed in 0u64..10_000, c in 0.05f64..20.0) {
        let mut r = rng(seed);
        for (id, d) in [(MetricId::Mu2, 2), (MetricId::Mu303, 3)] {
            let t = random_t(&mut r, d);
            let ct = t.map(|v| v * c);
            let (a, b) = (metric_value(id, d, &t).unwrap(), metric_value(id, d, &ct).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn metrics_ignore_rotation(seed in 0u64..10_000, a in -3.2f64..3.2, b in -3.2f64..3.2, c in -3.2f64..3.2) {
        let mut r = rng(seed);
        for (id, d) in CASES {
            let t = random_t(&mut r, d);
            let rt = small::mul(d, &rotation(d, a, b, c), &t);
            let (x, y) = (metric_value(id, d, &t).unwrap(), metric_value(id, d, &rt).unwrap());
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{:?}", id);
        }
    }

    #[test]
    fn metrics_are_nonnegative_and_hessians_symmetric(seed in 0u64..10_000) {
        let mut r = rng(seed);
        for (id, d) in CASES {
            let t = random_t(&mut r, d);
            // roundoff can leave shape metrics a few ulps below zero at T ~ c R
            prop_assert!(metric_value(id, d, &t).unwrap() >= -1e-15);
            let h = metric_second_derivative(id, d, &t).unwrap();
            let dd = d * d;
            let norm = h[..dd * dd].iter().map(|v| v * v).sum::<f64>().sqrt();
            for i in 0..dd {
                for j in 0..dd {
                    prop_assert!((h[i * dd + j] - h[j * dd + i]).abs() <= 1e-12 * norm);
                }
            }
        }
    }
}
