#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmop_core::mesh::{build_box, Mesh, MeshSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Box mesh with a smooth boundary-preserving warp plus random jitter of free components.
/// Amplitudes are small enough that det A stays well away from zero.
pub fn perturbed_mesh(dim: usize, n: usize, p: usize, seed: u64) -> Mesh {
    let spec = if dim == 2 {
        MeshSpec::new_2d(n, n, p)
    } else {
        MeshSpec::new_3d(n, n, n, p)
    };
    let m = build_box(&spec).unwrap();
    let mut r = rng(seed);
    let nn = m.num_nodes();
    let h = 1.0 / (n * p) as f64;
    let amp: [f64; 3] = std::array::from_fn(|_| r.random_range(0.03..0.08));
    let mut x = m.coords().to_vec();
    for g in 0..nn {
        let c = m.node(g);
        let bump: f64 = (0..dim).map(|k| (std::f64::consts::PI * c[k]).sin()).product();
        for a in 0..dim {
            let i = a * nn + g;
            let other = c[(a + 1) % dim];
            x[i] += amp[a] * bump * (std::f64::consts::PI * other).cos();
            if !m.constrained()[i] {
                x[i] += 0.08 * h * r.random_range(-1.0..1.0);
            } else {
                x[i] = m.coords()[i];
            }
        }
    }
    m.with_coords(x).unwrap()
}

pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
