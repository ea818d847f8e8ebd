//! Dense 2x2 / 3x3 helpers. Matrices are row-major in a `[f64; 9]`, using the first
//! `d * d` entries, entry (m, n) at `m * d + n`.

pub type Mat = [f64; 9];

pub fn identity(d: usize) -> Mat {
    let mut m = [0.0; 9];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

pub fn det(d: usize, a: &[f64]) -> f64 {
    if d == 2 {
        a[0] * a[3] - a[1] * a[2]
    } else {
        a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
            + a[2] * (a[3] * a[7] - a[4] * a[6])
    }
}

/// Cofactor matrix, the derivative of det(A) with respect to A.
pub fn cofactor(d: usize, a: &[f64]) -> Mat {
    let mut c = [0.0; 9];
    if d == 2 {
        c[0] = a[3];
        c[1] = -a[2];
        c[2] = -a[1];
        c[3] = a[0];
    } else {
        c[0] = a[4] * a[8] - a[5] * a[7];
        c[1] = a[5] * a[6] - a[3] * a[8];
        c[2] = a[3] * a[7] - a[4] * a[6];
        c[3] = a[2] * a[7] - a[1] * a[8];
        c[4] = a[0] * a[8] - a[2] * a[6];
        c[5] = a[1] * a[6] - a[0] * a[7];
        c[6] = a[1] * a[5] - a[2] * a[4];
        c[7] = a[2] * a[3] - a[0] * a[5];
        c[8] = a[0] * a[4] - a[1] * a[3];
    }
    c
}

/// Inverse via the cofactor matrix; the caller guarantees det != 0.
pub fn inverse(d: usize, a: &[f64]) -> Mat {
    let c = cofactor(d, a);
    let inv_det = 1.0 / det(d, a);
    let mut r = [0.0; 9];
    for m in 0..d {
        for n in 0..d {
            r[m * d + n] = c[n * d + m] * inv_det;
        }
    }
    r
}

/// C = A B.
pub fn mul(d: usize, a: &[f64], b: &[f64]) -> Mat {
    let mut c = [0.0; 9];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            for j in 0..d {
                c[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    c
}

/// C = A B^T.
pub fn mul_bt(d: usize, a: &[f64], b: &[f64]) -> Mat {
    let mut c = [0.0; 9];
    for i in 0..d {
        for j in 0..d {
            c[i * d + j] = (0..d).map(|k| a[i * d + k] * b[j * d + k]).sum();
        }
    }
    c
}

pub fn frobenius_sq(d: usize, a: &[f64]) -> f64 {
    a[..d * d].iter().map(|v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_cofactor() {
        let a = [2.0, 1.0, 0.5, -0.3, 1.5, 0.2, 0.1, 0.4, 3.0];
        let ai = inverse(3, &a);
        let p = mul(3, &a, &ai);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p[i * 3 + j] - want).abs() < 1e-14);
            }
        }
        let b = [2.0, 1.0, -0.7, 0.9];
        let bi = inverse(2, &b);
        let p = mul(2, &b, &bi);
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);
        assert!(p[2].abs() < 1e-15 && (p[3] - 1.0).abs() < 1e-15);
        assert!((det(2, &b) - 2.5).abs() < 1e-15);
    }
}
