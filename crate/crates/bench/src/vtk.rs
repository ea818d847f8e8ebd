use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use tmop_core::mesh::Mesh;

use crate::BenchError;

pub const VTK_LAGRANGE_QUADRILATERAL: u8 = 70;
pub const VTK_LAGRANGE_HEXAHEDRON: u8 = 72;

/// Position of lattice point (i, j) of an order-`p` Lagrange quadrilateral in VTK's node order.
pub fn lagrange_quad_index(i: usize, j: usize, p: usize) -> usize {
    let ib = i == 0 || i == p;
    let jb = j == 0 || j == p;
    if ib && jb {
        return corner(i > 0, j > 0);
    }
    let q = p - 1;
    if jb {
        return 4 + (i - 1) + if j > 0 { 2 * q } else { 0 };
    }
    if ib {
        return 4 + (j - 1) + if i > 0 { q } else { 3 * q };
    }
    4 + 4 * q + (i - 1) + q * (j - 1)
}

/// Counterclockwise corner number in the (i, j) plane.
fn corner(i_hi: bool, j_hi: bool) -> usize {
    match (i_hi, j_hi) {
        (false, false) => 0,
        (true, false) => 1,
        (true, true) => 2,
        (false, true) => 3,
    }
}

/// Position of lattice point (i, j, k) of an order-`p` Lagrange hexahedron in VTK's node order.
pub fn lagrange_hex_index(i: usize, j: usize, k: usize, p: usize) -> usize {
    let ib = i == 0 || i == p;
    let jb = j == 0 || j == p;
    let kb = k == 0 || k == p;
    let nb = ib as usize + jb as usize + kb as usize;
    if nb == 3 {
        return corner(i > 0, j > 0) + if k > 0 { 4 } else { 0 };
    }
    let q = p - 1;
    let mut off = 8;
    if nb == 2 {
        if !ib {
            return off + (i - 1) + if j > 0 { 2 * q } else { 0 } + if k > 0 { 4 * q } else { 0 };
        }
        if !jb {
            return off + (j - 1) + if i > 0 { q } else { 3 * q } + if k > 0 { 4 * q } else { 0 };
        }
        off += 8 * q;
        return off + (k - 1) + q * corner(i > 0, j > 0);
    }
    off += 12 * q;
    let face = q * q;
    if nb == 1 {
        if ib {
            return off + (j - 1) + q * (k - 1) + if i > 0 { face } else { 0 };
        }
        off += 2 * face;
        if jb {
            return off + (i - 1) + q * (k - 1) + if j > 0 { face } else { 0 };
        }
        off += 2 * face;
        return off + (i - 1) + q * (j - 1) + if k > 0 { face } else { 0 };
    }
    off += 6 * face;
    off + (i - 1) + q * ((j - 1) + q * (k - 1))
}

/// Global node ids of element `e` arranged in VTK Lagrange order.
pub fn vtk_connectivity(mesh: &Mesh, e: usize) -> Vec<usize> {
    let p = mesh.order();
    let n = p + 1;
    let local = mesh.restriction().element(e);
    let mut out = vec![0; local.len()];
    for (l, &g) in local.iter().enumerate() {
        let (i, j, k) = (l % n, (l / n) % n, l / (n * n));
        let v = if mesh.dim() == 2 {
            lagrange_quad_index(i, j, p)
        } else {
            lagrange_hex_index(i, j, k, p)
        };
        out[v] = g;
    }
    out
}

/// Legacy ASCII unstructured grid with one Lagrange cell per element.
pub fn write_vtk(mesh: &Mesh, path: &Path) -> Result<(), BenchError> {
    if path.as_os_str().is_empty() {
        return Err(BenchError::Usage("VTK path is empty".into()));
    }
    let io = |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    write_grid(mesh, &mut w).and_then(|_| w.flush()).map_err(io)
}

fn write_grid(mesh: &Mesh, w: &mut impl Write) -> std::io::Result<()> {
    let n = mesh.num_nodes();
    let ne = mesh.num_elements();
    let npe = mesh.restriction().nodes_per_element();
    writeln!(w, "# vtk DataFile Version 2.0")?;
    writeln!(w, "tmop mesh, order {}", mesh.order())?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {n} double")?;
    for g in 0..n {
        let [x, y, z] = mesh.node(g);
        writeln!(w, "{x:.17e} {y:.17e} {z:.17e}")?;
    }
    writeln!(w, "CELLS {ne} {}", ne * (npe + 1))?;
    for e in 0..ne {
        write!(w, "{npe}")?;
        for g in vtk_connectivity(mesh, e) {
            write!(w, " {g}")?;
        }
        writeln!(w)?;
    }
    let ty = if mesh.dim() == 2 {
        VTK_LAGRANGE_QUADRILATERAL
    } else {
        VTK_LAGRANGE_HEXAHEDRON
    };
    writeln!(w, "CELL_TYPES {ne}")?;
    for _ in 0..ne {
        writeln!(w, "{ty}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_ordering_is_a_permutation() {
        for p in 1..=4 {
            let n = p + 1;
            let mut seen = vec![false; n * n * n];
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let v = lagrange_hex_index(i, j, k, p);
                        assert!(!seen[v]);
                        seen[v] = true;
                    }
                }
            }
        }
    }

    #[test]
    fn quadratic_hex_landmarks() {
        // corners, then the 12 edge midpoints, then 6 face centers, then the body center
        assert_eq!(lagrange_hex_index(2, 2, 2, 2), 6);
        assert_eq!(lagrange_hex_index(1, 0, 0, 2), 8);
        assert_eq!(lagrange_hex_index(2, 1, 0, 2), 9);
        assert_eq!(lagrange_hex_index(1, 2, 0, 2), 10);
        assert_eq!(lagrange_hex_index(0, 1, 0, 2), 11);
        assert_eq!(lagrange_hex_index(0, 0, 1, 2), 16);
        assert_eq!(lagrange_hex_index(2, 0, 1, 2), 17);
        assert_eq!(lagrange_hex_index(2, 2, 1, 2), 18);
        assert_eq!(lagrange_hex_index(0, 2, 1, 2), 19);
        assert_eq!(lagrange_hex_index(0, 1, 1, 2), 20);
        assert_eq!(lagrange_hex_index(2, 1, 1, 2), 21);
        assert_eq!(lagrange_hex_index(1, 0, 1, 2), 22);
        assert_eq!(lagrange_hex_index(1, 2, 1, 2), 23);
        assert_eq!(lagrange_hex_index(1, 1, 0, 2), 24);
        assert_eq!(lagrange_hex_index(1, 1, 2, 2), 25);
        assert_eq!(lagrange_hex_index(1, 1, 1, 2), 26);
    }

    #[test]
    fn quad_ordering_is_a_permutation() {
        for p in 1..=4 {
            let n = p + 1;
            let mut seen = vec![false; n * n];
            for j in 0..n {
                for i in 0..n {
                    let v = lagrange_quad_index(i, j, p);
                    assert!(!seen[v]);
                    seen[v] = true;
                }
            }
        }
    }
}
