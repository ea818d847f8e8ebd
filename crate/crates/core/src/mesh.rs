//! Structured high-order quad/hex meshes of the unit square/cube and the Kershaw deformation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fe::{gauss_lobatto_points, ElementRestriction};

/// Element counts and polynomial order of a structured mesh of [0,1]^d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshSpec {
    pub dim: usize,
    pub nx: usize,
    pub ny: usize,
    /// Ignored when `dim == 2`.
    pub nz: usize,
    pub order: usize,
}

impl MeshSpec {
    pub fn new_3d(nx: usize, ny: usize, nz: usize, order: usize) -> Self {
        Self {
            dim: 3,
            nx,
            ny,
            nz,
            order,
        }
    }

    pub fn new_2d(nx: usize, ny: usize, order: usize) -> Self {
        Self {
            dim: 2,
            nx,
            ny,
            nz: 1,
            order,
        }
    }

    fn counts(&self) -> [usize; 3] {
        if self.dim == 2 {
            [self.nx, self.ny, 1]
        } else {
            [self.nx, self.ny, self.nz]
        }
    }

    /// Checks the layer layout the Kershaw map needs: nx a multiple of 6, ny and nz even.
    pub fn check_kershaw_layout(&self) -> Result<()> {
        if self.nx % 6 != 0 {
            return Err(Error::Divisibility {
                axis: "x",
                count: self.nx,
                multiple: 6,
            });
        }
        if self.ny % 2 != 0 {
            return Err(Error::Divisibility {
                axis: "y",
                count: self.ny,
                multiple: 2,
            });
        }
        if self.dim == 3 && self.nz % 2 != 0 {
            return Err(Error::Divisibility {
                axis: "z",
                count: self.nz,
                multiple: 2,
            });
        }
        Ok(())
    }

    /// Unique nodes per component, `prod(n_k p + 1)`.
    pub fn nodes_per_component(&self) -> usize {
        self.counts()[..self.dim]
            .iter()
            .map(|n| n * self.order + 1)
            .product()
    }
}

/// A conforming structured mesh with positions stored as a component-outermost T-vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    spec: MeshSpec,
    nodes_1d: [usize; 3],
    coords: Vec<f64>,
    restriction: ElementRestriction,
    constrained: Vec<bool>,
}

/// Build the mesh for `spec`, enforcing the Kershaw layer layout.
pub fn build_cartesian(spec: &MeshSpec) -> Result<Mesh> {
    spec.check_kershaw_layout()?;
    build_box(spec)
}

/// Build the uniform mesh for `spec` with any positive element counts.
pub fn build_box(spec: &MeshSpec) -> Result<Mesh> {
    if !(2..=3).contains(&spec.dim) {
        return Err(Error::Config(format!("dimension {} not supported", spec.dim)));
    }
    if spec.order == 0 {
        return Err(Error::Config("mesh order must be at least 1".into()));
    }
    let counts = spec.counts();
    if let Some(k) = counts[..spec.dim].iter().position(|&n| n == 0) {
        return Err(Error::Config(format!("zero elements along axis {k}")));
    }
    let p = spec.order;
    let d = spec.dim;
    let nodes_1d = counts.map(|n| n * p + 1);
    let nodes_1d = if d == 2 {
        [nodes_1d[0], nodes_1d[1], 1]
    } else {
        nodes_1d
    };
    let num_nodes: usize = nodes_1d.iter().product();
    let gll = gauss_lobatto_points(p);

    let line = |axis: usize| -> Vec<f64> {
        let ne = counts[axis];
        (0..nodes_1d[axis])
            .map(|ix| {
                let e = (ix / p).min(ne - 1);
                (e as f64 + gll[ix - e * p]) / ne as f64
            })
            .collect()
    };
    let lines: Vec<Vec<f64>> = (0..d).map(line).collect();

    let mut coords = vec![0.0; d * num_nodes];
    let mut constrained = vec![false; d * num_nodes];
    for g in 0..num_nodes {
        let idx = [
            g % nodes_1d[0],
            (g / nodes_1d[0]) % nodes_1d[1],
            g / (nodes_1d[0] * nodes_1d[1]),
        ];
        for a in 0..d {
            coords[a * num_nodes + g] = lines[a][idx[a]];
            constrained[a * num_nodes + g] = idx[a] == 0 || idx[a] == nodes_1d[a] - 1;
        }
    }

    let ni = p + 1;
    let npe = ni.pow(d as u32);
    let num_elements: usize = counts.iter().product();
    let mut indices = Vec::with_capacity(num_elements * npe);
    for ez in 0..counts[2] {
        for ey in 0..counts[1] {
            for ex in 0..counts[0] {
                let k_range = if d == 2 { 0..1 } else { 0..ni };
                for i3 in k_range {
                    for i2 in 0..ni {
                        for i1 in 0..ni {
                            let gx = ex * p + i1;
                            let gy = ey * p + i2;
                            let gz = ez * p + i3;
                            indices.push(gx + nodes_1d[0] * (gy + nodes_1d[1] * gz));
                        }
                    }
                }
            }
        }
    }
    let restriction = ElementRestriction::new(num_nodes, npe, indices)?;
    Ok(Mesh {
        spec: *spec,
        nodes_1d,
        coords,
        restriction,
        constrained,
    })
}

impl Mesh {
    pub fn spec(&self) -> &MeshSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn order(&self) -> usize {
        self.spec.order
    }

    /// Global node counts per axis (1 for the unused third axis in 2D).
    pub fn nodes_1d(&self) -> [usize; 3] {
        self.nodes_1d
    }

    pub fn num_nodes(&self) -> usize {
        self.restriction.num_nodes()
    }

    pub fn num_elements(&self) -> usize {
        self.restriction.num_elements()
    }

    /// Length of the position T-vector, `d * num_nodes`.
    pub fn num_dofs(&self) -> usize {
        self.dim() * self.num_nodes()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn node(&self, g: usize) -> [f64; 3] {
        let n = self.num_nodes();
        let mut x = [0.0; 3];
        for (a, xa) in x.iter_mut().enumerate().take(self.dim()) {
            *xa = self.coords[a * n + g];
        }
        x
    }

    /// Same topology with new positions.
    pub fn with_coords(&self, coords: Vec<f64>) -> Result<Mesh> {
        if coords.len() != self.coords.len() {
            return Err(Error::Shape(format!(
                "{} coordinates for a mesh with {} position dofs",
                coords.len(),
                self.coords.len()
            )));
        }
        Ok(Mesh {
            coords,
            ..self.clone()
        })
    }

    pub fn restriction(&self) -> &ElementRestriction {
        &self.restriction
    }

    /// `true` for each (component, node) position dof that is held fixed.
    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }
}

/// 1D map that compresses toward the right boundary.
pub fn kershaw_right(eps: f64, x: f64) -> f64 {
    if x <= 0.5 {
        (2.0 - eps) * x
    } else {
        1.0 + eps * (x - 1.0)
    }
}

/// Mirror image of [`kershaw_right`].
pub fn kershaw_left(eps: f64, x: f64) -> f64 {
    1.0 - kershaw_right(eps, 1.0 - x)
}

/// Quintic smoothstep from `a` (x <= 0) to `b` (x >= 1).
pub fn kershaw_step(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return a;
    }
    if x >= 1.0 {
        return b;
    }
    a + (b - a) * (x * x * x * (x * (6.0 * x - 15.0) + 10.0))
}

/// The six-layer Kershaw map of the unit cube.
pub fn kershaw_transform(epsy: f64, epsz: f64, x: f64, y: f64, z: f64) -> [f64; 3] {
    let layer = (x * 6.0) as i32;
    let lambda = (x - layer as f64 / 6.0) * 6.0;
    let (yy, zz) = match layer {
        0 => (kershaw_left(epsy, y), kershaw_left(epsz, z)),
        1 | 4 => (
            kershaw_step(kershaw_left(epsy, y), kershaw_right(epsy, y), lambda),
            kershaw_step(kershaw_left(epsz, z), kershaw_right(epsz, z), lambda),
        ),
        2 => (
            kershaw_step(kershaw_right(epsy, y), kershaw_left(epsy, y), lambda / 2.0),
            kershaw_step(kershaw_right(epsz, z), kershaw_left(epsz, z), lambda / 2.0),
        ),
        3 => (
            kershaw_step(kershaw_right(epsy, y), kershaw_left(epsy, y), (1.0 + lambda) / 2.0),
            kershaw_step(kershaw_right(epsz, z), kershaw_left(epsz, z), (1.0 + lambda) / 2.0),
        ),
        _ => (kershaw_right(epsy, y), kershaw_right(epsz, z)),
    };
    [x, yy, zz]
}

/// Moves every node of a 3D mesh of the unit cube through [`kershaw_transform`].
pub fn apply_kershaw(mesh: &Mesh, epsy: f64, epsz: f64) -> Result<Mesh> {
    if mesh.dim() != 3 {
        return Err(Error::Config(
            "the Kershaw transform is only defined for 3D meshes".into(),
        ));
    }
    for (name, eps) in [("epsy", epsy), ("epsz", epsz)] {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Config(format!("{name} = {eps} outside (0, 1]")));
        }
    }
    let n = mesh.num_nodes();
    let c = mesh.coords();
    let moved: Vec<[f64; 3]> = (0..n)
        .into_par_iter()
        .map(|g| kershaw_transform(epsy, epsz, c[g], c[n + g], c[2 * n + g]))
        .collect();
    let mut coords = vec![0.0; 3 * n];
    for (g, p) in moved.iter().enumerate() {
        for a in 0..3 {
            coords[a * n + g] = p[a];
        }
    }
    mesh.with_coords(coords)
}
