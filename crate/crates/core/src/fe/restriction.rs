//! Element restriction: the map between global nodal vectors and element-duplicated vectors.
//!
//! Global (L-) vectors and element (E-) vectors are both component-outermost. For an
//! E-vector the remaining order is element, then local lexicographic node index with the
//! first reference axis fastest.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ElementRestriction {
    num_nodes: usize,
    nodes_per_element: usize,
    indices: Vec<usize>,
}

impl ElementRestriction {
    /// `indices` holds `nodes_per_element` global node ids per element, element after element.
    pub fn new(num_nodes: usize, nodes_per_element: usize, indices: Vec<usize>) -> Result<Self> {
        if nodes_per_element == 0 || indices.len() % nodes_per_element != 0 {
            return Err(Error::Shape(format!(
                "{} indices is not a multiple of {} nodes per element",
                indices.len(),
                nodes_per_element
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&g| g >= num_nodes) {
            return Err(Error::Shape(format!("node index {bad} >= {num_nodes}")));
        }
        Ok(Self {
            num_nodes,
            nodes_per_element,
            indices,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_elements(&self) -> usize {
        self.indices.len() / self.nodes_per_element
    }

    pub fn nodes_per_element(&self) -> usize {
        self.nodes_per_element
    }

    /// Global node ids of element `e`.
    pub fn element(&self, e: usize) -> &[usize] {
        let np = self.nodes_per_element;
        &self.indices[e * np..(e + 1) * np]
    }

    /// Length of an E-vector with `ncomp` components.
    pub fn evector_len(&self, ncomp: usize) -> usize {
        ncomp * self.indices.len()
    }

    /// E[a][e][i] = L[a][restriction[e][i]].
    pub fn gather(&self, ncomp: usize, l: &[f64]) -> Vec<f64> {
        assert_eq!(l.len(), ncomp * self.num_nodes, "L-vector length");
        let mut e = Vec::with_capacity(self.evector_len(ncomp));
        for a in 0..ncomp {
            let comp = &l[a * self.num_nodes..(a + 1) * self.num_nodes];
            e.extend(self.indices.iter().map(|&g| comp[g]));
        }
        e
    }

    /// L[a][g] = sum of E[a][e][i] over all (e, i) mapped to g, accumulated in ascending
    /// element order so the result does not depend on how E was produced.
    pub fn scatter_add(&self, ncomp: usize, e: &[f64]) -> Vec<f64> {
        assert_eq!(e.len(), self.evector_len(ncomp), "E-vector length");
        let mut l = vec![0.0; ncomp * self.num_nodes];
        let per_comp = self.indices.len();
        for a in 0..ncomp {
            let comp = &mut l[a * self.num_nodes..(a + 1) * self.num_nodes];
            for (&g, &v) in self.indices.iter().zip(&e[a * per_comp..(a + 1) * per_comp]) {
                comp[g] += v;
            }
        }
        l
    }

    /// Number of elements touching each node.
    pub fn multiplicity(&self) -> Vec<usize> {
        let mut m = vec![0; self.num_nodes];
        for &g in &self.indices {
            m[g] += 1;
        }
        m
    }
}

/// Mutable per-element views into a component-outermost E-vector, so element kernels can
/// run in parallel while writing the shared layout.
pub fn element_views_mut(
    evec: &mut [f64],
    ncomp: usize,
    num_elements: usize,
    nodes_per_element: usize,
) -> Vec<Vec<&mut [f64]>> {
    let per_comp = num_elements * nodes_per_element;
    assert_eq!(evec.len(), ncomp * per_comp);
    let mut views: Vec<Vec<&mut [f64]>> = (0..num_elements)
        .map(|_| Vec::with_capacity(ncomp))
        .collect();
    for comp in evec.chunks_mut(per_comp) {
        for (view, chunk) in views.iter_mut().zip(comp.chunks_mut(nodes_per_element)) {
            view.push(chunk);
        }
    }
    views
}
