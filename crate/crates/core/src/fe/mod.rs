//! Tensor-product finite element building blocks.

pub mod basis;
pub mod quadrature;
pub mod restriction;
pub mod tensor;

pub use basis::{gauss_lobatto_points, Basis1D};
pub use quadrature::{gauss_legendre_1d, QuadRule1D};
pub use restriction::ElementRestriction;
pub use tensor::{
    apply_axis, build_eval_matrices, contract_dofs_to_quad, contract_quad_to_dofs, AxisMatrix,
    EvalMatrices, OpCount, Scratch, TensorBasis,
};
