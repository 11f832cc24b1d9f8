//! Double-precision tensors, a define-by-run reverse-mode graph, and the
//! finite-difference oracle used to verify it.

mod gradcheck;
mod graph;
mod kernels;
mod params;
mod tensor;

pub use gradcheck::gradient_check;
pub use graph::{ElementwiseOp, Gradients, Graph, Var};
pub use kernels::{masked_softmax, matmul};
pub use params::{ParamId, ParamStore, CHECKPOINT_MAGIC};
pub use tensor::Tensor;
