//! Numerical workbench for kernels of finite-rank perturbed block Toeplitz
//! operators on truncated vector-valued Hardy spaces.

pub mod error;
pub mod generate;
pub mod hardy;
pub mod json;
pub mod linalg;
pub mod model_space;
pub mod near_invariance;
pub mod operators;
pub mod representation;
pub mod scenario;
pub mod subspace;
pub mod symbols;

pub use error::{Error, Result};
pub use hardy::{CoeffVec, LaurentVec};
pub use num_complex::Complex64 as C64;
pub use subspace::{RankPolicy, Subspace};
pub use symbols::LaurentMatrixSymbol;
