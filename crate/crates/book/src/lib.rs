//! Runs the guide's code blocks as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/hardy.md")]
pub mod hardy {}
#[doc = include_str!("../../../book/src/symbols.md")]
pub mod symbols {}
#[doc = include_str!("../../../book/src/operators.md")]
pub mod operators {}
#[doc = include_str!("../../../book/src/subspaces.md")]
pub mod subspaces {}
#[doc = include_str!("../../../book/src/model_spaces.md")]
pub mod model_spaces {}
#[doc = include_str!("../../../book/src/near_invariance.md")]
pub mod near_invariance {}
#[doc = include_str!("../../../book/src/representation.md")]
pub mod representation {}
#[doc = include_str!("../../../book/src/scenarios.md")]
pub mod scenarios {}
