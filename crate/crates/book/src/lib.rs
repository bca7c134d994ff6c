//! The chapters of `book/`, one module each, so that `cargo test` runs their
//! code blocks.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/constraints.md")]
pub mod constraints {}
#[doc = include_str!("../../../book/src/rewards.md")]
pub mod rewards {}
#[doc = include_str!("../../../book/src/policy.md")]
pub mod policy {}
#[doc = include_str!("../../../book/src/training.md")]
pub mod training {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/toy.md")]
pub mod toy {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
