//! Constrained-generation stack for combinatorial optimization at desk
//! scale: problem evaluators, grammar-constrained decoding over synthetic
//! policies, feasibility repair, adaptive best-of-N sampling, and
//! preference-based training on a toy policy.

pub mod bopo;
pub mod decode;
pub mod error;
pub mod gen;
pub mod grammar;
pub mod oracle;
pub mod problems;
pub mod repair;
pub mod sampler;
pub mod verify;

pub use problems::{Instance, InstanceData, ProblemKind, Solution};
