//! Concept-network engine whose only reward is the averaged self-information
//! gain of binary space partitions, paid per unit of execution time.

pub mod codegen;
pub mod env;
pub mod harness;
pub mod infomath;
pub mod learning;
pub mod network;
pub mod vm;
