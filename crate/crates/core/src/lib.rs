//! Mining, binding and comparison of recursive, viewpoint-specific narratives.

pub mod corpus;
pub mod ids;
pub mod binder;
pub mod compare;
pub mod export;
pub mod llm;
pub mod miner;
pub mod model;
mod net;
pub mod semantics;

pub use model::*;
pub use net::NetError;
