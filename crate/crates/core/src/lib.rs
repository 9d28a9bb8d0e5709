pub mod dynamics;
pub mod embedding;
pub mod error;
pub mod inclusion;
pub mod linalg;
pub mod model;
pub mod polyhedral;
pub mod regions;
pub mod scalar;

pub use error::{Error, Result};
