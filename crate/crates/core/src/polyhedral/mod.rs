//! Polyhedral cones, polar duality and hyperplane-generated fans.

mod cone;
mod dd;
mod fan;
mod project;

pub use cone::Cone;
pub use dd::{double_description, Generators};
pub use fan::{HyperplaneFan, SignVector};
pub use project::Projection;
