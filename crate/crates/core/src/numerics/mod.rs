//! Numerical building blocks shared by the physics modules.

pub mod fit;
pub mod linalg;
pub mod ode;
pub mod quad;
pub mod roots;
