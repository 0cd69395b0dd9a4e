//! Open quantum emitters coupled to dissipative lattice baths.

pub mod bath;
pub mod driven;
pub mod error;
pub mod green;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod scaling;
pub mod twoexc;

pub use error::{Error, Result};
pub use model::{BandKind, BathParams, Config, EmitterConfig};
