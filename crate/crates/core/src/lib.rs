//! Small-time tail asymptotics for the zero-started Heston/Feller system.

pub mod cgf;
pub mod error;
pub mod fitting;
pub mod model;
pub mod montecarlo;
pub mod quad;
pub mod rate;
pub mod saddlepoint;
mod roots;
pub mod special;

pub use error::{Error, Result};
pub use model::{DomainBounds, Marginal, ModelParams};
