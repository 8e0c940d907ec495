pub mod dist1d;
pub mod error;
pub mod exact;
pub mod extreme;
pub mod geo;
pub mod mc;
pub mod pdesolve;
pub mod quad;
mod regress;
pub mod scenario;
pub mod shorttime;
pub mod special;
pub mod tabulation;

pub use scenario::{GridControl, ScenarioSpec};
pub use error::{Error, Result};
pub use tabulation::{TabulatedDistribution, TimeGrid};
