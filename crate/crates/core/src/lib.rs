pub(crate) mod bigc;
pub mod acceptance;
pub mod ensemble;
pub mod equilibrium;
pub mod mtp;
pub mod error;
pub mod pde;
pub mod profile;
pub mod quad;
pub mod scattering;
pub mod specfun;

pub use error::{Error, Result};
pub use profile::{build_profile, AdmissibleProfile, BurgersState, Lobe, ProfileSpec, TurningPoints};
pub use specfun::QuadratrixPoint;
pub use scattering::ScatteringData;

/// Crate version recorded in emitted file headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
