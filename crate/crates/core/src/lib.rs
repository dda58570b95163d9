//! Covariance-matrix simulation of lossy bosonic channels whose noise is
//! correlated across uses by a multi-mode squeezed environment, together
//! with capacity bounds under input energy constraints and a truncated
//! Fock-space oracle that certifies the Gaussian arithmetic by brute
//! force.
//!
//! Module map:
//!
//! - [`gaussian`]: states, symplectic transforms, photon numbers and
//!   entropies, the simulation substrate.
//! - [`spectral`]: the squeezing matrix, its eigendecomposition and every
//!   derived scalar the bounds need.
//! - [`channel`]: the memoryless and correlated-noise channel maps and the
//!   decomposition relating them.
//! - [`capacity`]: the Gaussian rate, both upper bounds, the lower bound
//!   and the assembled report.
//! - [`fock`]: dense truncated Fock-space simulation for one or two uses.
//! - [`sampling`]: seeded random instances for property sweeps.
//! - [`checks`]: the verification routines built from all of the above.

extern crate blas_src;

pub mod capacity;
pub mod channel;
pub mod checks;
pub mod fock;
pub mod gaussian;
pub mod sampling;
pub mod spectral;

pub use capacity::{bounds_report, BoundsReport};
pub use channel::ChannelParams;
pub use gaussian::{GaussianState, SymplecticTransform};
pub use spectral::SqueezingMatrix;
