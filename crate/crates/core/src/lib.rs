//! Spectral simulation and time-reversal reconstruction for photoacoustic
//! tomography in a medium with one relaxation process.
//!
//! The pipeline runs entirely in wavenumber space: [`spectral`] solves the
//! dispersion cubic and the amplitude moment system, [`kernels`] assembles
//! the image multipliers, [`transform`] applies them to gridded fields and
//! [`experiments`] scripts the reproduction runs.

pub mod error;
pub mod experiments;
pub mod kernels;
mod linalg;
pub mod medium;
pub mod scaled;
pub mod spectral;
pub mod transform;

pub use error::{Error, Result};
pub use kernels::{
    dc_constant, eta0_hat, eta12_hats, image_multiplier, small_k_multiplier, zeta_hats,
    KernelSample,
};
pub use medium::{derive_medium, Medium, RawParams, SpeedKind};
pub use scaled::ScaledComplex;
pub use spectral::{
    amplitudes, asymptotic_limits, cardano_roots, dissipation_free_roots, small_k_roots,
    solve_vandermonde, Amplitudes, ApproxRoots, CardanoDiagnostics, SpectralRoots,
};
pub use transform::{Field, GridSpec, InteriorRegion};
