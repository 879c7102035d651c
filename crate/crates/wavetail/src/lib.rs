//! Wave-packet scattering off finite-range 1D potentials.
//!
//! Units: hbar = 1 and 2M = 1, so a plane wave of momentum k has energy k^2
//! and group velocity 2k. The crate propagates Gaussian-type packets exactly
//! (spectral quadrature over scattering states) and on a grid
//! (Crank-Nicolson), expands the long-time behaviour of the wave function in
//! inverse powers of t, and measures how the probability of remaining in a
//! bounded interval decays. The headline effect: packets whose momentum
//! amplitude vanishes linearly at k = 0 leave a t^-3 nonescape tail, while a
//! quadratic zero upgrades the decay to t^-5.

pub mod asymptotics;
pub mod numerics;
pub mod observables;
pub mod packets;
pub mod potential;
pub mod propagation;
pub mod spectral;

pub use asymptotics::{TailExpansion, TailParity, TailTerm};
pub use num_complex::Complex64;
pub use observables::{FitReport, ProbabilitySeries, ThreeRegionReport};

pub use packets::PacketSpec;
pub use potential::{PotentialSpec, ScatteringData, Segment, Side};
pub use propagation::{GridParams, PropagationMethod, SpectralParams, WaveField};
pub use spectral::SpectralAmplitude;

/// Everything that can go wrong across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("momentum k = 0 is excluded; use the dedicated zero-momentum limit operations")]
    ZeroMomentum,
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid packet: {0}")]
    InvalidPacket(String),
    #[error("derivative order {order} unsupported: {reason}")]
    UnsupportedOrder { order: u32, reason: String },
    #[error("V = 0 has no barrier-type zero-momentum limits; handle the free case separately")]
    FreeParticleLimits,
    #[error("transfer-matrix product is near-singular (condition estimate {cond:.3e})")]
    SingularTransfer { cond: f64 },
    #[error("zero-energy resonance: |phi(x, {side_sign}0)| = {magnitude:.3e} does not vanish")]
    ZeroEnergyResonance { side_sign: char, magnitude: f64 },
    #[error("vanishing order undetermined: derivatives through order {max_order} all below tolerance")]
    OrderUndetermined { max_order: u32 },
    #[error("negative evolution time t = {0}")]
    NegativeTime(f64),
    #[error("simulation box too small: half-width {given} < required {required}")]
    BoxTooSmall { given: f64, required: f64 },
    #[error("x grid does not cover the requested range: {0}")]
    GridCoverage(String),
    #[error("power-law fit window invalid: {0}")]
    FitWindow(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
