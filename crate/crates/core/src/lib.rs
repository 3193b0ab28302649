//! Complex-trajectory propagation of Gaussian wavepackets through the hierarchy of
//! equations for the complex action and its spatial derivatives, with split-operator
//! and closed-form oracles for comparison.

pub mod config;
pub mod error;
pub mod experiments;
pub mod hierarchy;
pub mod io;
pub mod jet;
pub mod manifold;
pub mod model;
pub mod numerics;
pub mod ode;
pub mod reference;

pub use error::{BomcaError, Result};
pub use hierarchy::{TrajectoryState, TruncationOrder};
pub use model::{GaussianWavepacket, PotentialModel, SystemSpec};
pub use num_complex::Complex64;
