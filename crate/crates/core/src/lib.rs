//! Numerical laboratory for the two-phase Stefan problem with surface tension
//! and kinetic undercooling.
//!
//! * [`thermo`]: free energies and every derived material quantity.
//! * [`equilibria`]: the reduced energy φ(u), the stability index ζ and the
//!   classification of spherical equilibria.
//! * [`geometry`]: height functions over a reference sphere, mean curvature
//!   and its linearization.
//! * [`spectral`]: eigenvalues of the linearized problem, mode by mode for a
//!   concentric configuration and through a discretized Neumann-to-Dirichlet
//!   operator for several discs.
//! * [`simulate`]: front-tracked radial evolution and the lumped multi-sphere
//!   ripening model.
//! * [`config`] and [`report`]: configuration schema, validation, and the
//!   JSON/CSV writers used by the command line front end.
//!
//! All quantities are nondimensional.

pub mod check;
pub mod config;
pub mod equilibria;
pub mod geometry;
pub mod linalg;
pub mod report;
pub mod simulate;
pub mod spectral;
pub mod thermo;

use thiserror::Error;

pub use equilibria::{DomainSpec, EquilibriumPoint, EquilibriumProblem, StabilityClass};
pub use thermo::{Coefficient, CustomEnergy, EnergyFamily, FreeEnergyModel, Phase};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Thermo(#[from] thermo::ThermoError),
    #[error(transparent)]
    Equilibrium(#[from] equilibria::EquilibriumError),
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Spectral(#[from] spectral::SpectralError),
    #[error(transparent)]
    Simulation(#[from] simulate::SimulationError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code: 2 for configuration or model errors, 3 for
    /// numerical breakdown, 4 for loss of well-posedness or a geometry
    /// event, 1 for anything else (i/o).
    pub fn exit_code(&self) -> i32 {
        use simulate::SimulationError as S;
        match self {
            Error::Config(_) => 2,
            Error::Thermo(thermo::ThermoError::InvalidModel(_)) => 2,
            Error::Equilibrium(equilibria::EquilibriumError::InvalidProblem(_)) => 2,
            Error::Spectral(spectral::SpectralError::InvalidConfig(_)) => 2,
            Error::Simulation(S::InvalidConfig(_)) => 2,
            Error::Simulation(
                S::WellPosednessLost { .. } | S::TemperaturePositivityLost { .. } | S::GeometryEvent { .. },
            ) => 4,
            Error::Io { .. } => 1,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
