//! Network Hamiltonian, Lindblad terms, structured baths and laser drive.
//!
//! Rates are in 1/ps, energies are angular frequencies in rad/ps and times
//! are in ps. Every term is written in the form `r [2LρL† − {L†L, ρ}]`, so
//! a population coupled through `L` decays at `2r`.

mod bath;
mod data;
mod generator;
mod laser;
mod network;
mod ops;
mod spec;
mod terms;
pub mod units;

pub use bath::{
    build_bath, build_local_bath, build_nonlocal_bath, BathDamping, BathExtension,
    LOCAL_MODES_FACTOR, NONLOCAL_MODE_FACTOR,
};
pub use data::{parse_network, RawDipoles, RawNetwork, FMO_DATA};
pub use generator::{CompiledRhs, Generator, ModelSpec, SystemInfo};
pub use laser::{build_laser_drive, Drive, Quadrature};
pub use network::{build_network_hamiltonian, network_factors, network_layout, SYSTEM_FACTOR};
pub use ops::ModeAlgebra;
pub use spec::{
    fmo_base_rates, scale_bath, validate_correlation_matrix, BathModel, BathSpec,
    CorrelatedDephasing, Frame, Injection, LaserPulse, LocalModes, NetworkSpec, NoiseSpec,
    NonLocalMode, Truncation, FMO_DEPHASING, FMO_DISSIPATION, FMO_FIELD_STRENGTH, FMO_SINK_RATE,
    FMO_SINK_SOURCE,
};
pub use terms::{
    correlated_dephasing_term, dephasing_term, dissipation_term, injection_term, sink_term, Jump,
    LindbladTerm, TermKind, SINK_MODE,
};
