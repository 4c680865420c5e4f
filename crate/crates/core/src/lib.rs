//! Two qubits with an XY exchange coupling whose strength is a short-term
//! depressing synaptic resource `r(t)`.
//!
//! * [`smallmat`]: 4×4 complex kernel and Hermitian eigenvalues.
//! * [`state`]: density matrices, populations, negativity, measurement.
//! * [`synapse`]: the resource equation in its classical, mean-field and
//!   measurement-driven forms.
//! * [`evolution`]: deterministic von Neumann + mean-field integration.
//! * [`trajectories`]: the measurement-based protocol and ensembles.
//! * [`io`]: configuration, presets, CSV and metrics for the CLI.

// Parameter guards use `!(x > lo)` so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod io;
pub mod smallmat;
pub mod state;
pub mod synapse;
pub mod trajectories;

pub use error::{Error, Result};
pub use evolution::{
    build_hamiltonian, evolve, r_min_sweep, rhs_coupled, rk4_step, CoupledState, IntegratorConfig, ModelParams,
    SweepRow, TimeSeriesRecord,
};
pub use smallmat::{commutator, hermitian_eigenvalues, mat_mul, ComplexMat4};
pub use state::{BasisLabel, DensityMatrix, Outcome, Qubit};
pub use synapse::{r_rhs_binary, r_rhs_meanfield, r_stationary, simulate_classical_spikes, SynapseParams};
pub use trajectories::{
    ensemble_average, run_trajectory, sample_outcome, EnsemblePoint, TrajectoryConfig, TrajectoryRecord,
};
