//! Numerical simulation of self-contained quantum thermal machines.
//!
//! Two machines are modelled:
//!
//! * the three-qubit absorption refrigerator, whose qubits sit in hot, room and
//!   cold baths and exchange energy only through the degenerate pair
//!   `|010⟩ ↔ |101⟩`;
//! * the two-qubit heat engine that lifts a weight along an equally spaced
//!   ladder through the degenerate pairs `|10,n⟩ ↔ |01,n+1⟩`.
//!
//! Each qubit is thermalised by a reset process: at rate `p` its state is
//! replaced by the Gibbs state of its bath. The crate builds the Hamiltonians
//! and the resulting Liouvillian, solves for steady states, integrates the
//! dynamics with RK4, extracts heat and work currents and checks the Carnot
//! limit at the reversibility point.
//!
//! Units are natural: `k_B = ħ = 1`.

pub mod cli;
pub mod config;
pub mod defaults;
pub mod engine;
pub mod error;
pub mod liouvillian;
pub mod machine;
pub mod observables;
pub mod output;
pub mod panel;
pub mod selftest;
pub mod solvers;
pub mod state;
pub mod sweep;
pub mod tolerances;

pub use error::{Error, Result};
pub use liouvillian::{Generator, Liouvillian, Superoperator};
pub use machine::{EngineSpec, FridgeSpec, MachineKind, QubitSpec};
pub use observables::{CurrentsReport, EffectiveTemperature};
pub use solvers::{SteadyStateResult, Trajectory};
pub use state::{CMatrix, DensityMatrix, Operator};
pub use sweep::{CarnotCheck, SweepTable};
