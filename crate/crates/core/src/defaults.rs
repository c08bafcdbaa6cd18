//! Every configurable numeric default. `--print-config` shows the values
//! actually applied to a run.
//!
//! | Constant | Value | Meaning |
//! |---|---|---|
//! | [`STEP_FRACTION`] | 0.05 | RK4 step as a fraction of `1/‖L‖₂` |
//! | [`FRIDGE_HORIZON_RESET_TIMES`] | 200 | refrigerator evolution horizon, units of `1/min(p)` |
//! | [`FRIDGE_EVOLVE_SAMPLES`] | 100 | samples written by `fridge evolve` |
//! | [`LADDER_LEVELS`] | 41 | engine weight levels `N` |
//! | [`INITIAL_LEVEL`] | 20 | engine starting level `n0` |
//! | [`ENGINE_HORIZON_RESET_TIMES`] | 50 | engine horizon, units of `1/min(p)` |
//! | [`ENGINE_WINDOW_START_RESET_TIMES`] | 30 | start of the work-measurement window, units of `1/min(p)` |
//! | [`ENGINE_SAMPLES`] | 200 | engine samples over the horizon |
//! | [`ENGINE_GRID_FRACTIONS`] | 0.1, 0.25, 0.5, 0.75, 0.9 | engine Carnot grid, fractions of `E3*` |
//! | [`SEED`] | 42 | seed of the random panels |
//! | [`IDENTITY_PANEL_SIZE`] | 120 | refrigerators in the identity panel |
//! | [`ORACLE_PANEL_SIZE`] | 10 | refrigerators in the evolution oracle panel |

pub const STEP_FRACTION: f64 = 0.05;
pub const FRIDGE_HORIZON_RESET_TIMES: f64 = 200.0;
pub const FRIDGE_EVOLVE_SAMPLES: usize = 100;
pub const LADDER_LEVELS: usize = 41;
pub const INITIAL_LEVEL: usize = 20;
pub const ENGINE_HORIZON_RESET_TIMES: f64 = 50.0;
pub const ENGINE_WINDOW_START_RESET_TIMES: f64 = 30.0;
pub const ENGINE_SAMPLES: usize = 200;
pub const ENGINE_GRID_FRACTIONS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];
pub const SEED: u64 = 42;
pub const IDENTITY_PANEL_SIZE: usize = 120;
pub const ORACLE_PANEL_SIZE: usize = 10;
