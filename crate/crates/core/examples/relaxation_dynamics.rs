//! Relax a refrigerator from its ground state and watch the trace distance
//! to the steady state shrink.
//!
//! cargo run --example relaxation_dynamics

use qtm::liouvillian::assemble_fridge_liouvillian;
use qtm::machine::FridgeSpec;
use qtm::observables::fridge_currents_of_state;
use qtm::solvers::{default_step, evolve, solve_fridge};
use qtm::state::DensityMatrix;

fn main() -> qtm::error::Result<()> {
    let spec = FridgeSpec::new(1.0, 1.0, [10.0, 5.0, 4.0], [0.05, 0.05, 0.05], 0.02)?;
    let steady = solve_fridge(&spec)?;
    let l = assemble_fridge_liouvillian(&spec)?;
    let frame = l.interaction_frame()?;
    let dt = default_step(&frame);
    let horizon = 200.0;
    let stride = (horizon / dt / 20.0).ceil() as usize;
    let traj = evolve(&frame, &DensityMatrix::basis_state(8, 0)?, horizon, dt, stride)?;

    println!("{:>8} {:>12} {:>14}", "t", "distance", "Q3");
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let report = fridge_currents_of_state(&spec, state)?;
        println!("{t:>8.2} {:>12.4e} {:>+14.6e}", state.trace_distance(&steady.state), report.heat[2]);
    }
    Ok(())
}
