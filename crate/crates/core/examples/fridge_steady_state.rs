//! Solve one refrigerator and print its currents and effective temperatures.
//!
//! cargo run --example fridge_steady_state

use qtm::machine::FridgeSpec;
use qtm::observables::{check_fridge_identities, fridge_currents};
use qtm::solvers::solve_fridge;

fn main() -> qtm::error::Result<()> {
    let spec = FridgeSpec::new(1.0, 1.0, [10.0, 5.0, 4.0], [1e-3; 3], 0.01)?;
    let steady = solve_fridge(&spec)?;
    let report = fridge_currents(&spec, &steady)?;

    println!("{spec}");
    println!("residual {:e}, gap proxy {:e}", steady.residual, steady.gap_proxy);
    for (i, (q, t)) in report.heat.iter().zip(&report.effective_temperature).enumerate() {
        println!("qubit {}: Q = {q:+.6e}  Teff = {t}  (bath {})", i + 1, spec.temperatures()[i]);
    }
    println!("J = {:+.6e}", report.interaction_current);
    println!("COP = {:.12}", report.cop_or_eff.unwrap_or(f64::NAN));

    let id = check_fridge_identities(&spec, &report);
    println!("ratio spread {:e}, reset balance spread {:e}", id.ratio_spread, id.reset_balance_spread);
    Ok(())
}
