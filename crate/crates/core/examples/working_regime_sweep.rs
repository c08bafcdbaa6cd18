//! Sweep E1 across the reversibility point and locate where Q3 changes sign.
//!
//! cargo run --example working_regime_sweep

use qtm::machine::FridgeSpec;
use qtm::output::{sweep_rows, write_csv};
use qtm::sweep::{locate_q3_zero, reversibility_point_fridge, sweep_fridge, FridgeParam};

fn main() -> qtm::error::Result<()> {
    let template = FridgeSpec::new_relaxed(1.0, 1.0, [10.0, 5.0, 4.0], [1e-3; 3], 0.01)?;
    let grid: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let table = sweep_fridge(&template, FridgeParam::E1, &grid);
    write_csv(&sweep_rows(&table), std::io::stdout().lock())?;

    let zero = locate_q3_zero(&template, FridgeParam::E1, &table, 1e-10)?;
    let predicted = reversibility_point_fridge(10.0, 5.0, 4.0, 1.0)?;
    println!("\nQ3 = 0 at E1 = {zero:.10} (predicted {predicted})");
    Ok(())
}
