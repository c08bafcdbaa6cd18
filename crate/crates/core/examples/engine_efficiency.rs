//! Run the heat engine at several weight steps and compare its efficiency
//! with E3/E1 and the Carnot bound.
//!
//! cargo run --example engine_efficiency

use qtm::defaults::{ENGINE_GRID_FRACTIONS, INITIAL_LEVEL, LADDER_LEVELS};
use qtm::engine::EngineNumerics;
use qtm::sweep::{carnot_check_engine, reversibility_point_engine, EngineCarnotInputs};

fn main() -> qtm::error::Result<()> {
    let e3_star = reversibility_point_engine(10.0, 5.0, 1.0)?;
    let inputs = EngineCarnotInputs {
        temperatures: [10.0, 5.0],
        e2: 1.0,
        e3_grid: ENGINE_GRID_FRACTIONS.iter().map(|f| f * e3_star).collect(),
        coupling: 0.01,
        rates: [0.1, 0.1],
        ladder_levels: LADDER_LEVELS,
        initial_level: INITIAL_LEVEL,
        numerics: EngineNumerics::default(),
    };
    let (check, table) = carnot_check_engine(&inputs)?;
    println!("{:>6} {:>14} {:>10} {:>10}", "E3", "W", "eta", "E3/E1");
    for row in &table.rows {
        if let Some(r) = row.report() {
            let eta = r.cop_or_eff.unwrap_or(f64::NAN);
            println!("{:>6.3} {:>14.6e} {:>10.6} {:>10.6}", row.param, r.work.unwrap_or(f64::NAN), eta, row.param / (1.0 + row.param));
        }
    }
    println!("Carnot efficiency {:.6}; |W| at E3* = {e3_star}: {:.1e}", check.carnot_performance, check.current_at_point);
    println!("{}", if check.passed { "all checks pass" } else { "checks FAILED" });
    Ok(())
}
