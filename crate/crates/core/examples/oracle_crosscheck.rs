//! Compare the linear-solve steady state with long-time evolution.
//!
//! cargo run --example oracle_crosscheck

use qtm::panel::{analytic_cases, oracle_panel};
use qtm::solvers::oracle_crosscheck_report;
use qtm::tolerances::{ORACLE_ANALYTIC, ORACLE_PANEL};

fn main() -> qtm::error::Result<()> {
    for spec in oracle_panel(42) {
        let r = oracle_crosscheck_report(&spec, ORACLE_PANEL)?;
        println!("{spec}\n    trace distance {:.2e} after t = {:.0}", r.trace_distance, r.horizon);
    }
    for (name, spec) in analytic_cases() {
        let r = oracle_crosscheck_report(&spec, ORACLE_ANALYTIC)?;
        println!("{name}: trace distance {:.2e}", r.trace_distance);
    }
    Ok(())
}
