//! At the reversibility point the design COP equals the Carnot COP and the
//! refrigerator stalls.
//!
//! cargo run --example fridge_carnot

use qtm::sweep::carnot_check_fridge;

fn main() -> qtm::error::Result<()> {
    for t in [[10.0, 5.0, 4.0], [20.0, 6.0, 2.0], [3.0, 2.5, 1.0]] {
        let check = carnot_check_fridge(t, 1.0, 1e-3, [1e-3; 3])?;
        println!(
            "T = {t:?}: E1* = {:.6}  COP = {:.12}  Carnot = {:.12}  max current / scale = {:.1e}  {}",
            check.reversibility_value,
            check.limit_performance,
            check.carnot_performance,
            check.current_at_point / check.current_scale,
            if check.passed { "pass" } else { "FAIL" }
        );
    }
    Ok(())
}
