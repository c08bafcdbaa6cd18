//! Seeded random refrigerator panels for the identity and oracle suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::defaults::{IDENTITY_PANEL_SIZE, ORACLE_PANEL_SIZE};
use crate::machine::FridgeSpec;
use crate::sweep::reversibility_point_fridge;

/// Sampling box for random refrigerators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PanelRanges {
    pub rate: (f64, f64),
    pub coupling_min: f64,
    /// Upper coupling bound as a fraction of `min(E1, E3)`.
    pub coupling_max_fraction: f64,
}

impl PanelRanges {
    pub const IDENTITY: PanelRanges = PanelRanges {
        rate: (1e-4, 1e-1),
        coupling_min: 1e-4,
        coupling_max_fraction: 0.1,
    };

    pub const ORACLE: PanelRanges = PanelRanges {
        rate: (1e-2, 1e-1),
        coupling_min: 1e-3,
        coupling_max_fraction: 0.05,
    };
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

fn random_fridge(rng: &mut ChaCha8Rng, ranges: &PanelRanges) -> FridgeSpec {
    loop {
        let t3 = log_uniform(rng, 0.5, 5.0);
        let t2 = t3 * rng.gen_range(1.2..3.0);
        let t1 = t2 * rng.gen_range(1.2..3.0);
        let e3 = log_uniform(rng, 0.5, 2.0);
        // E1 scattered around the reversibility point so both regimes appear
        let e1_star = reversibility_point_fridge(t1, t2, t3, e3).expect("ordered temperatures");
        let e1 = e1_star * log_uniform(rng, 0.3, 3.0);
        let rates = [0; 3].map(|_| log_uniform(rng, ranges.rate.0, ranges.rate.1));
        let g = log_uniform(rng, ranges.coupling_min, ranges.coupling_max_fraction * e1.min(e3));
        if !(0.05..=20.0).contains(&e1) {
            continue;
        }
        if let Ok(spec) = FridgeSpec::new(e1, e3, [t1, t2, t3], rates, g) {
            return spec;
        }
    }
}

/// `count` refrigerators drawn deterministically from `seed`.
pub fn fridge_panel(seed: u64, count: usize, ranges: &PanelRanges) -> Vec<FridgeSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_fridge(&mut rng, ranges)).collect()
}

pub fn identity_panel(seed: u64) -> Vec<FridgeSpec> {
    fridge_panel(seed, IDENTITY_PANEL_SIZE, &PanelRanges::IDENTITY)
}

pub fn oracle_panel(seed: u64) -> Vec<FridgeSpec> {
    // offset keeps the two panels independent for the same user seed
    fridge_panel(seed.wrapping_add(0x9e37_79b9), ORACLE_PANEL_SIZE, &PanelRanges::ORACLE)
}

/// Refrigerators whose steady state is exactly `τ1 ⊗ τ2 ⊗ τ3`: one with
/// `g = 0` and one with all baths at the same temperature.
pub fn analytic_cases() -> Vec<(&'static str, FridgeSpec)> {
    vec![
        (
            "uncoupled",
            FridgeSpec::new_relaxed(1.0, 1.0, [10.0, 5.0, 4.0], [1e-2, 2e-2, 5e-2], 0.0).expect("valid"),
        ),
        (
            "equal temperatures",
            FridgeSpec::new_relaxed(0.7, 1.3, [3.0, 3.0, 3.0], [1e-2, 3e-2, 2e-2], 0.05).expect("valid"),
        ),
    ]
}
