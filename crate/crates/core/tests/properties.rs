mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use qtm::config::{resolve, Command, ConfigFile, RunSpec};
use qtm::liouvillian::{assemble_fridge_liouvillian, Generator};
use qtm::machine::{FridgeSpec, MachineKind};
use qtm::observables::check_fridge_identities;
use qtm::solvers::{default_step, evolve, solve_fridge};
use qtm::state::{CMatrix, DensityMatrix};
use qtm::sweep::{carnot_cop, fridge_point, reversibility_point_fridge, sweep_fridge, FridgeParam, RowOutcome};

fn arb_fridge() -> impl Strategy<Value = FridgeSpec> {
    (
        0.1f64..5.0,
        0.1f64..5.0,
        0.3f64..5.0,
        1.1f64..3.0,
        1.1f64..3.0,
        prop::array::uniform3(-4.0f64..-1.0),
        -4.0f64..-1.0,
    )
        .prop_map(|(e1, e3, t3, a, b, log_p, log_g)| {
            let p = log_p.map(|x| 10f64.powf(x));
            let g = 10f64.powf(log_g) * e1.min(e3);
            FridgeSpec::new(e1, e3, [t3 * a * b, t3 * a, t3], p, g).unwrap()
        })
}

fn arb_hermitian(d: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(-1.0f64..1.0, 2 * d * d).prop_map(move |v| {
        let m = CMatrix::from_fn(d, d, |i, j| Complex64::new(v[2 * (i * d + j)], v[2 * (i * d + j) + 1]));
        (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
    })
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_preserves_trace_and_hermiticity(spec in arb_fridge(), x in arb_hermitian(8), y in arb_hermitian(8), a in -2.0f64..2.0) {
        let l = assemble_fridge_liouvillian(&spec).unwrap();
        let lx = l.apply(&x);
        let scale = l.norm_bound();
        prop_assert!(lx.trace().norm() <= 1e-10 * scale * max_abs(&x).max(1.0));
        prop_assert!(max_abs(&(&lx - lx.adjoint())) <= 1e-10 * scale);
        // linearity
        let combo = &x * Complex64::new(a, 0.0) + &y;
        let lhs = l.apply(&combo);
        let rhs = lx * Complex64::new(a, 0.0) + l.apply(&y);
        prop_assert!(max_abs(&(lhs - rhs)) <= 1e-12 * scale * (a.abs() + 1.0) * 4.0);
    }

    #[test]
    fn generator_matches_reference(spec in arb_fridge(), x in arb_hermitian(8)) {
        let l = assemble_fridge_liouvillian(&spec).unwrap();
        let reference = common::generator(&common::Fridge::of(&spec), &x);
        prop_assert!(max_abs(&(l.apply(&x) - reference)) <= 1e-12 * l.norm_bound() * 8.0);
    }

    #[test]
    fn steady_state_identities(spec in arb_fridge()) {
        let steady = solve_fridge(&spec).unwrap();
        prop_assert!(steady.gap_proxy > 0.0);
        prop_assert!(steady.residual <= 1e-10 * steady.generator_norm);
        let report = fridge_point(&spec).unwrap();
        let id = check_fridge_identities(&spec, &report);
        prop_assert!(id.passed(), "{:?}", id);
        let margin = spec.working_margin();
        prop_assert_eq!(report.heat[2].signum(), margin.signum());
        if report.heat[0] > 0.0 {
            let [e1, _, e3] = spec.energies();
            prop_assert!(common::relative(report.heat[2] / report.heat[0], e3 / e1) <= 1e-9);
        }
        // a second solve gives the same bits
        let again = solve_fridge(&spec).unwrap();
        prop_assert_eq!(again.state.matrix(), steady.state.matrix());
    }

    #[test]
    fn fridge_stalls_at_reversibility(e3 in 0.2f64..3.0, t3 in 0.5f64..5.0, a in 1.1f64..3.0, b in 1.1f64..3.0) {
        let t = [t3 * a * b, t3 * a, t3];
        let e1 = reversibility_point_fridge(t[0], t[1], t[2], e3).unwrap();
        prop_assume!((0.05..20.0).contains(&e1));
        let spec = FridgeSpec::new_relaxed(e1, e3, t, [1e-3; 3], 0.01 * e1.min(e3)).unwrap();
        let report = fridge_point(&spec).unwrap();
        prop_assert!(report.max_abs_heat() <= 1e-12 * 1e-3 * spec.qubit2.energy);
        prop_assert!(common::relative(e3 / e1, carnot_cop(t[0], t[1], t[2]).unwrap()) <= 1e-12);
    }

    #[test]
    fn cop_is_independent_of_coupling(spec in arb_fridge(), factor in 0.1f64..1.0) {
        let grid = [spec.coupling * factor, spec.coupling];
        let table = sweep_fridge(&spec, FridgeParam::Coupling, &grid);
        let [e1, _, e3] = spec.energies();
        for row in &table.rows {
            let cop = row.report().unwrap().cop_or_eff;
            if let Some(cop) = cop {
                prop_assert!(common::relative(cop, e3 / e1) <= 1e-9);
            }
        }
    }

    #[test]
    fn sweep_rows_follow_the_grid(spec in arb_fridge(), grid in prop::collection::vec(0.05f64..6.0, 0..8)) {
        let table = sweep_fridge(&spec, FridgeParam::T3, &grid);
        prop_assert_eq!(table.rows.len(), grid.len());
        for (row, value) in table.rows.iter().zip(&grid) {
            prop_assert_eq!(row.param, *value);
            let valid = *value < spec.qubit2.temperature;
            prop_assert_eq!(matches!(row.outcome, RowOutcome::Ok { .. }), valid);
        }
    }

    #[test]
    fn flags_override_file_values(e1 in 0.1f64..5.0, e1_flag in 0.1f64..5.0) {
        let file = ConfigFile {
            machine: Some(MachineKind::Fridge),
            command: Some(Command::Currents),
            e1: Some(e1),
            e3: Some(1.0),
            temperatures: Some(vec![10.0, 5.0, 4.0]),
            g: Some(0.01),
            p: Some(vec![1e-3]),
            ..Default::default()
        };
        let flags = ConfigFile { e1: Some(e1_flag), ..Default::default() };
        let config = resolve(&file.overlay(&flags)).unwrap();
        let RunSpec::Fridge { spec } = config.spec else { panic!("fridge expected") };
        prop_assert_eq!(spec.qubit1.energy, e1_flag);
        prop_assert_eq!(spec.qubit2.energy, e1_flag + 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn evolution_stays_physical_and_contracts(spec in arb_fridge(), start in 0usize..8) {
        let steady = solve_fridge(&spec).unwrap();
        let l = assemble_fridge_liouvillian(&spec).unwrap();
        let frame = l.interaction_frame().unwrap();
        let p_min = spec.rates().iter().fold(f64::INFINITY, |a, b| a.min(*b));
        let dt = default_step(&frame);
        let horizon = (5.0 / p_min).min(2000.0 * dt);
        let traj = evolve(&frame, &DensityMatrix::basis_state(8, start).unwrap(), horizon, dt, 1).unwrap();
        let mut previous = f64::INFINITY;
        for state in &traj.states {
            prop_assert!((state.trace().re - 1.0).abs() <= 1e-8);
            prop_assert!(state.hermiticity_error() <= 1e-8);
            prop_assert!(state.min_eigenvalue() >= -1e-7);
            let d = state.trace_distance(&steady.state);
            prop_assert!(d <= previous + 1e-9);
            previous = d;
        }
    }
}
