//! Deep round-trip audit: rederive the expansion coefficients from scratch
//! and insist they coincide, slot for slot, with the stored tables.

use dho_core::derivation::{derivation_certificate, derive_through, solve_next_order, DerivationState, Unknown};
use dho_core::rational::{rat_str, Rational};
use dho_core::tables::{alpha_coefficient, beta_coefficient, eigenvalue_coefficient};
use dho_core::Error;

/// Compare one pinned unknown against its table entry. Entries past the
/// stored range are counted separately so the audit cannot pass vacuously.
fn check_pinned(n: u64, unknown: &Unknown, derived: &Rational, compared: &mut usize) {
    let stored = match *unknown {
        Unknown::Alpha { k, l } => alpha_coefficient(n, k, l),
        Unknown::Beta { k, l } => beta_coefficient(n, k as u64, l),
        Unknown::Lambda { m } => eigenvalue_coefficient(n, m),
    };
    match stored {
        Ok(value) => {
            assert_eq!(
                &value, derived,
                "n = {n}: {unknown} derived as {derived}, stored as {value}"
            );
            *compared += 1;
        }
        Err(Error::OutOfTable(_)) => {}
        Err(e) => panic!("n = {n}: table lookup for {unknown} failed: {e}"),
    }
}

fn audit_state(n: u64, through: u32) -> usize {
    let (state, orders) = derive_through(n, through).unwrap();
    assert_eq!(state.solved_through(), Some(through));
    let mut compared = 0;
    for solution in &orders {
        assert!(
            !solution.pinned.is_empty(),
            "n = {n}: stage {} pinned nothing",
            solution.order
        );
        for (unknown, value) in &solution.pinned {
            check_pinned(n, unknown, value, &mut compared);
        }
    }
    compared
}

#[test]
fn low_states_rederive_the_tables_through_order_nine() {
    let mut compared = 0;
    for n in 1..=3 {
        compared += audit_state(n, 9);
    }
    assert!(compared > 60, "only {compared} slots were comparable");
}

#[test]
fn mid_states_rederive_the_tables_through_order_seven() {
    let mut compared = 0;
    for n in 4..=7 {
        compared += audit_state(n, 7);
    }
    assert!(compared > 60, "only {compared} slots were comparable");
}

#[test]
fn ground_state_extension_is_reproduced_through_order_eighteen() {
    let (state, _) = derive_through(0, 18).unwrap();
    for m in 0..=18 {
        let derived = state
            .binding(&Unknown::Lambda { m })
            .unwrap_or_else(|| panic!("lambda({m}) missing"));
        let stored = eigenvalue_coefficient(0, m).unwrap();
        assert_eq!(derived, &stored, "lambda({m}) drifted from the table");
    }
    // The order-17 value is awkward enough to rule out coincidence.
    let literal = rat_str("-363372562420411197", "604462909807314587353088");
    assert_eq!(state.binding(&Unknown::Lambda { m: 17 }), Some(&literal));
}

#[test]
fn resumed_derivation_pins_the_same_values_as_a_scratch_run() {
    for n in 0..=6 {
        let (scratch, _) = derive_through(n, 5).unwrap();
        let mut resumed = DerivationState::from_tables(n, 4).unwrap();
        let solution = solve_next_order(&mut resumed).unwrap();
        assert_eq!(solution.order, 5, "n = {n}");
        for (unknown, value) in &solution.pinned {
            assert_eq!(
                scratch.binding(unknown),
                Some(value),
                "n = {n}: {unknown} disagrees after resuming from the tables"
            );
        }
    }
}

#[test]
fn certificate_records_every_stage_with_exact_values() {
    let certificate = derivation_certificate(2, 6).unwrap();
    assert_eq!(certificate["state"], 2);
    assert_eq!(certificate["through_order"], 6);
    let orders = certificate["orders"].as_array().unwrap();
    assert_eq!(orders.len(), 7);
    for (m, entry) in orders.iter().enumerate() {
        assert_eq!(entry["order"], m as u64);
        let solved = entry["solved"].as_array().unwrap();
        assert!(!solved.is_empty(), "stage {m} recorded no solved values");
    }
    // Spot-check a value that is easy to cross-read from the tables.
    let stage_two = orders[2]["solved"].as_array().unwrap();
    let lambda_two = stage_two
        .iter()
        .find(|pair| pair[0] == "lambda(2)")
        .expect("stage 2 must pin lambda(2)");
    let expected = eigenvalue_coefficient(2, 2).unwrap();
    assert_eq!(
        lambda_two[1].as_str().unwrap(),
        format!("{}/{}", expected.numer(), expected.denom())
    );
}
