//! Self-check suites behind `dho verify`. Each check prints one line;
//! any failure turns into a verification error (exit code 4).

use dho_core::derivation::{residual_order, verify_recursion_identity, ResidualRoute};
use dho_core::rational::{pow2, rat, Rational};
use dho_core::tables::{alpha_coefficient, beta_coefficient, eigenvalue_coefficient, tables};
use dho_core::{Error, Result};

#[derive(Clone, Copy)]
pub enum Suite {
    Tables,
    Identities,
    Residuals,
}

struct Check {
    name: String,
    outcome: std::result::Result<(), String>,
}

impl Check {
    fn passed(name: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            outcome: Ok(()),
        }
    }

    fn failed(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            outcome: Err(detail.into()),
        }
    }

    fn of(name: impl Into<String>, outcome: std::result::Result<(), String>) -> Self {
        Check {
            name: name.into(),
            outcome,
        }
    }
}

pub fn run(suites: &[Suite]) -> Result<()> {
    let mut checks = Vec::new();
    for suite in suites {
        match suite {
            Suite::Tables => tables_suite(&mut checks)?,
            Suite::Identities => identities_suite(&mut checks)?,
            Suite::Residuals => residuals_suite(&mut checks)?,
        }
    }
    let mut failures = 0usize;
    for check in &checks {
        match &check.outcome {
            Ok(()) => println!("ok   {}", check.name),
            Err(detail) => {
                failures += 1;
                println!("FAIL {}: {detail}", check.name);
            }
        }
    }
    println!("{} of {} checks passed", checks.len() - failures, checks.len());
    if failures > 0 {
        return Err(Error::Verification(format!(
            "{failures} of {} checks failed",
            checks.len()
        )));
    }
    Ok(())
}

fn expect_rational(
    name: &str,
    got: Result<Rational>,
    want: Rational,
    checks: &mut Vec<Check>,
) {
    match got {
        Ok(v) if v == want => checks.push(Check::passed(name)),
        Ok(v) => checks.push(Check::failed(name, format!("got {v}, want {want}"))),
        Err(e) => checks.push(Check::failed(name, e.to_string())),
    }
}

/// Exponent-table literals, the two polynomial-table literals, and the
/// power-of-two denominator layout of the eigenvalue terms.
fn tables_suite(checks: &mut Vec<Check>) -> Result<()> {
    let alpha_literals: [(u64, u32, u32, i128, i128); 7] = [
        (0, 1, 2, -3, 32),
        (2, 1, 2, -7, 32),
        (0, 1, 3, -53, 1536),
        (2, 1, 3, -275, 1536),
        (0, 2, 2, 1, 96),
        (2, 2, 3, 23, 1024),
        (2, 3, 3, -1, 1280),
    ];
    for (n, k, l, p, q) in alpha_literals {
        expect_rational(
            &format!("alpha({k},{l}) literal {p}/{q} at n={n}"),
            alpha_coefficient(n, k, l),
            rat(p, q),
            checks,
        );
    }

    expect_rational(
        "beta(1,2) literal 1/4 at n=2",
        beta_coefficient(2, 1, 2),
        rat(1, 4),
        checks,
    );
    expect_rational(
        "beta(1,3) literal 37/256 at n=2",
        beta_coefficient(2, 1, 3),
        rat(37, 256),
        checks,
    );

    expect_rational(
        "eigenvalue term 2 ground state -1/32",
        eigenvalue_coefficient(0, 2),
        rat(-1, 32),
        checks,
    );
    expect_rational(
        "eigenvalue term 3 ground state -1/512",
        eigenvalue_coefficient(0, 3),
        rat(-1, 512),
        checks,
    );
    expect_rational(
        "eigenvalue term 3 first excited -36/2048",
        eigenvalue_coefficient(1, 3),
        rat(-36, 2048),
        checks,
    );

    // Denominators are irregular powers of two. The structure lives in the
    // stored polynomial over 2n+1: every coefficient sits over a divisor of
    // the printed power and at least one needs all of it.
    let denominator_pow2: [u32; 15] = [6, 11, 17, 23, 27, 33, 40, 47, 51, 57, 61, 69, 72, 79, 87];
    for (i, &p) in denominator_pow2.iter().enumerate() {
        let m = i + 2;
        let target = pow2(p);
        let scale = Rational::from(target.clone());
        let term = &tables().eigenvalue_terms()[m];
        let mut reached = false;
        let mut bad: Option<String> = None;
        for (j, coefficient) in term.coefficients().iter().enumerate() {
            if !(coefficient * &scale).is_integer() {
                bad = Some(format!(
                    "coefficient of (2n+1)^{j} has denominator {} beyond 2^{p}",
                    coefficient.denom()
                ));
                break;
            }
            if coefficient.denom() == &target {
                reached = true;
            }
        }
        let name = format!("eigenvalue term {m} spans denominator 2^{p}");
        match bad {
            Some(detail) => checks.push(Check::failed(name, detail)),
            None if reached => checks.push(Check::passed(name)),
            None => checks.push(Check::failed(
                name,
                format!("no coefficient reaches the printed denominator 2^{p}"),
            )),
        }
    }
    Ok(())
}

/// The three recursion identities behind the low-order eigenvectors must
/// cancel exactly for every slot of every state up to n = 12.
fn identities_suite(checks: &mut Vec<Check>) -> Result<()> {
    for order in 1..=3u32 {
        let mut outcome = Ok(());
        for n in 0..=12u64 {
            let report = verify_recursion_identity(order, n)?;
            if !report.pass {
                let witness = report
                    .first_violation
                    .map(|(slot, value)| format!("slot {slot} leaves {value}"))
                    .unwrap_or_default();
                outcome = Err(format!("state n={n}: {witness}"));
                break;
            }
        }
        checks.push(Check::of(
            format!("recursion identity at order {order}, n <= 12"),
            outcome,
        ));
    }
    Ok(())
}

/// Freshly derived coefficients must push the residual of both expansion
/// routes to at least the derived order, for n <= 6 and m <= 5.
fn residuals_suite(checks: &mut Vec<Check>) -> Result<()> {
    for n in 0..=6u64 {
        let mut outcome = Ok(());
        'orders: for m in 1..=5u32 {
            for route in [ResidualRoute::Difference, ResidualRoute::Ode] {
                let got = residual_order(n, m, route)?;
                if got < m {
                    outcome = Err(format!("route {route:?}: order {got} < m = {m}"));
                    break 'orders;
                }
            }
        }
        checks.push(Check::of(
            format!("residual orders for state n={n}, m <= 5, both routes"),
            outcome,
        ));
    }
    Ok(())
}
