//! Characteristic values checked against an independent oracle: the
//! classical Fourier-basis tridiagonal matrices, diagonalised here with a
//! self-contained Sturm bisection that shares no code with the library.

use dho_core::solver::{mathieu_characteristic, MathieuFamily, MathieuMethod, MathieuQuery};

/// Eigenvalues of a symmetric tridiagonal matrix below x, by Sturm count.
fn count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0f64;
    for i in 0..diag.len() {
        let coupling = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] / d };
        d = diag[i] - x - coupling;
        if d == 0.0 {
            d = f64::MIN_POSITIVE;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest `count` eigenvalues by bisection on the Gershgorin interval.
fn lowest_eigenvalues(diag: &[f64], off: &[f64], count: usize) -> Vec<f64> {
    let mut lo_all = f64::INFINITY;
    let mut hi_all = f64::NEG_INFINITY;
    for i in 0..diag.len() {
        let mut radius = 0.0;
        if i > 0 {
            radius += off[i - 1].abs();
        }
        if i < diag.len() - 1 {
            radius += off[i].abs();
        }
        lo_all = lo_all.min(diag[i] - radius);
        hi_all = hi_all.max(diag[i] + radius);
    }
    (0..count)
        .map(|k| {
            let mut lo = lo_all;
            let mut hi = hi_all;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if hi - lo <= 1e-14 * mid.abs().max(1.0) {
                    break;
                }
                if count_below(diag, off, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Fourier-space matrix for the four integer families. Size picks up the
/// (2k)^2 growth quickly, so 60 rows are far beyond double precision for
/// the q values used here.
fn fourier_characteristic(order: u32, q: f64, family: MathieuFamily) -> f64 {
    const DIM: usize = 60;
    let (diag, off, index): (Vec<f64>, Vec<f64>, usize) = match (family, order % 2) {
        (MathieuFamily::A, 0) => {
            let diag = (0..DIM).map(|k| (2.0 * k as f64).powi(2)).collect();
            let mut off = vec![q; DIM - 1];
            off[0] = q * 2.0f64.sqrt();
            (diag, off, (order / 2) as usize)
        }
        (MathieuFamily::B, 0) => {
            let diag = (1..=DIM).map(|k| (2.0 * k as f64).powi(2)).collect();
            (diag, vec![q; DIM - 1], (order / 2 - 1) as usize)
        }
        (MathieuFamily::A, _) => {
            let mut diag: Vec<f64> = (0..DIM).map(|k| (2.0 * k as f64 + 1.0).powi(2)).collect();
            diag[0] += q;
            (diag, vec![q; DIM - 1], (order / 2) as usize)
        }
        (MathieuFamily::B, _) => {
            let mut diag: Vec<f64> = (0..DIM).map(|k| (2.0 * k as f64 + 1.0).powi(2)).collect();
            diag[0] -= q;
            (diag, vec![q; DIM - 1], (order / 2) as usize)
        }
    };
    lowest_eigenvalues(&diag, &off, index + 1)[index]
}

/// Fourier-space matrix for a fractional Floquet exponent: plane waves
/// exp(i (nu + 2k) theta), k in [-K, K], all in one sector.
fn fourier_fractional(index: usize, q: f64, nu: f64) -> f64 {
    const K: i64 = 40;
    let diag: Vec<f64> = (-K..=K).map(|k| (nu + 2.0 * k as f64).powi(2)).collect();
    let off = vec![q; diag.len() - 1];
    lowest_eigenvalues(&diag, &off, index + 1)[index]
}

#[test]
fn integer_orders_match_the_fourier_oracle() {
    for &q in &[1.0, 5.0, 25.0] {
        for order in 0..=5u32 {
            for family in [MathieuFamily::A, MathieuFamily::B] {
                if family == MathieuFamily::B && order == 0 {
                    continue;
                }
                let query = MathieuQuery::new(order, q, family).unwrap();
                let got = mathieu_characteristic(&query, MathieuMethod::Matrix).unwrap();
                let want = fourier_characteristic(order, q, family);
                assert!(
                    (got - want).abs() < 1e-8,
                    "family {family:?} order {order} q {q}: lattice {got}, fourier {want}"
                );
            }
        }
    }
}

#[test]
fn classical_table_values_are_reproduced() {
    // Characteristic values as printed in the standard handbooks.
    let anchors: [(u32, f64, MathieuFamily, f64); 8] = [
        (0, 1.0, MathieuFamily::A, -0.455138604107413),
        (1, 1.0, MathieuFamily::A, 1.859108072514363),
        (2, 1.0, MathieuFamily::A, 4.371300982735086),
        (1, 1.0, MathieuFamily::B, -0.110248816992095),
        (2, 1.0, MathieuFamily::B, 3.917024772998471),
        (0, 5.0, MathieuFamily::A, -5.800046020851508),
        (1, 5.0, MathieuFamily::B, -5.790080598637771),
        (0, 25.0, MathieuFamily::A, -40.256_779_546_566_79),
    ];
    for (order, q, family, want) in anchors {
        let query = MathieuQuery::new(order, q, family).unwrap();
        let got = mathieu_characteristic(&query, MathieuMethod::Matrix).unwrap();
        assert!(
            (got - want).abs() < 1e-9,
            "family {family:?} order {order} q {q}: got {got}, want {want}"
        );
    }
}

#[test]
fn fractional_exponents_match_the_fourier_oracle() {
    for &q in &[1.0, 5.0] {
        for &nu in &[0.25, 0.5, 0.75] {
            for index in 0..=3u32 {
                let query = MathieuQuery::with_nu(index, q, nu, MathieuFamily::A).unwrap();
                let got = mathieu_characteristic(&query, MathieuMethod::Matrix).unwrap();
                let want = fourier_fractional(index as usize, q, nu);
                assert!(
                    (got - want).abs() < 1e-8,
                    "index {index} q {q} nu {nu}: lattice {got}, fourier {want}"
                );
            }
        }
    }
}

#[test]
fn bands_are_continuous_and_monotone_in_the_exponent() {
    // Band 0 rises from a0 to b1; band 1 falls from b2 to a1.
    let q = 1.0;
    let a0 = fourier_characteristic(0, q, MathieuFamily::A);
    let b1 = fourier_characteristic(1, q, MathieuFamily::B);
    let mut previous = a0;
    for step in 1..=8 {
        let nu = f64::from(step) / 9.0;
        let query = MathieuQuery::with_nu(0, q, nu, MathieuFamily::A).unwrap();
        let value = mathieu_characteristic(&query, MathieuMethod::Matrix).unwrap();
        assert!(
            value > previous && value < b1,
            "band 0 not monotone at nu = {nu}: {previous} -> {value}, edge {b1}"
        );
        previous = value;
    }
    assert!(b1 - previous < 0.2, "band 0 does not approach its upper edge");
}

#[test]
fn asymptotic_and_matrix_routes_agree_in_the_deep_well() {
    for &q in &[400.0, 1600.0] {
        for order in 0..=1u32 {
            let query = MathieuQuery::new(order, q, MathieuFamily::A).unwrap();
            let series = mathieu_characteristic(&query, MathieuMethod::Asymptotic).unwrap();
            let matrix = mathieu_characteristic(&query, MathieuMethod::Matrix).unwrap();
            assert!(
                (series - matrix).abs() < 1e-8 * q,
                "order {order} q {q}: series {series}, matrix {matrix}"
            );
        }
    }
}
