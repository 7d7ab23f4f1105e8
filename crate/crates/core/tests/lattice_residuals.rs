//! The assembled order-m vectors must satisfy the lattice eigenproblem up
//! to the first omitted order, and the reduced grids must reproduce the
//! spectrum of the full one.

use dho_core::solver::{
    build_halfshift_symmetric, build_tridiagonal, eigenpairs, select_dimension, DimensionMode,
    ParityMode,
};
use dho_core::tables::eigenvalue_series_value;
use dho_core::wavefunction::{assemble_eigenvector, Normalization};

/// Euclidean defect of the order-m ansatz against the exact lattice
/// operator, with the series value through the same order.
fn ansatz_defect(n: u64, m: u32, omega: f64) -> f64 {
    let j0 = select_dimension(omega, n, DimensionMode::Tail).unwrap();
    let op = build_tridiagonal(omega, 0.0, j0, ParityMode::None).unwrap();
    let psi = assemble_eigenvector(n, m, omega, 0.0, j0, Normalization::UnitEuclidean).unwrap();
    let lambda = eigenvalue_series_value(n, m, omega).unwrap();
    let image = op.apply(psi.values());
    image
        .iter()
        .zip(psi.values())
        .map(|(h, p)| (h - lambda * p).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn ansatz_defect_shrinks_one_order_past_the_truncation() {
    for n in 0..=4u64 {
        for m in 1..=3u32 {
            let coarse = ansatz_defect(n, m, 0.04);
            let fine = ansatz_defect(n, m, 0.02);
            let slope = (coarse / fine).log2();
            assert!(
                slope > f64::from(m) + 0.7 && slope < f64::from(m) + 1.3,
                "n = {n}, m = {m}: defect halving slope {slope}, expected near {}",
                m + 1
            );
        }
    }
}

#[test]
fn local_eigenvalue_estimates_tighten_with_order() {
    let omega = 0.05;
    for n in [0u64, 2] {
        let deviation = |m: u32| -> f64 {
            let j0 = select_dimension(omega, n, DimensionMode::Tail).unwrap();
            let op = build_tridiagonal(omega, 0.0, j0, ParityMode::None).unwrap();
            let psi =
                assemble_eigenvector(n, m, omega, 0.0, j0, Normalization::UnitEuclidean).unwrap();
            let lambda = eigenvalue_series_value(n, m, omega).unwrap();
            let image = op.apply(psi.values());
            let peak = psi.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            image
                .iter()
                .zip(psi.values())
                .filter(|(_, p)| p.abs() > 1e-3 * peak)
                .map(|(h, p)| (h / p - lambda).abs())
                .fold(0.0, f64::max)
        };
        let rough = deviation(1);
        let refined = deviation(3);
        assert!(rough < 0.1, "n = {n}: first-order estimate off by {rough}");
        assert!(
            refined < rough / 8.0,
            "n = {n}: third order ({refined}) barely improves on first ({rough})"
        );
    }
}

#[test]
fn halfshift_grid_agrees_with_the_generic_displaced_grid() {
    let omega = 0.25;
    let j0 = 40;
    let shifted = build_halfshift_symmetric(omega, j0).unwrap();
    let generic = build_tridiagonal(omega, 0.5, j0, ParityMode::None).unwrap();
    let a = eigenpairs(&shifted, 6).unwrap();
    let b = eigenpairs(&generic, 6).unwrap();
    for n in 0..6 {
        assert!(
            (a[n].value - b[n].value).abs() < 1e-10,
            "state {n}: halfshift {}, generic {}",
            a[n].value,
            b[n].value
        );
    }
}

#[test]
fn parity_sectors_interleave_into_the_full_spectrum() {
    let omega = 0.3;
    let j0 = 36;
    let full = build_tridiagonal(omega, 0.0, j0, ParityMode::None).unwrap();
    let even = build_tridiagonal(omega, 0.0, j0, ParityMode::Even).unwrap();
    let odd = build_tridiagonal(omega, 0.0, j0, ParityMode::Odd).unwrap();
    let whole = eigenpairs(&full, 6).unwrap();
    let even_pairs = eigenpairs(&even, 3).unwrap();
    let odd_pairs = eigenpairs(&odd, 3).unwrap();
    for k in 0..3 {
        assert!(
            (whole[2 * k].value - even_pairs[k].value).abs() < 1e-10,
            "state {}: full {}, even sector {}",
            2 * k,
            whole[2 * k].value,
            even_pairs[k].value
        );
        assert!(
            (whole[2 * k + 1].value - odd_pairs[k].value).abs() < 1e-10,
            "state {}: full {}, odd sector {}",
            2 * k + 1,
            whole[2 * k + 1].value,
            odd_pairs[k].value
        );
    }
}

#[test]
fn sector_vectors_expand_onto_the_full_grid() {
    let omega = 0.3;
    let j0 = 36;
    let full = build_tridiagonal(omega, 0.0, j0, ParityMode::None).unwrap();
    let even = build_tridiagonal(omega, 0.0, j0, ParityMode::Even).unwrap();
    let ground_sector = &eigenpairs(&even, 1).unwrap()[0];
    let expanded = even.expand_to_full(&ground_sector.vector);
    assert_eq!(expanded.len(), full.dimension());
    let image = full.apply(&expanded);
    let norm = expanded.iter().map(|v| v * v).sum::<f64>().sqrt();
    let defect = image
        .iter()
        .zip(&expanded)
        .map(|(h, p)| (h - ground_sector.value * p).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!((norm - 1.0).abs() < 1e-12, "expanded norm {norm}");
    assert!(defect < 1e-10, "expanded ground state defect {defect}");
}
