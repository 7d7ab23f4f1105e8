//! Assembly of the asymptotic eigenvectors: exponential part, generalised
//! Hermite polynomial, continuous-coordinate evaluation, grid sampling,
//! truncation and normalisation.
//!
//! The ansatz for state n at order m is
//!     psi(x) = exp( sum_{k<=l<=m} alpha_kl omega^(l-1) xi^(2k) )
//!              * sum_{k<=k'} h_k ( sum_{l<=m} beta_kl omega^(l-1) ) xi^(n+2(k-k'))
//! with xi = sqrt(omega) x and k' = floor(n/2). Coefficient tables stay
//! exact; floats appear only when folding for evaluation.

use crate::error::{Error, Result};
use crate::rational::{int, to_f64, Rational};
use crate::tables::{alpha_coefficient, beta_coefficient, hermite_coefficient};
use num::traits::Zero;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Exact table of exponential-part coefficients with l <= m, evaluated as
/// sum alpha_kl omega^(l-1) xi^(2k). Construction fails rather than
/// zero-padding slots without a stored closed form.
#[derive(Clone, Debug)]
pub struct ExponentPolynomial {
    n: u64,
    m: u32,
    terms: BTreeMap<(u32, u32), Rational>,
}

/// Exact exponential part through order m for state n.
pub fn exponent_polynomial(n: u64, m: u32) -> Result<ExponentPolynomial> {
    if m == 0 {
        return Err(Error::invalid("order m starts at 1"));
    }
    let mut terms = BTreeMap::new();
    for l in 1..=m {
        for k in 1..=l {
            terms.insert((k, l), alpha_coefficient(n, k, l)?);
        }
    }
    Ok(ExponentPolynomial { n, m, terms })
}

impl ExponentPolynomial {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.m
    }

    pub fn term(&self, k: u32, l: u32) -> Option<&Rational> {
        self.terms.get(&(k, l))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Rational)> {
        self.terms.iter()
    }

    /// Fold the omega powers into one coefficient per xi^2 power. Entry i
    /// multiplies xi^(2(i+1)). Folding is exact; conversion to float happens
    /// once per coefficient.
    pub fn folded_xi2_coefficients(&self, omega: f64) -> Vec<f64> {
        let w = Rational::from_float(omega).expect("finite omega");
        let mut acc = vec![Rational::zero(); self.m as usize];
        for (&(k, l), alpha) in &self.terms {
            let mut wp = Rational::from_integer(1.into());
            for _ in 1..l {
                wp *= &w;
            }
            acc[(k - 1) as usize] = &acc[(k - 1) as usize] + alpha * wp;
        }
        acc.iter().map(to_f64).collect()
    }
}

/// Generalised Hermite polynomial: for each Hermite slot k the coefficient
/// is an exact polynomial in omega of degree m-1; at omega = 0 it reduces to
/// the ordinary Hermite coefficient.
#[derive(Clone, Debug)]
pub struct GeneralizedHermitePolynomial {
    n: u64,
    m: u32,
    /// coefficients[k][p] multiplies omega^p xi^(n + 2(k - floor(n/2))).
    coefficients: Vec<Vec<Rational>>,
}

/// Exact generalised Hermite polynomial for state n through order m.
/// For n <= 1 the polynomial is a single monomial at every order; otherwise
/// orders beyond the stored tables are refused.
pub fn generalized_hermite(n: u64, m: u32) -> Result<GeneralizedHermitePolynomial> {
    if m == 0 {
        return Err(Error::invalid("order m starts at 1"));
    }
    let k_prime = n / 2;
    let mut coefficients = Vec::with_capacity(k_prime as usize + 1);
    for k in 0..=k_prime {
        let h = hermite_coefficient(n, k)?;
        let mut poly = Vec::with_capacity(m as usize);
        for l in 1..=m {
            let beta = if n <= 1 {
                // Single slot k = 0: the leading term is 1, corrections are
                // pinned to zero by normalisation at every order.
                if l == 1 {
                    int(1)
                } else {
                    Rational::zero()
                }
            } else {
                beta_coefficient(n, k, l)?
            };
            poly.push(&h * beta);
        }
        coefficients.push(poly);
    }
    Ok(GeneralizedHermitePolynomial { n, m, coefficients })
}

impl GeneralizedHermitePolynomial {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.m
    }

    /// Exact omega-polynomial for Hermite slot k, constant term first.
    pub fn coefficient_poly(&self, k: u64) -> &[Rational] {
        &self.coefficients[k as usize]
    }

    pub fn slots(&self) -> u64 {
        self.coefficients.len() as u64 - 1
    }

    /// Power of xi carried by slot k.
    pub fn xi_power(&self, k: u64) -> u64 {
        self.n + 2 * k - 2 * (self.n / 2)
    }

    /// One float coefficient per slot, omega powers folded exactly first.
    pub fn folded_coefficients(&self, omega: f64) -> Vec<f64> {
        let w = Rational::from_float(omega).expect("finite omega");
        self.coefficients
            .iter()
            .map(|poly| {
                let mut acc = Rational::zero();
                for c in poly.iter().rev() {
                    acc = acc * &w + c;
                }
                to_f64(&acc)
            })
            .collect()
    }

    pub fn eval(&self, omega: f64, xi: f64) -> f64 {
        let coeffs = self.folded_coefficients(omega);
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * xi.powi(self.xi_power(k as u64) as i32))
            .sum()
    }
}

/// Evaluator for the full ansatz at continuous coordinate x, with all
/// omega powers folded once. Used for grid sampling and for pointwise
/// residual checks at off-grid points.
#[derive(Clone, Debug)]
pub struct WavefunctionEvaluator {
    omega: f64,
    exp_xi2: Vec<f64>,
    poly: Vec<(u64, f64)>,
}

impl WavefunctionEvaluator {
    pub fn new(n: u64, m: u32, omega: f64) -> Result<Self> {
        if !omega.is_finite() || omega <= 0.0 {
            return Err(Error::invalid(format!(
                "omega must be positive and finite, got {omega}"
            )));
        }
        let exponent = exponent_polynomial(n, m)?;
        let hermite = generalized_hermite(n, m)?;
        let folded = hermite.folded_coefficients(omega);
        let poly = folded
            .iter()
            .enumerate()
            .map(|(k, &c)| (hermite.xi_power(k as u64), c))
            .collect();
        Ok(WavefunctionEvaluator {
            omega,
            exp_xi2: exponent.folded_xi2_coefficients(omega),
            poly,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Raw (unnormalised) ansatz value at continuous x.
    pub fn value(&self, x: f64) -> f64 {
        let z = self.omega * x * x;
        let mut e = 0.0;
        for c in self.exp_xi2.iter().rev() {
            e = (e + c) * z;
        }
        let xi = self.omega.sqrt() * x;
        let p: f64 = self
            .poly
            .iter()
            .map(|&(power, c)| c * xi.powi(power as i32))
            .sum();
        e.exp() * p
    }
}

/// How the sampled vector is scaled after assembly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// Unit Euclidean norm, sign fixed so the small-positive-x behaviour
    /// matches the continuum solution (positive xi^parity).
    UnitEuclidean,
    /// Divided by the leading-slot Hermite coefficient so the vector
    /// behaves as xi^((1-(-1)^n)/2) towards x = 0.
    UnitLowestTerm,
}

/// Sampled asymptotic eigenvector over the grid j in [-j0, j0].
#[derive(Clone, Debug)]
pub struct AsymptoticWavefunction {
    pub n: u64,
    pub m: u32,
    pub omega: f64,
    pub x0: f64,
    pub j0: u32,
    pub normalization: Normalization,
    values: Vec<f64>,
}

/// Sample the order-m ansatz for state n on the integer grid centred at x0
/// and normalise. Fails when the boundary components show the grid is too
/// short for the requested omega.
pub fn assemble_eigenvector(
    n: u64,
    m: u32,
    omega: f64,
    x0: f64,
    j0: u32,
    normalization: Normalization,
) -> Result<AsymptoticWavefunction> {
    if !x0.is_finite() || !(-0.5..=0.5).contains(&x0) {
        return Err(Error::invalid(format!(
            "displacement x0 must lie in [-1/2, 1/2], got {x0}"
        )));
    }
    let evaluator = WavefunctionEvaluator::new(n, m, omega)?;
    let len = 2 * j0 as usize + 1;
    let mut values: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|i| {
            let j = i as i64 - j0 as i64;
            evaluator.value(j as f64 - x0)
        })
        .collect();

    // Leading-slot division fixes the scale and sign near x = 0 for both
    // modes; it is the entire unit-lowest-term normalisation.
    let h0 = to_f64(&hermite_coefficient(n, 0)?);
    for v in values.iter_mut() {
        *v /= h0;
    }

    let peak = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if peak == 0.0 || !peak.is_finite() {
        return Err(Error::Numerical(format!(
            "degenerate sample: peak magnitude {peak}"
        )));
    }
    let boundary = values[0].abs().max(values[len - 1].abs());
    if boundary > 1e-12 * peak {
        return Err(Error::TruncationTooSmall(format!(
            "boundary component {boundary:e} exceeds 1e-12 of peak {peak:e}; increase j0"
        )));
    }

    if normalization == Normalization::UnitEuclidean {
        let norm = euclidean_norm(&values);
        for v in values.iter_mut() {
            *v /= norm;
        }
    }

    Ok(AsymptoticWavefunction {
        n,
        m,
        omega,
        x0,
        j0,
        normalization,
        values,
    })
}

fn euclidean_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl AsymptoticWavefunction {
    /// Component at grid site j, j in [-j0, j0].
    pub fn value(&self, j: i64) -> f64 {
        self.values[(j + self.j0 as i64) as usize]
    }

    /// Components in grid order, j = -j0 .. j0.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> impl Iterator<Item = i64> + '_ {
        -(self.j0 as i64)..=self.j0 as i64
    }

    pub fn norm(&self) -> f64 {
        euclidean_norm(&self.values)
    }

    /// Euclidean inner product over the common grid; fixed summation order.
    pub fn dot(&self, other: &AsymptoticWavefunction) -> f64 {
        assert_eq!(self.j0, other.j0, "grids must match");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Default truncation half-width. Keeps the exponent's inner series inside
/// its convergence region (omega x^2 <= 3, radius 4), the Gaussian tail
/// below epsilon, and at least a few node widths for state n. The same rule
/// serves every order.
pub fn default_truncation(n: u64, _m: u32, omega: f64, epsilon: f64) -> u32 {
    assert!(
        omega.is_finite() && omega > 0.0,
        "omega must be positive and finite"
    );
    let convergence = (3.0f64.sqrt() / omega).floor();
    let tail = if epsilon > 0.0 && epsilon < 1.0 {
        (2.0 * (1.0 / epsilon).ln() / omega).sqrt().ceil()
    } else {
        0.0
    };
    let nodes = (4.0 * (n as f64 + 1.0) / omega.sqrt()).ceil();
    convergence.max(tail).max(nodes) as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn exponent_low_orders_match_printed_solutions() {
        let first = exponent_polynomial(3, 1).unwrap();
        assert_eq!(first.terms().count(), 1);
        assert_eq!(first.term(1, 1), Some(&rat(-1, 2)));

        let second = exponent_polynomial(2, 2).unwrap();
        assert_eq!(second.terms().count(), 3);
        assert_eq!(second.term(1, 2), Some(&rat(-7, 32)));
        assert_eq!(second.term(2, 2), Some(&rat(1, 96)));

        let third = exponent_polynomial(2, 3).unwrap();
        assert_eq!(third.term(3, 3), Some(&rat(-1, 1280)));
    }

    #[test]
    fn exponent_folding_is_per_power_of_xi_squared() {
        // n = 0, m = 2: -(1/2 + 3 omega/32) xi^2 + (omega/96) xi^4.
        let e = exponent_polynomial(0, 2).unwrap();
        let c = e.folded_xi2_coefficients(0.5);
        assert!(eq_close(c[0], -0.5 - 3.0 * 0.5 / 32.0));
        assert!(eq_close(c[1], 0.5 / 96.0));
    }

    fn eq_close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-15 * b.abs().max(1.0)
    }

    #[test]
    fn generalized_hermite_reduces_to_hermite_at_zero_omega() {
        for n in 0..=10u64 {
            let g = generalized_hermite(n, 7).unwrap();
            for k in 0..=n / 2 {
                assert_eq!(
                    g.coefficient_poly(k)[0],
                    hermite_coefficient(n, k).unwrap(),
                    "n = {n}, k = {k}"
                );
            }
            // Degree in xi is exactly n with the parity of n.
            assert_eq!(g.xi_power(g.slots()), n);
            assert_eq!(g.xi_power(0) % 2, n % 2);
        }
    }

    #[test]
    fn generalized_hermite_n2_m2_is_printed_polynomial() {
        // -2 + 4 (1 + omega/4) xi^2.
        let g = generalized_hermite(2, 2).unwrap();
        assert_eq!(g.coefficient_poly(0), &[int(-2), Rational::zero()]);
        assert_eq!(g.coefficient_poly(1), &[int(4), int(1)]);
        let omega = 0.3;
        let xi = 0.9;
        let direct = -2.0 + 4.0 * (1.0 + omega / 4.0) * xi * xi;
        assert!((g.eval(omega, xi) - direct).abs() < 1e-14);
    }

    #[test]
    fn generalized_hermite_trivial_states_ignore_order() {
        let g0 = generalized_hermite(0, 25).unwrap();
        assert_eq!(g0.coefficient_poly(0)[0], int(1));
        assert!(g0.coefficient_poly(0)[1..].iter().all(|c| c.is_zero()));
        let g1 = generalized_hermite(1, 25).unwrap();
        assert_eq!(g1.coefficient_poly(0)[0], int(2));
        assert!(matches!(
            generalized_hermite(2, 8),
            Err(Error::OutOfTable(_))
        ));
    }

    #[test]
    fn truncation_rule_matches_hand_values() {
        assert_eq!(default_truncation(0, 2, 0.01, 1e-18), 173);
        assert_eq!(default_truncation(0, 5, 0.0001, 1e-18), 17320);
        // Degenerate tolerance still clamps to the node-width rule.
        assert_eq!(default_truncation(3, 1, 1.0, 1.0), 16);
    }

    #[test]
    fn assembled_vector_has_exact_parity_at_centered_grid() {
        for n in 0..=5u64 {
            let j0 = default_truncation(n, 2, 0.05, 1e-18);
            let psi =
                assemble_eigenvector(n, 2, 0.05, 0.0, j0, Normalization::UnitEuclidean).unwrap();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            for j in 1..=j0 as i64 {
                assert_eq!(psi.value(-j), sign * psi.value(j), "n = {n}, j = {j}");
            }
            assert!((psi.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn first_order_vector_is_sampled_continuum_solution() {
        for n in 0..=10u64 {
            let omega = 0.08;
            let j0 = default_truncation(n, 1, omega, 1e-18);
            let psi =
                assemble_eigenvector(n, 1, omega, 0.0, j0, Normalization::UnitEuclidean).unwrap();
            // Direct Hermite-times-Gaussian sample, same normalisation.
            let mut direct: Vec<f64> = (-(j0 as i64)..=j0 as i64)
                .map(|j| {
                    let xi = omega.sqrt() * j as f64;
                    let h: f64 = (0..=n / 2)
                        .map(|k| {
                            to_f64(&hermite_coefficient(n, k).unwrap())
                                * xi.powi((n - 2 * (n / 2 - k)) as i32)
                        })
                        .sum();
                    (-xi * xi / 2.0).exp() * h
                })
                .collect();
            let h0 = to_f64(&hermite_coefficient(n, 0).unwrap());
            let norm = euclidean_norm(&direct);
            let scale = h0.signum() / norm;
            for v in direct.iter_mut() {
                *v *= scale;
            }
            let err: f64 = psi
                .values()
                .iter()
                .zip(&direct)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-13, "n = {n}, err = {err:e}");
        }
    }

    #[test]
    fn second_state_nodes_bracket_continuum_zeros() {
        // Zeros of the n = 2 polynomial sit at xi = +/- 1/sqrt(2), i.e.
        // x = +/- 1/sqrt(2 omega) ~ 7.07 at omega = 0.01.
        let psi = assemble_eigenvector(2, 1, 0.01, 0.0, 200, Normalization::UnitLowestTerm)
            .unwrap();
        assert!(psi.value(7) * psi.value(8) < 0.0);
        assert!(psi.value(-8) * psi.value(-7) < 0.0);
        assert!(psi.value(0) * psi.value(100) < 0.0);
    }

    #[test]
    fn truncation_error_is_flagged() {
        let err = assemble_eigenvector(0, 2, 0.01, 0.0, 40, Normalization::UnitEuclidean);
        assert!(matches!(err, Err(Error::TruncationTooSmall(_))));
        // Default width leaves the boundary far below the peak.
        let j0 = default_truncation(0, 2, 0.01, 1e-18);
        let psi = assemble_eigenvector(0, 2, 0.01, 0.0, j0, Normalization::UnitEuclidean).unwrap();
        let boundary = psi.value(j0 as i64).abs();
        assert!(boundary < 1e-15, "boundary = {boundary:e}");
    }

    #[test]
    fn doubling_truncation_leaves_vector_unchanged() {
        let j0 = default_truncation(1, 3, 0.04, 1e-18);
        let a = assemble_eigenvector(1, 3, 0.04, 0.0, j0, Normalization::UnitEuclidean).unwrap();
        let b =
            assemble_eigenvector(1, 3, 0.04, 0.0, 2 * j0, Normalization::UnitEuclidean).unwrap();
        let diff: f64 = a
            .grid()
            .map(|j| (a.value(j) - b.value(j)).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-13, "diff = {diff:e}");
    }

    #[test]
    fn displaced_grid_is_accepted_and_validated() {
        assert!(assemble_eigenvector(0, 2, 0.05, 0.75, 80, Normalization::UnitEuclidean).is_err());
        let psi = assemble_eigenvector(0, 2, 0.05, 0.5, 80, Normalization::UnitEuclidean).unwrap();
        // Displacement skews the two boundary magnitudes.
        assert!(psi.value(-80).abs() < psi.value(80).abs());
    }
}
