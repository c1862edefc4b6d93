//! Cached one-dimensional Gauss rules.
//!
//! Every quadrature in the crate that is not a plain grid sum reduces to a
//! Gauss-Legendre or Gauss-Jacobi rule on a reference interval. Radial
//! integrals against the weight `t^{a-1}` on `[0, 1]` and angular integrals
//! against the contact-order weight near a boundary point both come from
//! Jacobi rules with the singular factor absorbed into the weights, so the
//! integrand passed to them is the smooth part only.
//!
//! Rules are memoised process-wide: node/weight tables are tiny and the
//! same `(order, alpha, beta)` combinations are requested millions of times
//! by the ray sweeps.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::{GaussJacobi, GaussLegendre};

use crate::error::{Error, Result};

type Rule = Arc<Vec<(f64, f64)>>;

fn cache() -> &'static Mutex<HashMap<(usize, u64, u64), Rule>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64, u64), Rule>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn lookup_or_build(
    m: usize,
    alpha: f64,
    beta: f64,
    build: impl FnOnce() -> Result<Vec<(f64, f64)>>,
) -> Result<Rule> {
    let key = (m, alpha.to_bits(), beta.to_bits());
    if let Some(rule) = cache().lock().unwrap().get(&key) {
        return Ok(rule.clone());
    }
    let rule: Rule = Arc::new(build()?);
    cache()
        .lock()
        .unwrap()
        .entry(key)
        .or_insert_with(|| rule.clone());
    Ok(rule)
}

/// `m`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn legendre(m: usize) -> Result<Rule> {
    lookup_or_build(m, 0.0, -1.0, || {
        GaussLegendre::new(m)
            .map(|rule| rule.into_node_weight_pairs())
            .map_err(|e| Error::Parameter(format!("gauss-legendre order {m}: {e}")))
    })
}

/// `m`-point Gauss-Legendre rule mapped to `[0, 1]`.
pub fn legendre_01(m: usize) -> Result<Rule> {
    lookup_or_build(m, 1.0, -1.0, || {
        let base = legendre(m)?;
        Ok(base
            .iter()
            .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .collect())
    })
}

/// `m`-point Gauss-Jacobi rule on `[-1, 1]` for the weight
/// `(1 - x)^alpha (1 + x)^beta`.
pub fn jacobi(m: usize, alpha: f64, beta: f64) -> Result<Rule> {
    if alpha <= -1.0 || beta <= -1.0 {
        return Err(Error::Parameter(format!(
            "jacobi exponents must exceed -1 (got alpha = {alpha}, beta = {beta})"
        )));
    }
    lookup_or_build(m, alpha, beta, || {
        GaussJacobi::new(m, alpha, beta)
            .map(|rule| rule.into_node_weight_pairs())
            .map_err(|e| Error::Parameter(format!("gauss-jacobi order {m}: {e}")))
    })
}

/// `m`-point rule for `∫₀¹ f(t) t^{a-1} dt` with the power weight absorbed:
/// the sum `Σ wᵢ f(tᵢ)` reproduces the weighted integral exactly for
/// polynomial `f` up to degree `2m - 1`.
pub fn radial_power(m: usize, a: f64) -> Result<Rule> {
    if a <= 0.0 {
        return Err(Error::Parameter(format!(
            "radial weight exponent must be positive (got a = {a})"
        )));
    }
    // Key on (m, a, tag); the tag keeps these entries distinct from plain
    // Jacobi rules with the same exponents.
    lookup_or_build(m, a, f64::INFINITY, || {
        let base = jacobi(m, 0.0, a - 1.0)?;
        let scale = 0.5f64.powf(a);
        Ok(base
            .iter()
            .map(|&(x, w)| (0.5 * (x + 1.0), scale * w))
            .collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let rule = legendre(8).unwrap();
        // ∫_{-1}^{1} x^14 dx = 2/15; an 8-point rule is exact through degree 15.
        let s: f64 = rule.iter().map(|&(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14, "got {s}");
    }

    #[test]
    fn radial_rule_matches_power_moments() {
        // ∫₀¹ t^k t^{a-1} dt = 1/(k + a) for every monomial degree k the
        // rule must capture.
        for &a in &[0.5, 1.0, 2.0, 3.0] {
            let rule = radial_power(8, a).unwrap();
            for k in 0..=8 {
                let s: f64 = rule.iter().map(|&(t, w)| w * t.powi(k)).sum();
                let exact = 1.0 / (k as f64 + a);
                assert!(
                    (s - exact).abs() <= 1e-13 * exact,
                    "a = {a}, k = {k}: {s} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn jacobi_rule_matches_beta_moments() {
        // ∫_{-1}^{1} (1-x)^2 (1+x)^2 dx = 16/15 via the zeroth moment.
        let rule = jacobi(16, 2.0, 2.0).unwrap();
        let s: f64 = rule.iter().map(|&(_, w)| w).sum();
        assert!((s - 16.0 / 15.0).abs() < 1e-13, "got {s}");
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(radial_power(8, 0.0).is_err());
        assert!(jacobi(8, -1.0, 0.0).is_err());
    }
}
