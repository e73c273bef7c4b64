//! Recovery conditions and the constants of the residual and error bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight `t` of the inequality `(a + b)^2 <= (1 + t)a^2 + (1 + 1/t)b^2`.
pub const T: f64 = 1.0 / 6.0;

/// Growth factor `sigma = exp(14/9) / 2` separating the partition levels.
pub fn sigma() -> f64 {
    (14.0f64 / 9.0).exp() / 2.0
}

/// `eta = exp(-14/9)`, so that `sigma * eta = 1/2`.
pub fn eta() -> f64 {
    (-14.0f64 / 9.0).exp()
}

/// The RIC threshold shared by both new conditions.
pub const DELTA_MAX: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `delta_{max{9, S+1}K} <= 1/8`
    NewNoisy,
    /// `delta_{7K} <= 1/8`
    NewNoiseless,
    /// `delta_{SK} < sqrt(S) / (sqrt(K) + 3 sqrt(S))`
    PriorWang,
}

impl Condition {
    /// Order of the RIC the condition is stated for.
    pub fn ric_order(self, k: usize, s: usize) -> usize {
        match self {
            Condition::NewNoisy => 9.max(s + 1) * k,
            Condition::NewNoiseless => 7 * k,
            Condition::PriorWang => s * k,
        }
    }
}

/// Evaluates `which` with `delta` taken as the RIC of the condition's order.
pub fn check_condition(delta: f64, k: usize, s: usize, which: Condition) -> bool {
    match which {
        Condition::NewNoisy | Condition::NewNoiseless => delta <= DELTA_MAX,
        Condition::PriorWang => {
            let (k, s) = (k as f64, s as f64);
            delta < s.sqrt() / (k.sqrt() + 3.0 * s.sqrt())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub delta: f64,
    /// Residual constant: `||r^{k + max{g, floor(8g/S)}}|| <= mu_k ||v||`.
    pub mu_k: f64,
    /// `||x^{max{K, floor(8K/S)}} - x|| <= mu ||v||`.
    pub mu: f64,
    /// `||x_hat - x|| <= C ||v||` for the pruned estimate.
    pub c: f64,
    pub t: f64,
    pub sigma: f64,
    pub eta: f64,
    pub condition_met: bool,
}

/// `7(1 + d)(1 - eta) / (6(1 - d) e^{14/9})`; `2 sqrt(.)` is the contraction
/// factor `alpha` at `t = 1/6`.
fn contraction_radicand(delta: f64) -> f64 {
    let e = eta();
    7.0 * (1.0 + delta) * (1.0 - e) * e / (6.0 * (1.0 - delta))
}

/// `mu_k`, `mu` and `C` at `delta`.
///
/// Values above `1/8` are still evaluated (with `condition_met = false`) as
/// long as the contraction factor stays below one.
pub fn bound_constants(delta: f64) -> Result<BoundReport> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Domain(format!("delta must lie in [0, 1), got {delta}")));
    }
    let denom = 1.0 - 2.0 * contraction_radicand(delta).sqrt();
    if denom <= 0.0 {
        return Err(Error::Domain(format!(
            "delta = {delta} makes the contraction factor reach 1"
        )));
    }
    let mu_k = (7f64.sqrt() + 1.0) / denom - 1.0;
    let mu = (mu_k + 1.0) / (1.0 - delta).sqrt();
    let c = 2.0 * ((1.0 + delta) / (1.0 - delta)).sqrt() * mu + 2.0 / (1.0 - delta).sqrt();
    Ok(BoundReport {
        delta,
        mu_k,
        mu,
        c,
        t: T,
        sigma: sigma(),
        eta: eta(),
        condition_met: delta <= DELTA_MAX,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // mu_k rebuilt from its ingredients: alpha = 2 sqrt(eta(1 - eta)(1 + d)(1 + t)/(1 - d))
    // and mu_k = ((1 + 1/t)^{1/2} + 1)/(1 - alpha) - 1.
    fn mu_k_from_alpha(d: f64) -> f64 {
        let (s, t) = (sigma(), T);
        let eta = 1.0 / (2.0 * s);
        let alpha = 2.0 * (eta * (1.0 - eta) * (1.0 + d) * (1.0 + t) / (1.0 - d)).sqrt();
        ((1.0 + 1.0 / t).sqrt() + 1.0) / (1.0 - alpha) - 1.0
    }

    // the expanded closed form of C
    fn c_expanded(d: f64) -> f64 {
        let a = 7.0 * (1.0 + d) * (1.0 - (-14.0f64 / 9.0).exp()) / (6.0 * (1.0 - d) * (14.0f64 / 9.0).exp());
        2.0 * (1.0 + d).sqrt() / (1.0 - d) / (1.0 - 2.0 * a.sqrt()) * (7f64.sqrt() + 1.0)
            + 2.0 / (1.0 - d).sqrt()
    }

    #[test]
    fn sigma_eta_product() {
        assert!((sigma() * eta() - 0.5).abs() < 1e-15);
        assert!(sigma() >= 2.0);
    }

    #[test]
    fn remark_values() {
        let b = bound_constants(0.05).unwrap();
        assert!(b.mu_k > 48.0 && b.mu_k <= 49.0, "{}", b.mu_k);
        assert!(b.mu > 51.0 && b.mu <= 52.0, "{}", b.mu);
        assert!(b.c > 109.0 && b.c <= 110.0, "{}", b.c);
        assert!(b.condition_met);
    }

    #[test]
    fn noiseless_delta_gives_about_63() {
        let b = bound_constants(0.0).unwrap();
        assert!((b.c - 63.5).abs() < 1.0, "{}", b.c);
    }

    #[test]
    fn dual_paths_agree() {
        for i in 0..=50 {
            let d = 0.125 * i as f64 / 50.0;
            let b = bound_constants(d).unwrap();
            assert!((b.mu_k - mu_k_from_alpha(d)).abs() <= 1e-10 * b.mu_k);
            assert!((b.c - c_expanded(d)).abs() <= 1e-10 * b.c);
        }
    }

    #[test]
    fn monotone_on_grid() {
        let mut prev = bound_constants(0.0).unwrap();
        for i in 1..100 {
            let b = bound_constants(0.125 * i as f64 / 99.0).unwrap();
            assert!(b.mu_k > prev.mu_k && b.mu > prev.mu && b.c > prev.c);
            assert!(b.mu_k.is_finite() && b.c > 0.0);
            prev = b;
        }
    }

    #[test]
    fn domain_errors() {
        assert!(bound_constants(-0.1).is_err());
        assert!(bound_constants(1.0).is_err());
        assert!(matches!(bound_constants(0.5), Err(Error::Domain(_))));
        // the contraction factor reaches 1 near delta = 0.12543
        let over = bound_constants(0.1254).unwrap();
        assert!(!over.condition_met && over.mu_k > 1e5);
        assert!(bound_constants(0.1255).is_err());
    }

    #[test]
    fn conditions() {
        assert!(check_condition(0.125, 10, 3, Condition::NewNoisy));
        assert!(check_condition(0.125, 10, 3, Condition::NewNoiseless));
        assert!(!check_condition(0.1251, 10, 3, Condition::NewNoisy));
        assert!(!check_condition(0.125, 100, 4, Condition::PriorWang));
        assert!(check_condition(0.1249, 100, 4, Condition::PriorWang));
        for c in [Condition::NewNoisy, Condition::NewNoiseless, Condition::PriorWang] {
            assert!(check_condition(0.0, 50, 5, c));
        }
        assert_eq!(Condition::NewNoisy.ric_order(2, 1), 18);
        assert_eq!(Condition::NewNoisy.ric_order(2, 12), 26);
        assert_eq!(Condition::NewNoiseless.ric_order(2, 1), 14);
    }
}
