//! Numerical checkers for the inequalities behind the recovery guarantees.
//!
//! Each checker evaluates both sides on a concrete instance and reports the
//! slack (`rhs - lhs`, nonnegative when the inequality holds). RICs come from
//! exact enumeration; an order beyond the enumeration budget is refused.

use serde::{Deserialize, Serialize};

use super::bounds::{bound_constants, check_condition, Condition};
use super::partition::partition;
use super::ric::{ric_upper_bound, RicTable};
use crate::error::{Error, Result};
use crate::linalg::{add, check_len, norm2, norm2_sq, IndexSet, Matrix};
use crate::pursuit::{gomp_solve, theorem_iterations, PursuitConfig, PursuitTrace};
use crate::signal::SparseSignal;

/// Relative tolerance applied to every comparison.
pub const CHECK_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Check {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// `<u, z> <= sqrt(ceil(|W|/S)) ||u_U|| ||z_W||` with `W = supp(u) & supp(z)`
/// and `U` the `S` largest entries of `|u|`.
pub fn check_lemma1(u: &[f64], z: &[f64], s: usize) -> Result<Lemma1Check> {
    check_len("lemma vectors", u.len(), z.len())?;
    if s == 0 || s > u.len() {
        return Err(Error::InvalidArgument(format!(
            "S must lie in 1..={}, got {s}",
            u.len()
        )));
    }
    let lhs: f64 = u.iter().zip(z).map(|(a, b)| a * b).sum();
    let w: Vec<usize> = (0..u.len()).filter(|&j| u[j] != 0.0 && z[j] != 0.0).collect();
    let top = crate::pursuit::prune_to_k(u, s)?;
    let u_top: f64 = top.iter().map(|&j| u[j] * u[j]).sum::<f64>().sqrt();
    let z_w: f64 = w.iter().map(|&j| z[j] * z[j]).sum::<f64>().sqrt();
    let rhs = (w.len().div_ceil(s) as f64).sqrt() * u_top * z_w;
    let tol = CHECK_RTOL * norm2(u) * norm2(z);
    Ok(Lemma1Check {
        holds: lhs <= rhs + tol,
        lhs,
        rhs,
    })
}

/// One noisy instance `y = Phi x + v` and the gOMP trace run on it.
#[derive(Debug, Clone, Copy)]
pub struct Instance<'a> {
    pub phi: &'a Matrix,
    pub x: &'a SparseSignal,
    pub v: &'a [f64],
    pub trace: &'a PursuitTrace,
}

impl Instance<'_> {
    fn validate(&self) -> Result<()> {
        check_len("signal", self.phi.cols(), self.x.len())?;
        check_len("noise", self.phi.rows(), self.v.len())
    }

    /// `||Phi_A x_A + v||^2`.
    fn energy_with_noise(&self, a: &IndexSet) -> Result<f64> {
        let coeffs: Vec<f64> = a.iter().map(|&j| self.x.value_at(j)).collect();
        Ok(norm2_sq(&add(&self.phi.mul_support(a, &coeffs)?, self.v)))
    }

    fn residual_sq(&self, k: usize) -> Result<f64> {
        self.trace
            .residual_norm(k)
            .map(|r| r * r)
            .ok_or_else(|| Error::InvalidArgument(format!("trace has no iteration {k}")))
    }

    fn support(&self, k: usize) -> Result<IndexSet> {
        self.trace
            .support(k)
            .ok_or_else(|| Error::InvalidArgument(format!("trace has no iteration {k}")))
    }

    fn scale(&self) -> f64 {
        self.trace.initial_residual_norm.powi(2) + norm2_sq(self.v)
    }

    /// `Gamma_tau` and `Gamma \ Gamma_tau` at iteration `k`.
    fn level_sets(&self, k: usize, tau: usize) -> Result<(IndexSet, IndexSet)> {
        let rep = partition(self.x, &self.support(k)?, self.trace.selection_size)?;
        if tau == 0 || tau > rep.tau_max() {
            return Err(Error::InvalidArgument(format!(
                "tau must lie in 1..={}, got {tau}",
                rep.tau_max()
            )));
        }
        Ok((rep.subsets[tau].clone(), rep.remainder(tau)))
    }
}

/// Number of levels `tau_max` of the partition at iteration `k` (0 when
/// `Gamma^k` is empty).
pub fn level_count(x: &SparseSignal, trace: &PursuitTrace, k: usize) -> Result<usize> {
    let tk = trace
        .support(k)
        .ok_or_else(|| Error::InvalidArgument(format!("trace has no iteration {k}")))?;
    Ok(partition(x, &tk, trace.selection_size)?.tau_max())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop1Check {
    /// `||r^k||^2 <= ||Phi_Gamma x_Gamma + v||^2`
    pub holds_24: bool,
    pub slack_24: f64,
    /// Residual decrease from `l` to `l + 1`.
    pub holds_25: bool,
    pub slack_25: f64,
    /// Multiplier `(1 - delta) / ((1 + delta_S) ceil(|Gamma_tau|/S))`.
    pub factor: f64,
    /// A required RIC is at least 1, so the decrease bound says nothing.
    pub vacuous_25: bool,
}

pub fn check_prop1(inst: &Instance, k: usize, l: usize, tau: usize, rics: &mut RicTable) -> Result<Prop1Check> {
    inst.validate()?;
    if l < k {
        return Err(Error::InvalidArgument(format!("need l >= k, got l = {l}, k = {k}")));
    }
    let s = inst.trace.selection_size;
    let tol = CHECK_RTOL * inst.scale();

    let gamma = inst.x.support().difference(&inst.support(k)?);
    let slack_24 = inst.energy_with_noise(&gamma)? - inst.residual_sq(k)?;

    let (gamma_tau, rest) = inst.level_sets(k, tau)?;
    let tl = inst.support(l)?;
    let d_union = rics.delta(gamma_tau.union(&tl).len())?;
    let d_s = rics.delta(s)?;
    let factor = (1.0 - d_union) / ((1.0 + d_s) * gamma_tau.len().div_ceil(s) as f64);
    let r_l = inst.residual_sq(l)?;
    let drop = r_l - inst.residual_sq(l + 1)?;
    let slack_25 = drop - factor * (r_l - inst.energy_with_noise(&rest)?);
    let vacuous_25 = d_union >= 1.0 || d_s >= 1.0;
    Ok(Prop1Check {
        holds_24: slack_24 >= -tol,
        slack_24,
        holds_25: vacuous_25 || slack_25 >= -tol,
        slack_25,
        factor,
        vacuous_25,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop2Check {
    pub holds: bool,
    pub slack: f64,
    /// `C_{tau, l, dl}`.
    pub factor: f64,
    pub vacuous: bool,
}

/// `||r^{l+dl}||^2 - B <= C (||r^l||^2 - B)` with
/// `B = ||Phi_{Gamma \ Gamma_tau} x + v||^2`.
pub fn check_prop2(
    inst: &Instance,
    k: usize,
    l: usize,
    dl: usize,
    tau: usize,
    rics: &mut RicTable,
) -> Result<Prop2Check> {
    inst.validate()?;
    if l < k {
        return Err(Error::InvalidArgument(format!("need l >= k, got l = {l}, k = {k}")));
    }
    let s = inst.trace.selection_size;
    let tol = CHECK_RTOL * inst.scale();
    let (gamma_tau, rest) = inst.level_sets(k, tau)?;
    let (factor, vacuous) = if dl == 0 {
        (1.0, false)
    } else {
        let d_union = rics.delta(gamma_tau.union(&inst.support(l + dl - 1)?).len())?;
        let d_s = rics.delta(s)?;
        let f = (-(dl as f64) * (1.0 - d_union)
            / (gamma_tau.len().div_ceil(s) as f64 * (1.0 + d_s)))
            .exp();
        (f, d_union >= 1.0 || d_s >= 1.0)
    };
    let b = inst.energy_with_noise(&rest)?;
    let slack = factor * (inst.residual_sq(l)? - b) - (inst.residual_sq(l + dl)? - b);
    Ok(Prop2Check {
        holds: vacuous || slack >= -tol,
        slack,
        factor,
        vacuous,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremResidualCheck {
    pub holds: bool,
    /// `||r^{max{K, floor(8K/S)}}||`.
    pub lhs: f64,
    /// `mu_0 ||v||`.
    pub bound: f64,
    pub delta: f64,
    pub order: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremErrorCheck {
    pub delta: f64,
    pub order: usize,
    /// `||x^{max{K, floor(8K/S)}} - x||` against `mu ||v||`.
    pub iterate_error: f64,
    pub mu_bound: f64,
    pub holds_mu: bool,
    /// `||x_hat - x||` against `C ||v||`.
    pub error: f64,
    pub c_bound: f64,
    pub holds_c: bool,
}

impl TheoremErrorCheck {
    pub fn holds(&self) -> bool {
        self.holds_mu && self.holds_c
    }
}

/// Certifies `delta_order <= 1/8`, refusing with the measured value otherwise.
fn certify(phi: &Matrix, order: usize, which: Condition, k: usize, s: usize) -> Result<f64> {
    let est = ric_upper_bound(phi, order)?;
    if !check_condition(est.delta, k, s, which) {
        return Err(Error::NotCertified {
            order,
            delta: est.delta,
        });
    }
    Ok(est.delta)
}

fn run_fixed(phi: &Matrix, x: &SparseSignal, v: &[f64], s: usize) -> Result<(Vec<f64>, crate::pursuit::PursuitResult)> {
    check_len("signal", phi.cols(), x.len())?;
    let k = x.sparsity();
    check_len("noise", phi.rows(), v.len())?;
    let y = add(&phi.mul_support(x.support(), x.values())?, v);
    let config = PursuitConfig::gomp(k, s)
        .fixed_iterations()
        .with_max_iterations(theorem_iterations(k, s));
    let res = gomp_solve(phi, &y, &config)?;
    Ok((y, res))
}

/// Residual after `max{K, floor(8K/S)}` iterations against `mu_0 ||v||`,
/// with `mu_0` taken at (a certified upper bound on) `delta_{7K}`.
pub fn check_theorem_residual(phi: &Matrix, x: &SparseSignal, v: &[f64], s: usize) -> Result<TheoremResidualCheck> {
    let k = x.sparsity();
    let order = Condition::NewNoiseless.ric_order(k, s).min(phi.cols());
    let delta = certify(phi, order, Condition::NewNoiseless, k, s)?;
    let consts = bound_constants(delta)?;
    let (y, res) = run_fixed(phi, x, v, s)?;
    let lhs = res.trace.residual_norm(res.iterations_used).unwrap_or(norm2(&y));
    let bound = consts.mu_k * norm2(v);
    Ok(TheoremResidualCheck {
        holds: lhs <= bound + CHECK_RTOL * norm2(&y),
        lhs,
        bound,
        delta,
        order,
        iterations: res.iterations_used,
    })
}

/// Estimation errors of the last iterate and of the pruned estimate against
/// `mu ||v||` and `C ||v||`, at `delta_{max{9, S+1}K}`.
pub fn check_theorem_error(phi: &Matrix, x: &SparseSignal, v: &[f64], s: usize) -> Result<TheoremErrorCheck> {
    let k = x.sparsity();
    let order = Condition::NewNoisy.ric_order(k, s).min(phi.cols());
    let delta = certify(phi, order, Condition::NewNoisy, k, s)?;
    let consts = bound_constants(delta)?;
    let (y, res) = run_fixed(phi, x, v, s)?;
    let truth = x.to_dense();
    let dist = |est: &[f64]| norm2(&crate::linalg::sub(est, &truth));
    let iterate_error = dist(&res.last_iterate());
    let error = dist(&res.estimate);
    let nv = norm2(v);
    let tol = CHECK_RTOL * norm2(&y);
    Ok(TheoremErrorCheck {
        delta,
        order,
        iterate_error,
        mu_bound: consts.mu * nv,
        holds_mu: iterate_error <= consts.mu * nv + tol,
        error,
        c_bound: consts.c * nv,
        holds_c: error <= consts.c * nv + tol,
    })
}
