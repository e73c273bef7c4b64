//! Nested partition of the remaining support `Gamma^k = T \ T^k`.
//!
//! `Gamma^k` is ordered by decreasing `|x_j|`. `Gamma_0` is empty, `Gamma_tau`
//! holds the first `2^{tau-1} S` indices, and the last level is all of
//! `Gamma^k`. `L` is the first level where the tail energy stops shrinking by
//! the factor `sigma`.

use serde::{Deserialize, Serialize};

use super::bounds::{eta, sigma};
use crate::error::{Error, Result};
use crate::linalg::IndexSet;
use crate::signal::SparseSignal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub selection_size: usize,
    /// `Gamma^k` in decreasing magnitude order (ties to the smaller index).
    pub gamma: Vec<usize>,
    /// `Gamma_tau` for `tau = 0..=tau_max`.
    pub subsets: Vec<IndexSet>,
    /// `||x_{Gamma \ Gamma_tau}||^2` for `tau = 0..=tau_max`.
    pub tail_energies: Vec<f64>,
    /// `None` when `Gamma^k` is empty.
    pub level: Option<usize>,
    pub sigma: f64,
    pub eta: f64,
    /// `k_i = 2 sum_{tau <= i} ceil(|Gamma_tau| / S)` for `i = 0..=tau_max`.
    pub milestones: Vec<usize>,
}

impl PartitionReport {
    /// Index of the last level; `Gamma_{tau_max} = Gamma^k`.
    pub fn tau_max(&self) -> usize {
        self.subsets.len() - 1
    }

    pub fn subset_sizes(&self) -> Vec<usize> {
        self.subsets.iter().map(IndexSet::len).collect()
    }

    /// `Gamma^k \ Gamma_tau`.
    pub fn remainder(&self, tau: usize) -> IndexSet {
        let all = IndexSet::from_sorted_unchecked(sorted(&self.gamma));
        all.difference(&self.subsets[tau])
    }

    /// Lists every violated structural property; empty when all hold.
    pub fn verify(&self) -> Vec<String> {
        let mut bad = Vec::new();
        let s = self.selection_size;
        let g = self.gamma.len();
        let sizes = self.subset_sizes();
        let tmax = self.tau_max();
        if sizes[0] != 0 {
            bad.push("first subset not empty".to_string());
        }
        if g > 0 {
            for (tau, &sz) in sizes.iter().enumerate().skip(1) {
                let want = if tau == tmax { g } else { (1usize << (tau - 1)) * s };
                if sz != want {
                    bad.push(format!("|Gamma_{tau}| = {sz}, expected {want}"));
                }
                if tau < tmax && want >= g {
                    bad.push(format!("level {tau} already covers Gamma"));
                }
            }
            if tmax > 1 && (1usize << (tmax - 2)) * s >= g {
                bad.push("too many levels".to_string());
            }
            if tmax >= 1 && (1usize << (tmax - 1)) * s < g {
                bad.push("too few levels".to_string());
            }
        } else if sizes != [0] {
            bad.push("empty Gamma must give a single empty subset".to_string());
        }
        for w in self.subsets.windows(2) {
            if !w[0].is_subset(&w[1]) {
                bad.push("subsets not nested".to_string());
            }
        }
        if (self.sigma * self.eta - 0.5).abs() > 1e-15 {
            bad.push("sigma * eta != 1/2".to_string());
        }
        let e = &self.tail_energies;
        match self.level {
            None if g > 0 => bad.push("L missing for nonempty Gamma".to_string()),
            Some(_) if g == 0 => bad.push("L defined for empty Gamma".to_string()),
            Some(l) => {
                if l < 1 || l > tmax {
                    bad.push(format!("L = {l} outside 1..={tmax}"));
                } else {
                    for tau in 0..l - 1 {
                        if !(e[tau] < self.sigma * e[tau + 1]) {
                            bad.push(format!("no strict growth at tau = {tau}"));
                        }
                    }
                    if !(e[l - 1] >= self.sigma * e[l]) {
                        bad.push("stopping inequality fails at L".to_string());
                    }
                    for tau in 0..=l {
                        let cap = self.sigma.powi(l as i32 - 1 - tau as i32) * e[l - 1];
                        if e[tau] > cap * (1.0 + 1e-12) + 1e-300 {
                            bad.push(format!("decay bound fails at tau = {tau}"));
                        }
                    }
                    if l >= 2 {
                        let floor = (2.0 * self.sigma - 1.0) / (2.0 * self.sigma - 2.0)
                            * (1u64 << (l - 2)) as f64
                            * s as f64;
                        if !(g as f64 > floor) {
                            bad.push(format!("|Gamma| = {g} not above {floor}"));
                        }
                    }
                    let kl = self.milestones[l];
                    if kl > 2 * ((1usize << l) - 1) {
                        bad.push(format!("k_L = {kl} exceeds 2(2^L - 1)"));
                    }
                }
            }
            None => {}
        }
        let mut acc = 0;
        for (i, sz) in sizes.iter().enumerate() {
            acc += 2 * sz.div_ceil(s);
            if self.milestones.get(i) != Some(&acc) {
                bad.push(format!("milestone k_{i} mismatch"));
            }
        }
        bad
    }
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

/// Builds the partition of `T \ tk` for selection size `s`.
pub fn partition(x: &SparseSignal, tk: &IndexSet, s: usize) -> Result<PartitionReport> {
    if s == 0 {
        return Err(Error::InvalidArgument("selection size must be at least 1".into()));
    }
    let mut gamma: Vec<usize> = x.support().difference(tk).into_vec();
    gamma.sort_by(|&a, &b| x.value_at(b).abs().total_cmp(&x.value_at(a).abs()).then(a.cmp(&b)));
    let g = gamma.len();

    let mut sizes = vec![0usize];
    if g > 0 {
        let mut block = s;
        while block < g {
            sizes.push(block);
            block *= 2;
        }
        sizes.push(g);
    }
    let subsets: Vec<IndexSet> = sizes
        .iter()
        .map(|&sz| IndexSet::from_sorted_unchecked(sorted(&gamma[..sz])))
        .collect();

    // tail energies from the back of the ordered list
    let sq: Vec<f64> = gamma.iter().map(|&j| x.value_at(j).powi(2)).collect();
    let tail_energies: Vec<f64> = sizes.iter().map(|&sz| sq[sz..].iter().sum()).collect();

    let sig = sigma();
    let level = if g == 0 {
        None
    } else {
        (1..sizes.len()).find(|&l| tail_energies[l - 1] >= sig * tail_energies[l])
    };

    let mut milestones = Vec::with_capacity(sizes.len());
    let mut acc = 0;
    for sz in &sizes {
        acc += 2 * sz.div_ceil(s);
        milestones.push(acc);
    }

    Ok(PartitionReport {
        selection_size: s,
        gamma,
        subsets,
        tail_energies,
        level,
        sigma: sig,
        eta: eta(),
        milestones,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn signal(values: &[f64]) -> SparseSignal {
        SparseSignal::from_dense(values).unwrap()
    }

    #[test]
    fn ten_remaining_with_pairs() {
        let x = signal(&[1.0; 12]);
        let tk = IndexSet::new(vec![0, 1]).unwrap();
        let rep = partition(&x, &tk, 2).unwrap();
        assert_eq!(rep.subset_sizes(), vec![0, 2, 4, 8, 10]);
        assert_eq!(rep.tau_max(), 4);
        assert!(rep.verify().is_empty(), "{:?}", rep.verify());
    }

    #[test]
    fn single_block() {
        let x = signal(&[0.0, 3.0, 0.0, -1.0]);
        let rep = partition(&x, &IndexSet::empty(), 3).unwrap();
        assert_eq!(rep.subset_sizes(), vec![0, 2]);
        assert_eq!(rep.gamma, vec![1, 3]);
        assert_eq!(rep.level, Some(1));
    }

    #[test]
    fn mass_in_first_block_gives_level_one() {
        let x = signal(&[5.0, 4.0, 1e-9, 1e-9, 1e-9]);
        let rep = partition(&x, &IndexSet::empty(), 2).unwrap();
        assert_eq!(rep.level, Some(1));
    }

    #[test]
    fn flat_signal_climbs() {
        let x = signal(&[1.0; 16]);
        let rep = partition(&x, &IndexSet::empty(), 1).unwrap();
        // tails 16, 15, 14, 12, 8, 0: growth below sigma until the last level
        assert_eq!(rep.level, Some(5));
        assert!(rep.verify().is_empty());
    }

    #[test]
    fn empty_gamma() {
        let x = signal(&[1.0, 0.0, 2.0]);
        let rep = partition(&x, &IndexSet::new(vec![0, 2]).unwrap(), 1).unwrap();
        assert_eq!(rep.subset_sizes(), vec![0]);
        assert_eq!(rep.level, None);
        assert!(rep.verify().is_empty());
    }

    proptest! {
        #[test]
        fn invariants_hold(vals in proptest::collection::vec(prop_oneof![Just(0.0), -10.0f64..10.0], 1..40),
                           mask in proptest::collection::vec(any::<bool>(), 40),
                           s in 1usize..5) {
            let x = signal(&vals);
            let tk: Vec<usize> = (0..vals.len()).filter(|&j| mask[j]).collect();
            let rep = partition(&x, &IndexSet::new(tk).unwrap(), s).unwrap();
            prop_assert!(rep.verify().is_empty(), "{:?}", rep.verify());
        }
    }
}
