//! Exact CTMC generators of the two processes on the truncated state space
//! `{κ ∈ Sig_N : κ_N >= 0, |κ| <= K}`, plus the brute-force one-jump oracle
//! that adjudicates the matrix-walk transition probabilities.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::Result;
use crate::matrix::Signature;
use crate::sampling::format_rational;

use super::rational_pow;

/// All of `{κ ∈ Sig_N : κ_N >= 0, |κ| <= K}` in lexicographic order.
pub fn enumerate_states(n: usize, k_max: i64) -> Vec<Signature> {
    fn rec(out: &mut Vec<Vec<i64>>, cur: &mut Vec<i64>, slots: usize, cap: i64, budget: i64) {
        if slots == 0 {
            out.push(cur.clone());
            return;
        }
        for v in 0..=cap.min(budget) {
            cur.push(v);
            rec(out, cur, slots - 1, v, budget - v);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    rec(&mut raw, &mut Vec::new(), n, k_max, k_max);
    let mut states: Vec<Signature> =
        raw.into_iter().map(|p| Signature::new(p).expect("enumeration is decreasing")).collect();
    states.sort();
    states
}

/// Off-diagonal row of the matrix-walk generator: for each block-top index
/// `ℓ` (1-based) with multiplicity `m`, the target `κ + e_ℓ` has weight
/// `t^(ℓ-1) (1 - t^m) / (1 - t^N)`. These weights sum to 1: the numerators
/// telescope to `1 - t^N` since consecutive block tops differ by `m`.
pub fn a_row(kappa: &Signature, t: &BigRational) -> Vec<(Signature, BigRational)> {
    let n = kappa.len();
    let denom = BigRational::one() - rational_pow(t, n);
    kappa
        .block_tops()
        .into_iter()
        .map(|j| {
            let m = kappa.multiplicity(kappa.part(j));
            let num = rational_pow(t, j) * (BigRational::one() - rational_pow(t, m));
            let target = kappa.try_add_box(j).expect("adding at a block top stays decreasing");
            (target, num / &denom)
        })
        .collect()
}

/// Off-diagonal row of the reflected-walk generator: clock `i` reflects to
/// the top of its tied block, so the rate into `κ + e_ℓ` is the sum
/// `t^ℓ + ... + t^(ℓ+m-1) = t^ℓ (1 - t^m) / (1 - t)` over the block.
pub fn b_row(kappa: &Signature, t: &BigRational) -> Vec<(Signature, BigRational)> {
    let denom = BigRational::one() - t;
    kappa
        .block_tops()
        .into_iter()
        .map(|j| {
            let m = kappa.multiplicity(kappa.part(j));
            let num = rational_pow(t, j + 1) * (BigRational::one() - rational_pow(t, m));
            let target = kappa.try_add_box(j).expect("adding at a block top stays decreasing");
            (target, num / &denom)
        })
        .collect()
}

/// Total jump rate of the reflected walk: `t + t^2 + ... + t^N`.
pub fn b_total_rate(n: usize, t: &BigRational) -> BigRational {
    t * (BigRational::one() - rational_pow(t, n)) / (BigRational::one() - t)
}

/// Sparse generator on the truncated state space. Each row satisfies
/// `diag + Σ off + boundary = 0`, where `boundary` is the rate leaking to
/// states with `|ν| = K + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    states: Vec<Signature>,
    index: BTreeMap<Signature, usize>,
    diag: Vec<BigRational>,
    off: Vec<Vec<(usize, BigRational)>>,
    boundary: Vec<BigRational>,
    k_max: i64,
}

impl GeneratorMatrix {
    fn build<F>(n: usize, k_max: i64, diag_rate: &BigRational, row_fn: F) -> Self
    where
        F: Fn(&Signature) -> Vec<(Signature, BigRational)>,
    {
        let states = enumerate_states(n, k_max);
        let index: BTreeMap<Signature, usize> =
            states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let mut off = Vec::with_capacity(states.len());
        let mut boundary = Vec::with_capacity(states.len());
        for kappa in &states {
            let mut row = Vec::new();
            let mut leaked = BigRational::zero();
            for (target, w) in row_fn(kappa) {
                match index.get(&target) {
                    Some(&j) => row.push((j, w)),
                    None => leaked += w,
                }
            }
            off.push(row);
            boundary.push(leaked);
        }
        let diag = vec![-diag_rate.clone(); states.len()];
        GeneratorMatrix { states, index, diag, off, boundary, k_max }
    }

    pub fn states(&self) -> &[Signature] {
        &self.states
    }

    pub fn state_index(&self, s: &Signature) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn k_max(&self) -> i64 {
        self.k_max
    }

    pub fn diag(&self, i: usize) -> &BigRational {
        &self.diag[i]
    }

    pub fn off_row(&self, i: usize) -> &[(usize, BigRational)] {
        &self.off[i]
    }

    pub fn boundary_rate(&self, i: usize) -> &BigRational {
        &self.boundary[i]
    }

    /// Entry `(κ, ν)` including the diagonal; zero when no transition.
    pub fn entry(&self, i: usize, j: usize) -> BigRational {
        if i == j {
            return self.diag[i].clone();
        }
        self.off[i]
            .iter()
            .find(|(c, _)| *c == j)
            .map(|(_, w)| w.clone())
            .unwrap_or_else(BigRational::zero)
    }

    /// Rows as "kappa;nu;rate" with exact rationals, diagonal included.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, kappa) in self.states.iter().enumerate() {
            writeln!(w, "{kappa};{kappa};{}", format_rational(&self.diag[i]))?;
            for (j, rate) in &self.off[i] {
                writeln!(w, "{kappa};{};{}", self.states[*j], format_rational(rate))?;
            }
        }
        Ok(())
    }
}

/// Generator of `SN(X^(N))` at `t = 1/p`: diagonal `-1`, off-diagonal
/// `t^(ℓ-1)(1 - t^m)/(1 - t^N)`. Rows sum to 0 before truncation.
pub fn generator_a(n: usize, p: u64, k_max: i64) -> GeneratorMatrix {
    let t = BigRational::new(BigInt::from(1), BigInt::from(p));
    GeneratorMatrix::build(n, k_max, &BigRational::one(), |kappa| a_row(kappa, &t))
}

/// Generator of the reflected walk: diagonal `-t(1 - t^N)/(1 - t)`,
/// off-diagonal `t^ℓ(1 - t^m)/(1 - t)`.
pub fn generator_b(n: usize, t: &BigRational, k_max: i64) -> GeneratorMatrix {
    let total = b_total_rate(n, t);
    GeneratorMatrix::build(n, k_max, &total, |kappa| b_row(kappa, t))
}

/// Brute-force one-jump law of the matrix walk from `κ`: enumerates the
/// first column of the unimodular factor mod p. For each `w ∈ F_p^N \ {0}`,
/// `ℓ~` is the largest index with `w_i != 0`; in the reversed-negated
/// coordinates `κ'` the jump lands at the bottom of the tied block of `ℓ~`,
/// which is the top of the block back in `κ` coordinates.
pub fn one_jump_oracle(kappa: &Signature, p: u64) -> BTreeMap<Signature, BigRational> {
    let n = kappa.len();
    let rev = kappa.reversed_negated();
    let total = BigInt::from(p).pow(n as u32) - BigInt::from(1);
    let mut out: BTreeMap<Signature, BigRational> = BTreeMap::new();
    let mut w = vec![0u64; n];
    loop {
        // advance odometer
        let mut i = 0;
        while i < n {
            w[i] += 1;
            if w[i] < p {
                break;
            }
            w[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        let ltil = (0..n).rev().find(|&j| w[j] != 0).expect("w is nonzero");
        let lv = ((ltil..n).rev().find(|&j| rev.part(j) == rev.part(ltil)).unwrap()) + 1;
        let ell = n - lv; // 0-based index into kappa
        let target = kappa.try_add_box(ell).expect("block bottom in reversed order is a top");
        *out.entry(target).or_insert_with(BigRational::zero) +=
            BigRational::new(BigInt::from(1), total.clone());
    }
    out
}

/// Exact row-sum check: off-diagonal weights of `a_row` always sum to 1.
pub fn a_row_sum(kappa: &Signature, t: &BigRational) -> BigRational {
    a_row(kappa, t).into_iter().map(|(_, w)| w).sum()
}
