//! Pass/fail verification suites: exact generator comparisons, the one-jump
//! lemma property run, and calibrated statistical checks that the two
//! simulated processes share their finite-time laws.

use std::collections::BTreeMap;
use std::time::Instant;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::matrix::{left_diag_multiply, singular_numbers, Entry, PAdicMatrix, Signature};
use crate::process::generators::{a_row, enumerate_states, generator_a, generator_b, one_jump_oracle};
use crate::process::{
    canonical_process, multi_time_distribution, reflected_walk_simulate, RateParams,
};
use crate::process::walks::gillespie_reflected;
use crate::sampling::{derive_seed, haar_gln_zp, StreamKey};

/// Default significance level for the statistical suites.
pub const DEFAULT_ALPHA: f64 = 0.001;
/// Cells are pooled until every expected count reaches this.
pub const POOL_THRESHOLD: f64 = 5.0;

/// Outcome of one suite. `pass` is a pure function of `stats` and the
/// thresholds recorded in `params`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub name: String,
    pub params: serde_json::Value,
    pub stats: serde_json::Value,
    pub pass: bool,
}

// ---- scalar special functions ----

/// Lanczos approximation, valid for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut a = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

/// Regularized lower incomplete gamma `P(a, x)`: series for small `x`,
/// Lentz continued fraction for the complement otherwise.
pub fn reg_gamma_lower(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    let prefactor = (-x + a * x.ln() - ln_gamma(a)).exp();
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = 1.0;
        while term.abs() > sum.abs() * 1e-16 {
            term *= x / (a + n);
            sum += term;
            n += 1.0;
        }
        prefactor * sum
    } else {
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        let mut i = 1.0;
        loop {
            let an = -i * (i - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-15 {
                break;
            }
            i += 1.0;
        }
        1.0 - prefactor * h
    }
}

/// Survival function of the chi-square distribution with `dof` degrees.
pub fn chi_square_sf(stat: f64, dof: usize) -> f64 {
    (1.0 - reg_gamma_lower(dof as f64 / 2.0, stat / 2.0)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Goodness of fit of an observed histogram against an exact law. Cells
/// whose expected count falls below [`POOL_THRESHOLD`] are pooled into one
/// "other" cell, which also absorbs observed categories outside the law's
/// support together with the law's residual mass.
pub fn chi_square_gof<T: Ord + Clone>(
    observed: &BTreeMap<T, u64>,
    exact: &BTreeMap<T, f64>,
) -> Result<ChiSquareResult> {
    let n: u64 = observed.values().sum();
    if n == 0 {
        return Err(Error::InsufficientSamples("empty histogram".into()));
    }
    let mut cells: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut other_obs = 0.0;
    let mut other_exp = 0.0;
    let mut covered = 0.0;
    for (key, &p) in exact {
        let obs = observed.get(key).copied().unwrap_or(0) as f64;
        let exp = p * n as f64;
        covered += p;
        if exp >= POOL_THRESHOLD {
            cells.push((obs, exp));
        } else {
            other_obs += obs;
            other_exp += exp;
        }
    }
    for (key, &c) in observed {
        if !exact.contains_key(key) {
            other_obs += c as f64;
        }
    }
    other_exp += (1.0 - covered).max(0.0) * n as f64;
    if other_exp > 0.0 {
        if other_exp >= POOL_THRESHOLD {
            cells.push((other_obs, other_exp));
        } else if let Some(last) = cells.last_mut() {
            last.0 += other_obs;
            last.1 += other_exp;
        } else {
            return Err(Error::InsufficientSamples(
                "all expected counts below pooling threshold".into(),
            ));
        }
    }
    if cells.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "{} cell(s) after pooling; need at least 2",
            cells.len()
        )));
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    Ok(ChiSquareResult { statistic, dof, p_value: chi_square_sf(statistic, dof) })
}

/// Two-sample homogeneity test on a shared category set, pooling rare
/// categories by their smaller expected count.
pub fn chi_square_two_sample<T: Ord + Clone>(
    a: &BTreeMap<T, u64>,
    b: &BTreeMap<T, u64>,
) -> Result<ChiSquareResult> {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    if na == 0 || nb == 0 {
        return Err(Error::InsufficientSamples("empty sample".into()));
    }
    let mut keys: Vec<&T> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let total = (na + nb) as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new(); // (count_a, count_b)
    let mut pooled = (0.0, 0.0);
    for k in keys {
        let ca = a.get(k).copied().unwrap_or(0) as f64;
        let cb = b.get(k).copied().unwrap_or(0) as f64;
        let p_hat = (ca + cb) / total;
        if p_hat * na.min(nb) as f64 >= POOL_THRESHOLD {
            cells.push((ca, cb));
        } else {
            pooled.0 += ca;
            pooled.1 += cb;
        }
    }
    if pooled != (0.0, 0.0) {
        let p_hat = (pooled.0 + pooled.1) / total;
        if p_hat * na.min(nb) as f64 >= POOL_THRESHOLD {
            cells.push(pooled);
        } else if let Some(last) = cells.last_mut() {
            last.0 += pooled.0;
            last.1 += pooled.1;
        }
    }
    if cells.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "{} cell(s) after pooling; need at least 2",
            cells.len()
        )));
    }
    let mut statistic = 0.0;
    for (ca, cb) in &cells {
        let p_hat = (ca + cb) / total;
        let (ea, eb) = (p_hat * na as f64, p_hat * nb as f64);
        statistic += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
    }
    let dof = cells.len() - 1;
    Ok(ChiSquareResult { statistic, dof, p_value: chi_square_sf(statistic, dof) })
}

/// Total variation distance of two normalized histograms: half L1.
pub fn tv_distance<T: Ord + Clone>(a: &BTreeMap<T, f64>, b: &BTreeMap<T, f64>) -> f64 {
    let norm = |m: &BTreeMap<T, f64>| -> f64 { m.values().sum() };
    let (za, zb) = (norm(a), norm(b));
    let mut keys: Vec<&T> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .into_iter()
        .map(|k| {
            let pa = a.get(k).copied().unwrap_or(0.0) / za;
            let pb = b.get(k).copied().unwrap_or(0.0) / zb;
            (pa - pb).abs()
        })
        .sum::<f64>()
}

pub fn counts_to_probs<T: Ord + Clone>(m: &BTreeMap<T, u64>) -> BTreeMap<T, f64> {
    let n: u64 = m.values().sum();
    m.iter().map(|(k, &v)| (k.clone(), v as f64 / n as f64)).collect()
}

// ---- suites ----

/// One-jump reduction check: with `ℓ~` the largest row index whose first
/// column entry of `A` is a unit, and `ℓ` the bottom of the tied block of
/// `κ_ℓ~`, verifies `SN(diag(p^κ) A diag(p^-1, 1, ..., 1)) = κ - e_ℓ`.
pub fn check_lemma_one_jump(a: &PAdicMatrix, kappa: &Signature) -> Result<bool> {
    let n = a.rows();
    if n != a.cols() || n != kappa.len() {
        return Err(Error::DimensionMismatch("square matrix matching κ required".into()));
    }
    let ltil = (0..n)
        .rev()
        .find(|&i| match a.get(i, 0) {
            Entry::Known(s) => s.valuation() == Some(0),
            Entry::Unknown(_) => false,
        })
        .ok_or_else(|| Error::InvalidInput("first column has no unit entry".into()))?;
    let ell = (ltil..n).rev().find(|&i| kappa.part(i) == kappa.part(ltil)).unwrap();
    let mut m = left_diag_multiply(kappa, a)?;
    for r in 0..n {
        let e = m.get(r, 0).shift(-1);
        m.set(r, 0, e);
    }
    let sn = singular_numbers(&m)?;
    let mut expect = kappa.parts().to_vec();
    expect[ell] -= 1;
    Ok(sn == Signature::new(expect).expect("block bottom decrement stays decreasing"))
}

/// Random signature with parts in `[-span, span]`, drawn from a keyed stream.
pub fn random_signature(key: &StreamKey, n: usize, span: u64) -> Signature {
    let width = 2 * span + 1;
    let mut parts: Vec<i64> =
        (0..n as u64).map(|i| key.digit(width, i) as i64 - span as i64).collect();
    parts.sort_unstable_by(|x, y| y.cmp(x));
    Signature::new(parts).expect("sorted decreasing")
}

/// Property run of the one-jump reduction over random Haar matrices and
/// random signatures; pass iff zero failures.
pub fn verify_lemma(n: usize, p: u64, instances: u64, seed: u64) -> Result<VerificationReport> {
    let start = Instant::now();
    let span = 5u64;
    let mut failures = 0u64;
    for i in 0..instances {
        let s = derive_seed(seed, i);
        let kappa = random_signature(&StreamKey::new(s, u64::MAX, 0, 0), n, span);
        // precision must cover the valuation spread introduced by diag(p^κ)
        let mut prec = 2 * span as usize + 12;
        let ok = loop {
            let a = haar_gln_zp(s, 0, p, n, prec)?;
            match check_lemma_one_jump(&a, &kappa) {
                Ok(ok) => break ok,
                Err(Error::PrecisionExhausted(_)) if prec < 1 << 16 => prec *= 2,
                Err(e) => return Err(e),
            }
        };
        if !ok {
            failures += 1;
        }
    }
    Ok(VerificationReport {
        name: "lemma-one-jump".into(),
        params: json!({"N": n, "p": p, "instances": instances, "seed": seed, "span": span}),
        stats: json!({"failures": failures, "wall_ms": start.elapsed().as_millis() as u64}),
        pass: failures == 0,
    })
}

fn rational_str(r: &BigRational) -> String {
    crate::sampling::format_rational(r)
}

/// Exact generator comparison: `A = c' B` entrywise and `A`'s off-diagonal
/// rows equal the brute-force one-jump oracle, as rationals. `distort`
/// multiplies the closed-form rows by the spurious `(1 - t)` factor and must
/// make the suite fail; it exists to prove the test has teeth.
pub fn verify_generators(n: usize, p: u64, k_max: i64, distort: bool) -> Result<VerificationReport> {
    let start = Instant::now();
    let rp = RateParams::for_prime(p, n)?;
    let scale = rp.time_scale();
    let ga = generator_a(n, p, k_max);
    let gb = generator_b(n, &rp.t, k_max);
    let fudge = if distort {
        BigRational::one() - &rp.t
    } else {
        BigRational::one()
    };
    let s = ga.states().len();
    let mut mismatches = 0u64;
    let mut bad_row_sums = 0u64;
    for i in 0..s {
        for j in 0..s {
            if &fudge * ga.entry(i, j) != &scale * gb.entry(i, j) {
                mismatches += 1;
            }
        }
        let oracle = one_jump_oracle(&ga.states()[i], p);
        let row: BTreeMap<Signature, BigRational> = a_row(&ga.states()[i], &rp.t)
            .into_iter()
            .map(|(sig, w)| (sig, &fudge * w))
            .collect();
        if oracle != row {
            mismatches += 1;
        }
        let sum: BigRational = row.values().cloned().sum();
        if !sum.is_one() {
            bad_row_sums += 1;
        }
    }
    Ok(VerificationReport {
        name: "generator-identity".into(),
        params: json!({"N": n, "p": p, "K": k_max, "time_scale": rational_str(&scale),
                       "distorted": distort}),
        stats: json!({"states": s, "entry_mismatches": mismatches, "bad_row_sums": bad_row_sums,
                      "wall_ms": start.elapsed().as_millis() as u64}),
        pass: mismatches == 0 && bad_row_sums == 0,
    })
}

/// Truncation weight covering the Poisson jump count at `max_time` with a
/// wide tail margin.
pub fn truncation_for(max_time: f64) -> i64 {
    (max_time.ceil() + 6.0 * max_time.sqrt().ceil() + 6.0) as i64
}

/// Default p-adic working precision for matrix walks up to `max_time`.
pub fn auto_precision(max_time: f64) -> usize {
    (max_time.ceil() + 6.0 * max_time.sqrt() + 16.0) as usize
}

type TupleHist = BTreeMap<Vec<Signature>, u64>;

fn record_tuples(tr: &crate::process::Trajectory, times: &[f64]) -> Vec<Signature> {
    times.iter().map(|&t| tr.state_at(t).clone()).collect()
}

/// Exact joint law over `times` as a signature-tuple map, from the matrix
/// walk generator at rate 1. The truncation grows until boundary mass fits
/// under `tail_eps`.
pub fn exact_joint_law(
    n: usize,
    p: u64,
    times: &[f64],
    tail_eps: f64,
) -> Result<BTreeMap<Vec<Signature>, f64>> {
    let max_time = *times.last().expect("nonempty times");
    let mut k = truncation_for(max_time);
    loop {
        let g = generator_a(n, p, k);
        match multi_time_distribution(&g, &BigRational::one(), times, &Signature::zeros(n), tail_eps)
        {
            Ok((tuples, _)) => {
                return Ok(tuples
                    .into_iter()
                    .map(|(idx, w)| {
                        (idx.into_iter().map(|i| g.states()[i].clone()).collect(), w)
                    })
                    .collect())
            }
            Err(Error::TruncationTooSmall(_)) if k < 400 => k += 4,
            Err(e) => return Err(e),
        }
    }
}

/// Law-equality check: joint laws of `SN(X(τ_i))` and of the reflected walk
/// at `c' τ_i` agree with each other (two-sample chi-square) and with the
/// exact uniformization law (goodness of fit and total variation).
pub fn verify_theorem_multitime(
    n: usize,
    p: u64,
    times: &[f64],
    samples: u64,
    seed: u64,
    alpha: f64,
    tv_bound: f64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    if times.is_empty() {
        return Err(Error::InvalidInput("at least one record time required".into()));
    }
    let rp = RateParams::for_prime(p, n)?;
    let scale = rp.time_scale().to_f64().expect("small rational");
    let max_time = *times.last().unwrap();
    let precision = auto_precision(max_time);
    let scaled_times: Vec<f64> = times.iter().map(|&t| t * scale).collect();

    let mut matrix_hist: TupleHist = BTreeMap::new();
    let mut reflected_hist: TupleHist = BTreeMap::new();
    for i in 0..samples {
        let tr = canonical_process(n, p, max_time, derive_seed(seed, 2 * i), precision)?;
        *matrix_hist.entry(record_tuples(&tr, times)).or_insert(0) += 1;
        let tr = reflected_walk_simulate(
            n,
            &rp.t,
            max_time * scale,
            derive_seed(seed, 2 * i + 1),
        )?;
        *reflected_hist.entry(record_tuples(&tr, &scaled_times)).or_insert(0) += 1;
    }

    let exact = exact_joint_law(n, p, times, 1e-9)?;
    let two_sample = chi_square_two_sample(&matrix_hist, &reflected_hist)?;
    let gof_matrix = chi_square_gof(&matrix_hist, &exact)?;
    let gof_reflected = chi_square_gof(&reflected_hist, &exact)?;
    let tv_matrix = tv_distance(&counts_to_probs(&matrix_hist), &exact);
    let tv_reflected = tv_distance(&counts_to_probs(&reflected_hist), &exact);

    let pass = two_sample.p_value > alpha
        && gof_matrix.p_value > alpha
        && gof_reflected.p_value > alpha
        && tv_matrix <= tv_bound
        && tv_reflected <= tv_bound;
    Ok(VerificationReport {
        name: "theorem-multitime".into(),
        params: json!({"N": n, "p": p, "times": times, "samples": samples, "seed": seed,
                       "alpha": alpha, "tv_bound": tv_bound,
                       "time_scale": rational_str(&rp.time_scale())}),
        stats: json!({"two_sample": two_sample, "gof_matrix": gof_matrix,
                      "gof_reflected": gof_reflected, "tv_matrix": tv_matrix,
                      "tv_reflected": tv_reflected,
                      "wall_ms": start.elapsed().as_millis() as u64}),
        pass,
    })
}

/// Clock dynamics vs Gillespie on the generator rows: two-sample comparison
/// of the states at time `tau`.
pub fn verify_reflection_equivalence(
    n: usize,
    t: &BigRational,
    tau: f64,
    samples: u64,
    seed: u64,
    alpha: f64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut clock_hist: BTreeMap<Signature, u64> = BTreeMap::new();
    let mut gillespie_hist: BTreeMap<Signature, u64> = BTreeMap::new();
    for i in 0..samples {
        let tr = reflected_walk_simulate(n, t, tau, derive_seed(seed, 2 * i))?;
        *clock_hist.entry(tr.state_at(tau).clone()).or_insert(0) += 1;
        let tr = gillespie_reflected(n, t, tau, derive_seed(seed, 2 * i + 1))?;
        *gillespie_hist.entry(tr.state_at(tau).clone()).or_insert(0) += 1;
    }
    let two_sample = chi_square_two_sample(&clock_hist, &gillespie_hist)?;
    let pass = two_sample.p_value > alpha;
    Ok(VerificationReport {
        name: "reflection-equivalence".into(),
        params: json!({"N": n, "t": rational_str(t), "tau": tau, "samples": samples,
                       "seed": seed, "alpha": alpha}),
        stats: json!({"two_sample": two_sample,
                      "wall_ms": start.elapsed().as_millis() as u64}),
        pass,
    })
}

/// One-jump suite: exact oracle equality on all truncated states plus a
/// Monte-Carlo spot check of each transition probability within
/// `sigmas` binomial standard deviations.
pub fn verify_one_jump(
    n: usize,
    p: u64,
    k_max: i64,
    mc_samples: u64,
    seed: u64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let t = BigRational::new(num_bigint::BigInt::from(1), num_bigint::BigInt::from(p));
    let mut exact_mismatches = 0u64;
    let mut bad_row_sums = 0u64;
    for kappa in enumerate_states(n, k_max) {
        let oracle = one_jump_oracle(&kappa, p);
        let row: BTreeMap<Signature, BigRational> = a_row(&kappa, &t).into_iter().collect();
        if oracle != row {
            exact_mismatches += 1;
        }
        if !row.values().cloned().sum::<BigRational>().is_one() {
            bad_row_sums += 1;
        }
    }
    // Monte-Carlo spot check from a mid-weight state
    let kappa = enumerate_states(n, k_max)
        .into_iter()
        .rev()
        .find(|s| s.weight() == k_max.min(3))
        .expect("state of that weight exists");
    let counts = crate::process::one_jump_mc(&kappa, p, mc_samples, seed)?;
    let row: BTreeMap<Signature, BigRational> = a_row(&kappa, &t).into_iter().collect();
    let sigmas = 3.0;
    let mut mc_violations = 0u64;
    for (target, w) in &row {
        let prob = w.to_f64().unwrap();
        let obs = counts.get(target).copied().unwrap_or(0) as f64;
        let sd = (mc_samples as f64 * prob * (1.0 - prob)).sqrt();
        if (obs - mc_samples as f64 * prob).abs() > sigmas * sd {
            mc_violations += 1;
        }
    }
    let stray: u64 = counts.iter().filter(|(k, _)| !row.contains_key(*k)).map(|(_, &c)| c).sum();
    let pass = exact_mismatches == 0 && bad_row_sums == 0 && mc_violations == 0 && stray == 0;
    Ok(VerificationReport {
        name: "one-jump-law".into(),
        params: json!({"N": n, "p": p, "K": k_max, "mc_samples": mc_samples, "seed": seed,
                       "mc_state": kappa.to_string(), "sigmas": sigmas}),
        stats: json!({"exact_mismatches": exact_mismatches, "bad_row_sums": bad_row_sums,
                      "mc_violations": mc_violations, "stray_targets": stray,
                      "wall_ms": start.elapsed().as_millis() as u64}),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn sig(parts: &[i64]) -> Signature {
        Signature::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn ln_gamma_known_values() {
        // Γ(1) = Γ(2) = 1, Γ(5) = 24, Γ(1/2) = sqrt(pi)
        assert!(ln_gamma(1.0).abs() < 1e-12);
        assert!(ln_gamma(2.0).abs() < 1e-12);
        assert!((ln_gamma(5.0) - 24.0f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn chi_square_sf_known_values() {
        // dof 1: sf(x) = 2(1 - Phi(sqrt x)); sf(3.841) ~ 0.05
        assert!((chi_square_sf(3.841, 1) - 0.05).abs() < 1e-3);
        // dof 2 is Exp(1/2): sf(x) = exp(-x/2)
        for x in [0.5, 2.0, 10.0] {
            assert!((chi_square_sf(x, 2) - (-x / 2.0f64).exp()).abs() < 1e-10);
        }
        // dof 10 median near 9.342
        assert!((chi_square_sf(9.342, 10) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn gof_exact_counts_give_statistic_zero() {
        let exact: BTreeMap<u32, f64> = [(0, 0.5), (1, 0.25), (2, 0.25)].into();
        let observed: BTreeMap<u32, u64> = [(0, 500), (1, 250), (2, 250)].into();
        let r = chi_square_gof(&observed, &exact).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gof_detects_swapped_law() {
        // systematically wrong law at large n: p-value collapses
        let exact: BTreeMap<u32, f64> = [(0, 0.6), (1, 0.4)].into();
        let observed: BTreeMap<u32, u64> = [(0, 40_000), (1, 60_000)].into();
        let r = chi_square_gof(&observed, &exact).unwrap();
        assert!(r.p_value < 1e-6, "p = {}", r.p_value);
    }

    #[test]
    fn gof_pools_rare_cells() {
        let exact: BTreeMap<u32, f64> = [(0, 0.989), (1, 0.01), (2, 0.001)].into();
        let observed: BTreeMap<u32, u64> = [(0, 990), (1, 9), (2, 1)].into();
        let r = chi_square_gof(&observed, &exact).unwrap();
        // cells 1 and 2 pooled together: 2 cells, 1 dof
        assert_eq!(r.dof, 1);
    }

    #[test]
    fn gof_insufficient_samples() {
        let exact: BTreeMap<u32, f64> = [(0, 0.5), (1, 0.5)].into();
        let observed: BTreeMap<u32, u64> = [(0, 2), (1, 1)].into();
        assert!(matches!(
            chi_square_gof(&observed, &exact),
            Err(Error::InsufficientSamples(_))
        ));
    }

    #[test]
    fn two_sample_same_counts() {
        let a: BTreeMap<u32, u64> = [(0, 400), (1, 600)].into();
        let r = chi_square_two_sample(&a, &a.clone()).unwrap();
        assert!(r.statistic.abs() < 1e-12);
    }

    #[test]
    fn two_sample_detects_difference() {
        let a: BTreeMap<u32, u64> = [(0, 6000), (1, 4000)].into();
        let b: BTreeMap<u32, u64> = [(0, 4000), (1, 6000)].into();
        let r = chi_square_two_sample(&a, &b).unwrap();
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn tv_distance_extremes() {
        let a: BTreeMap<u32, f64> = [(0, 0.5), (1, 0.5)].into();
        assert!(tv_distance(&a, &a.clone()).abs() < 1e-15);
        let b: BTreeMap<u32, f64> = [(2, 1.0)].into();
        assert!((tv_distance(&a, &b) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lemma_identity_matrix_cases() {
        // A = I_2, κ=(2,0): ℓ~=1 so ℓ=1; SN(diag(p,1)) = (1,0) = κ - e_1
        let a = PAdicMatrix::identity(2, 2, 12);
        assert!(check_lemma_one_jump(&a, &sig(&[2, 0])).unwrap());
        // antidiagonal: unit at row 2, ℓ=2, SN = (2,-1)
        let anti = PAdicMatrix::from_integers(2, 12, &[vec![0, 1], vec![1, 0]]).unwrap();
        assert!(check_lemma_one_jump(&anti, &sig(&[2, 0])).unwrap());
    }

    #[test]
    fn lemma_property_smoke() {
        let r = verify_lemma(2, 2, 100, 5).unwrap();
        assert!(r.pass, "{:?}", r.stats);
    }

    #[test]
    fn generator_suite_passes_and_distortion_fails() {
        let ok = verify_generators(2, 2, 5, false).unwrap();
        assert!(ok.pass, "{:?}", ok.stats);
        let bad = verify_generators(2, 2, 5, true).unwrap();
        assert!(!bad.pass);
        assert!(bad.stats["bad_row_sums"].as_u64().unwrap() > 0);
    }

    #[test]
    fn one_jump_suite_smoke() {
        let r = verify_one_jump(2, 2, 4, 4000, 11).unwrap();
        assert!(r.pass, "{:?}", r.stats);
    }

    #[test]
    fn reflection_equivalence_smoke() {
        let t = BigRational::new(BigInt::from(1), BigInt::from(2));
        let r = verify_reflection_equivalence(2, &t, 1.5, 3000, 7, DEFAULT_ALPHA).unwrap();
        assert!(r.pass, "{:?}", r.stats);
    }

    #[test]
    fn theorem_multitime_smoke() {
        let r = verify_theorem_multitime(2, 2, &[0.75], 4000, 13, DEFAULT_ALPHA, 0.05).unwrap();
        assert!(r.pass, "{:?}", r.stats);
    }

    #[test]
    fn null_calibration() {
        // sampling from the exact law: rejection rate at alpha = 0.05 stays
        // within binomial noise over 200 repetitions, and p-values spread out
        let exact: BTreeMap<u32, f64> = [(0, 0.4), (1, 0.3), (2, 0.2), (3, 0.1)].into();
        let weights: Vec<BigRational> = [(2u8, 5u8), (3, 10), (1, 5), (1, 10)]
            .iter()
            .map(|&(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
            .collect();
        let reps = 200;
        let per_rep = 2000u64;
        let alpha = 0.05;
        let mut rejections = 0;
        let mut small_p = 0;
        for rep in 0..reps {
            let key = StreamKey::new(derive_seed(314, rep), 0, 0, 0);
            let mut hist: BTreeMap<u32, u64> = BTreeMap::new();
            for i in 0..per_rep {
                *hist.entry(key.pick_weighted(i, &weights) as u32).or_insert(0) += 1;
            }
            let r = chi_square_gof(&hist, &exact).unwrap();
            if r.p_value < alpha {
                rejections += 1;
            }
            if r.p_value < 0.5 {
                small_p += 1;
            }
        }
        // expected 10 +- 3*sqrt(200*0.05*0.95) ~ 10 +- 9.2
        assert!(rejections <= 20, "{rejections} rejections at alpha = {alpha}");
        // p-values are not degenerate at 1
        assert!((40..=160).contains(&small_p), "{small_p} of {reps} below 0.5");
    }

    #[test]
    fn report_schema() {
        let r = verify_generators(2, 2, 3, false).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["name", "params", "stats", "pass"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
