//! Stochastic simulators: the reflected multi-clock walk, the matrix-product
//! Poisson walk, and the Gillespie chain driven directly by generator rows.
//!
//! All randomness is drawn from keyed streams addressed by jump index, so a
//! run is a pure function of `(seed, parameters)` and survives precision
//! escalation unchanged.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::matrix::{
    left_diag_multiply, right_diag_multiply, singular_numbers, PAdicMatrix, Signature,
};
use crate::sampling::{haar_gln_zp, SignatureMeasure, StreamKey};

use super::generators::{b_row, b_total_rate};
use super::Trajectory;

// Stream-key slots within one jump: event_index = 4*jump + slot.
const SLOT_TIME: u64 = 0;
const SLOT_NU: u64 = 1;
const SLOT_U: u64 = 2;
const SLOT_V: u64 = 3;

/// Times precision is doubled before a run is abandoned.
const MAX_ESCALATIONS: u32 = 12;

/// One ring of clock `i` (1-based) of the reflected walk: `κ + e_i` if that
/// stays weakly decreasing, else the increment reflects to `κ + e_(i-d)` for
/// the smallest `d >= 0` keeping the result decreasing, equivalently to the
/// top of the tied block of `i`.
pub fn reflected_step(kappa: &Signature, clock: usize) -> Result<Signature> {
    if clock == 0 || clock > kappa.len() {
        return Err(Error::InvalidInput(format!(
            "clock {clock} out of range 1..={}",
            kappa.len()
        )));
    }
    let j = kappa.block_top(clock - 1);
    Ok(kappa.try_add_box(j).expect("block top increment stays decreasing"))
}

/// Literal reflection scan: smallest `d >= 0` with `κ + e_(i-d)` decreasing.
/// Oracle for the closed form in [`reflected_step`].
pub fn reflected_step_by_scan(kappa: &Signature, clock: usize) -> Result<Signature> {
    if clock == 0 || clock > kappa.len() {
        return Err(Error::InvalidInput(format!(
            "clock {clock} out of range 1..={}",
            kappa.len()
        )));
    }
    for i in (0..clock).rev() {
        if let Some(s) = kappa.try_add_box(i) {
            return Ok(s);
        }
    }
    unreachable!("d = i - 1 always succeeds: the first coordinate can grow")
}

/// Reflected walk from `(0[N])` up to `max_time`: competing exponential
/// clocks of rates `t^1, ..., t^N`, ringing clock applied by
/// [`reflected_step`]. Holding times use the total rate; the ringing clock
/// is chosen with exact rational weights.
pub fn reflected_walk_simulate(
    n: usize,
    t: &BigRational,
    max_time: f64,
    seed: u64,
) -> Result<Trajectory> {
    let total = b_total_rate(n, t);
    let total_f = total.to_f64().ok_or_else(|| Error::InvalidInput("rate overflow".into()))?;
    let weights: Vec<BigRational> =
        (1..=n).map(|i| super::rational_pow(t, i) / &total).collect();
    let mut tr = Trajectory::new(Signature::zeros(n));
    let mut time = 0.0;
    let mut jump = 0u64;
    loop {
        let key = StreamKey::new(seed, jump, 0, 0);
        time += key.exponential(SLOT_TIME, total_f);
        if time > max_time {
            return Ok(tr);
        }
        let clock = key.pick_weighted(SLOT_NU, &weights) + 1;
        let next = reflected_step(tr.state_at(time), clock)?;
        tr.push(time, next)?;
        jump += 1;
    }
}

/// Gillespie simulation driven directly by generator-B rows: holding time
/// from the row's total rate, next state from the normalized off-diagonal
/// row. Independent oracle for the clock dynamics.
pub fn gillespie_reflected(
    n: usize,
    t: &BigRational,
    max_time: f64,
    seed: u64,
) -> Result<Trajectory> {
    let mut tr = Trajectory::new(Signature::zeros(n));
    let mut time = 0.0;
    let mut jump = 0u64;
    loop {
        let state = tr.state_at(time).clone();
        let row = b_row(&state, t);
        let total: BigRational = row.iter().map(|(_, w)| w.clone()).sum();
        let total_f = total.to_f64().ok_or_else(|| Error::InvalidInput("rate overflow".into()))?;
        let key = StreamKey::new(seed, jump, 0, 0);
        time += key.exponential(SLOT_TIME, total_f);
        if time > max_time {
            return Ok(tr);
        }
        let weights: Vec<BigRational> = row.iter().map(|(_, w)| w / &total).collect();
        let pick = key.pick_weighted(SLOT_NU, &weights);
        tr.push(time, row[pick].0.clone())?;
        jump += 1;
    }
}

/// Matrix-product walk: at the jumps of a rate-`c` Poisson process the state
/// matrix is left-multiplied by `U diag(p^ν) V` with fresh Haar `U`, `V` and
/// `ν ~ measure`. Returns the trajectory of singular numbers up to
/// `max_time` together with the final matrix.
///
/// On `PrecisionExhausted` the run is retried at doubled precision; keyed
/// streams make the retry replay the identical jump sequence.
pub fn matrix_walk_simulate(
    n: usize,
    p: u64,
    measure: &SignatureMeasure,
    c: f64,
    max_time: f64,
    seed: u64,
    precision: usize,
) -> Result<(Trajectory, PAdicMatrix)> {
    if measure.signature_len() != n {
        return Err(Error::InvalidMeasure(format!(
            "measure on length-{} signatures, walk dimension {n}",
            measure.signature_len()
        )));
    }
    let mut prec = precision.max(4);
    let mut escalations = 0;
    loop {
        match matrix_walk_at_precision(n, p, measure, c, max_time, seed, prec) {
            Err(Error::PrecisionExhausted(_)) if escalations < MAX_ESCALATIONS => {
                prec *= 2;
                escalations += 1;
            }
            other => return other,
        }
    }
}

fn matrix_walk_at_precision(
    n: usize,
    p: u64,
    measure: &SignatureMeasure,
    c: f64,
    max_time: f64,
    seed: u64,
    precision: usize,
) -> Result<(Trajectory, PAdicMatrix)> {
    let mut x = PAdicMatrix::identity(p, n, precision);
    let mut tr = Trajectory::new(Signature::zeros(n));
    let mut time = 0.0;
    let mut jump = 0u64;
    loop {
        let key = StreamKey::new(seed, 4 * jump + SLOT_TIME, 0, 0);
        time += key.exponential(0, c);
        if time > max_time {
            return Ok((tr, x));
        }
        let nu_key = StreamKey::new(seed, 4 * jump + SLOT_NU, 0, 0);
        let nu = measure.sample(&nu_key, 0).clone();
        let u = haar_gln_zp(seed, 4 * jump + SLOT_U, p, n, precision)?;
        let v = haar_gln_zp(seed, 4 * jump + SLOT_V, p, n, precision)?;
        // X <- U diag(p^nu) V X
        x = u.matmul(&left_diag_multiply(&nu, &v.matmul(&x)?)?)?;
        let sn = singular_numbers(&x)?;
        if sn != *tr.state_at(time) {
            tr.push(time, sn)?;
        }
        jump += 1;
    }
}

/// Canonical matrix walk: one-box measure `δ_(1,0[N-1])`, Poisson rate 1.
pub fn canonical_process(
    n: usize,
    p: u64,
    max_time: f64,
    seed: u64,
    precision: usize,
) -> Result<Trajectory> {
    let measure = SignatureMeasure::point_mass(Signature::one_box(n));
    matrix_walk_simulate(n, p, &measure, 1.0, max_time, seed, precision).map(|(tr, _)| tr)
}

/// Monte-Carlo one-jump law: empirical counts of
/// `SN(diag(p,1[N-1]) U diag(p^κ))` over `samples` Haar draws of `U`.
pub fn one_jump_mc(
    kappa: &Signature,
    p: u64,
    samples: u64,
    seed: u64,
) -> Result<BTreeMap<Signature, u64>> {
    let n = kappa.len();
    let span = kappa.parts().iter().map(|v| v.unsigned_abs() as usize).max().unwrap_or(0);
    let base_prec = span + 8;
    let mut out: BTreeMap<Signature, u64> = BTreeMap::new();
    for s in 0..samples {
        let mut prec = base_prec;
        let sn = loop {
            let u = haar_gln_zp(seed, s, p, n, prec)?;
            let m = left_diag_multiply(&Signature::one_box(n), &right_diag_multiply(&u, kappa)?)?;
            match singular_numbers(&m) {
                Ok(sn) => break sn,
                Err(Error::PrecisionExhausted(_)) if prec < base_prec << MAX_ESCALATIONS => {
                    prec *= 2;
                }
                Err(e) => return Err(e),
            }
        };
        *out.entry(sn).or_insert(0) += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn sig(parts: &[i64]) -> Signature {
        Signature::new(parts.to_vec()).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn reflected_step_examples() {
        let k = sig(&[6, 3, 3, 2, 0, 0]);
        // clock 2 hits the top of its singleton... no: κ_2 = 3 ties κ_3
        assert_eq!(reflected_step(&k, 2).unwrap(), sig(&[6, 4, 3, 2, 0, 0]));
        // clock 3 reflects into the same slot
        assert_eq!(reflected_step(&k, 3).unwrap(), sig(&[6, 4, 3, 2, 0, 0]));
        // reflection off the wall
        assert_eq!(reflected_step(&Signature::zeros(2), 2).unwrap(), sig(&[1, 0]));
        assert!(reflected_step(&k, 0).is_err());
        assert!(reflected_step(&k, 7).is_err());
    }

    #[test]
    fn reflected_step_matches_scan() {
        for kappa in super::super::generators::enumerate_states(4, 6) {
            for clock in 1..=4 {
                assert_eq!(
                    reflected_step(&kappa, clock).unwrap(),
                    reflected_step_by_scan(&kappa, clock).unwrap(),
                    "at {kappa}, clock {clock}"
                );
            }
        }
    }

    #[test]
    fn reflected_walk_first_jump_forced() {
        // from (0,0) both clocks reflect to coordinate 1
        for seed in 0..30 {
            let tr = reflected_walk_simulate(2, &rat(1, 2), 50.0, seed).unwrap();
            assert!(tr.jump_count() > 0);
            assert_eq!(tr.events()[1].1, sig(&[1, 0]));
            // one box per jump along the whole path
            for (i, (_, s)) in tr.events().iter().enumerate() {
                assert_eq!(s.weight() as usize, i);
            }
        }
    }

    #[test]
    fn reflected_walk_n1_poisson_mean() {
        // N=1: Poisson of rate t; mean jump count over [0, T] is t*T
        let t = rat(1, 2);
        let runs = 2000;
        let total: usize =
            (0..runs).map(|s| reflected_walk_simulate(1, &t, 8.0, s).unwrap().jump_count()).sum();
        let mean = total as f64 / runs as f64;
        let sigma = (4.0f64 / runs as f64).sqrt(); // var = t*T = 4
        assert!((mean - 4.0).abs() < 4.0 * sigma, "mean {mean}");
    }

    #[test]
    fn matrix_walk_trivial_measure() {
        // unit factors only: SN stays (0,0)
        let m = SignatureMeasure::point_mass(Signature::zeros(2));
        let (tr, _) = matrix_walk_simulate(2, 2, &m, 1.0, 5.0, 3, 8).unwrap();
        assert_eq!(tr.jump_count(), 0);
        assert_eq!(tr.state_at(5.0), &Signature::zeros(2));
    }

    #[test]
    fn matrix_walk_one_box_counts_jumps() {
        for seed in 0..10 {
            let tr = canonical_process(2, 2, 4.0, seed, 12).unwrap();
            for (i, (_, s)) in tr.events().iter().enumerate() {
                assert_eq!(s.weight() as usize, i, "weight equals jump count");
            }
        }
    }

    #[test]
    fn matrix_walk_deterministic_across_precision() {
        let m = SignatureMeasure::point_mass(Signature::one_box(2));
        let (a, _) = matrix_walk_simulate(2, 2, &m, 1.0, 3.0, 9, 10).unwrap();
        let (b, _) = matrix_walk_simulate(2, 2, &m, 1.0, 3.0, 9, 40).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn one_jump_mc_trivial() {
        let m = one_jump_mc(&Signature::zeros(2), 2, 200, 4).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[&sig(&[1, 0])], 200);
    }

    #[test]
    fn gillespie_matches_clock_walk_in_rate() {
        // same total jump rate: mean jump counts agree within noise
        let t = rat(1, 2);
        let runs = 1000;
        let a: usize =
            (0..runs).map(|s| reflected_walk_simulate(2, &t, 6.0, s).unwrap().jump_count()).sum();
        let b: usize =
            (0..runs).map(|s| gillespie_reflected(2, &t, 6.0, 10_000 + s).unwrap().jump_count()).sum();
        // both Poisson-ish with mean 4.5 per run
        let diff = (a as f64 - b as f64) / runs as f64;
        let sigma = (2.0 * 4.5 / runs as f64).sqrt();
        assert!(diff.abs() < 4.0 * sigma, "diff {diff}");
    }
}
