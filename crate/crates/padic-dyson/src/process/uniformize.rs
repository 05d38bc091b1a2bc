//! Exact finite-time laws of a truncated generator by uniformization:
//! `P(τ) = Σ_k Poisson(Λτ; k) J^k` with `J = I + (rate_scale/Λ) G`. Mass
//! leaking past the weight truncation is collected in an absorbing boundary
//! cell, so the truncation error is reported rather than silently dropped.

use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::matrix::Signature;

use super::generators::GeneratorMatrix;

/// Law of the chain at time `tau`: probabilities indexed like `g.states()`,
/// plus the boundary mass. `tail_eps` bounds both the discarded Poisson tail
/// and the tolerated boundary mass.
pub fn finite_time_distribution(
    g: &GeneratorMatrix,
    rate_scale: &BigRational,
    tau: f64,
    init: &Signature,
    tail_eps: f64,
) -> Result<(Vec<f64>, f64)> {
    let init_idx = g
        .state_index(init)
        .ok_or_else(|| Error::InvalidInput(format!("initial state {init} outside truncation")))?;
    let s = g.states().len();
    let mut v = vec![0.0; s + 1]; // last cell is the absorbing boundary
    v[init_idx] = 1.0;
    let kernel = jump_kernel(g, rate_scale)?;
    let lam_tau = kernel.lambda * tau;
    // truncate the series an order below the boundary tolerance so the
    // parked Poisson tail cannot dominate the reported truncation error
    let series_eps = (tail_eps / 10.0).max(1e-15);
    let mut weight = (-lam_tau).exp();
    let mut covered = weight;
    let mut out = v.iter().map(|x| x * weight).collect::<Vec<f64>>();
    let mut k = 0u64;
    while 1.0 - covered > series_eps {
        k += 1;
        if k > 100_000 {
            return Err(Error::InvalidInput(format!(
                "uniformization did not converge at rate*time = {lam_tau}"
            )));
        }
        v = kernel.apply(&v);
        weight *= lam_tau / k as f64;
        covered += weight;
        for (o, x) in out.iter_mut().zip(&v) {
            *o += weight * x;
        }
    }
    let boundary = out[s] + (1.0 - covered);
    if boundary > tail_eps {
        return Err(Error::TruncationTooSmall(boundary));
    }
    out.truncate(s);
    Ok((out, boundary))
}

/// Joint law over the states at `times`: map from tuples of state indices
/// (into `g.states()`) to probability, plus total boundary mass. Uses the
/// Markov property: the joint factors through one-step transition matrices
/// over the time increments.
pub fn multi_time_distribution(
    g: &GeneratorMatrix,
    rate_scale: &BigRational,
    times: &[f64],
    init: &Signature,
    tail_eps: f64,
) -> Result<(Vec<(Vec<usize>, f64)>, f64)> {
    if times.is_empty() || times.windows(2).any(|w| w[0] >= w[1]) || times[0] <= 0.0 {
        return Err(Error::InvalidInput("times must be positive and strictly increasing".into()));
    }
    let s = g.states().len();
    let init_idx = g
        .state_index(init)
        .ok_or_else(|| Error::InvalidInput(format!("initial state {init} outside truncation")))?;
    // transition matrix over each increment, boundary-absorbing
    let mut steps: Vec<Vec<Vec<f64>>> = Vec::with_capacity(times.len());
    let mut prev = 0.0;
    for &t in times {
        steps.push(transition_matrix(g, rate_scale, t - prev, tail_eps)?);
        prev = t;
    }
    let mut tuples: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), 1.0)];
    let mut current: Vec<usize> = vec![init_idx];
    let mut boundary = 0.0;
    for step in &steps {
        let mut next = Vec::new();
        for ((tuple, mass), &from) in tuples.iter().zip(&current) {
            let row = &step[from];
            boundary += mass * row[s];
            for (to, &p) in row.iter().take(s).enumerate() {
                if mass * p > 0.0 {
                    let mut t2 = tuple.clone();
                    t2.push(to);
                    next.push((t2, mass * p));
                }
            }
        }
        current = next.iter().map(|(t, _)| *t.last().unwrap()).collect();
        tuples = next;
    }
    if boundary > tail_eps {
        return Err(Error::TruncationTooSmall(boundary));
    }
    Ok((tuples, boundary))
}

struct JumpKernel {
    lambda: f64,
    /// (s+1) x (s+1) row-stochastic matrix, last index absorbing boundary.
    rows: Vec<Vec<f64>>,
}

impl JumpKernel {
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let mut out = vec![0.0; n];
        for (i, &mass) in v.iter().enumerate() {
            if mass != 0.0 {
                for (j, &p) in self.rows[i].iter().enumerate() {
                    out[j] += mass * p;
                }
            }
        }
        out
    }
}

fn jump_kernel(g: &GeneratorMatrix, rate_scale: &BigRational) -> Result<JumpKernel> {
    let to_f = |r: &BigRational| {
        r.to_f64().ok_or_else(|| Error::InvalidInput("rate does not fit in f64".into()))
    };
    let s = g.states().len();
    let scale = to_f(rate_scale)?;
    if scale <= 0.0 {
        return Err(Error::InvalidInput("rate_scale must be positive".into()));
    }
    let lambda = (0..s)
        .map(|i| -g.diag(i).clone())
        .map(|d| to_f(&d).map(|x| x * scale))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    if lambda <= 0.0 {
        return Err(Error::InvalidInput("generator has no transitions".into()));
    }
    let mut rows = Vec::with_capacity(s + 1);
    for i in 0..s {
        let mut row = vec![0.0; s + 1];
        row[i] = 1.0 + to_f(g.diag(i))? * scale / lambda;
        for (j, w) in g.off_row(i) {
            row[*j] = to_f(w)? * scale / lambda;
        }
        row[s] = to_f(g.boundary_rate(i))? * scale / lambda;
        rows.push(row);
    }
    let mut absorbing = vec![0.0; s + 1];
    absorbing[s] = 1.0;
    rows.push(absorbing);
    Ok(JumpKernel { lambda, rows })
}

/// Full time-`dt` transition matrix (boundary-absorbing) by uniformization.
fn transition_matrix(
    g: &GeneratorMatrix,
    rate_scale: &BigRational,
    dt: f64,
    tail_eps: f64,
) -> Result<Vec<Vec<f64>>> {
    let s = g.states().len();
    let kernel = jump_kernel(g, rate_scale)?;
    let lam_tau = kernel.lambda * dt;
    let series_eps = (tail_eps / 10.0).max(1e-15);
    let mut weight = (-lam_tau).exp();
    let mut covered = weight;
    let mut power: Vec<Vec<f64>> = (0..=s)
        .map(|i| {
            let mut e = vec![0.0; s + 1];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut out: Vec<Vec<f64>> =
        power.iter().map(|row| row.iter().map(|x| x * weight).collect()).collect();
    let mut k = 0u64;
    while 1.0 - covered > series_eps {
        k += 1;
        if k > 100_000 {
            return Err(Error::InvalidInput(format!(
                "uniformization did not converge at rate*time = {lam_tau}"
            )));
        }
        for row in power.iter_mut() {
            *row = kernel.apply(row);
        }
        weight *= lam_tau / k as f64;
        covered += weight;
        for (o, r) in out.iter_mut().zip(&power) {
            for (a, b) in o.iter_mut().zip(r) {
                *a += weight * b;
            }
        }
    }
    // park the uncovered Poisson tail in the boundary cell
    for row in out.iter_mut() {
        row[s] += 1.0 - covered;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::generators::{generator_a, generator_b};
    use crate::process::RateParams;
    use num_bigint::BigInt;
    use num_traits::One;

    fn sig(parts: &[i64]) -> Signature {
        Signature::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn time_zero_is_point_mass() {
        let g = generator_a(2, 2, 6);
        let init = Signature::zeros(2);
        let (law, boundary) =
            finite_time_distribution(&g, &BigRational::one(), 1e-14, &init, 1e-10).unwrap();
        let idx = g.state_index(&init).unwrap();
        assert!((law[idx] - 1.0).abs() < 1e-9);
        assert!(boundary < 1e-10);
    }

    #[test]
    fn n1_is_poisson_law() {
        // N=1, generator A: pure birth at rate 1; law at tau is Poisson(tau)
        let g = generator_a(1, 2, 30);
        let tau = 2.0;
        let (law, _) =
            finite_time_distribution(&g, &BigRational::one(), tau, &sig(&[0]), 1e-12).unwrap();
        let mut expect = (-tau).exp();
        for k in 0..10 {
            let idx = g.state_index(&sig(&[k])).unwrap();
            assert!((law[idx] - expect).abs() < 1e-9, "k={k}: {} vs {expect}", law[idx]);
            expect *= tau / (k + 1) as f64;
        }
    }

    #[test]
    fn mass_conservation() {
        let g = generator_a(3, 2, 12);
        let (law, boundary) =
            finite_time_distribution(&g, &BigRational::one(), 1.5, &Signature::zeros(3), 1e-8)
                .unwrap();
        let total: f64 = law.iter().sum::<f64>() + boundary;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncation_error_reported() {
        // K=2 cannot hold Poisson(4) mass
        let g = generator_a(2, 2, 2);
        let r = finite_time_distribution(&g, &BigRational::one(), 4.0, &Signature::zeros(2), 1e-10);
        assert!(matches!(r, Err(Error::TruncationTooSmall(_))));
    }

    #[test]
    fn multi_time_marginal_consistency() {
        let g = generator_a(2, 2, 17);
        let (joint, _) = multi_time_distribution(
            &g,
            &BigRational::one(),
            &[0.5, 1.0],
            &Signature::zeros(2),
            1e-12,
        )
        .unwrap();
        let (single, _) =
            finite_time_distribution(&g, &BigRational::one(), 0.5, &Signature::zeros(2), 1e-12)
                .unwrap();
        let mut marginal = vec![0.0; g.states().len()];
        for (tuple, w) in &joint {
            marginal[tuple[0]] += w;
        }
        for (a, b) in marginal.iter().zip(&single) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn joint_laws_of_a_and_scaled_b_agree() {
        // A at rate 1 equals B at rate c' in law
        let rp = RateParams::for_prime(2, 2).unwrap();
        let ga = generator_a(2, 2, 14);
        let gb = generator_b(2, &rp.t, 14);
        let times = [0.5, 1.0];
        let init = Signature::zeros(2);
        let (ja, _) =
            multi_time_distribution(&ga, &BigRational::one(), &times, &init, 1e-8).unwrap();
        let (jb, _) =
            multi_time_distribution(&gb, &rp.time_scale(), &times, &init, 1e-8).unwrap();
        let to_map = |j: &[(Vec<usize>, f64)]| -> std::collections::BTreeMap<Vec<usize>, f64> {
            j.iter().cloned().collect()
        };
        let (ma, mb) = (to_map(&ja), to_map(&jb));
        for (k, va) in &ma {
            let vb = mb.get(k).copied().unwrap_or(0.0);
            assert!((va - vb).abs() < 1e-10, "tuple {k:?}: {va} vs {vb}");
        }
    }

    #[test]
    fn invalid_times_rejected() {
        let g = generator_a(2, 2, 4);
        let r = multi_time_distribution(
            &g,
            &BigRational::one(),
            &[1.0, 0.5],
            &Signature::zeros(2),
            1e-8,
        );
        assert!(r.is_err());
        let r = finite_time_distribution(
            &g,
            &BigRational::new(BigInt::from(-1), BigInt::from(1)),
            1.0,
            &Signature::zeros(2),
            1e-8,
        );
        assert!(r.is_err());
    }
}
