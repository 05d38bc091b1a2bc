//! The two signature-valued jump processes and their exact generators.
//!
//! `walks` holds the stochastic simulators, `generators` the exact rational
//! CTMC generators with their brute-force oracle, `uniformize` the exact
//! finite-time laws on a truncated state space.

pub mod generators;
pub mod uniformize;
pub mod walks;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::Signature;

pub use generators::{generator_a, generator_b, one_jump_oracle, GeneratorMatrix};
pub use uniformize::{finite_time_distribution, multi_time_distribution};
pub use walks::{
    canonical_process, matrix_walk_simulate, one_jump_mc, reflected_step, reflected_walk_simulate,
};

/// Piecewise-constant signature path: the state at time 0 followed by the
/// jump events, times strictly increasing, consecutive states distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    n: usize,
    events: Vec<(f64, Signature)>,
}

impl Trajectory {
    pub fn new(initial: Signature) -> Self {
        let n = initial.len();
        Trajectory { n, events: vec![(0.0, initial)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn events(&self) -> &[(f64, Signature)] {
        &self.events
    }

    /// Number of jumps, excluding the initial state.
    pub fn jump_count(&self) -> usize {
        self.events.len() - 1
    }

    pub fn push(&mut self, time: f64, state: Signature) -> Result<()> {
        let (last_t, last_s) = self.events.last().expect("trajectory is never empty");
        if time <= *last_t {
            return Err(Error::InvalidInput(format!(
                "event time {time} not after previous {last_t}"
            )));
        }
        if state.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "state length {} in length-{} trajectory",
                state.len(),
                self.n
            )));
        }
        if state == *last_s {
            return Err(Error::InvalidInput("consecutive trajectory states equal".into()));
        }
        self.events.push((time, state));
        Ok(())
    }

    /// State of the cadlag path at time `t >= 0`.
    pub fn state_at(&self, t: f64) -> &Signature {
        let i = self.events.partition_point(|(s, _)| *s <= t);
        &self.events[i - 1].1
    }
}

#[derive(Serialize, Deserialize)]
struct EventJson {
    t: f64,
    sig: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryJson {
    #[serde(rename = "N")]
    n: usize,
    events: Vec<EventJson>,
}

impl Serialize for Trajectory {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        TrajectoryJson {
            n: self.n,
            events: self
                .events
                .iter()
                .map(|(t, s)| EventJson { t: *t, sig: s.parts().to_vec() })
                .collect(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Trajectory {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let raw = TrajectoryJson::deserialize(de)?;
        let custom = |e: Error| D::Error::custom(e.to_string());
        let mut it = raw.events.into_iter();
        let first = it.next().ok_or_else(|| D::Error::custom("trajectory has no events"))?;
        if first.t != 0.0 {
            return Err(D::Error::custom("first trajectory event must be at time 0"));
        }
        let initial = Signature::new(first.sig).map_err(custom)?;
        if initial.len() != raw.n {
            return Err(D::Error::custom("initial state length differs from N"));
        }
        let mut tr = Trajectory::new(initial);
        for ev in it {
            let sig = Signature::new(ev.sig).map_err(custom)?;
            tr.push(ev.t, sig).map_err(custom)?;
        }
        Ok(tr)
    }
}

/// `t^k` for `k >= 0`.
pub fn rational_pow(t: &BigRational, k: usize) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..k {
        acc *= t;
    }
    acc
}

/// Exact rate parameters of the two processes.
#[derive(Debug, Clone, PartialEq)]
pub struct RateParams {
    pub t: BigRational,
    pub n: usize,
    /// Poisson rate of the matrix walk.
    pub c: BigRational,
}

impl RateParams {
    pub fn new(t: BigRational, n: usize, c: BigRational) -> Result<Self> {
        if t <= BigRational::from_integer(BigInt::from(0)) || t >= BigRational::one() {
            return Err(Error::InvalidInput(format!("t = {t} not in (0,1)")));
        }
        if n == 0 {
            return Err(Error::InvalidInput("N must be positive".into()));
        }
        Ok(RateParams { t, n, c })
    }

    pub fn for_prime(p: u64, n: usize) -> Result<Self> {
        let t = BigRational::new(BigInt::from(1), BigInt::from(p));
        RateParams::new(t, n, BigRational::one())
    }

    /// Time-change constant `c' = (1/t)(1-t)/(1-t^N)` between the matrix
    /// walk at rate 1 and the reflected walk.
    pub fn time_scale(&self) -> BigRational {
        let one = BigRational::one();
        let tn = rational_pow(&self.t, self.n);
        (&one - &self.t) / (&self.t * (one.clone() - tn))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(parts: &[i64]) -> Signature {
        Signature::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn trajectory_invariants() {
        let mut tr = Trajectory::new(Signature::zeros(2));
        tr.push(0.5, sig(&[1, 0])).unwrap();
        assert!(tr.push(0.5, sig(&[2, 0])).is_err());
        assert!(tr.push(0.7, sig(&[1, 0])).is_err());
        tr.push(0.7, sig(&[1, 1])).unwrap();
        assert_eq!(tr.jump_count(), 2);
        assert_eq!(tr.state_at(0.0), &Signature::zeros(2));
        assert_eq!(tr.state_at(0.6), &sig(&[1, 0]));
        assert_eq!(tr.state_at(100.0), &sig(&[1, 1]));
    }

    #[test]
    fn trajectory_json_round_trip() {
        let mut tr = Trajectory::new(Signature::zeros(2));
        tr.push(0.25, sig(&[1, 0])).unwrap();
        let s = serde_json::to_string(&tr).unwrap();
        assert!(s.contains("\"N\":2"));
        let back: Trajectory = serde_json::from_str(&s).unwrap();
        assert_eq!(tr, back);
    }

    #[test]
    fn time_scale_constant() {
        // t = 1/2, N = 2: c' = (1/t)(1-t)/(1-t^2) = 2 * (1/2)/(3/4) = 4/3
        let rp = RateParams::for_prime(2, 2).unwrap();
        assert_eq!(
            rp.time_scale(),
            BigRational::new(BigInt::from(4), BigInt::from(3))
        );
        // N = 1: c' = 1/t
        let rp = RateParams::for_prime(3, 1).unwrap();
        assert_eq!(rp.time_scale(), BigRational::from_integer(BigInt::from(3)));
    }

    #[test]
    fn rate_params_validation() {
        assert!(RateParams::new(BigRational::one(), 2, BigRational::one()).is_err());
        assert!(RateParams::new(
            BigRational::new(BigInt::from(1), BigInt::from(2)),
            0,
            BigRational::one()
        )
        .is_err());
    }
}
