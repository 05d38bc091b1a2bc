//! Deterministic keyed sampling.
//!
//! Every random quantity in this crate is a pure function of a [`StreamKey`]
//! and a counter, with no shared mutable generator state. This gives two
//! guarantees the simulators rely on: samples may be drawn concurrently or
//! out of order without changing anything, and re-running at a higher p-adic
//! precision extends digit streams instead of reshuffling them.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::{Entry, PAdicMatrix, Signature};
use crate::scalar::{is_prime, PAdicScalar};

/// Hard cap on rejection retries before reporting a stuck sampler.
pub const RETRY_CAP: u64 = 1_000_000;

// Counter domains. Plain digit streams use counters 0,1,2,...; the
// resampled digit-0 draws of the two Haar samplers live in disjoint
// high ranges so they never alias the stream proper.
const HAAR_COLUMN_RETRY_BASE: u64 = 1 << 40;
const HAAR_REJECTION_RETRY_BASE: u64 = 1 << 41;
const F64_SALT: u64 = 1 << 32;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Independent sub-seed for batch run `stream` under a master seed, so the
/// per-jump stream keys of distinct runs never collide.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(mix64(seed ^ 0x6a09e667f3bcc909) ^ stream.wrapping_mul(0x9e3779b97f4a7c15))
}

/// Key of an independent digit stream: a seed plus a structural path
/// `(event_index, row, col)`. Output word `i` is a pure function of
/// `(seed, path, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub path: (u64, u64, u64),
}

impl StreamKey {
    pub fn new(seed: u64, event_index: u64, row: u64, col: u64) -> Self {
        StreamKey { seed, path: (event_index, row, col) }
    }

    fn base(&self) -> u64 {
        let mut h = mix64(self.seed ^ 0x9e3779b97f4a7c15);
        h = mix64(h ^ self.path.0.wrapping_mul(0xa0761d6478bd642f));
        h = mix64(h ^ self.path.1.wrapping_mul(0xe7037ed1a0b428db));
        h = mix64(h ^ self.path.2.wrapping_mul(0x8ebc6af09c88c6e3));
        h
    }

    /// Raw 64-bit output word at `(counter, salt)`.
    pub fn word(&self, counter: u64, salt: u64) -> u64 {
        let mut h = self.base();
        h = mix64(h ^ counter.wrapping_mul(0x9e3779b97f4a7c15));
        h = mix64(h ^ salt.wrapping_mul(0xd1b54a32d192ed03));
        h
    }

    /// Unbiased uniform digit in `{0, ..., p-1}` at stream position `counter`.
    pub fn digit(&self, p: u64, counter: u64) -> u32 {
        let zone = (u64::MAX / p) * p;
        let mut salt = 0u64;
        loop {
            let x = self.word(counter, salt);
            if x < zone {
                return (x % p) as u32;
            }
            salt += 1;
        }
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform_f64(&self, counter: u64) -> f64 {
        (self.word(counter, F64_SALT) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential waiting time by inverse CDF.
    pub fn exponential(&self, counter: u64, rate: f64) -> f64 {
        let u = self.uniform_f64(counter);
        -(1.0 - u).ln() / rate
    }

    /// Exact inverse-CDF draw over cumulative rational weights: returns the
    /// index of the first weight whose cumulative sum exceeds `x / 2^64`
    /// where `x` is the raw word at `counter`.
    pub fn pick_weighted(&self, counter: u64, weights: &[BigRational]) -> usize {
        let x = BigInt::from(self.word(counter, 0));
        let two64 = BigInt::from(1u8) << 64;
        let mut cum = BigRational::zero();
        for (i, w) in weights.iter().enumerate() {
            cum += w;
            // cum > x / 2^64  <=>  cum.numer * 2^64 > x * cum.denom
            if cum.numer() * &two64 > &x * cum.denom() {
                return i;
            }
        }
        weights.len() - 1 // weights sum to 1; only reachable by rounding at the top
    }
}

/// Haar-uniform element of `Z_p` with certified valuation and `n` unit
/// digits. The digit stream is scanned past leading zeros, so the returned
/// unit always carries full precision; the stream-extension contract makes
/// this reproducible across precisions.
pub fn uniform_zp(key: &StreamKey, p: u64, n: usize) -> PAdicScalar {
    let mut k = 0u64;
    loop {
        if key.digit(p, k) != 0 {
            break;
        }
        k += 1;
        assert!(k < 4096, "uniform Z_p draw produced 4096 leading zero digits");
    }
    let digits: Vec<u32> = (k..k + n as u64).map(|i| key.digit(p, i)).collect();
    PAdicScalar::new(p, k as i64, digits, n).expect("normalized draw is valid")
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

/// Row-reduced spanning set over `F_p` supporting membership tests.
struct FpSpan {
    p: u64,
    basis: Vec<(usize, Vec<u64>)>, // (pivot position, vector with pivot 1)
}

impl FpSpan {
    fn new(p: u64) -> Self {
        FpSpan { p, basis: Vec::new() }
    }

    fn reduce(&self, v: &mut [u64]) {
        for (pos, b) in &self.basis {
            let f = v[*pos];
            if f != 0 {
                for (x, y) in v.iter_mut().zip(b.iter()) {
                    *x = (*x + (self.p - f) * y) % self.p;
                }
            }
        }
    }

    /// True iff `v` was outside the span; inserts it in that case.
    fn try_insert(&mut self, mut v: Vec<u64>) -> bool {
        self.reduce(&mut v);
        match v.iter().position(|&x| x != 0) {
            None => false,
            Some(pos) => {
                let inv = pow_mod(v[pos], self.p - 2, self.p);
                for x in v.iter_mut() {
                    *x = *x * inv % self.p;
                }
                self.basis.push((pos, v));
                true
            }
        }
    }
}

/// Rank of a matrix over `F_p`.
pub fn rank_mod_p(p: u64, m: &[Vec<u32>]) -> usize {
    let mut span = FpSpan::new(p);
    let mut rank = 0;
    for row in m {
        if span.try_insert(row.iter().map(|&x| x as u64).collect()) {
            rank += 1;
        }
    }
    rank
}

fn entry_from_digit0(key: &StreamKey, p: u64, d0: u32, n: usize) -> PAdicScalar {
    if d0 != 0 {
        let mut digits = Vec::with_capacity(n);
        digits.push(d0);
        digits.extend((1..n as u64).map(|i| key.digit(p, i)));
        return PAdicScalar::new(p, 0, digits, n).expect("unit draw");
    }
    // digit 0 vanished: the valuation comes from the stream proper
    let mut k = 1u64;
    loop {
        if key.digit(p, k) != 0 {
            break;
        }
        k += 1;
        assert!(k < 4096, "matrix entry produced 4096 leading zero digits");
    }
    let digits: Vec<u32> = (k..k + n as u64).map(|i| key.digit(p, i)).collect();
    PAdicScalar::new(p, k as i64, digits, n).expect("normalized draw")
}

/// Haar measure on `GL_N(Z_p)` by the column-conditional construction:
/// columns are sampled right to left; each column's digit-0 vector is
/// resampled until it avoids the mod-p span of the previously sampled
/// columns, while all higher digits stay unconditioned uniform.
pub fn haar_gln_zp(
    seed: u64,
    event_index: u64,
    p: u64,
    n_dim: usize,
    precision: usize,
) -> Result<PAdicMatrix> {
    haar_gln_zp_with_attempts(seed, event_index, p, n_dim, precision).map(|(m, _)| m)
}

pub fn haar_gln_zp_with_attempts(
    seed: u64,
    event_index: u64,
    p: u64,
    n_dim: usize,
    precision: usize,
) -> Result<(PAdicMatrix, u64)> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let keys: Vec<Vec<StreamKey>> = (0..n_dim)
        .map(|r| (0..n_dim).map(|c| StreamKey::new(seed, event_index, r as u64, c as u64)).collect())
        .collect();
    let mut span = FpSpan::new(p);
    let mut digit0 = vec![vec![0u32; n_dim]; n_dim];
    let mut attempts = 0u64;
    for c in (0..n_dim).rev() {
        let mut retry = 0u64;
        loop {
            attempts += 1;
            let v: Vec<u32> =
                (0..n_dim).map(|r| keys[r][c].digit(p, HAAR_COLUMN_RETRY_BASE + retry)).collect();
            if span.try_insert(v.iter().map(|&x| x as u64).collect()) {
                for r in 0..n_dim {
                    digit0[r][c] = v[r];
                }
                break;
            }
            retry += 1;
            if retry >= RETRY_CAP {
                return Err(Error::SamplerStuck);
            }
        }
    }
    let mut entries = Vec::with_capacity(n_dim * n_dim);
    for r in 0..n_dim {
        for c in 0..n_dim {
            entries.push(Entry::Known(entry_from_digit0(&keys[r][c], p, digit0[r][c], precision)));
        }
    }
    Ok((PAdicMatrix::from_entries(p, precision, n_dim, n_dim, entries)?, attempts))
}

/// Whole-matrix rejection sampler for the Haar measure: all entries uniform,
/// reject unless invertible mod p. Independent oracle for [`haar_gln_zp`].
pub fn haar_rejection(
    seed: u64,
    event_index: u64,
    p: u64,
    n_dim: usize,
    precision: usize,
) -> Result<PAdicMatrix> {
    haar_rejection_with_attempts(seed, event_index, p, n_dim, precision).map(|(m, _)| m)
}

pub fn haar_rejection_with_attempts(
    seed: u64,
    event_index: u64,
    p: u64,
    n_dim: usize,
    precision: usize,
) -> Result<(PAdicMatrix, u64)> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let keys: Vec<Vec<StreamKey>> = (0..n_dim)
        .map(|r| (0..n_dim).map(|c| StreamKey::new(seed, event_index, r as u64, c as u64)).collect())
        .collect();
    let mut retry = 0u64;
    let digit0 = loop {
        let d0: Vec<Vec<u32>> = (0..n_dim)
            .map(|r| {
                (0..n_dim)
                    .map(|c| keys[r][c].digit(p, HAAR_REJECTION_RETRY_BASE + retry))
                    .collect()
            })
            .collect();
        if rank_mod_p(p, &d0) == n_dim {
            break d0;
        }
        retry += 1;
        if retry >= RETRY_CAP {
            return Err(Error::SamplerStuck);
        }
    };
    let mut entries = Vec::with_capacity(n_dim * n_dim);
    for r in 0..n_dim {
        for c in 0..n_dim {
            entries.push(Entry::Known(entry_from_digit0(&keys[r][c], p, digit0[r][c], precision)));
        }
    }
    Ok((PAdicMatrix::from_entries(p, precision, n_dim, n_dim, entries)?, retry + 1))
}

/// Parse an exact rational written as "a/b" or "a".
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = |_| Error::InvalidInput(format!("bad rational {s:?}"));
    match s.split_once('/') {
        None => {
            let n: BigInt = s.trim().parse().map_err(bad)?;
            Ok(BigRational::from_integer(n))
        }
        Some((a, b)) => {
            let n: BigInt = a.trim().parse().map_err(bad)?;
            let d: BigInt = b.trim().parse().map_err(bad)?;
            if d.is_zero() {
                return Err(Error::InvalidInput(format!("zero denominator in {s:?}")));
            }
            Ok(BigRational::new(n, d))
        }
    }
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Finite-support probability measure on `Sig_N` with exact rational weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureMeasure {
    support: Vec<(Signature, BigRational)>,
}

impl SignatureMeasure {
    pub fn new(mut support: Vec<(Signature, BigRational)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        let n = support[0].0.len();
        if support.iter().any(|(s, _)| s.len() != n) {
            return Err(Error::InvalidMeasure("mixed signature lengths".into()));
        }
        if support.iter().any(|(_, w)| !w.is_positive()) {
            return Err(Error::InvalidMeasure("weights must be positive".into()));
        }
        let total: BigRational = support.iter().map(|(_, w)| w.clone()).sum();
        if !total.is_one() {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        support.sort_by(|a, b| a.0.cmp(&b.0));
        if support.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidMeasure("duplicate signature in support".into()));
        }
        Ok(SignatureMeasure { support })
    }

    pub fn point_mass(sig: Signature) -> Self {
        SignatureMeasure { support: vec![(sig, BigRational::one())] }
    }

    pub fn support(&self) -> &[(Signature, BigRational)] {
        &self.support
    }

    pub fn signature_len(&self) -> usize {
        self.support[0].0.len()
    }

    /// Inverse-CDF draw using one raw word from the keyed stream.
    pub fn sample(&self, key: &StreamKey, counter: u64) -> &Signature {
        let weights: Vec<BigRational> = self.support.iter().map(|(_, w)| w.clone()).collect();
        let i = key.pick_weighted(counter, &weights);
        &self.support[i].0
    }
}

#[derive(Serialize, Deserialize)]
struct MeasureAtomJson {
    sig: Vec<i64>,
    w: String,
}

impl Serialize for SignatureMeasure {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let atoms: Vec<MeasureAtomJson> = self
            .support
            .iter()
            .map(|(s, w)| MeasureAtomJson { sig: s.parts().to_vec(), w: format_rational(w) })
            .collect();
        atoms.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for SignatureMeasure {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let atoms = Vec::<MeasureAtomJson>::deserialize(de)?;
        let support: std::result::Result<Vec<_>, D::Error> = atoms
            .into_iter()
            .map(|a| {
                let sig = Signature::new(a.sig).map_err(|e| D::Error::custom(e.to_string()))?;
                let w = parse_rational(&a.w).map_err(|e| D::Error::custom(e.to_string()))?;
                Ok((sig, w))
            })
            .collect();
        SignatureMeasure::new(support?).map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// Expected number of rejection-sampler retries is `prod (1 - p^-i)^-1`;
/// exposed for tests as the acceptance probability `|GL_N(F_p)| / p^(N^2)`.
pub fn gln_fp_acceptance(p: u64, n_dim: usize) -> f64 {
    (1..=n_dim).map(|i| 1.0 - (p as f64).powi(-(i as i32))).product()
}
