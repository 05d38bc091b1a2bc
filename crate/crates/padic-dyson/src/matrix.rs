//! Matrices over `Q_p` and their singular numbers.
//!
//! [`singular_numbers`] runs valuation-pivoted elimination (Smith normal
//! form); [`singular_numbers_minor_oracle`] recovers the same signature from
//! minimal minor-determinant valuations and serves as an independent check.
//! Both refuse to guess: a pivot or determinant whose valuation cannot be
//! certified at the current precision raises `PrecisionExhausted`.

use serde::de::Error as DeError;
use serde::ser::Error as SerError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{PAdicScalar, Sum, ZeroAtPrecision};

/// Weakly decreasing integer tuple: an element of `Sig_N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature(Vec<i64>);

impl Signature {
    pub fn new(parts: Vec<i64>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidSignature("signature must be nonempty".into()));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidSignature(format!("not weakly decreasing: {parts:?}")));
        }
        Ok(Signature(parts))
    }

    pub fn zeros(n: usize) -> Self {
        Signature(vec![0; n])
    }

    /// `(1, 0[n-1])`: one box in the top row.
    pub fn one_box(n: usize) -> Self {
        let mut parts = vec![0; n];
        parts[0] = 1;
        Signature(parts)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parts(&self) -> &[i64] {
        &self.0
    }

    pub fn part(&self, i: usize) -> i64 {
        self.0[i]
    }

    /// `|λ| = Σ λ_i`.
    pub fn weight(&self) -> i64 {
        self.0.iter().sum()
    }

    /// Multiplicity `m_x(κ)`: number of parts equal to `x`.
    pub fn multiplicity(&self, x: i64) -> usize {
        self.0.iter().filter(|&&v| v == x).count()
    }

    /// Smallest index `j <= i` with `κ_j = κ_i` (0-based): the top of the
    /// tied block containing position `i`.
    pub fn block_top(&self, i: usize) -> usize {
        let v = self.0[i];
        (0..=i).find(|&j| self.0[j] == v).unwrap()
    }

    /// Indices that are tops of tied blocks (0-based).
    pub fn block_tops(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| i == 0 || self.0[i - 1] != self.0[i]).collect()
    }

    /// `κ + e_i` if still weakly decreasing (0-based index).
    pub fn try_add_box(&self, i: usize) -> Option<Signature> {
        let mut parts = self.0.clone();
        parts[i] += 1;
        Signature::new(parts).ok()
    }

    pub fn reversed_negated(&self) -> Signature {
        Signature(self.0.iter().rev().map(|&v| -v).collect())
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", s.join(","))
    }
}

impl Serialize for Signature {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let parts = Vec::<i64>::deserialize(de)?;
        Signature::new(parts).map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// Matrix entry: a scalar with certified valuation, or a value known only to
/// be divisible by `p^bound` (the residue of a cancelled sum).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Entry {
    Known(PAdicScalar),
    Unknown(ZeroAtPrecision),
}

impl Entry {
    pub fn known(s: PAdicScalar) -> Self {
        Entry::Known(s)
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Entry::Known(s) if s.is_zero())
    }

    /// Lower bound on the valuation; `None` means infinity (exact zero).
    pub fn val_lower_bound(&self) -> Option<i64> {
        match self {
            Entry::Known(s) => s.valuation(),
            Entry::Unknown(z) => Some(z.certified_min_valuation),
        }
    }

    pub fn shift(&self, k: i64) -> Entry {
        match self {
            Entry::Known(s) => Entry::Known(s.shift(k)),
            Entry::Unknown(z) => Entry::Unknown(ZeroAtPrecision {
                prime: z.prime,
                certified_min_valuation: z.certified_min_valuation + k,
            }),
        }
    }

    pub fn neg(&self) -> Entry {
        match self {
            Entry::Known(s) => Entry::Known(s.neg()),
            Entry::Unknown(z) => Entry::Unknown(*z),
        }
    }

    pub fn add(&self, other: &Entry) -> Result<Entry> {
        match (self, other) {
            (Entry::Known(a), Entry::Known(b)) => Ok(match a.add(b)? {
                Sum::Value(s) => Entry::Known(s),
                Sum::Cancelled(z) => Entry::Unknown(z),
            }),
            (Entry::Known(s), Entry::Unknown(z)) | (Entry::Unknown(z), Entry::Known(s)) => {
                match s.valuation() {
                    None => Ok(Entry::Unknown(*z)),
                    Some(v) if v < z.certified_min_valuation => {
                        // the sum is certain only below the unknown's bound
                        let window = (z.certified_min_valuation - v) as usize;
                        let prec = s.precision().min(window);
                        Ok(Entry::Known(PAdicScalar::new(
                            s.prime(),
                            v,
                            s.digits()[..prec].to_vec(),
                            prec,
                        )?))
                    }
                    Some(_) => Ok(Entry::Unknown(ZeroAtPrecision {
                        prime: z.prime,
                        certified_min_valuation: z.certified_min_valuation,
                    })),
                }
            }
            (Entry::Unknown(a), Entry::Unknown(b)) => Ok(Entry::Unknown(ZeroAtPrecision {
                prime: a.prime,
                certified_min_valuation: a.certified_min_valuation.min(b.certified_min_valuation),
            })),
        }
    }

    pub fn sub(&self, other: &Entry) -> Result<Entry> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Entry) -> Result<Entry> {
        match (self, other) {
            (Entry::Known(a), Entry::Known(b)) => Ok(Entry::Known(a.mul(b)?)),
            (Entry::Known(s), Entry::Unknown(z)) | (Entry::Unknown(z), Entry::Known(s)) => {
                match s.valuation() {
                    None => Ok(Entry::Known(s.clone())), // exact zero absorbs
                    Some(v) => Ok(Entry::Unknown(ZeroAtPrecision {
                        prime: z.prime,
                        certified_min_valuation: z.certified_min_valuation + v,
                    })),
                }
            }
            (Entry::Unknown(a), Entry::Unknown(b)) => Ok(Entry::Unknown(ZeroAtPrecision {
                prime: a.prime,
                certified_min_valuation: a.certified_min_valuation + b.certified_min_valuation,
            })),
        }
    }
}

/// Rectangular matrix over `Q_p` with a shared prime and precision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PAdicMatrix {
    prime: u64,
    precision: usize,
    rows: usize,
    cols: usize,
    entries: Vec<Entry>,
}

impl PAdicMatrix {
    pub fn from_entries(
        prime: u64,
        precision: usize,
        rows: usize,
        cols: usize,
        entries: Vec<Entry>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch("dimensions must be positive".into()));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        for e in &entries {
            let p = match e {
                Entry::Known(s) => s.prime(),
                Entry::Unknown(z) => z.prime,
            };
            if p != prime {
                return Err(Error::PrimeMismatch(prime, p));
            }
        }
        Ok(PAdicMatrix { prime, precision, rows, cols, entries })
    }

    pub fn from_scalars(prime: u64, precision: usize, grid: Vec<Vec<PAdicScalar>>) -> Result<Self> {
        let rows = grid.len();
        let cols = grid.first().map_or(0, |r| r.len());
        if grid.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let entries = grid.into_iter().flatten().map(Entry::Known).collect();
        Self::from_entries(prime, precision, rows, cols, entries)
    }

    /// Integer matrix convenience constructor (row-major).
    pub fn from_integers(prime: u64, precision: usize, grid: &[Vec<i64>]) -> Result<Self> {
        let scalars: Result<Vec<Vec<PAdicScalar>>> = grid
            .iter()
            .map(|row| {
                row.iter().map(|&k| PAdicScalar::from_integer(k, prime, precision)).collect()
            })
            .collect();
        Self::from_scalars(prime, precision, scalars?)
    }

    pub fn identity(prime: u64, n: usize, precision: usize) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(Entry::Known(if i == j {
                    PAdicScalar::one(prime, precision)
                } else {
                    PAdicScalar::zero(prime, precision)
                }));
            }
        }
        PAdicMatrix { prime, precision, rows: n, cols: n, entries }
    }

    /// `diag(p^{κ_1}, ..., p^{κ_n})`.
    pub fn diag_p_power(prime: u64, kappa: &Signature, precision: usize) -> Self {
        let n = kappa.len();
        let mut m = Self::identity(prime, n, precision);
        for i in 0..n {
            let e = m.get(i, i).shift(kappa.part(i));
            m.set(i, i, e);
        }
        m
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Entry {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, e: Entry) {
        self.entries[r * self.cols + c] = e;
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                entries.push(self.get(r, c).clone());
            }
        }
        PAdicMatrix {
            prime: self.prime,
            precision: self.precision,
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime, other.prime));
        }
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let prec = self.precision.min(other.precision);
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Entry::Known(PAdicScalar::zero(self.prime, prec));
                for k in 0..self.cols {
                    acc = acc.add(&self.get(i, k).mul(other.get(k, j))?)?;
                }
                entries.push(acc);
            }
        }
        PAdicMatrix::from_entries(self.prime, prec, self.rows, other.cols, entries)
    }

    /// Reduction modulo p: entry `(i,j)` becomes `d_0` if valuation 0, else 0.
    /// Only valid when all entries have valuation >= 0 certified.
    pub fn mod_p(&self) -> Result<Vec<Vec<u32>>> {
        let mut out = vec![vec![0u32; self.cols]; self.rows];
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[r][c] = match self.get(r, c) {
                    Entry::Known(s) => match s.valuation() {
                        Some(0) => s.digits()[0],
                        Some(v) if v > 0 => 0,
                        Some(_) => {
                            return Err(Error::InvalidInput(
                                "matrix has negative valuation entries".into(),
                            ))
                        }
                        None => 0,
                    },
                    Entry::Unknown(z) if z.certified_min_valuation >= 1 => 0,
                    Entry::Unknown(_) => {
                        return Err(Error::PrecisionExhausted("entry unknown mod p".into()))
                    }
                };
            }
        }
        Ok(out)
    }
}

/// Scale row `i` by `p^{κ_i}` (exact).
pub fn left_diag_multiply(kappa: &Signature, a: &PAdicMatrix) -> Result<PAdicMatrix> {
    if kappa.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "signature length {} vs {} rows",
            kappa.len(),
            a.rows()
        )));
    }
    let mut out = a.clone();
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            out.set(r, c, a.get(r, c).shift(kappa.part(r)));
        }
    }
    Ok(out)
}

/// Scale column `j` by `p^{κ_j}` (exact).
pub fn right_diag_multiply(a: &PAdicMatrix, kappa: &Signature) -> Result<PAdicMatrix> {
    if kappa.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "signature length {} vs {} cols",
            kappa.len(),
            a.cols()
        )));
    }
    let mut out = a.clone();
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            out.set(r, c, a.get(r, c).shift(kappa.part(c)));
        }
    }
    Ok(out)
}

/// Singular numbers via valuation-pivoted elimination.
///
/// Repeatedly selects an entry of minimal certified valuation (ties broken by
/// lowest `(row, col)`), scales and eliminates its row and column, and
/// recurses on the rest. An elimination step is valid only if the pivot's
/// valuation is certified below every `Unknown` bound it interacts with;
/// otherwise the routine fails rather than emit a possibly wrong signature.
pub fn singular_numbers(a: &PAdicMatrix) -> Result<Signature> {
    if a.rows() > a.cols() {
        return singular_numbers(&a.transpose());
    }
    let n = a.rows();
    let m = a.cols();
    let mut g: Vec<Vec<Entry>> =
        (0..n).map(|r| (0..m).map(|c| a.get(r, c).clone()).collect()).collect();
    let mut row_active = vec![true; n];
    let mut col_active = vec![true; m];
    let mut pivots: Vec<i64> = Vec::with_capacity(n);

    for _ in 0..n {
        let mut best: Option<(i64, usize, usize)> = None;
        let mut min_unknown: Option<i64> = None;
        for r in (0..n).filter(|&r| row_active[r]) {
            for c in (0..m).filter(|&c| col_active[c]) {
                match &g[r][c] {
                    Entry::Known(s) => {
                        if let Some(v) = s.valuation() {
                            if best.map_or(true, |(bv, _, _)| v < bv) {
                                best = Some((v, r, c));
                            }
                        }
                    }
                    Entry::Unknown(z) => {
                        let b = z.certified_min_valuation;
                        min_unknown = Some(min_unknown.map_or(b, |x: i64| x.min(b)));
                    }
                }
            }
        }
        let (v, pr, pc) = match best {
            Some(b) => b,
            None if min_unknown.is_some() => {
                return Err(Error::PrecisionExhausted(
                    "no certifiable pivot: all remaining entries are unknown".into(),
                ))
            }
            None => return Err(Error::SingularMatrix),
        };
        // an unknown entry could hide a smaller valuation than the pivot's
        if min_unknown.is_some_and(|b| b < v) {
            return Err(Error::PrecisionExhausted(format!(
                "unknown entry bound {} below pivot valuation {v}",
                min_unknown.unwrap()
            )));
        }
        // strict certification along the pivot's own row and column
        for c in (0..m).filter(|&c| col_active[c]) {
            if let Entry::Unknown(z) = &g[pr][c] {
                if z.certified_min_valuation <= v {
                    return Err(Error::PrecisionExhausted(
                        "unknown entry in pivot row not certified above pivot".into(),
                    ));
                }
            }
        }
        for r in (0..n).filter(|&r| row_active[r]) {
            if let Entry::Unknown(z) = &g[r][pc] {
                if z.certified_min_valuation <= v {
                    return Err(Error::PrecisionExhausted(
                        "unknown entry in pivot column not certified above pivot".into(),
                    ));
                }
            }
        }

        let pivot = match &g[pr][pc] {
            Entry::Known(s) => s.clone(),
            Entry::Unknown(_) => unreachable!("pivot is certified"),
        };
        let pivot_inv = pivot.inv()?;

        let active_cols: Vec<usize> =
            (0..m).filter(|&c| col_active[c] && c != pc).collect();
        for r in (0..n).filter(|&r| row_active[r] && r != pr) {
            match g[r][pc].clone() {
                Entry::Known(e) if !e.is_zero() => {
                    let f = Entry::Known(e.mul(&pivot_inv)?);
                    for &c in &active_cols {
                        let corr = f.mul(&g[pr][c])?;
                        g[r][c] = g[r][c].sub(&corr)?;
                    }
                }
                Entry::Known(_) => {}
                Entry::Unknown(z) => {
                    // subtract (unknown / pivot) times the pivot row; the
                    // multiplier has valuation >= bound - v >= 1
                    let fb = z.certified_min_valuation - v;
                    for &c in &active_cols {
                        if let Some(lb) = g[pr][c].val_lower_bound() {
                            let corr = Entry::Unknown(ZeroAtPrecision {
                                prime: a.prime(),
                                certified_min_valuation: fb + lb,
                            });
                            g[r][c] = g[r][c].add(&corr)?;
                        }
                    }
                }
            }
            g[r][pc] = Entry::Known(PAdicScalar::zero(a.prime(), a.precision()));
        }
        row_active[pr] = false;
        col_active[pc] = false;
        pivots.push(v);
    }

    debug_assert!(pivots.windows(2).all(|w| w[0] <= w[1]));
    pivots.reverse();
    Signature::new(pivots)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n || k == 0 {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k as isize - 1;
        while i >= 0 && idx[i as usize] == i as usize + n - k {
            i -= 1;
        }
        if i < 0 {
            return out;
        }
        let i = i as usize;
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Exact determinant by cofactor expansion over entries.
fn det_entries(prime: u64, precision: usize, g: &[Vec<Entry>]) -> Result<Entry> {
    let n = g.len();
    if n == 1 {
        return Ok(g[0][0].clone());
    }
    let mut acc = Entry::Known(PAdicScalar::zero(prime, precision));
    for j in 0..n {
        let mut minor: Vec<Vec<Entry>> = Vec::with_capacity(n - 1);
        for row in g.iter().skip(1) {
            let r: Vec<Entry> = row
                .iter()
                .enumerate()
                .filter(|&(c, _)| c != j)
                .map(|(_, e)| e.clone())
                .collect();
            minor.push(r);
        }
        let sub = det_entries(prime, precision, &minor)?;
        let term = g[0][j].mul(&sub)?;
        acc = if j % 2 == 0 { acc.add(&term)? } else { acc.sub(&term)? };
    }
    Ok(acc)
}

/// Singular numbers from minor determinants: for each `k`, the sum of the
/// `k` smallest singular numbers equals the minimal valuation over all
/// `k x k` minor determinants. Exponential cost; intended for small matrices
/// as an independent oracle.
pub fn singular_numbers_minor_oracle(a: &PAdicMatrix) -> Result<Signature> {
    if a.rows() > a.cols() {
        return singular_numbers_minor_oracle(&a.transpose());
    }
    let n = a.rows();
    let m = a.cols();
    let mut partial = vec![0i64; n + 1];
    for k in 1..=n {
        let mut min_certified: Option<i64> = None;
        let mut min_unknown: Option<i64> = None;
        for rows in combinations(n, k) {
            for cols in combinations(m, k) {
                let sub: Vec<Vec<Entry>> = rows
                    .iter()
                    .map(|&r| cols.iter().map(|&c| a.get(r, c).clone()).collect())
                    .collect();
                let d = det_entries(a.prime(), a.precision(), &sub)?;
                match d.val_lower_bound() {
                    None => {} // exact zero minor: valuation infinity
                    Some(b) => match d {
                        Entry::Known(_) => {
                            min_certified = Some(min_certified.map_or(b, |x: i64| x.min(b)));
                        }
                        Entry::Unknown(_) => {
                            min_unknown = Some(min_unknown.map_or(b, |x: i64| x.min(b)));
                        }
                    },
                }
            }
        }
        let s = match min_certified {
            Some(s) => s,
            None if min_unknown.is_some() => {
                return Err(Error::PrecisionExhausted(format!(
                    "all nonzero {k}x{k} minors uncertified"
                )))
            }
            None => return Err(Error::SingularMatrix),
        };
        if min_unknown.is_some_and(|b| b <= s) {
            return Err(Error::PrecisionExhausted(format!(
                "minimal {k}x{k} minor valuation {s} not certified against unknown bound {}",
                min_unknown.unwrap()
            )));
        }
        partial[k] = s;
    }
    // λ_{n-k+1} = s_k - s_{k-1}, assembled in weakly decreasing order
    let mut parts = vec![0i64; n];
    for k in 1..=n {
        parts[n - k] = partial[k] - partial[k - 1];
    }
    Signature::new(parts)
}

/// Valuation of the exact determinant of a square matrix.
pub fn det_valuation(a: &PAdicMatrix) -> Result<i64> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch("determinant of non-square matrix".into()));
    }
    let g: Vec<Vec<Entry>> = (0..a.rows())
        .map(|r| (0..a.cols()).map(|c| a.get(r, c).clone()).collect())
        .collect();
    match det_entries(a.prime(), a.precision(), &g)? {
        Entry::Known(s) => s.valuation().ok_or(Error::SingularMatrix),
        Entry::Unknown(z) => Err(Error::PrecisionExhausted(format!(
            "determinant valuation >= {} uncertified",
            z.certified_min_valuation
        ))),
    }
}

// JSON encoding: {"n","m","p","prec","entries":[[scalar,...],...]}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    n: usize,
    m: usize,
    p: u64,
    prec: usize,
    entries: Vec<Vec<PAdicScalar>>,
}

impl Serialize for PAdicMatrix {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut entries = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let mut row = Vec::with_capacity(self.cols);
            for c in 0..self.cols {
                match self.get(r, c) {
                    Entry::Known(s) => row.push(s.clone()),
                    Entry::Unknown(_) => {
                        return Err(S::Error::custom(
                            "matrix with uncertified entries cannot be serialized",
                        ))
                    }
                }
            }
            entries.push(row);
        }
        MatrixJson { n: self.rows, m: self.cols, p: self.prime, prec: self.precision, entries }
            .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for PAdicMatrix {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(de)?;
        if raw.entries.len() != raw.n || raw.entries.iter().any(|r| r.len() != raw.m) {
            return Err(D::Error::custom("entry grid does not match declared dimensions"));
        }
        PAdicMatrix::from_scalars(raw.p, raw.prec, raw.entries)
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(parts: &[i64]) -> Signature {
        Signature::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn signature_validation() {
        assert!(Signature::new(vec![0, 1]).is_err());
        assert!(Signature::new(vec![3, 1, 1, 0, -2]).is_ok());
    }

    #[test]
    fn signature_blocks() {
        let k = sig(&[6, 3, 3, 2, 0, 0]);
        assert_eq!(k.block_top(2), 1);
        assert_eq!(k.block_tops(), vec![0, 1, 3, 4]);
        assert_eq!(k.multiplicity(3), 2);
        assert_eq!(k.weight(), 14);
    }

    #[test]
    fn snf_diagonal() {
        for p in [2u64, 3, 5] {
            let m = PAdicMatrix::diag_p_power(p, &sig(&[3, 1, 0]), 12);
            assert_eq!(singular_numbers(&m).unwrap(), sig(&[3, 1, 0]));
        }
    }

    #[test]
    fn snf_off_diagonal_example() {
        // [[p,1],[0,p]] has singular numbers (2,0) at any p
        for p in [2i64, 3, 5] {
            let m = PAdicMatrix::from_integers(p as u64, 12, &[vec![p, 1], vec![0, p]]).unwrap();
            assert_eq!(singular_numbers(&m).unwrap(), sig(&[2, 0]));
            assert_eq!(singular_numbers_minor_oracle(&m).unwrap(), sig(&[2, 0]));
            assert_eq!(det_valuation(&m).unwrap(), 2);
        }
    }

    #[test]
    fn minor_oracle_diagonal_example() {
        let m = PAdicMatrix::diag_p_power(3, &sig(&[2, 0]), 10);
        assert_eq!(singular_numbers_minor_oracle(&m).unwrap(), sig(&[2, 0]));
    }

    #[test]
    fn det_valuation_diagonal() {
        let m = PAdicMatrix::diag_p_power(5, &sig(&[2, 1]), 10);
        assert_eq!(det_valuation(&m).unwrap(), 3);
    }

    #[test]
    fn snf_rectangular_transposes() {
        // 3x2 input is handled by transposition
        let m = PAdicMatrix::from_integers(2, 12, &[vec![2, 0], vec![0, 1], vec![0, 0]]).unwrap();
        assert_eq!(singular_numbers(&m).unwrap(), sig(&[1, 0]));
    }

    #[test]
    fn snf_singular_matrix() {
        // exact zero block after the first pivot
        let m = PAdicMatrix::from_integers(2, 12, &[vec![1, 0], vec![0, 0]]).unwrap();
        assert!(matches!(singular_numbers(&m), Err(Error::SingularMatrix)));
        // rank deficiency by cancellation cannot be certified at finite
        // precision; it surfaces as precision exhaustion instead
        let m = PAdicMatrix::from_integers(2, 12, &[vec![1, 1], vec![1, 1]]).unwrap();
        assert!(matches!(singular_numbers(&m), Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn snf_negative_valuations() {
        let k = sig(&[1, -2]);
        let m = PAdicMatrix::diag_p_power(2, &k, 10);
        assert_eq!(singular_numbers(&m).unwrap(), k);
    }

    #[test]
    fn diag_multiply_builders() {
        let id = PAdicMatrix::identity(3, 2, 8);
        let left = left_diag_multiply(&sig(&[1, 0]), &id).unwrap();
        assert_eq!(left, PAdicMatrix::diag_p_power(3, &sig(&[1, 0]), 8));
        let right = right_diag_multiply(&id, &sig(&[-1, -1])).unwrap();
        assert_eq!(singular_numbers(&right).unwrap(), sig(&[-1, -1]));
    }

    #[test]
    fn precision_exhausted_on_cancelled_pivot() {
        // 1 - 1 cancels completely; the resulting unknown entry blocks the
        // second pivot because nothing certifies its valuation
        let one = PAdicScalar::from_integer(1, 2, 4).unwrap();
        let z = one.sub(&one).unwrap();
        let unknown = match z {
            Sum::Cancelled(z) => Entry::Unknown(z),
            _ => panic!(),
        };
        let p4 = PAdicScalar::from_integer(16, 2, 4).unwrap(); // valuation 4 == bound
        let m = PAdicMatrix::from_entries(
            2,
            4,
            2,
            2,
            vec![
                unknown,
                Entry::Known(p4.clone()),
                Entry::Known(p4.clone()),
                Entry::Known(p4),
            ],
        )
        .unwrap();
        assert!(matches!(singular_numbers(&m), Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn matmul_identity() {
        let m = PAdicMatrix::from_integers(2, 10, &[vec![2, 1], vec![0, 2]]).unwrap();
        let id = PAdicMatrix::identity(2, 2, 10);
        assert_eq!(m.matmul(&id).unwrap(), m);
    }

    #[test]
    fn combinations_enumeration() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(5, 5), vec![vec![0, 1, 2, 3, 4]]);
        assert!(combinations(3, 4).is_empty());
    }

    #[test]
    fn matrix_json_round_trip() {
        let m = PAdicMatrix::from_integers(3, 6, &[vec![3, 1], vec![0, 9]]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: PAdicMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }
}
