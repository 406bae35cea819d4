//! Prime-field arithmetic and dense linear algebra over GF(q).
//!
//! Everything here is exact: elements are stored as `u64` residues in `[0, q)` and
//! all elimination is done with modular inverses. Matrices are small (a few hundred
//! rows at most), so a plain row-major `Vec<u64>` is all we need.

use std::fmt;

use crate::error::{Error, Result};

/// Returns `true` if `n` is prime (trial division).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Smallest prime `p >= n` (and `p >= 2`).
pub fn smallest_prime_at_least(n: u64) -> u64 {
    let mut p = n.max(2);
    while !is_prime(p) {
        p += 1;
    }
    p
}

/// The prime field GF(q).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    q: u64,
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        // keeps a*b below u64::MAX
        if q >= 1 << 32 {
            return Err(Error::InvalidParams(format!("field order {q} too large")));
        }
        Ok(Self { q })
    }

    pub fn order(&self) -> u64 {
        self.q
    }

    /// Reduces an arbitrary integer into the field.
    pub fn elem(&self, x: i64) -> u64 {
        x.rem_euclid(self.q as i64) as u64
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.q
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.q - b) % self.q
    }

    pub fn neg(&self, a: u64) -> u64 {
        (self.q - a) % self.q
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        (a * b) % self.q
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.q;
        base %= self.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(&self, a: u64) -> Result<u64> {
        if a % self.q == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(a, self.q - 2))
    }

    /// Inverse of an element already known to be nonzero.
    fn inv_nonzero(&self, a: u64) -> u64 {
        debug_assert!(a != 0);
        self.pow(a, self.q - 2)
    }

    pub fn dot(&self, a: &[u64], b: &[u64]) -> u64 {
        debug_assert_eq!(a.len(), b.len());
        a.iter()
            .zip(b)
            .fold(0, |acc, (&x, &y)| (acc + x * y) % self.q)
    }

    /// `dst += c * src`, elementwise.
    pub fn axpy(&self, dst: &mut [u64], c: u64, src: &[u64]) {
        if c == 0 {
            return;
        }
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = (*d + c * s) % self.q;
        }
    }
}

/// Dense row-major matrix over a prime field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u64>,
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FieldMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl FieldMatrix {
    pub fn from_rows(f: PrimeField, cols: usize, rows: &[Vec<u64>]) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row of length {} in a {cols}-column matrix",
                    row.len()
                )));
            }
            entries.extend(row.iter().map(|&x| x % f.order()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            entries,
        })
    }

    pub fn from_entries(f: PrimeField, rows: usize, cols: usize, entries: Vec<u64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        let entries = entries.into_iter().map(|x| x % f.order()).collect();
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[u64]> {
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn push_row(&mut self, row: &[u64]) {
        assert_eq!(row.len(), self.cols, "row length mismatch");
        self.entries.extend_from_slice(row);
        self.rows += 1;
    }

    /// Stacks matrices vertically. All inputs must share a column count.
    pub fn vstack<'a>(cols: usize, parts: impl IntoIterator<Item = &'a FieldMatrix>) -> Result<Self> {
        let mut out = Self::zeros(0, cols);
        for p in parts {
            if p.cols != cols {
                return Err(Error::DimensionMismatch(format!(
                    "cannot stack {}-column block onto {cols} columns",
                    p.cols
                )));
            }
            out.entries.extend_from_slice(&p.entries);
            out.rows += p.rows;
        }
        Ok(out)
    }

    /// Submatrix made of the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(0, self.cols);
        for &i in idx {
            out.push_row(self.row(i));
        }
        out
    }

    /// Consecutive row block `[start, start + len)`.
    pub fn row_block(&self, start: usize, len: usize) -> Self {
        Self {
            rows: len,
            cols: self.cols,
            entries: self.entries[start * self.cols..(start + len) * self.cols].to_vec(),
        }
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        let mut entries = Vec::with_capacity(self.rows * idx.len());
        for r in 0..self.rows {
            let row = self.row(r);
            entries.extend(idx.iter().map(|&c| row[c]));
        }
        Self {
            rows: self.rows,
            cols: idx.len(),
            entries,
        }
    }

    pub fn mul(&self, f: PrimeField, other: &FieldMatrix) -> Result<FieldMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a != 0 {
                    f.axpy(out.row_mut(r), a, other.row(k));
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, f: PrimeField, v: &[u64]) -> Result<Vec<u64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}-column matrix applied to length-{} vector",
                self.cols,
                v.len()
            )));
        }
        Ok(self.iter_rows().map(|row| f.dot(row, v)).collect())
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    pub fn rref_in_place(&mut self, f: PrimeField) -> Vec<usize> {
        self.rref_in_place_upto(f, self.cols)
    }

    /// Like [`rref_in_place`](Self::rref_in_place) but only pivots on the first
    /// `pivot_cols` columns; the remaining columns ride along (augmented system).
    pub fn rref_in_place_upto(&mut self, f: PrimeField, pivot_cols: usize) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..pivot_cols.min(self.cols) {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.get(i, c) != 0) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = f.inv_nonzero(self.get(r, c));
            for x in self.row_mut(r) {
                *x = f.mul(*x, inv);
            }
            let pivot_row = self.row(r).to_vec();
            for i in 0..self.rows {
                if i != r {
                    let factor = self.get(i, c);
                    if factor != 0 {
                        f.axpy(self.row_mut(i), f.neg(factor), &pivot_row);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.entries.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn rank(&self, f: PrimeField) -> usize {
        let mut m = self.clone();
        m.rref_in_place(f).len()
    }

    pub fn is_invertible(&self, f: PrimeField) -> bool {
        self.rows == self.cols && self.rank(f) == self.rows
    }

    /// Inverse of a square matrix, `None` if singular.
    pub fn inverse(&self, f: PrimeField) -> Option<FieldMatrix> {
        if self.rows != self.cols {
            return None;
        }
        match mat_solve(f, self, &FieldMatrix::identity(self.rows)) {
            Ok(Solution::Unique(x)) => Some(x),
            _ => None,
        }
    }
}

/// Row space of a set of rows whose values (inner products with an unknown
/// vector) are known. Answers "is this row determined, and if so what is its value".
#[derive(Debug, Clone)]
pub struct EvaluatedSpan {
    field: PrimeField,
    dim: usize,
    // RREF of [coeffs | value]
    reduced: FieldMatrix,
    pivots: Vec<usize>,
}

impl EvaluatedSpan {
    pub fn new<'a>(field: PrimeField, dim: usize, rows: impl IntoIterator<Item = (&'a [u64], u64)>) -> Self {
        let mut m = FieldMatrix::zeros(0, dim + 1);
        let mut buf = vec![0; dim + 1];
        for (coeffs, value) in rows {
            assert_eq!(coeffs.len(), dim, "row width");
            buf[..dim].copy_from_slice(coeffs);
            buf[dim] = value;
            m.push_row(&buf);
        }
        let pivots = m.rref_in_place_upto(field, dim);
        m.rows = pivots.len();
        m.entries.truncate(m.rows * m.cols);
        Self {
            field,
            dim,
            reduced: m,
            pivots,
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Value of `target · x` if `target` lies in the span, else `None`.
    pub fn evaluate(&self, target: &[u64]) -> Option<u64> {
        let f = self.field;
        let mut residual = target.to_vec();
        let mut value = 0;
        for (r, &c) in self.pivots.iter().enumerate() {
            let coef = residual[c];
            if coef != 0 {
                let row = self.reduced.row(r);
                f.axpy(&mut residual, f.neg(coef), &row[..self.dim]);
                value = f.add(value, f.mul(coef, row[self.dim]));
            }
        }
        residual.iter().all(|&x| x == 0).then_some(value)
    }

    /// Evaluates every row of `targets`; `None` if any is undetermined.
    pub fn evaluate_rows(&self, targets: &FieldMatrix) -> Option<Vec<u64>> {
        targets.iter_rows().map(|t| self.evaluate(t)).collect()
    }

    /// Whether coordinate `j` is pinned down: column `j` is a pivot whose row is
    /// the unit vector `e_j` (over the coefficient part).
    pub fn coordinate(&self, j: usize) -> Option<u64> {
        let r = self.pivots.iter().position(|&c| c == j)?;
        let row = self.reduced.row(r);
        row[..self.dim]
            .iter()
            .enumerate()
            .all(|(c, &x)| c == j || x == 0)
            .then_some(row[self.dim])
    }
}

/// Outcome of solving `a · x = b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solution {
    Unique(FieldMatrix),
    NoSolution,
    Underdetermined,
}

/// Solves `a · x = b` for `x` (`b` may have several right-hand-side columns).
pub fn mat_solve(f: PrimeField, a: &FieldMatrix, b: &FieldMatrix) -> Result<Solution> {
    if a.rows != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "lhs has {} rows, rhs has {}",
            a.rows, b.rows
        )));
    }
    let n = a.cols;
    let mut aug = FieldMatrix::zeros(a.rows, n + b.cols);
    for r in 0..a.rows {
        aug.row_mut(r)[..n].copy_from_slice(a.row(r));
        aug.row_mut(r)[n..].copy_from_slice(b.row(r));
    }
    let pivots = aug.rref_in_place(f);
    if pivots.iter().any(|&c| c >= n) {
        return Ok(Solution::NoSolution);
    }
    if pivots.len() < n {
        return Ok(Solution::Underdetermined);
    }
    let mut x = FieldMatrix::zeros(n, b.cols);
    for (r, &c) in pivots.iter().enumerate() {
        x.row_mut(c).copy_from_slice(&aug.row(r)[n..]);
    }
    Ok(Solution::Unique(x))
}

/// `n × k` Vandermonde matrix on evaluation points `0, 1, …, n−1`.
///
/// Any `k` rows are invertible because the points are distinct, which needs `q ≥ n`.
pub fn vandermonde_mds(n: usize, k: usize, f: PrimeField) -> Result<FieldMatrix> {
    if k == 0 || n < k {
        return Err(Error::InvalidParams(format!("vandermonde needs n >= k >= 1, got n={n}, k={k}")));
    }
    if (f.order() as usize) < n {
        return Err(Error::FieldTooSmall { q: f.order(), needed: n as u64 });
    }
    let mut m = FieldMatrix::zeros(n, k);
    for i in 0..n {
        let mut p = 1;
        for j in 0..k {
            m.set(i, j, p);
            p = f.mul(p, i as u64);
        }
    }
    Ok(m)
}

/// An `n × k` MDS generator over `f`, using the cheapest construction available.
///
/// Vandermonde when `q ≥ n`; otherwise the repetition code (`k = 1`) or the single
/// parity-check code `[I; 1…1]` (`n = k + 1`), both MDS over every field. Returns
/// [`Error::FieldTooSmall`] if none applies.
pub fn mds_generator(n: usize, k: usize, f: PrimeField) -> Result<FieldMatrix> {
    if k == 0 || n < k {
        return Err(Error::InvalidParams(format!("MDS code needs n >= k >= 1, got n={n}, k={k}")));
    }
    if n == k {
        return Ok(FieldMatrix::identity(k));
    }
    if k == 1 {
        return Ok(FieldMatrix::from_entries(f, n, 1, vec![1; n]).expect("shape"));
    }
    if (f.order() as usize) >= n {
        return vandermonde_mds(n, k, f);
    }
    if n == k + 1 {
        let mut m = FieldMatrix::identity(k);
        m.push_row(&vec![1; k]);
        return Ok(m);
    }
    Err(Error::FieldTooSmall { q: f.order(), needed: n as u64 })
}

/// Smallest prime field over which [`mds_generator`] can build an `n × k` code.
pub fn smallest_mds_field(n: usize, k: usize) -> PrimeField {
    let q = if n <= k + 1 || k <= 1 { 2 } else { smallest_prime_at_least(n as u64) };
    PrimeField::new(q).expect("prime by construction")
}

/// `K` blocks of `block_rows × cols` such that any `cols / block_rows` of them stack to
/// an invertible square matrix. Built by slicing one MDS generator of `K · block_rows`
/// rows into consecutive blocks.
pub fn block_mds_family(
    k_blocks: usize,
    block_rows: usize,
    cols: usize,
    f: PrimeField,
) -> Result<Vec<FieldMatrix>> {
    if block_rows == 0 || cols % block_rows != 0 {
        return Err(Error::Divisibility(format!(
            "{cols} columns not divisible into blocks of {block_rows} rows"
        )));
    }
    if k_blocks * block_rows < cols {
        return Err(Error::InvalidParams(format!(
            "{k_blocks} blocks of {block_rows} rows cannot span {cols} columns"
        )));
    }
    let g = mds_generator(k_blocks * block_rows, cols, f)?;
    Ok((0..k_blocks)
        .map(|i| g.row_block(i * block_rows, block_rows))
        .collect())
}
