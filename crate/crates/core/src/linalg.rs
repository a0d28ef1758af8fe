//! Dense exact linear algebra over the rationals, plus integer Hermite normal form.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Float view of a rational, robust to huge numerators and denominators.
pub fn q_to_f64(x: &Q) -> f64 {
    if let Some(v) = x.to_f64() {
        if v.is_finite() && (v != 0.0 || x.is_zero()) {
            return v;
        }
    }
    q_ln_abs(x).exp() * if x.is_negative() { -1.0 } else { 1.0 }
}

fn bigint_ln(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().unwrap().abs().ln();
    }
    let shift = bits - 60;
    let top: BigInt = n.abs() >> shift;
    top.to_f64().unwrap().ln() + (shift as f64) * std::f64::consts::LN_2
}

/// ln|x| for a nonzero rational without overflow.
pub fn q_ln_abs(x: &Q) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    bigint_ln(x.numer()) - bigint_ln(x.denom())
}

/// Parse "p/q", "p" or a finite decimal like "0.25" into an exact rational.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().ok()?;
        let d: BigInt = b.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Q::new(n, d));
    }
    if let Some((a, b)) = s.split_once('.') {
        let neg = a.starts_with('-');
        let whole: BigInt = if a.is_empty() || a == "-" || a == "+" {
            BigInt::zero()
        } else {
            a.parse().ok()?
        };
        if b.is_empty() || !b.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let frac: BigInt = b.parse().ok()?;
        let den = num::pow(BigInt::from(10), b.len());
        let mag = whole.abs() * &den + frac;
        let n = if neg { -mag } else { mag };
        return Some(Q::new(n, den));
    }
    let n: BigInt = s.parse().ok()?;
    Some(Q::from_integer(n))
}

pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl fmt::Debug for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(fmt_q).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for QMatrix {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        &mut self.data[i * self.cols + j]
    }
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn diagonal(d: &[Q]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, x) in d.iter().enumerate() {
            m[(i, i)] = x.clone();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Q) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        QMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<Q>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        QMatrix { rows: r, cols: c, data: rows.iter().flatten().cloned().collect() }
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        let rr: Vec<Vec<Q>> = rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
        Self::from_rows(&rr)
    }

    pub fn from_columns(cols: &[Vec<Q>], nrows: usize) -> Self {
        let mut m = Self::zeros(nrows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), nrows);
            for (i, x) in c.iter().enumerate() {
                m[(i, j)] = x.clone();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Q] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Q> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Q>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let x = &self[(i, j)];
                    if i == j { x.is_one() } else { x.is_zero() }
                })
            })
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|x| x.is_integer())
    }

    pub fn scale(&self, s: &Q) -> Self {
        QMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = Q::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        acc += a * b;
                    }
                }
                acc
            })
            .collect()
    }

    /// Bilinear form uᵀ M v.
    pub fn form(&self, u: &[Q], v: &[Q]) -> Q {
        let mv = self.mul_vec(v);
        u.iter().zip(&mv).fold(Q::zero(), |acc, (a, b)| acc + a * b)
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])].clone())
    }

    /// Place `block` with its top-left corner at (r0, c0).
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &QMatrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)].clone();
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    /// Reduced row echelon form; returns pivot columns.
    pub fn rref(&self) -> (QMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else { continue };
            m.swap_rows(r, p);
            let inv = m[(r, c)].recip();
            for j in c..m.cols {
                let v = &m[(r, j)] * &inv;
                m[(r, j)] = v;
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = m[(i, c)].clone();
                    for j in c..m.cols {
                        if !m[(r, j)].is_zero() {
                            let v = &m[(i, j)] - &f * &m[(r, j)];
                            m[(i, j)] = v;
                        }
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn det(&self) -> Q {
        assert!(self.is_square());
        let mut m = self.clone();
        let n = m.rows;
        let mut det = Q::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else { return Q::zero() };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let piv = m[(c, c)].clone();
            det *= &piv;
            for i in c + 1..n {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let f = &m[(i, c)] / &piv;
                for j in c..n {
                    if !m[(c, j)].is_zero() {
                        let v = &m[(i, j)] - &f * &m[(c, j)];
                        m[(i, j)] = v;
                    }
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<QMatrix> {
        assert!(self.is_square());
        let n = self.rows;
        let mut aug = QMatrix::zeros(n, 2 * n);
        aug.set_block(0, 0, self);
        aug.set_block(0, n, &QMatrix::identity(n));
        let (r, piv) = aug.rref();
        if piv.len() < n || piv[n - 1] != n - 1 {
            return None;
        }
        Some(r.block(0, n, n, n))
    }

    /// Solve self · X = rhs, returning one solution if consistent.
    pub fn solve(&self, rhs: &QMatrix) -> Option<QMatrix> {
        assert_eq!(self.rows, rhs.rows);
        let n = self.cols;
        let mut aug = QMatrix::zeros(self.rows, n + rhs.cols);
        aug.set_block(0, 0, self);
        aug.set_block(0, n, rhs);
        let (r, piv) = aug.rref();
        if piv.iter().any(|&c| c >= n) {
            return None;
        }
        let mut x = QMatrix::zeros(n, rhs.cols);
        for (row, &c) in piv.iter().enumerate() {
            for j in 0..rhs.cols {
                x[(c, j)] = r[(row, n + j)].clone();
            }
        }
        Some(x)
    }

    /// Basis of the right kernel, as columns of the returned matrix.
    pub fn kernel(&self) -> QMatrix {
        let (r, piv) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !piv.contains(c)).collect();
        let mut k = QMatrix::zeros(self.cols, free.len());
        for (t, &f) in free.iter().enumerate() {
            k[(f, t)] = Q::one();
            for (row, &c) in piv.iter().enumerate() {
                k[(c, t)] = -r[(row, f)].clone();
            }
        }
        k
    }

    /// All leading principal minors strictly positive.
    pub fn is_positive_definite(&self) -> bool {
        if !self.is_symmetric() {
            return false;
        }
        // Exact LDLᵀ: positive definite iff every pivot is positive.
        let n = self.rows;
        let mut m = self.clone();
        for c in 0..n {
            let piv = m[(c, c)].clone();
            if !piv.is_positive() {
                return false;
            }
            for i in c + 1..n {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let f = &m[(i, c)] / &piv;
                for j in c..n {
                    if !m[(c, j)].is_zero() {
                        let v = &m[(i, j)] - &f * &m[(c, j)];
                        m[(i, j)] = v;
                    }
                }
            }
        }
        true
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| q_to_f64(&self[(i, j)]))
    }

    pub fn max_abs_diff_f64(&self, other: &QMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| q_to_f64(&(a - b)).abs())
            .fold(0.0, f64::max)
    }

    /// Common denominator of all entries.
    pub fn denominator_lcm(&self) -> BigInt {
        self.data.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
    }

    pub fn entries(&self) -> &[Q] {
        &self.data
    }
}

impl<'a> Mul<&'a QMatrix> for &'a QMatrix {
    type Output = QMatrix;
    fn mul(self, rhs: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in product");
        let mut out = QMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs[(k, j)];
                    if !b.is_zero() {
                        out.data[i * rhs.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }
}

impl<'a> Add<&'a QMatrix> for &'a QMatrix {
    type Output = QMatrix;
    fn add(self, rhs: &QMatrix) -> QMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a QMatrix> for &'a QMatrix {
    type Output = QMatrix;
    fn sub(self, rhs: &QMatrix) -> QMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &QMatrix {
    type Output = QMatrix;
    fn neg(self) -> QMatrix {
        QMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| -x).collect() }
    }
}

/// Row-style Hermite normal form of the lattice spanned by integer `generators`
/// (each of length `dim`). Returns a basis in echelon form with positive pivots
/// and entries above each pivot reduced into [0, pivot).
pub fn hermite_basis(generators: &[Vec<BigInt>], dim: usize) -> Vec<Vec<BigInt>> {
    let mut rows: Vec<Vec<BigInt>> =
        generators.iter().filter(|g| g.iter().any(|x| !x.is_zero())).cloned().collect();
    let mut out: Vec<Vec<BigInt>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for c in 0..dim {
        // Collapse column c onto a single row by repeated gcd steps.
        let mut live: Vec<usize> = (0..rows.len()).filter(|&i| !rows[i][c].is_zero()).collect();
        if live.is_empty() {
            continue;
        }
        while live.len() > 1 {
            live.sort_by(|&a, &b| rows[a][c].abs().cmp(&rows[b][c].abs()));
            let p = live[0];
            let pivot_row = rows[p].clone();
            for &i in &live[1..] {
                let f = rows[i][c].div_floor(&pivot_row[c]);
                for j in c..dim {
                    let v = &rows[i][j] - &f * &pivot_row[j];
                    rows[i][j] = v;
                }
            }
            live.retain(|&i| !rows[i][c].is_zero());
        }
        let p = live[0];
        let mut r = rows.swap_remove(p);
        if r[c].is_negative() {
            for x in r.iter_mut() {
                *x = -x.clone();
            }
        }
        out.push(r);
        pivots.push(c);
    }
    // Reduce entries above pivots.
    for k in 0..out.len() {
        let c = pivots[k];
        let piv = out[k][c].clone();
        for i in 0..k {
            let f = out[i][c].div_floor(&piv);
            if !f.is_zero() {
                for j in c..dim {
                    let v = &out[i][j] - &f * &out[k][j];
                    out[i][j] = v;
                }
            }
        }
    }
    out
}

/// Hermite basis of the Z-span of rational vectors, returned as rational vectors.
pub fn rational_lattice_basis(generators: &[Vec<Q>], dim: usize) -> Vec<Vec<Q>> {
    let den = generators
        .iter()
        .flatten()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<Vec<BigInt>> = generators
        .iter()
        .map(|g| g.iter().map(|x| (x * Q::from_integer(den.clone())).to_integer()).collect())
        .collect();
    hermite_basis(&ints, dim)
        .into_iter()
        .map(|r| r.into_iter().map(|x| Q::new(x, den.clone())).collect())
        .collect()
}
