//! Block-sparse operators on a truncated weight module.

use std::collections::{BTreeMap, HashMap};

use num::Zero;

use crate::linalg::{QMatrix, Q};

/// An operator stored as blocks keyed by (target weight, source weight).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Op {
    blocks: BTreeMap<(usize, usize), QMatrix>,
}

impl Op {
    pub fn zero() -> Self {
        Op::default()
    }

    pub fn identity(dims: &[usize]) -> Self {
        let blocks = dims
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0)
            .map(|(w, &d)| ((w, w), QMatrix::identity(d)))
            .collect();
        Op { blocks }
    }

    /// Diagonal operator acting by `scalar(w)` on weight space w.
    pub fn diagonal(dims: &[usize], scalar: impl Fn(usize) -> Q) -> Self {
        let mut blocks = BTreeMap::new();
        for (w, &d) in dims.iter().enumerate() {
            let s = scalar(w);
            if d > 0 && !s.is_zero() {
                blocks.insert((w, w), QMatrix::identity(d).scale(&s));
            }
        }
        Op { blocks }
    }

    pub fn blocks(&self) -> &BTreeMap<(usize, usize), QMatrix> {
        &self.blocks
    }

    pub fn block(&self, target: usize, source: usize) -> Option<&QMatrix> {
        self.blocks.get(&(target, source))
    }

    /// Adds `m` into the block, dropping it if the sum vanishes.
    pub fn add_block(&mut self, target: usize, source: usize, m: QMatrix) {
        if m.is_zero() {
            return;
        }
        match self.blocks.get_mut(&(target, source)) {
            Some(b) => {
                *b = &*b + &m;
                if b.is_zero() {
                    self.blocks.remove(&(target, source));
                }
            }
            None => {
                self.blocks.insert((target, source), m);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn mul(&self, other: &Op) -> Op {
        let mut by_target: HashMap<usize, Vec<(usize, &QMatrix)>> = HashMap::new();
        for (&(t, s), m) in &other.blocks {
            by_target.entry(t).or_default().push((s, m));
        }
        let mut out = Op::zero();
        for (&(t, k), a) in &self.blocks {
            if let Some(list) = by_target.get(&k) {
                for &(s, b) in list {
                    out.add_block(t, s, a * b);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Op) -> Op {
        let mut out = self.clone();
        for (&(t, s), m) in &other.blocks {
            out.add_block(t, s, m.clone());
        }
        out
    }

    pub fn sub(&self, other: &Op) -> Op {
        self.add(&other.scale(&Q::from_integer((-1).into())))
    }

    pub fn scale(&self, c: &Q) -> Op {
        if c.is_zero() {
            return Op::zero();
        }
        Op { blocks: self.blocks.iter().map(|(k, m)| (*k, m.scale(c))).collect() }
    }

    /// [self, other].
    pub fn bracket(&self, other: &Op) -> Op {
        self.mul(other).sub(&other.mul(self))
    }

    /// Blockwise transpose, i.e. the adjoint for the standard dot product.
    pub fn transpose(&self) -> Op {
        Op { blocks: self.blocks.iter().map(|(&(t, s), m)| ((s, t), m.transpose())).collect() }
    }

    /// Block-diagonal operator with the given blocks.
    pub fn block_diagonal(blocks: impl IntoIterator<Item = (usize, QMatrix)>) -> Op {
        let mut out = Op::zero();
        for (w, m) in blocks {
            out.add_block(w, w, m);
        }
        out
    }

    /// The operator A† with {A v, w} = {v, A† w} for the block-diagonal form
    /// with blocks `gram` and inverses `gram_inv`.
    pub fn adjoint(&self, gram: &[QMatrix], gram_inv: &[QMatrix]) -> Op {
        let mut out = Op::zero();
        for (&(t, s), m) in &self.blocks {
            out.add_block(s, t, &(&gram_inv[s] * &m.transpose()) * &gram[t]);
        }
        out
    }

    /// Keeps only blocks whose source and target satisfy the predicate.
    pub fn restrict(&self, keep: impl Fn(usize, usize) -> bool) -> Op {
        Op { blocks: self.blocks.iter().filter(|(&(t, s), _)| keep(t, s)).map(|(k, m)| (*k, m.clone())).collect() }
    }

    /// exp(s·self) for a nilpotent operator.
    pub fn exp_nilpotent(&self, s: &Q, dims: &[usize]) -> Op {
        let mut total = Op::identity(dims);
        let mut term = Op::identity(dims);
        let mut k = 1i64;
        loop {
            term = self.mul(&term).scale(&(s / Q::from_integer(k.into())));
            if term.is_zero() {
                return total;
            }
            total = total.add(&term);
            k += 1;
            assert!(k < 10_000, "operator is not nilpotent on the truncation");
        }
    }

    /// c with self = c·other, when the two are proportional and `other` ≠ 0.
    pub fn ratio_to(&self, other: &Op) -> Option<Q> {
        let (&key, m) = other.blocks.iter().next()?;
        let idx = m.entries().iter().position(|x| !x.is_zero())?;
        let c = match self.blocks.get(&key) {
            Some(a) => &a.entries()[idx] / &m.entries()[idx],
            None => Q::zero(),
        };
        (*self == other.scale(&c)).then_some(c)
    }

    /// Dense matrix on the weights listed in `order`, with the given offsets.
    pub fn to_dense(&self, order: &[usize], dims: &[usize]) -> QMatrix {
        let mut offset = HashMap::new();
        let mut total = 0;
        for &w in order {
            offset.insert(w, total);
            total += dims[w];
        }
        let mut out = QMatrix::zeros(total, total);
        for (&(t, s), m) in &self.blocks {
            if let (Some(&ot), Some(&os)) = (offset.get(&t), offset.get(&s)) {
                out.set_block(ot, os, m);
            }
        }
        out
    }
}
