//! Exact truncations V/Vⁿ of an integrable highest-weight module, with the
//! contravariant form, the integral lattice V_ℤ and loop root vectors.
//!
//! Weight spaces are built in depth order. The candidates at μ are the vectors
//! f_i·b for b in a basis of V_{μ+a_i}; the kernel of c ↦ (e_j c)_j is the
//! radical of the form, so an independent set of candidate images is a basis.

mod group;
mod ops;

pub use group::{
    iwasawa_truncated, parse_root, torus_scalar, uminus_zero, Factor, GroupElement, IwasawaForm,
    IwasawaFactors,
};
pub use ops::Op;

use std::collections::{BTreeSet, HashMap};

use num::{One, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::cartan::{height, AffineData, AffineRoot, Root};
use crate::error::{Error, Result};
use crate::linalg::{fmt_q, q, rational_lattice_basis, QMatrix, Q};
use crate::symm::{lambda_polys, UZFactor, UZMonomial};
use crate::weights::WeightSystem;

/// A named generator of the affine algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Generator {
    /// e_i, i in 0..=ℓ (zero-based).
    E(usize),
    /// f_i.
    F(usize),
    /// h_i = a_i∨, acting diagonally.
    H(usize),
    /// ξ_a for a real root in a-coordinates.
    Root(Vec<i64>),
    /// ξ_j(r) = H_j ⊗ t^r, r < 0.
    Imaginary { j: usize, r: i64 },
}

#[derive(Clone, Debug)]
pub struct RepTruncation {
    ws: WeightSystem,
    level_bound: usize,
    weights: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, usize>,
    dims: Vec<usize>,
    gram: Vec<QMatrix>,
    gram_inv: Vec<QMatrix>,
    e: Vec<Op>,
    f: Vec<Op>,
    /// Basis vector k at weight w is f_i applied to basis vector j of its parent.
    words: Vec<Vec<(usize, usize)>>,
    integral: Vec<QMatrix>,
    integral_gram: Vec<QMatrix>,
    real_roots: HashMap<Vec<i64>, Op>,
    imaginary: HashMap<(usize, i64), Op>,
}

fn unit(n: usize, i: usize) -> Vec<i64> {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

impl RepTruncation {
    /// Builds V/V^{N+1}, i.e. all weight spaces of level ≤ N, and checks each
    /// dimension against the Freudenthal multiplicities of `ws`.
    pub fn build(ws: &WeightSystem, level_bound: usize) -> Result<Self> {
        if level_bound > ws.level_bound() {
            return Err(Error::RangeExceeded(format!(
                "weight table reaches level {}, truncation asks for {level_bound}",
                ws.level_bound()
            )));
        }
        let ad = ws.affine().clone();
        let l = ad.rank();
        let lambda = ws.lambda().clone();

        let mut weights: Vec<Vec<i64>> = vec![vec![0; l + 1]];
        let mut index: HashMap<Vec<i64>, usize> = HashMap::from([(weights[0].clone(), 0)]);
        let mut dims = vec![1usize];
        let mut gram = vec![QMatrix::identity(1)];
        let mut words: Vec<Vec<(usize, usize)>> = vec![vec![]];
        let mut e = vec![Op::zero(); l + 1];
        let mut f = vec![Op::zero(); l + 1];

        let mut layer = vec![0usize];
        while !layer.is_empty() {
            let mut candidates: BTreeSet<Vec<i64>> = BTreeSet::new();
            for &w in &layer {
                for i in 0..=l {
                    let mut m = weights[w].clone();
                    m[i] += 1;
                    if m[l] as usize <= level_bound {
                        candidates.insert(m);
                    }
                }
            }
            let mut next = Vec::new();
            for m in candidates {
                // Parents V_{μ+a_i} and grandparents V_{μ+a_j}, with image coordinates.
                let parents: Vec<Option<usize>> = (0..=l)
                    .map(|i| {
                        let mut p = m.clone();
                        p[i] -= 1;
                        index.get(&p).copied()
                    })
                    .collect();
                let mut row_off = vec![0usize; l + 1];
                let mut rows = 0;
                for j in 0..=l {
                    row_off[j] = rows;
                    if let Some(pj) = parents[j] {
                        rows += dims[pj];
                    }
                }
                let mut cand: Vec<(usize, usize)> = Vec::new();
                let mut cols: Vec<Vec<Q>> = Vec::new();
                for i in 0..=l {
                    let Some(pi) = parents[i] else { continue };
                    let h_i = ad.pair_coroot(&ad.sub_simple_combination(&lambda, &weights[pi]), i);
                    for k in 0..dims[pi] {
                        let mut col = vec![Q::zero(); rows];
                        for j in 0..=l {
                            let Some(pj) = parents[j] else { continue };
                            // e_j f_i b = f_i e_j b + δ_ij ⟨μ+a_i, h_i⟩ b
                            let mut gp = weights[pi].clone();
                            gp[j] -= 1;
                            if let Some(&g) = index.get(&gp) {
                                if let (Some(eb), Some(fb)) = (e[j].block(g, pi), f[i].block(pj, g)) {
                                    let v = fb.mul_vec(&eb.col(k));
                                    for (r, x) in v.into_iter().enumerate() {
                                        col[row_off[j] + r] += x;
                                    }
                                }
                            }
                            if i == j {
                                col[row_off[j] + k] += &h_i;
                            }
                        }
                        cand.push((i, k));
                        cols.push(col);
                    }
                }
                if cand.is_empty() || rows == 0 {
                    continue;
                }
                let phi = QMatrix::from_columns(&cols, rows);
                let (rref, pivots) = phi.rref();
                let dim = pivots.len();
                if dim == 0 {
                    continue;
                }
                let expected = ws.mult_m(&m) as usize;
                if expected != dim {
                    return Err(Error::MultiplicityMismatch { expected, found: dim });
                }
                let w = weights.len();
                index.insert(m.clone(), w);
                weights.push(m.clone());
                dims.push(dim);
                words.push(pivots.iter().map(|&c| cand[c]).collect());
                // f_i blocks: candidate coordinates are the rref columns.
                let mut fblocks: Vec<Option<QMatrix>> = vec![None; l + 1];
                for (c, &(i, k)) in cand.iter().enumerate() {
                    let pi = parents[i].unwrap();
                    let blk = fblocks[i].get_or_insert_with(|| QMatrix::zeros(dim, dims[pi]));
                    for r in 0..dim {
                        blk[(r, k)] = rref[(r, c)].clone();
                    }
                }
                for (i, blk) in fblocks.into_iter().enumerate() {
                    if let Some(b) = blk {
                        set_block(&mut f[i], w, parents[i].unwrap(), b);
                    }
                }
                // e_j blocks: the images of the chosen basis.
                for j in 0..=l {
                    let Some(pj) = parents[j] else { continue };
                    let blk = QMatrix::from_fn(dims[pj], dim, |r, c| cols[pivots[c]][row_off[j] + r].clone());
                    if !blk.is_zero() {
                        set_block(&mut e[j], pj, w, blk);
                    }
                }
                // Gram: {f_i b, x} = {b, e_i x}.
                let mut g = QMatrix::zeros(dim, dim);
                for (a, &c) in pivots.iter().enumerate() {
                    let (i, k) = cand[c];
                    let pi = parents[i].unwrap();
                    for b in 0..dim {
                        let ex: Vec<Q> = (0..dims[pi]).map(|r| cols[pivots[b]][row_off[i] + r].clone()).collect();
                        g[(a, b)] = gram[pi].row(k).iter().zip(&ex).map(|(x, y)| x * y).fold(Q::zero(), |s, t| s + t);
                    }
                }
                gram.push(g);
                next.push(w);
            }
            layer = next;
        }

        // Every Freudenthal weight in range must have been reached.
        for (m, &k) in ws.table() {
            if m[l] as usize <= level_bound && !index.contains_key(m) {
                return Err(Error::MultiplicityMismatch { expected: k as usize, found: 0 });
            }
        }

        // Coherent global order: level, then depth, then coordinates.
        let mut order: Vec<usize> = (0..weights.len()).collect();
        order.sort_by(|&a, &b| {
            let (ma, mb) = (&weights[a], &weights[b]);
            ma[l].cmp(&mb[l]).then(height(ma).cmp(&height(mb))).then(ma.cmp(mb))
        });
        let mut rank_of = vec![0; weights.len()];
        for (new, &old) in order.iter().enumerate() {
            rank_of[old] = new;
        }
        let relabel = |op: &Op| -> Op {
            let mut out = Op::zero();
            for (&(t, s), m) in op.blocks() {
                set_block(&mut out, rank_of[t], rank_of[s], m.clone());
            }
            out
        };
        let e: Vec<Op> = e.iter().map(relabel).collect();
        let f: Vec<Op> = f.iter().map(relabel).collect();
        let weights: Vec<Vec<i64>> = order.iter().map(|&o| weights[o].clone()).collect();
        let dims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
        let gram: Vec<QMatrix> = order.iter().map(|&o| gram[o].clone()).collect();
        let words: Vec<Vec<(usize, usize)>> = order
            .iter()
            .map(|&o| words[o].clone())
            .collect();
        let index: HashMap<Vec<i64>, usize> = weights.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let gram_inv: Vec<QMatrix> = gram.iter().map(|g| g.inverse().expect("form is nondegenerate")).collect();

        let mut rt = RepTruncation {
            ws: ws.clone(),
            level_bound,
            weights,
            index,
            dims,
            gram,
            gram_inv,
            e,
            f,
            words,
            integral: Vec::new(),
            integral_gram: Vec::new(),
            real_roots: HashMap::new(),
            imaginary: HashMap::new(),
        };
        rt.build_integral_lattice();
        rt.build_root_vectors()?;
        Ok(rt)
    }

    pub fn weight_system(&self) -> &WeightSystem {
        &self.ws
    }

    pub fn affine(&self) -> &AffineData {
        self.ws.affine()
    }

    pub fn level_bound(&self) -> usize {
        self.level_bound
    }

    pub fn num_weights(&self) -> usize {
        self.weights.len()
    }

    /// m-vector (λ − μ = Σ m_i a_i) of weight index w.
    pub fn weight_m(&self, w: usize) -> &[i64] {
        &self.weights[w]
    }

    pub fn weight_index(&self, m: &[i64]) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn level_of(&self, w: usize) -> usize {
        self.weights[w][self.affine().rank()] as usize
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, w: usize) -> usize {
        self.dims[w]
    }

    /// Weight indices of level exactly n, in the global order.
    pub fn weights_at_level(&self, n: usize) -> Vec<usize> {
        (0..self.weights.len()).filter(|&w| self.level_of(w) == n).collect()
    }

    pub fn weights_up_to_level(&self, n: usize) -> Vec<usize> {
        (0..self.weights.len()).filter(|&w| self.level_of(w) <= n).collect()
    }

    pub fn dim_level(&self, n: usize) -> usize {
        self.weights_at_level(n).iter().map(|&w| self.dims[w]).sum()
    }

    pub fn gram(&self, w: usize) -> &QMatrix {
        &self.gram[w]
    }

    pub fn grams(&self) -> &[QMatrix] {
        &self.gram
    }

    pub fn gram_inverses(&self) -> &[QMatrix] {
        &self.gram_inv
    }

    /// Basis vectors at w as (i, k): f_i applied to basis vector k of the parent.
    pub fn basis_words(&self, w: usize) -> &[(usize, usize)] {
        &self.words[w]
    }

    /// Columns: a ℤ-basis of V_ℤ ∩ V_μ in the rational basis of V_μ.
    pub fn integral_basis(&self, w: usize) -> &QMatrix {
        &self.integral[w]
    }

    pub fn integral_gram(&self, w: usize) -> &QMatrix {
        &self.integral_gram[w]
    }

    pub fn e(&self, i: usize) -> &Op {
        &self.e[i]
    }

    pub fn f(&self, i: usize) -> &Op {
        &self.f[i]
    }

    pub fn identity(&self) -> Op {
        Op::identity(&self.dims)
    }

    /// ⟨μ, a_i∨⟩ at weight index w.
    pub fn coroot_value(&self, w: usize, i: usize) -> Q {
        let ad = self.affine();
        ad.pair_coroot(&self.ws.weight(&self.weights[w]), i)
    }

    pub fn h(&self, i: usize) -> Op {
        Op::diagonal(&self.dims, |w| self.coroot_value(w, i))
    }

    /// Diagonal operator by any function of the weight.
    pub fn diagonal(&self, scalar: impl Fn(usize) -> Q) -> Op {
        Op::diagonal(&self.dims, scalar)
    }

    /// The weight of index w.
    pub fn weight(&self, w: usize) -> crate::cartan::AffineWeight {
        self.ws.weight(&self.weights[w])
    }

    fn build_integral_lattice(&mut self) {
        let l = self.affine().rank();
        let mut integral: Vec<QMatrix> = Vec::with_capacity(self.weights.len());
        for w in 0..self.weights.len() {
            if w == 0 {
                integral.push(QMatrix::identity(1));
                continue;
            }
            let m = self.weights[w].clone();
            let mut gens: Vec<Vec<Q>> = Vec::new();
            for i in 0..=l {
                // f_i^{(p)} applied to V_ℤ at μ + p·a_i
                let mut p = 1i64;
                loop {
                    let mut src = m.clone();
                    src[i] -= p;
                    let Some(s) = self.weight_index(&src) else { break };
                    let mut mat = integral[s].clone();
                    let mut cur = s;
                    let mut ok = true;
                    let mut fact = Q::one();
                    for step in 1..=p {
                        let mut tgt = src.clone();
                        tgt[i] += step;
                        let t = self.index[&tgt];
                        match self.f[i].block(t, cur) {
                            Some(b) => mat = b * &mat,
                            None => {
                                ok = false;
                                break;
                            }
                        }
                        cur = t;
                        fact *= q(step);
                    }
                    if ok {
                        let mat = mat.scale(&(Q::one() / fact));
                        for c in 0..mat.cols() {
                            gens.push(mat.col(c));
                        }
                    }
                    p += 1;
                }
            }
            let basis = rational_lattice_basis(&gens, self.dims[w]);
            assert_eq!(basis.len(), self.dims[w], "V_Z must span each weight space");
            integral.push(QMatrix::from_columns(&basis, self.dims[w]));
        }
        self.integral_gram =
            integral.iter().zip(&self.gram).map(|(b, g)| &(&b.transpose() * g) * b).collect();
        self.integral = integral;
    }

    /// Real and imaginary root vectors E_β ⊗ t^{−m}, H_j ⊗ t^{−m} for m ≤ N,
    /// in a Chevalley normalization; positive ones are adjoints.
    fn build_root_vectors(&mut self) -> Result<()> {
        let ad = self.affine().clone();
        let rs = ad.root_system().clone();
        let l = ad.rank();
        let key = |classical: &[i64], n: i64| ad.root_coords(&AffineRoot { classical: classical.to_vec(), n, real: true, mult: 1 });

        // Classical negative roots: E_{−β−α_i} = [f_i, E_{−β}]/(r+1).
        let mut classical: HashMap<Root, Op> = HashMap::new();
        for i in 0..l {
            classical.insert(unit(l, i).iter().map(|c| -c).collect(), self.f[i].clone());
            classical.insert(unit(l, i), self.e[i].clone());
        }
        for beta in rs.positive_roots() {
            if height(beta) == 1 {
                continue;
            }
            let i = (0..l)
                .find(|&i| beta[i] > 0 && rs.is_root(&beta.iter().enumerate().map(|(k, &c)| c - (k == i) as i64).collect::<Vec<_>>()))
                .expect("every non-simple root has a simple predecessor");
            let gamma: Root = beta.iter().enumerate().map(|(k, &c)| c - (k == i) as i64).collect();
            let r = rs.string_down(&gamma, &unit(l, i));
            let neg_gamma: Root = gamma.iter().map(|c| -c).collect();
            let v = self.f[i].bracket(&classical[&neg_gamma]).scale(&(Q::one() / q(r + 1)));
            let pos = v.adjoint(&self.gram, &self.gram_inv);
            classical.insert(beta.iter().map(|c| -c).collect(), v);
            classical.insert(beta.clone(), pos);
        }
        for (root, op) in &classical {
            self.real_roots.insert(key(root, 0), op.clone());
        }
        if self.level_bound == 0 {
            return Ok(());
        }

        // x ↦ x ⊗ t^{−1} is ad(g)-equivariant; start from f_{ℓ+1} = E_θ ⊗ t^{−1}.
        #[derive(Clone, PartialEq, Eq, Hash, Debug)]
        enum Key {
            R(Root),
            H(usize),
        }
        let h_ops: Vec<Op> = (0..l).map(|j| self.h(j)).collect();
        let classical_op = |k: &Key| -> Op {
            match k {
                Key::R(r) => classical[r].clone(),
                Key::H(j) => h_ops[*j].clone(),
            }
        };
        let mut loop1: HashMap<Key, Op> = HashMap::new();
        let theta = rs.highest_root().clone();
        loop1.insert(Key::R(theta.clone()), self.f[l].clone());
        let mut queue = vec![Key::R(theta)];
        while let Some(src) = queue.pop() {
            for i in 0..l {
                for sign in [1i64, -1] {
                    let g = if sign > 0 { &self.e[i] } else { &self.f[i] };
                    let target = match &src {
                        Key::R(r) => {
                            let t: Root = r.iter().enumerate().map(|(k, &c)| c + sign * (k == i) as i64).collect();
                            if t.iter().all(|&c| c == 0) {
                                Key::H(i)
                            } else if rs.is_root(&t) {
                                Key::R(t)
                            } else {
                                continue;
                            }
                        }
                        Key::H(j) => {
                            if rs.cartan().entry(*j, i) == 0 {
                                continue;
                            }
                            Key::R(unit(l, i).iter().map(|c| sign * c).collect())
                        }
                    };
                    if loop1.contains_key(&target) {
                        continue;
                    }
                    let c = g
                        .bracket(&classical_op(&src))
                        .ratio_to(&classical_op(&target))
                        .ok_or_else(|| Error::RangeExceeded("classical brackets are not faithful on the truncation".into()))?;
                    if c.is_zero() {
                        continue;
                    }
                    let v = g.bracket(&loop1[&src]).scale(&(Q::one() / c));
                    loop1.insert(target.clone(), v);
                    queue.push(target);
                }
            }
        }
        if loop1.len() != 2 * rs.positive_roots().len() + l {
            return Err(Error::RangeExceeded("loop generators did not close up".into()));
        }

        let mut all_roots: Vec<Root> = rs.positive_roots().to_vec();
        all_roots.extend(rs.positive_roots().iter().map(|r| r.iter().map(|c| -c).collect::<Root>()));
        let mut prev_real: HashMap<Root, Op> = HashMap::new();
        let mut prev_imag: Vec<Op> = Vec::new();
        for r in &all_roots {
            prev_real.insert(r.clone(), loop1[&Key::R(r.clone())].clone());
        }
        for j in 0..l {
            prev_imag.push(loop1[&Key::H(j)].clone());
        }
        let h1 = prev_imag.clone();
        for m in 1..=self.level_bound as i64 {
            if m > 1 {
                // E_β ⊗ t^{−m} = [H_j ⊗ t^{−1}, E_β ⊗ t^{−(m−1)}]/⟨β, α_j∨⟩
                let mut next_real = HashMap::new();
                for r in &all_roots {
                    let j = (0..l).find(|&j| rs.pair_simple_coroot(r, j) != 0).unwrap();
                    let c = q(rs.pair_simple_coroot(r, j));
                    next_real.insert(r.clone(), h1[j].bracket(&prev_real[r]).scale(&(Q::one() / c)));
                }
                prev_real = next_real;
                // H_j ⊗ t^{−m} = [E_{α_j} ⊗ t^{−m}, E_{−α_j}]
                prev_imag = (0..l).map(|j| prev_real[&unit(l, j)].bracket(&self.f[j])).collect();
            }
            for (r, op) in &prev_real {
                let neg = op.clone();
                let pos = neg.adjoint(&self.gram, &self.gram_inv);
                let r_neg = key(r, -m);
                let r_pos: Vec<i64> = r_neg.iter().map(|c| -c).collect();
                self.real_roots.insert(r_neg, neg);
                self.real_roots.insert(r_pos, pos);
            }
            for (j, op) in prev_imag.iter().enumerate() {
                self.imaginary.insert((j, -m), op.clone());
                self.imaginary.insert((j, m), op.adjoint(&self.gram, &self.gram_inv));
            }
        }
        Ok(())
    }

    /// ξ_a for a real root a in a-coordinates; zero when |⟨a, d⟩| exceeds N.
    pub fn root_vector(&self, a: &[i64]) -> Result<Op> {
        let ad = self.affine();
        let root = ad.root_from_coords(a)?;
        if !root.real {
            return Err(Error::NotARoot(format!("{a:?} is imaginary")));
        }
        if root.n.unsigned_abs() as usize > self.level_bound {
            return Ok(Op::zero());
        }
        self.real_roots
            .get(a)
            .cloned()
            .ok_or_else(|| Error::RangeExceeded(format!("root vector {a:?} needs level bound ≥ 1")))
    }

    /// ξ_j(r) = H_j ⊗ t^r.
    pub fn imaginary_vector(&self, j: usize, r: i64) -> Result<Op> {
        if j >= self.affine().rank() || r == 0 {
            return Err(Error::UnknownGenerator(format!("xi_{}({r})", j + 1)));
        }
        if r.unsigned_abs() as usize > self.level_bound {
            return Ok(Op::zero());
        }
        self.imaginary
            .get(&(j, r))
            .cloned()
            .ok_or_else(|| Error::RangeExceeded(format!("xi_{}({r}) needs level bound ≥ 1", j + 1)))
    }

    pub fn generator_matrix(&self, g: &Generator) -> Result<Op> {
        let l = self.affine().rank();
        match g {
            Generator::E(i) if *i <= l => Ok(self.e[*i].clone()),
            Generator::F(i) if *i <= l => Ok(self.f[*i].clone()),
            Generator::H(i) if *i <= l => Ok(self.h(*i)),
            Generator::Root(a) => self.root_vector(a).map_err(|e| match e {
                Error::NotARoot(s) => Error::UnknownGenerator(s),
                other => other,
            }),
            Generator::Imaginary { j, r } => self.imaginary_vector(*j, *r),
            other => Err(Error::UnknownGenerator(format!("{other:?}"))),
        }
    }

    /// χ_a(s) = exp(s·ξ_a).
    pub fn chi(&self, a: &[i64], s: &Q) -> Result<Op> {
        Ok(self.root_vector(a)?.exp_nilpotent(s, &self.dims))
    }

    /// w_a(s) = χ_a(s)χ_{−a}(−1/s)χ_a(s) for classical real roots a.
    pub fn w_element(&self, a: &[i64], s: &Q) -> Result<Op> {
        if s.is_zero() {
            return Err(Error::ZeroScalar);
        }
        let root = self.affine().root_from_coords(a)?;
        if root.n != 0 || !root.real {
            return Err(Error::RangeExceeded(format!(
                "w_a is only exact on the truncation for classical roots, got {a:?}"
            )));
        }
        let neg: Vec<i64> = a.iter().map(|c| -c).collect();
        let x = self.chi(a, s)?;
        let y = self.chi(&neg, &(-Q::one() / s))?;
        Ok(x.mul(&y).mul(&x))
    }

    /// h_a(s), acting by s^{⟨μ, a∨⟩}.
    pub fn h_element(&self, a: &[i64], s: &Q) -> Result<Op> {
        if s.is_zero() {
            return Err(Error::ZeroScalar);
        }
        let ad = self.affine();
        let root = ad.root_from_coords(a)?;
        if !root.real {
            return Err(Error::NotARoot(format!("{a:?}")));
        }
        let aw = root_weight(ad, a);
        let norm = ad.inner(&aw, &aw);
        Ok(self.diagonal(|w| {
            let e = q(2) * ad.inner(&self.weight(w), &aw) / &norm;
            q_pow(s, &e)
        }))
    }

    /// η(τ), acting by τ^{⟨μ, d⟩} = τ^{−level}.
    pub fn eta(&self, tau: &Q) -> Result<Op> {
        if tau.is_zero() {
            return Err(Error::ZeroScalar);
        }
        Ok(self.diagonal(|w| q_pow(tau, &q(-(self.level_of(w) as i64)))))
    }

    /// Vectors of V_μ obtained by applying each U_ℤ monomial of the right weight to v_λ.
    pub fn uz_orbit_vectors(&self, monomials: &[UZMonomial], w: usize) -> Result<Vec<Vec<Q>>> {
        let ad = self.affine();
        let target = &self.weights[w];
        let mut out = Vec::new();
        let max_q = monomials
            .iter()
            .flat_map(|m| m.factors.iter())
            .map(|f| match f {
                UZFactor::Imaginary { q, .. } => *q as usize,
                _ => 0,
            })
            .max()
            .unwrap_or(0);
        let lambdas = lambda_polys(max_q);
        for mono in monomials {
            let shift = mono.weight_shift(ad);
            if shift.iter().zip(target).any(|(s, t)| -s != *t) {
                continue;
            }
            let mut op = self.identity();
            for f in &mono.factors {
                let x = match f {
                    UZFactor::DividedPower { root, exponent } => {
                        let xi = self.root_vector(&ad.root_coords(root))?;
                        let mut p = self.identity();
                        for k in 1..=*exponent {
                            p = xi.mul(&p).scale(&(Q::one() / q(k as i64)));
                        }
                        p
                    }
                    UZFactor::Imaginary { r, j, q: qq } => {
                        let vals: Vec<Op> = (1..=*qq as i64)
                            .map(|k| self.imaginary_vector(*j, r * k))
                            .collect::<Result<_>>()?;
                        lambdas[*qq as usize].eval_with(
                            &vals,
                            &self.identity(),
                            |a, b| a.mul(b),
                            |a, b| a.add(b),
                            |a, c| a.scale(c),
                        )?
                    }
                    UZFactor::Binomial { .. } => continue,
                };
                op = op.mul(&x);
            }
            if let Some(b) = op.block(w, 0) {
                out.push(b.col(0));
            }
        }
        Ok(out)
    }

    /// Checks (ad ξ_{±a_i})^{1−Â_ij}(ξ_{±a_j}) = 0 on the truncation.
    pub fn serre_relations_hold(&self) -> bool {
        let ad = self.affine();
        let l = ad.rank();
        for i in 0..=l {
            for j in 0..=l {
                if i == j {
                    continue;
                }
                let k = 1 - ad.affine_cartan()[i][j];
                for (x, y) in [(&self.e[i], &self.e[j]), (&self.f[i], &self.f[j])] {
                    let mut z = y.clone();
                    for _ in 0..k {
                        z = x.bracket(&z);
                    }
                    // Mixed-level products are only exact below the top level.
                    let top = self.level_bound;
                    let z = z.restrict(|t, s| self.level_of(t) < top && self.level_of(s) < top);
                    if !z.is_zero() {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Global integral basis of the levels in `levels`, as a block matrix in the
    /// rational basis, and the corresponding untwisted Gram.
    pub fn integral_gram_of_levels(&self, levels: impl Fn(usize) -> bool) -> QMatrix {
        let ws: Vec<usize> = (0..self.weights.len()).filter(|&w| levels(self.level_of(w))).collect();
        let n: usize = ws.iter().map(|&w| self.dims[w]).sum();
        let mut g = QMatrix::zeros(n, n);
        let mut off = 0;
        for &w in &ws {
            g.set_block(off, off, &self.integral_gram[w]);
            off += self.dims[w];
        }
        g
    }

    pub fn to_json(&self) -> Value {
        let weights: Vec<Value> = (0..self.weights.len())
            .map(|w| {
                let triplets = |m: &QMatrix| -> Vec<Value> {
                    let mut t = Vec::new();
                    for r in 0..m.rows() {
                        for c in 0..m.cols() {
                            if !m[(r, c)].is_zero() {
                                t.push(json!([r, c, fmt_q(&m[(r, c)])]));
                            }
                        }
                    }
                    t
                };
                json!({
                    "m": self.weights[w],
                    "level": self.level_of(w),
                    "dim": self.dims[w],
                    "gram": triplets(&self.gram[w]),
                    "integral_basis": triplets(&self.integral[w]),
                    "integral_gram": triplets(&self.integral_gram[w]),
                })
            })
            .collect();
        let dims: Vec<usize> = (0..=self.level_bound).map(|n| self.dim_level(n)).collect();
        json!({"level_bound": self.level_bound, "level_dims": dims, "weights": weights})
    }
}

fn set_block(op: &mut Op, t: usize, s: usize, m: QMatrix) {
    let cur = op.block(t, s).cloned();
    if let Some(c) = cur {
        op.add_block(t, s, -&c);
    }
    op.add_block(t, s, m);
}

/// The affine weight with the given a-coordinates (no Λ component).
pub(crate) fn root_weight(_ad: &AffineData, a: &[i64]) -> crate::cartan::AffineWeight {
    let mut c: Vec<Q> = a.iter().map(|&x| q(x)).collect();
    c.push(Q::zero());
    crate::cartan::AffineWeight { coords: c }
}

/// s^e for an integral rational exponent.
pub(crate) fn q_pow(s: &Q, e: &Q) -> Q {
    assert!(e.is_integer(), "exponent {e} must be integral");
    let k = e.to_integer().to_i64().expect("small exponent");
    let base = if k < 0 { Q::one() / s } else { s.clone() };
    num::pow(base, k.unsigned_abs() as usize)
}
