//! Finite root systems from Cartan matrices and their untwisted affinizations.

use std::collections::{HashSet, VecDeque};

use num::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{fmt_q, q, QMatrix, Q};

/// A Cartan matrix with A_ij = ⟨α_i∨, α_j⟩.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CartanMatrix {
    entries: Vec<Vec<i64>>,
}

impl CartanMatrix {
    pub fn new(entries: Vec<Vec<i64>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 || entries.iter().any(|r| r.len() != n) {
            return Err(Error::NotFiniteType("matrix must be square and nonempty".into()));
        }
        for i in 0..n {
            if entries[i][i] != 2 {
                return Err(Error::NotFiniteType(format!("diagonal entry {i} is not 2")));
            }
            for j in 0..n {
                if i != j && entries[i][j] > 0 {
                    return Err(Error::NotFiniteType("positive off-diagonal entry".into()));
                }
                if (entries[i][j] == 0) != (entries[j][i] == 0) {
                    return Err(Error::NotFiniteType("zero pattern is not symmetric".into()));
                }
            }
        }
        let m = CartanMatrix { entries };
        // Connectivity.
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if !seen[j] && m.entries[i][j] != 0 {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::NotIrreducible);
        }
        let d = m.symmetrizer()?;
        let b = QMatrix::from_fn(n, n, |i, j| &d[i] * q(m.entries[i][j]));
        if !b.is_positive_definite() {
            return Err(Error::NotFiniteType("symmetrized matrix is not positive definite".into()));
        }
        Ok(m)
    }

    /// d_i with d_i·A_ij symmetric, d_0 = 1; requires connectivity.
    fn symmetrizer(&self) -> Result<Vec<Q>> {
        let n = self.size();
        let mut d: Vec<Option<Q>> = vec![None; n];
        d[0] = Some(Q::one());
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let di = d[i].clone().unwrap();
            for j in 0..n {
                if i == j || self.entries[i][j] == 0 {
                    continue;
                }
                let dj = &di * q(self.entries[i][j]) / q(self.entries[j][i]);
                match &d[j] {
                    None => {
                        d[j] = Some(dj);
                        queue.push_back(j);
                    }
                    Some(x) if *x != dj => return Err(Error::NotFiniteType("not symmetrizable".into())),
                    _ => {}
                }
            }
        }
        Ok(d.into_iter().map(|x| x.unwrap()).collect())
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<i64>] {
        &self.entries
    }

    pub fn a(n: usize) -> Self {
        let mut e = vec![vec![0; n]; n];
        for i in 0..n {
            e[i][i] = 2;
            if i + 1 < n {
                e[i][i + 1] = -1;
                e[i + 1][i] = -1;
            }
        }
        CartanMatrix::new(e).unwrap()
    }

    /// B_n with α_n short.
    pub fn b(n: usize) -> Self {
        assert!(n >= 2);
        let mut e = Self::a(n).entries;
        e[n - 1][n - 2] = -2;
        CartanMatrix::new(e).unwrap()
    }

    /// C_n with α_n long.
    pub fn c(n: usize) -> Self {
        assert!(n >= 2);
        let mut e = Self::a(n).entries;
        e[n - 2][n - 1] = -2;
        CartanMatrix::new(e).unwrap()
    }

    pub fn d(n: usize) -> Self {
        assert!(n >= 4);
        let mut e = Self::a(n).entries;
        e[n - 2][n - 1] = 0;
        e[n - 1][n - 2] = 0;
        e[n - 3][n - 1] = -1;
        e[n - 1][n - 3] = -1;
        CartanMatrix::new(e).unwrap()
    }

    pub fn g2() -> Self {
        CartanMatrix::new(vec![vec![2, -3], vec![-1, 2]]).unwrap()
    }

    pub fn f4() -> Self {
        CartanMatrix::new(vec![vec![2, -1, 0, 0], vec![-1, 2, -1, 0], vec![0, -2, 2, -1], vec![0, 0, -1, 2]]).unwrap()
    }

    /// Parse a type label such as "A1", "B3", "G2" or an explicit matrix "2,-1;-1,2".
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains(',') || s.contains(';') {
            let rows: std::result::Result<Vec<Vec<i64>>, _> = s
                .split(';')
                .map(|r| r.split(',').map(|x| x.trim().parse::<i64>()).collect())
                .collect();
            let rows = rows.map_err(|_| Error::Parse(format!("bad Cartan matrix '{s}'")))?;
            return CartanMatrix::new(rows);
        }
        let (kind, rank) = s.split_at(1);
        let n: usize = rank.parse().map_err(|_| Error::Parse(format!("bad Cartan type '{s}'")))?;
        let bad = || Error::Parse(format!("unsupported Cartan type '{s}'"));
        match (kind.to_ascii_uppercase().as_str(), n) {
            ("A", n) if n >= 1 => Ok(Self::a(n)),
            ("B", n) if n >= 2 => Ok(Self::b(n)),
            ("C", n) if n >= 2 => Ok(Self::c(n)),
            ("D", n) if n >= 4 => Ok(Self::d(n)),
            ("G", 2) => Ok(Self::g2()),
            ("F", 4) => Ok(Self::f4()),
            _ => Err(bad()),
        }
    }
}

pub type Root = Vec<i64>;

#[derive(Clone, Debug)]
pub struct RootSystem {
    cartan: CartanMatrix,
    positive_roots: Vec<Root>,
    highest_root: Root,
    /// (α_i, α_j), normalized so that the highest root has square length 2.
    form: QMatrix,
    root_set: HashSet<Root>,
}

pub fn height(r: &[i64]) -> i64 {
    r.iter().sum()
}

impl RootSystem {
    pub fn new(cartan: CartanMatrix) -> Self {
        let n = cartan.size();
        let simple: Vec<Root> = (0..n).map(|i| unit(n, i)).collect();
        let mut seen: HashSet<Root> = simple.iter().cloned().collect();
        let mut queue: VecDeque<Root> = simple.iter().cloned().collect();
        while let Some(r) = queue.pop_front() {
            for i in 0..n {
                let pair: i64 = (0..n).map(|j| r[j] * cartan.entry(i, j)).sum();
                let mut s = r.clone();
                s[i] -= pair;
                if s.iter().all(|&c| c >= 0) && s.iter().any(|&c| c > 0) && seen.insert(s.clone()) {
                    queue.push_back(s);
                }
            }
        }
        let mut positive_roots: Vec<Root> = seen.into_iter().collect();
        positive_roots.sort_by(|a, b| height(a).cmp(&height(b)).then_with(|| a.cmp(b)));
        let highest_root = positive_roots.last().unwrap().clone();
        let d = cartan.symmetrizer().expect("validated");
        let raw = QMatrix::from_fn(n, n, |i, j| &d[i] * q(cartan.entry(i, j)));
        let theta: Vec<Q> = highest_root.iter().map(|&c| q(c)).collect();
        let scale = q(2) / raw.form(&theta, &theta);
        let form = raw.scale(&scale);
        let mut root_set: HashSet<Root> = positive_roots.iter().cloned().collect();
        for r in &positive_roots {
            root_set.insert(r.iter().map(|c| -c).collect());
        }
        RootSystem { cartan, positive_roots, highest_root, form, root_set }
    }

    pub fn cartan(&self) -> &CartanMatrix {
        &self.cartan
    }

    pub fn rank(&self) -> usize {
        self.cartan.size()
    }

    pub fn positive_roots(&self) -> &[Root] {
        &self.positive_roots
    }

    pub fn highest_root(&self) -> &Root {
        &self.highest_root
    }

    pub fn form(&self) -> &QMatrix {
        &self.form
    }

    pub fn is_root(&self, r: &[i64]) -> bool {
        self.root_set.contains(r)
    }

    pub fn root_count(&self) -> usize {
        2 * self.positive_roots.len()
    }

    pub fn dim_lie_algebra(&self) -> usize {
        self.rank() + self.root_count()
    }

    /// (β, γ) for classical vectors in simple-root coordinates.
    pub fn inner(&self, a: &[Q], b: &[Q]) -> Q {
        self.form.form(a, b)
    }

    pub fn inner_i(&self, a: &[i64], b: &[i64]) -> Q {
        let a: Vec<Q> = a.iter().map(|&x| q(x)).collect();
        let b: Vec<Q> = b.iter().map(|&x| q(x)).collect();
        self.inner(&a, &b)
    }

    /// ⟨β, α_i∨⟩ for β in simple-root coordinates.
    pub fn pair_simple_coroot(&self, beta: &[i64], i: usize) -> i64 {
        (0..self.rank()).map(|j| beta[j] * self.cartan.entry(i, j)).sum()
    }

    /// α∨ over the simple coroots.
    pub fn coroot(&self, alpha: &[i64]) -> Result<Vec<Q>> {
        if !self.is_root(alpha) {
            return Err(Error::NotARoot(format!("{alpha:?}")));
        }
        let norm = self.inner_i(alpha, alpha);
        Ok((0..self.rank())
            .map(|j| q(alpha[j]) * &self.form[(j, j)] / &norm)
            .collect())
    }

    /// ⟨β, α∨⟩ for a root α and any integral vector β.
    pub fn pair_coroot(&self, beta: &[i64], alpha: &[i64]) -> Q {
        let norm = self.inner_i(alpha, alpha);
        q(2) * self.inner_i(beta, alpha) / norm
    }

    /// Largest r ≥ 0 with β − r·γ a root (or zero when β = γ counts as a root).
    pub fn string_down(&self, beta: &[i64], gamma: &[i64]) -> i64 {
        let mut r = 0;
        loop {
            let next: Root = beta.iter().zip(gamma).map(|(b, g)| b - (r + 1) * g).collect();
            if self.is_root(&next) {
                r += 1;
            } else {
                return r;
            }
        }
    }

    /// Weyl dimension formula for the irreducible module with the given Dynkin labels.
    pub fn weyl_dimension(&self, labels: &[i64]) -> Q {
        let mut num = Q::one();
        for a in &self.positive_roots {
            let cor = self.coroot(a).unwrap();
            let top: Q = cor.iter().zip(labels).map(|(c, &l)| c * q(l + 1)).fold(Q::zero(), |x, y| x + y);
            let bot: Q = cor.iter().fold(Q::zero(), |x, y| x + y);
            num *= top / bot;
        }
        num
    }
}

fn unit(n: usize, i: usize) -> Vec<i64> {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

/// Untwisted affine data on the basis {a₁, …, a_{ℓ+1}, Λ_{ℓ+1}}.
#[derive(Clone, Debug)]
pub struct AffineData {
    rs: RootSystem,
    affine_cartan: Vec<Vec<i64>>,
    epsilons: Vec<Q>,
    /// Invariant form on the basis (a₁..a_{ℓ+1}, Λ_{ℓ+1}).
    form: QMatrix,
    /// Coefficients of the central element c over h₁..h_{ℓ+1}.
    central: Vec<Q>,
}

/// An affine weight in the basis (a₁..a_{ℓ+1}, Λ_{ℓ+1}).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AffineWeight {
    pub coords: Vec<Q>,
}

/// The (p, μ̄, n) view of an affine weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightDecomposition {
    pub p: Q,
    pub classical: Vec<Q>,
    pub iota_coeff: Q,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineRoot {
    /// Classical part over α₁..α_ℓ.
    pub classical: Vec<i64>,
    /// Coefficient of ι.
    pub n: i64,
    pub real: bool,
    pub mult: usize,
}

impl AffineRoot {
    pub fn is_positive(&self) -> bool {
        self.n > 0 || (self.n == 0 && self.classical.iter().any(|&c| c > 0))
    }

    pub fn negate(&self) -> AffineRoot {
        AffineRoot { classical: self.classical.iter().map(|c| -c).collect(), n: -self.n, ..self.clone() }
    }
}

impl AffineData {
    pub fn new(rs: RootSystem) -> Self {
        let l = rs.rank();
        let theta: Vec<i64> = rs.highest_root().clone();
        // Classical vectors of α₁..α_ℓ, α_{ℓ+1} = −α₀.
        let vecs: Vec<Vec<i64>> = (0..=l)
            .map(|i| if i < l { unit(l, i) } else { theta.iter().map(|c| -c).collect() })
            .collect();
        let aff: Vec<Vec<i64>> = (0..=l)
            .map(|i| {
                (0..=l)
                    .map(|j| {
                        let v = q(2) * rs.inner_i(&vecs[i], &vecs[j]) / rs.inner_i(&vecs[i], &vecs[i]);
                        assert!(v.is_integer());
                        v.to_integer().try_into().unwrap()
                    })
                    .collect()
            })
            .collect();
        let epsilons: Vec<Q> = (0..=l).map(|i| q(2) / rs.inner_i(&vecs[i], &vecs[i])).collect();
        let mut form = QMatrix::zeros(l + 2, l + 2);
        for i in 0..=l {
            for j in 0..=l {
                form[(i, j)] = q(aff[i][j]) / &epsilons[i];
            }
        }
        form[(l, l + 1)] = Q::one() / &epsilons[l];
        form[(l + 1, l)] = Q::one() / &epsilons[l];
        let mut central: Vec<Q> = (0..l).map(|i| q(theta[i]) / &epsilons[i]).collect();
        central.push(Q::one());
        AffineData { rs, affine_cartan: aff, epsilons, form, central }
    }

    pub fn from_cartan(c: CartanMatrix) -> Self {
        AffineData::new(RootSystem::new(c))
    }

    pub fn root_system(&self) -> &RootSystem {
        &self.rs
    }

    /// ℓ.
    pub fn rank(&self) -> usize {
        self.rs.rank()
    }

    pub fn affine_cartan(&self) -> &[Vec<i64>] {
        &self.affine_cartan
    }

    pub fn epsilons(&self) -> &[Q] {
        &self.epsilons
    }

    pub fn form(&self) -> &QMatrix {
        &self.form
    }

    pub fn central(&self) -> &[Q] {
        &self.central
    }

    /// ι over a₁..a_{ℓ+1}.
    pub fn iota_coords(&self) -> Vec<i64> {
        let mut v = self.rs.highest_root().clone();
        v.push(1);
        v
    }

    pub fn simple(&self, i: usize) -> AffineWeight {
        let mut c = vec![Q::zero(); self.rank() + 2];
        c[i] = Q::one();
        AffineWeight { coords: c }
    }

    pub fn lambda_top(&self) -> AffineWeight {
        let mut c = vec![Q::zero(); self.rank() + 2];
        c[self.rank() + 1] = Q::one();
        AffineWeight { coords: c }
    }

    pub fn iota(&self) -> AffineWeight {
        let mut c: Vec<Q> = self.iota_coords().into_iter().map(q).collect();
        c.push(Q::zero());
        AffineWeight { coords: c }
    }

    pub fn zero_weight(&self) -> AffineWeight {
        AffineWeight { coords: vec![Q::zero(); self.rank() + 2] }
    }

    pub fn inner(&self, a: &AffineWeight, b: &AffineWeight) -> Q {
        self.form.form(&a.coords, &b.coords)
    }

    /// ⟨μ, h_j⟩ = ⟨μ, a_j∨⟩.
    pub fn pair_coroot(&self, mu: &AffineWeight, j: usize) -> Q {
        let l = self.rank();
        let mut s = Q::zero();
        for i in 0..=l {
            if !mu.coords[i].is_zero() {
                s += &mu.coords[i] * q(self.affine_cartan[j][i]);
            }
        }
        if j == l {
            s += &mu.coords[l + 1];
        }
        s
    }

    pub fn pair_d(&self, mu: &AffineWeight) -> Q {
        mu.coords[self.rank()].clone()
    }

    pub fn pair_c(&self, mu: &AffineWeight) -> Q {
        mu.coords[self.rank() + 1].clone()
    }

    /// The dominant weight with ⟨λ, h_i⟩ = labels[i] and ⟨λ, d⟩ = 0.
    pub fn weight_from_labels(&self, labels: &[i64]) -> Result<AffineWeight> {
        let l = self.rank();
        if labels.len() != l + 1 {
            return Err(Error::Parse(format!("expected {} Dynkin labels, got {}", l + 1, labels.len())));
        }
        let a = QMatrix::from_fn(l, l, |j, i| q(self.affine_cartan[j][i]));
        let rhs = QMatrix::from_fn(l, 1, |j, _| q(labels[j]));
        let x = a.solve(&rhs).ok_or(Error::SingularInput)?;
        let mut coords: Vec<Q> = (0..l).map(|i| x[(i, 0)].clone()).collect();
        let y = q(labels[l]) - (0..l).map(|i| &x[(i, 0)] * q(self.affine_cartan[l][i])).fold(Q::zero(), |s, t| s + t);
        coords.push(Q::zero());
        coords.push(y);
        Ok(AffineWeight { coords })
    }

    pub fn labels(&self, mu: &AffineWeight) -> Vec<Q> {
        (0..=self.rank()).map(|j| self.pair_coroot(mu, j)).collect()
    }

    pub fn is_dominant_integral(&self, mu: &AffineWeight) -> bool {
        self.labels(mu).iter().all(|x| x.is_integer() && !x.is_negative())
    }

    pub fn affine_reflection(&self, i: usize, mu: &AffineWeight) -> Result<AffineWeight> {
        if i > self.rank() {
            return Err(Error::IndexOutOfRange(i + 1));
        }
        let p = self.pair_coroot(mu, i);
        let mut c = mu.coords.clone();
        c[i] -= p;
        Ok(AffineWeight { coords: c })
    }

    pub fn decompose_weight(&self, mu: &AffineWeight) -> WeightDecomposition {
        let l = self.rank();
        let n = mu.coords[l].clone();
        let theta = self.rs.highest_root();
        let classical = (0..l).map(|i| &mu.coords[i] - &n * q(theta[i])).collect();
        WeightDecomposition { p: mu.coords[l + 1].clone(), classical, iota_coeff: n }
    }

    pub fn recompose_weight(&self, d: &WeightDecomposition) -> AffineWeight {
        let l = self.rank();
        let theta = self.rs.highest_root();
        let mut coords: Vec<Q> = (0..l).map(|i| &d.classical[i] + &d.iota_coeff * q(theta[i])).collect();
        coords.push(d.iota_coeff.clone());
        coords.push(d.p.clone());
        AffineWeight { coords }
    }

    /// |μ̄|² of the classical projection.
    pub fn classical_norm_sq(&self, mu: &AffineWeight) -> Q {
        let d = self.decompose_weight(mu);
        self.rs.inner(&d.classical, &d.classical)
    }

    /// (depth, level) of μ ≼ λ.
    pub fn depth_level(&self, lambda: &AffineWeight, mu: &AffineWeight) -> Result<(i64, i64)> {
        let m = self.dominance_vector(lambda, mu)?;
        Ok((m.iter().sum(), m[self.rank()]))
    }

    /// The integers m_i ≥ 0 with λ − μ = Σ m_i a_i.
    pub fn dominance_vector(&self, lambda: &AffineWeight, mu: &AffineWeight) -> Result<Vec<i64>> {
        let l = self.rank();
        if lambda.coords[l + 1] != mu.coords[l + 1] {
            return Err(Error::NotDominated);
        }
        let mut m = Vec::with_capacity(l + 1);
        for i in 0..=l {
            let d = &lambda.coords[i] - &mu.coords[i];
            if !d.is_integer() || d.is_negative() {
                return Err(Error::NotDominated);
            }
            m.push(d.to_integer().try_into().map_err(|_| Error::NotDominated)?);
        }
        Ok(m)
    }

    pub fn sub_simple_combination(&self, lambda: &AffineWeight, m: &[i64]) -> AffineWeight {
        let mut c = lambda.coords.clone();
        for (i, &k) in m.iter().enumerate() {
            c[i] -= q(k);
        }
        AffineWeight { coords: c }
    }

    pub fn in_tits_cone(&self, mu: &AffineWeight) -> bool {
        self.pair_c(mu).is_positive()
    }

    /// Coordinates of a root over a₁..a_{ℓ+1}.
    pub fn root_coords(&self, r: &AffineRoot) -> Vec<i64> {
        let theta = self.rs.highest_root();
        let mut v: Vec<i64> = (0..self.rank()).map(|i| r.classical[i] + r.n * theta[i]).collect();
        v.push(r.n);
        v
    }

    /// Inverse of [`root_coords`](Self::root_coords) for a coefficient vector over a₁..a_{ℓ+1}.
    pub fn root_from_coords(&self, v: &[i64]) -> Result<AffineRoot> {
        let l = self.rank();
        if v.len() != l + 1 {
            return Err(Error::NotARoot(format!("{v:?}")));
        }
        let theta = self.rs.highest_root();
        let n = v[l];
        let classical: Vec<i64> = (0..l).map(|i| v[i] - n * theta[i]).collect();
        if classical.iter().all(|&c| c == 0) {
            if n == 0 {
                return Err(Error::NotARoot(format!("{v:?}")));
            }
            return Ok(AffineRoot { classical, n, real: false, mult: l });
        }
        if !self.rs.is_root(&classical) {
            return Err(Error::NotARoot(format!("{v:?}")));
        }
        Ok(AffineRoot { classical, n, real: true, mult: 1 })
    }

    /// Positive affine roots with ι-coefficient at most `n_max`.
    pub fn affine_roots_up_to(&self, n_max: usize) -> Vec<AffineRoot> {
        let l = self.rank();
        let mut out = Vec::new();
        for n in 0..=n_max as i64 {
            if n == 0 {
                for r in self.rs.positive_roots() {
                    out.push(AffineRoot { classical: r.clone(), n, real: true, mult: 1 });
                }
                continue;
            }
            let mut reals: Vec<Root> = Vec::new();
            for r in self.rs.positive_roots() {
                reals.push(r.iter().map(|c| -c).collect());
                reals.push(r.clone());
            }
            reals.sort_by(|a, b| height(a).cmp(&height(b)).then_with(|| a.cmp(b)));
            for r in reals {
                out.push(AffineRoot { classical: r, n, real: true, mult: 1 });
            }
            out.push(AffineRoot { classical: vec![0; l], n, real: false, mult: l });
        }
        out
    }

    /// ⟨μ, a∨⟩ for a real affine root a, with a∨ = α∨ + (2n/(α,α))·c.
    pub fn pair_real_coroot(&self, mu: &AffineWeight, a: &AffineRoot) -> Q {
        let d = self.decompose_weight(mu);
        let alpha_q: Vec<Q> = a.classical.iter().map(|&x| q(x)).collect();
        let norm = self.rs.inner(&alpha_q, &alpha_q);
        q(2) * self.rs.inner(&d.classical, &alpha_q) / &norm + q(2 * a.n) * &d.p / norm
    }

    pub fn to_json(&self) -> Value {
        let form: Vec<Vec<String>> = self.form.to_rows().iter().map(|r| r.iter().map(fmt_q).collect()).collect();
        json!({
            "rank": self.rank(),
            "cartan": self.rs.cartan().entries(),
            "affine_cartan": self.affine_cartan,
            "epsilons": self.epsilons.iter().map(fmt_q).collect::<Vec<_>>(),
            "form": form,
            "iota": self.iota_coords(),
            "highest_root": self.rs.highest_root(),
        })
    }
}

pub fn roots_json(rs: &RootSystem) -> Value {
    let roots: Vec<Value> = rs
        .positive_roots()
        .iter()
        .map(|r| json!({"root": r, "height": height(r), "type": "real", "mult": 1}))
        .collect();
    let form: Vec<Vec<String>> = rs.form().to_rows().iter().map(|r| r.iter().map(fmt_q).collect()).collect();
    json!({
        "rank": rs.rank(),
        "cartan": rs.cartan().entries(),
        "positive_roots": roots,
        "highest_root": rs.highest_root(),
        "form": form,
    })
}

pub fn affine_roots_json(ad: &AffineData, n_max: usize) -> Value {
    let roots: Vec<Value> = ad
        .affine_roots_up_to(n_max)
        .iter()
        .map(|r| {
            json!({
                "classical": r.classical,
                "iota": r.n,
                "coords": ad.root_coords(r),
                "type": if r.real { "real" } else { "imaginary" },
                "mult": r.mult,
            })
        })
        .collect();
    json!({"affine": ad.to_json(), "roots": roots})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::qf;

    /// Independent root oracle: integer vectors in a box whose square length is one
    /// of the simple-root lengths and which pair integrally with every coroot.
    fn brute_roots(rs: &RootSystem, bound: i64) -> usize {
        let n = rs.rank();
        let lengths: HashSet<Q> = (0..n).map(|i| rs.form()[(i, i)].clone()).collect();
        let mut count = 0;
        let total = (2 * bound + 1).pow(n as u32);
        for code in 0..total {
            let mut v = Vec::with_capacity(n);
            let mut c = code;
            for _ in 0..n {
                v.push(c % (2 * bound + 1) - bound);
                c /= 2 * bound + 1;
            }
            if v.iter().all(|&x| x == 0) {
                continue;
            }
            if !(v.iter().all(|&x| x >= 0) || v.iter().all(|&x| x <= 0)) {
                continue;
            }
            let norm = rs.inner_i(&v, &v);
            if !lengths.contains(&norm) {
                continue;
            }
            // String test: α_i-string through v must stay in the weight lattice.
            let ok = (0..n).all(|i| (q(2) * rs.inner_i(&v, &unit(n, i)) / &norm).is_integer());
            if ok {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn root_counts() {
        let a1 = RootSystem::new(CartanMatrix::a(1));
        assert_eq!(a1.positive_roots(), &[vec![1]]);
        let a2 = RootSystem::new(CartanMatrix::a(2));
        assert_eq!(a2.positive_roots(), &[vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(a2.highest_root(), &vec![1, 1]);
        assert_eq!(a2.root_count(), 6);
        assert_eq!(brute_roots(&a2, 3), 6);
        for c in [CartanMatrix::b(2), CartanMatrix::c(2)] {
            let rs = RootSystem::new(c);
            assert_eq!(rs.positive_roots().len(), 4);
            assert_eq!(height(rs.highest_root()), 3);
            assert_eq!(rs.root_count(), 8);
            assert_eq!(brute_roots(&rs, 3), 8);
        }
        assert_eq!(RootSystem::new(CartanMatrix::g2()).root_count(), 12);
        assert_eq!(RootSystem::new(CartanMatrix::f4()).root_count(), 48);
        assert_eq!(RootSystem::new(CartanMatrix::d(4)).root_count(), 24);
    }

    #[test]
    fn highest_root_is_normalized_and_positive() {
        for c in [CartanMatrix::a(3), CartanMatrix::b(3), CartanMatrix::c(3), CartanMatrix::g2(), CartanMatrix::f4()] {
            let rs = RootSystem::new(c);
            let t = rs.highest_root().clone();
            assert!(t.iter().all(|&x| x > 0));
            assert_eq!(rs.inner_i(&t, &t), q(2));
            for r in rs.positive_roots() {
                assert!(r.iter().all(|&x| x >= 0));
            }
        }
    }

    #[test]
    fn coroots() {
        let a2 = RootSystem::new(CartanMatrix::a(2));
        assert_eq!(a2.coroot(&[1, 0]).unwrap(), vec![q(1), q(0)]);
        assert_eq!(a2.coroot(&[1, 1]).unwrap(), vec![q(1), q(1)]);
        assert!(matches!(a2.coroot(&[2, 0]), Err(Error::NotARoot(_))));
        for c in [CartanMatrix::b(3), CartanMatrix::g2()] {
            let rs = RootSystem::new(c);
            for r in rs.positive_roots() {
                let cor = rs.coroot(r).unwrap();
                let pairing: Q = (0..rs.rank())
                    .map(|j| &cor[j] * q(rs.pair_simple_coroot(r, j)))
                    .fold(Q::zero(), |a, b| a + b);
                assert_eq!(pairing, q(2));
            }
        }
    }

    #[test]
    fn affinization() {
        let a1 = AffineData::from_cartan(CartanMatrix::a(1));
        assert_eq!(a1.affine_cartan(), &[vec![2, -2], vec![-2, 2]]);
        let a2 = AffineData::from_cartan(CartanMatrix::a(2));
        assert_eq!(a2.affine_cartan(), &[vec![2, -1, -1], vec![-1, 2, -1], vec![-1, -1, 2]]);
        assert!(a2.epsilons().iter().all(|e| *e == q(1)));
        for c in [CartanMatrix::b(2), CartanMatrix::c(3), CartanMatrix::g2()] {
            let ad = AffineData::from_cartan(c.clone());
            let l = ad.rank();
            for i in 0..l {
                for j in 0..l {
                    assert_eq!(ad.affine_cartan()[i][j], c.entry(i, j));
                }
            }
            // diag(ε)·form = Â
            for i in 0..=l {
                for j in 0..=l {
                    assert_eq!(&ad.epsilons()[i] * &ad.form()[(i, j)], q(ad.affine_cartan()[i][j]));
                }
            }
            let iota = ad.iota();
            assert_eq!(ad.inner(&iota, &iota), q(0));
            for i in 0..l {
                assert_eq!(ad.inner(&iota, &ad.simple(i)), q(0));
            }
            let lam = ad.lambda_top();
            assert_eq!(ad.inner(&lam, &lam), q(0));
            assert_eq!(ad.inner(&ad.simple(l), &lam), q(1));
            for j in 0..=l {
                assert_eq!(ad.pair_c(&ad.simple(j)), q(0));
            }
        }
    }

    #[test]
    fn affine_roots() {
        let a1 = AffineData::from_cartan(CartanMatrix::a(1));
        let r0 = a1.affine_roots_up_to(0);
        assert_eq!(r0.len(), 1);
        let r1 = a1.affine_roots_up_to(1);
        let coords: Vec<Vec<i64>> = r1.iter().map(|r| a1.root_coords(r)).collect();
        assert_eq!(coords, vec![vec![1, 0], vec![0, 1], vec![2, 1], vec![1, 1]]);
        assert_eq!(r1.iter().filter(|r| !r.real).count(), 1);
        let a2 = AffineData::from_cartan(CartanMatrix::a(2));
        let roots = a2.affine_roots_up_to(3);
        for n in 1..=3 {
            assert_eq!(roots.iter().filter(|r| r.real && r.n == n).count(), 6);
            assert_eq!(roots.iter().find(|r| !r.real && r.n == n).unwrap().mult, 2);
        }
    }

    #[test]
    fn reflections() {
        let ad = AffineData::from_cartan(CartanMatrix::a(2));
        for i in 0..3 {
            let ai = ad.simple(i);
            let neg = AffineWeight { coords: ai.coords.iter().map(|x| -x).collect() };
            assert_eq!(ad.affine_reflection(i, &ai).unwrap(), neg);
            assert_eq!(ad.affine_reflection(i, &ad.iota()).unwrap(), ad.iota());
        }
        assert!(matches!(ad.affine_reflection(3, &ad.iota()), Err(Error::IndexOutOfRange(_))));
    }

    #[test]
    fn decompositions() {
        let ad = AffineData::from_cartan(CartanMatrix::a(1));
        let lam = ad.lambda_top();
        let d = ad.decompose_weight(&lam);
        assert_eq!((d.p, d.classical, d.iota_coeff), (q(1), vec![q(0)], q(0)));
        let mu = ad.sub_simple_combination(&lam, &[1, 0]);
        let d = ad.decompose_weight(&mu);
        assert_eq!((d.p.clone(), d.classical.clone(), d.iota_coeff.clone()), (q(1), vec![q(-1)], q(0)));
        let mu = ad.sub_simple_combination(&lam, &[0, 1]);
        let d = ad.decompose_weight(&mu);
        assert_eq!((d.p.clone(), d.classical.clone(), d.iota_coeff.clone()), (q(1), vec![q(1)], q(-1)));
        assert_eq!(ad.recompose_weight(&d), mu);
    }

    #[test]
    fn depth_and_level() {
        let ad = AffineData::from_cartan(CartanMatrix::a(1));
        let lam = ad.lambda_top();
        assert_eq!(ad.depth_level(&lam, &lam).unwrap(), (0, 0));
        let mu = ad.sub_simple_combination(&lam, &[1, 2]);
        assert_eq!(ad.depth_level(&lam, &mu).unwrap(), (3, 2));
        let iota = ad.iota();
        let mu = AffineWeight { coords: lam.coords.iter().zip(&iota.coords).map(|(a, b)| a - b).collect() };
        assert_eq!(ad.depth_level(&lam, &mu).unwrap(), (2, 1));
        let up = ad.sub_simple_combination(&lam, &[-1, 0]);
        assert_eq!(ad.depth_level(&lam, &up), Err(Error::NotDominated));
    }

    #[test]
    fn tits_cone() {
        let ad = AffineData::from_cartan(CartanMatrix::a(1));
        assert!(ad.in_tits_cone(&ad.lambda_top()));
        assert!(!ad.in_tits_cone(&ad.zero_weight()));
        let neg = AffineWeight { coords: ad.lambda_top().coords.iter().map(|x| -x).collect() };
        assert!(!ad.in_tits_cone(&neg));
    }

    #[test]
    fn labels_roundtrip() {
        let ad = AffineData::from_cartan(CartanMatrix::b(2));
        let w = ad.weight_from_labels(&[1, 2, 1]).unwrap();
        assert_eq!(ad.labels(&w), vec![q(1), q(2), q(1)]);
        assert_eq!(ad.pair_d(&w), q(0));
        let a1 = AffineData::from_cartan(CartanMatrix::a(1));
        assert_eq!(a1.weight_from_labels(&[0, 1]).unwrap(), a1.lambda_top());
        let lam1 = a1.weight_from_labels(&[1, 0]).unwrap();
        assert_eq!(lam1.coords, vec![qf(1, 2), q(0), q(1)]);
    }

    #[test]
    fn weyl_dimension() {
        let a2 = RootSystem::new(CartanMatrix::a(2));
        assert_eq!(a2.weyl_dimension(&[1, 1]), q(8));
        assert_eq!(a2.weyl_dimension(&[1, 0]), q(3));
        let g2 = RootSystem::new(CartanMatrix::g2());
        assert_eq!(g2.weyl_dimension(&[0, 1]), q(14));
    }
}
