//! Loop-group words χ_a(s), h_a(s), w_a(s), η(τ) acting on a truncation.

use std::fmt;

use nalgebra::DMatrix;
use num::{One, Zero};

use super::{q_pow, root_weight, Op, RepTruncation};
use crate::cartan::{height, AffineData};
use crate::error::{Error, Result};
use crate::linalg::{fmt_q, parse_q, q, QMatrix, Q};

#[derive(Clone, Debug, PartialEq)]
pub enum Factor {
    Chi { root: Vec<i64>, s: Q },
    H { root: Vec<i64>, s: Q },
    W { root: Vec<i64>, s: Q },
    Eta { tau: Q },
}

/// A finite word in the loop group; factors multiply left to right.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GroupElement {
    pub factors: Vec<Factor>,
}

/// x = u⁻·h·η(τ) with u⁻ a word of negative real-root unipotents.
#[derive(Clone, Debug, PartialEq)]
pub struct IwasawaForm {
    pub unipotent: Vec<(Vec<i64>, Q)>,
    pub torus: Vec<(Vec<i64>, Q)>,
    pub tau: Q,
}

fn fmt_root(a: &[i64]) -> String {
    let mut s = String::new();
    for (i, &c) in a.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let sign = if c < 0 { "-" } else if s.is_empty() { "" } else { "+" };
        let mag = if c.abs() == 1 { String::new() } else { c.abs().to_string() };
        s.push_str(&format!("{sign}{mag}a{}", i + 1));
    }
    if s.is_empty() {
        "0".into()
    } else {
        s
    }
}

/// Parses "a1", "-a2", "a1+2a2", "-a1-a2", "iota" into a-coordinates and checks
/// the result is a real root.
pub fn parse_root(text: &str, ad: &AffineData) -> Result<Vec<i64>> {
    let n = ad.rank() + 1;
    let mut v = vec![0i64; n];
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(Error::Parse("empty root".into()));
    }
    let mut terms: Vec<(i64, &str)> = Vec::new();
    let mut start = 0;
    let bytes = t.as_bytes();
    for k in 1..=bytes.len() {
        if k == bytes.len() || bytes[k] == b'+' || bytes[k] == b'-' {
            let piece = &t[start..k];
            let (sign, body) = match piece.as_bytes()[0] {
                b'-' => (-1, &piece[1..]),
                b'+' => (1, &piece[1..]),
                _ => (1, piece),
            };
            terms.push((sign, body));
            start = k;
        }
    }
    for (sign, body) in terms {
        let split = body.find(|c: char| c.is_ascii_alphabetic()).ok_or_else(|| Error::Parse(format!("bad root '{text}'")))?;
        let coef: i64 = if split == 0 {
            1
        } else {
            body[..split].parse().map_err(|_| Error::Parse(format!("bad root '{text}'")))?
        };
        let name = &body[split..];
        if name == "iota" || name == "delta" {
            for (x, c) in v.iter_mut().zip(ad.iota_coords()) {
                *x += sign * coef * c;
            }
            continue;
        }
        let idx: usize = name
            .strip_prefix('a')
            .and_then(|d| d.parse().ok())
            .filter(|&i| (1..=n).contains(&i))
            .ok_or_else(|| Error::Parse(format!("bad simple root '{name}' in '{text}'")))?;
        v[idx - 1] += sign * coef;
    }
    let r = ad.root_from_coords(&v).map_err(|_| Error::Parse(format!("'{text}' is not a root")))?;
    if !r.real {
        return Err(Error::Parse(format!("'{text}' is an imaginary root")));
    }
    Ok(v)
}

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement::default()
    }

    /// Parses words such as "h(a1,2);chi(-a1,1);eta(1/2)" or "w(a1,1)".
    pub fn parse(text: &str, ad: &AffineData) -> Result<Self> {
        let mut factors = Vec::new();
        for raw in text.split([';', '*']) {
            let f = raw.trim();
            if f.is_empty() || f == "1" || f == "id" {
                continue;
            }
            let open = f.find('(').ok_or_else(|| Error::Parse(format!("bad factor '{f}'")))?;
            if !f.ends_with(')') {
                return Err(Error::Parse(format!("bad factor '{f}'")));
            }
            let name = f[..open].trim();
            let args: Vec<&str> = f[open + 1..f.len() - 1].split(',').map(str::trim).collect();
            let scalar = |s: &str| parse_q(s).ok_or_else(|| Error::Parse(format!("bad scalar '{s}'")));
            let factor = match (name, args.as_slice()) {
                ("eta", [t]) => Factor::Eta { tau: scalar(t)? },
                ("chi", [r, s]) => Factor::Chi { root: parse_root(r, ad)?, s: scalar(s)? },
                ("h", [r, s]) => Factor::H { root: parse_root(r, ad)?, s: scalar(s)? },
                ("w", [r, s]) => Factor::W { root: parse_root(r, ad)?, s: scalar(s)? },
                _ => return Err(Error::Parse(format!("unknown factor '{f}'"))),
            };
            factors.push(factor);
        }
        Ok(GroupElement { factors })
    }

    pub fn then(mut self, other: &GroupElement) -> Self {
        self.factors.extend(other.factors.iter().cloned());
        self
    }

    /// The action on the truncation.
    pub fn matrix(&self, rt: &RepTruncation) -> Result<Op> {
        let mut op = rt.identity();
        for f in &self.factors {
            let x = match f {
                Factor::Chi { root, s } => rt.chi(root, s)?,
                Factor::H { root, s } => rt.h_element(root, s)?,
                Factor::W { root, s } => rt.w_element(root, s)?,
                Factor::Eta { tau } => rt.eta(tau)?,
            };
            op = op.mul(&x);
        }
        Ok(op)
    }

    /// Moves torus and η factors to the right using T·χ_a(s) = χ_a(T^a·s)·T.
    pub fn iwasawa_form(&self, ad: &AffineData) -> Result<IwasawaForm> {
        let mut unipotent = Vec::new();
        let mut torus: Vec<(Vec<i64>, Q)> = Vec::new();
        let mut tau = Q::one();
        for f in &self.factors {
            match f {
                Factor::Chi { root, s } => {
                    let r = ad.root_from_coords(root)?;
                    if !r.real || r.is_positive() {
                        return Err(Error::NotIwasawaForm(format!("χ factor on positive root {}", fmt_root(root))));
                    }
                    let mut scale = q_pow(&tau, &q(root[ad.rank()]));
                    let aw = root_weight(ad, root);
                    for (b, sb) in &torus {
                        let bw = root_weight(ad, b);
                        let e = q(2) * ad.inner(&aw, &bw) / ad.inner(&bw, &bw);
                        scale *= q_pow(sb, &e);
                    }
                    unipotent.push((root.clone(), s * scale));
                }
                Factor::H { root, s } => {
                    if s.is_zero() {
                        return Err(Error::ZeroScalar);
                    }
                    torus.push((root.clone(), s.clone()));
                }
                Factor::Eta { tau: t } => {
                    if t.is_zero() {
                        return Err(Error::ZeroScalar);
                    }
                    tau *= t;
                }
                Factor::W { root, .. } => {
                    return Err(Error::NotIwasawaForm(format!("w factor on {}", fmt_root(root))));
                }
            }
        }
        Ok(IwasawaForm { unipotent, torus, tau })
    }
}

impl IwasawaForm {
    pub fn to_element(&self) -> GroupElement {
        let mut factors: Vec<Factor> =
            self.unipotent.iter().map(|(r, s)| Factor::Chi { root: r.clone(), s: s.clone() }).collect();
        factors.extend(self.torus.iter().map(|(r, s)| Factor::H { root: r.clone(), s: s.clone() }));
        factors.push(Factor::Eta { tau: self.tau.clone() });
        GroupElement { factors }
    }

    /// x^μ for the torus and rotation part.
    pub fn torus_scalar(&self, ad: &AffineData, mu: &crate::cartan::AffineWeight) -> Result<Q> {
        torus_scalar(ad, &self.torus, &self.tau, mu)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|x| match x {
                Factor::Chi { root, s } => format!("chi({},{})", fmt_root(root), fmt_q(s)),
                Factor::H { root, s } => format!("h({},{})", fmt_root(root), fmt_q(s)),
                Factor::W { root, s } => format!("w({},{})", fmt_root(root), fmt_q(s)),
                Factor::Eta { tau } => format!("eta({})", fmt_q(tau)),
            })
            .collect();
        if parts.is_empty() {
            write!(f, "id")
        } else {
            write!(f, "{}", parts.join(";"))
        }
    }
}

/// Π s_b^{⟨μ, b∨⟩} · τ^{⟨μ, d⟩} for torus factors h_b(s_b) and η(τ).
pub fn torus_scalar(ad: &AffineData, torus: &[(Vec<i64>, Q)], tau: &Q, mu: &crate::cartan::AffineWeight) -> Result<Q> {
    if tau.is_zero() || torus.iter().any(|(_, s)| s.is_zero()) {
        return Err(Error::ZeroScalar);
    }
    let mut x = q_pow(tau, &ad.pair_d(mu));
    for (b, s) in torus {
        let bw = root_weight(ad, b);
        let e = q(2) * ad.inner(mu, &bw) / ad.inner(&bw, &bw);
        x *= q_pow(s, &e);
    }
    Ok(x)
}

/// The level-preserving factor u⁻(0) of a negative unipotent word, as a product
/// of classical χ_{−β}(s_β) in height-then-lexicographic order on β.
pub fn uminus_zero(rt: &RepTruncation, word: &[(Vec<i64>, Q)]) -> Result<Vec<(Vec<i64>, Q)>> {
    let ad = rt.affine();
    let l = ad.rank();
    let mut op = rt.identity();
    for (a, s) in word {
        let r = ad.root_from_coords(a).map_err(|_| Error::NotUnipotentWord)?;
        if !r.real || r.is_positive() {
            return Err(Error::NotUnipotentWord);
        }
        op = op.mul(&rt.chi(a, s)?);
    }
    let mut d = op.restrict(|t, s| rt.level_of(t) == rt.level_of(s));
    let mut out = Vec::new();
    for beta in ad.root_system().positive_roots() {
        let mut neg: Vec<i64> = beta.iter().map(|c| -c).collect();
        neg.push(0);
        let xi = rt.root_vector(&neg)?;
        let shifted = |t: usize, s: usize| {
            let (mt, ms) = (rt.weight_m(t), rt.weight_m(s));
            (0..l).all(|k| mt[k] - ms[k] == beta[k]) && mt[l] == ms[l]
        };
        let comp = d.restrict(shifted);
        if xi.is_zero() {
            if comp.is_zero() {
                continue;
            }
            return Err(Error::FactorizationFailure(format!("no root vector for -{beta:?} on the truncation")));
        }
        let s = comp
            .ratio_to(&xi)
            .ok_or_else(|| Error::FactorizationFailure(format!("component along -{beta:?} is not a root vector")))?;
        if s.is_zero() {
            continue;
        }
        d = rt.chi(&neg, &-s.clone())?.mul(&d);
        out.push((neg, s));
    }
    if d != rt.identity() {
        return Err(Error::FactorizationFailure("residual after peeling all classical roots".into()));
    }
    debug_assert!(out.windows(2).all(|w| height(&w[0].0) >= height(&w[1].0)));
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct IwasawaFactors {
    /// Isometry for the contravariant form.
    pub k: DMatrix<f64>,
    /// Upper triangular with positive diagonal.
    pub b: DMatrix<f64>,
}

/// M = K·B on V/V^{n+1} with K an isometry of the contravariant form and B
/// upper triangular in the coherent basis order.
pub fn iwasawa_truncated(rt: &RepTruncation, m: &QMatrix, n: usize) -> Result<IwasawaFactors> {
    let order = rt.weights_up_to_level(n);
    let dim: usize = order.iter().map(|&w| rt.dim(w)).sum();
    if m.rows() != dim || m.cols() != dim {
        return Err(Error::RangeExceeded(format!("expected a {dim}x{dim} matrix")));
    }
    if m.rank() < dim {
        return Err(Error::SingularInput);
    }
    let mut g = QMatrix::zeros(dim, dim);
    let mut off = 0;
    for &w in &order {
        g.set_block(off, off, rt.gram(w));
        off += rt.dim(w);
    }
    let chol = g.to_f64().cholesky().expect("contravariant form is positive definite");
    let u = chol.l().transpose();
    let u_inv = u.clone().try_inverse().ok_or(Error::SingularInput)?;
    let a = &u * m.to_f64() * &u_inv;
    let qr = a.qr();
    let (mut qm, mut r) = (qr.q(), qr.r());
    for i in 0..dim {
        if r[(i, i)] < 0.0 {
            for j in 0..dim {
                r[(i, j)] = -r[(i, j)];
                qm[(j, i)] = -qm[(j, i)];
            }
        }
    }
    Ok(IwasawaFactors { k: &u_inv * qm * &u, b: &u_inv * r * &u })
}
