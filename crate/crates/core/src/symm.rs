//! The Λ_p polynomials, defined by Σ Λ_p z^p = exp(Σ X_j z^j / j), and the
//! integral divided-power monomials used to generate V_ℤ.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, Integer, One, Signed, Zero};
use serde_json::{json, Value};

use crate::cartan::{AffineData, AffineRoot};
use crate::error::{Error, Result};
use crate::linalg::{q, Q};

/// Exponent vector over X₁, X₂, …; trailing zeros are trimmed.
pub type Exponents = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaPoly {
    p: usize,
    terms: BTreeMap<Exponents, Q>,
}

fn trim(mut e: Exponents) -> Exponents {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

#[cfg(test)]
fn weighted_degree(e: &[u32]) -> usize {
    e.iter().enumerate().map(|(j, &k)| (j + 1) * k as usize).sum()
}

impl LambdaPoly {
    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn terms(&self) -> &BTreeMap<Exponents, Q> {
        &self.terms
    }

    pub fn coefficient(&self, e: &[u32]) -> Q {
        self.terms.get(&trim(e.to_vec())).cloned().unwrap_or_else(Q::zero)
    }

    /// Evaluate in any commutative setting given by the closures.
    pub fn eval_with<T: Clone>(
        &self,
        values: &[T],
        one: &T,
        mul: impl Fn(&T, &T) -> T,
        add: impl Fn(&T, &T) -> T,
        scale: impl Fn(&T, &Q) -> T,
    ) -> Result<T> {
        let need = self.terms.keys().map(|e| e.len()).max().unwrap_or(0);
        if values.len() < need.max(self.p) {
            return Err(Error::InsufficientValues { need: self.p, got: values.len() });
        }
        let mut total: Option<T> = None;
        for (e, c) in &self.terms {
            let mut m = one.clone();
            for (j, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    m = mul(&m, &values[j]);
                }
            }
            let t = scale(&m, c);
            total = Some(match total {
                None => t,
                Some(s) => add(&s, &t),
            });
        }
        Ok(total.unwrap_or_else(|| scale(one, &Q::zero())))
    }

    pub fn eval(&self, values: &[Q]) -> Result<Q> {
        self.eval_with(values, &Q::one(), |a, b| a * b, |a, b| a + b, |a, c| a * c)
    }
}

/// Λ_p from p·Λ_p = Σ_{j=1}^{p} X_j·Λ_{p−j}.
pub fn lambda_poly(p: usize) -> LambdaPoly {
    lambda_polys(p).pop().unwrap()
}

/// Λ_0, …, Λ_p.
pub fn lambda_polys(p: usize) -> Vec<LambdaPoly> {
    let mut out = vec![LambdaPoly { p: 0, terms: BTreeMap::from([(Vec::new(), Q::one())]) }];
    for n in 1..=p {
        let mut terms: BTreeMap<Exponents, Q> = BTreeMap::new();
        for j in 1..=n {
            for (e, c) in &out[n - j].terms {
                let mut e2 = e.clone();
                if e2.len() < j {
                    e2.resize(j, 0);
                }
                e2[j - 1] += 1;
                let e2 = trim(e2);
                *terms.entry(e2).or_insert_with(Q::zero) += c / q(n as i64);
            }
        }
        terms.retain(|_, c| !c.is_zero());
        out.push(LambdaPoly { p: n, terms });
    }
    out
}

/// Exact value of Λ_p at the given X₁, X₂, ….
pub fn eval_lambda(p: usize, values: &[Q]) -> Result<Q> {
    if values.len() < p {
        return Err(Error::InsufficientValues { need: p, got: values.len() });
    }
    // The recurrence evaluates faster than the expanded polynomial.
    let mut lam = vec![Q::one()];
    for n in 1..=p {
        let mut s = Q::zero();
        for j in 1..=n {
            s += &values[j - 1] * &lam[n - j];
        }
        lam.push(s / q(n as i64));
    }
    Ok(lam.pop().unwrap())
}

impl fmt::Display for LambdaPoly {
    /// Canonical text such as "(X1^2 + X2)/2": integer numerator over the
    /// common denominator, monomials in decreasing lexicographic order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let den = self.terms.values().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let mut parts: Vec<String> = Vec::new();
        for (e, c) in self.terms.iter().rev() {
            let num = (c * Q::from_integer(den.clone())).to_integer();
            let mut factors: Vec<String> = Vec::new();
            for (j, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => factors.push(format!("X{}", j + 1)),
                    _ => factors.push(format!("X{}^{}", j + 1, k)),
                }
            }
            let mono = factors.join("*");
            let abs = num.abs();
            let body = match (mono.is_empty(), abs.is_one()) {
                (true, _) => abs.to_string(),
                (false, true) => mono,
                (false, false) => format!("{abs}*{mono}"),
            };
            if parts.is_empty() {
                parts.push(if num.is_negative() { format!("-{body}") } else { body });
            } else {
                parts.push(format!("{} {body}", if num.is_negative() { "-" } else { "+" }));
            }
        }
        if parts.is_empty() {
            return write!(f, "0");
        }
        let joined = parts.join(" ");
        if den.is_one() {
            write!(f, "{joined}")
        } else if parts.len() == 1 {
            write!(f, "{joined}/{den}")
        } else {
            write!(f, "({joined})/{den}")
        }
    }
}

/// One factor of an integral monomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UZFactor {
    /// ξ_a^p / p! for a real root a.
    DividedPower { root: AffineRoot, exponent: u32 },
    /// Λ_q(r, j) = Λ_q(ξ_j(r), ξ_j(2r), …) with ξ_j(r) = H_j ⊗ t^r.
    Imaginary { r: i64, j: usize, q: u32 },
    /// binom(h_k, r).
    Binomial { k: usize, r: u32 },
}

/// An ordered product of factors; the rightmost factor acts first.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct UZMonomial {
    pub factors: Vec<UZFactor>,
}

impl UZMonomial {
    /// Σ of depths of the weights of the factors (all negative).
    pub fn depth(&self, ad: &AffineData) -> i64 {
        let iota_ht: i64 = ad.iota_coords().iter().sum();
        self.factors
            .iter()
            .map(|f| match f {
                UZFactor::DividedPower { root, exponent } => {
                    -ad.root_coords(root).iter().sum::<i64>() * *exponent as i64
                }
                UZFactor::Imaginary { r, q, .. } => -r * iota_ht * *q as i64,
                UZFactor::Binomial { .. } => 0,
            })
            .sum()
    }

    /// Weight shift over a₁..a_{ℓ+1}.
    pub fn weight_shift(&self, ad: &AffineData) -> Vec<i64> {
        let mut w = vec![0i64; ad.rank() + 1];
        let iota = ad.iota_coords();
        for f in &self.factors {
            match f {
                UZFactor::DividedPower { root, exponent } => {
                    for (x, c) in w.iter_mut().zip(ad.root_coords(root)) {
                        *x += c * *exponent as i64;
                    }
                }
                UZFactor::Imaginary { r, q, .. } => {
                    for (x, c) in w.iter_mut().zip(&iota) {
                        *x += c * r * *q as i64;
                    }
                }
                UZFactor::Binomial { .. } => {}
            }
        }
        w
    }

    pub fn to_json(&self, ad: &AffineData) -> Value {
        let fs: Vec<Value> = self
            .factors
            .iter()
            .map(|f| match f {
                UZFactor::DividedPower { root, exponent } => {
                    json!({"kind": "divided_power", "root": ad.root_coords(root), "exponent": exponent})
                }
                UZFactor::Imaginary { r, j, q } => json!({"kind": "lambda", "r": r, "j": j + 1, "q": q}),
                UZFactor::Binomial { k, r } => json!({"kind": "binomial", "k": k + 1, "r": r}),
            })
            .collect();
        json!(fs)
    }
}

/// The negative Chevalley generators of depth ≤ `depth_bound` in the fixed
/// order used for monomials: real roots by (depth, coordinates), then the
/// imaginary directions by (|r|, j).
fn negative_generators(ad: &AffineData, depth_bound: i64) -> Vec<(UZFactor, i64)> {
    let iota_ht: i64 = ad.iota_coords().iter().sum();
    let n_max = (depth_bound / iota_ht.max(1)) as usize + 1;
    let mut reals: Vec<(Vec<i64>, AffineRoot)> = ad
        .affine_roots_up_to(n_max)
        .into_iter()
        .filter(|r| r.real)
        .map(|r| (ad.root_coords(&r), r.negate()))
        .filter(|(c, _)| c.iter().sum::<i64>() <= depth_bound)
        .collect();
    reals.sort_by(|a, b| a.0.iter().sum::<i64>().cmp(&b.0.iter().sum::<i64>()).then_with(|| a.0.cmp(&b.0)));
    let mut out: Vec<(UZFactor, i64)> = reals
        .into_iter()
        .map(|(c, r)| (UZFactor::DividedPower { root: r, exponent: 1 }, c.iter().sum()))
        .collect();
    let mut r = 1;
    while r * iota_ht <= depth_bound {
        for j in 0..ad.rank() {
            out.push((UZFactor::Imaginary { r: -r, j, q: 1 }, r * iota_ht));
        }
        r += 1;
    }
    out
}

/// All monomials in negative divided powers and imaginary blocks of total
/// depth ≤ `depth_bound`, in a deterministic order. The binomial factors are
/// omitted since they act on a weight vector by an integer scalar.
pub fn enumerate_uz_monomials(ad: &AffineData, depth_bound: usize) -> Vec<UZMonomial> {
    let gens = negative_generators(ad, depth_bound as i64);
    let mut out = Vec::new();
    let mut current: Vec<UZFactor> = Vec::new();
    fn rec(gens: &[(UZFactor, i64)], k: usize, budget: i64, cur: &mut Vec<UZFactor>, out: &mut Vec<UZMonomial>) {
        if k == gens.len() {
            out.push(UZMonomial { factors: cur.clone() });
            return;
        }
        rec(gens, k + 1, budget, cur, out);
        let (g, d) = &gens[k];
        let mut e = 1u32;
        while (e as i64) * d <= budget {
            let f = match g {
                UZFactor::DividedPower { root, .. } => UZFactor::DividedPower { root: root.clone(), exponent: e },
                UZFactor::Imaginary { r, j, .. } => UZFactor::Imaginary { r: *r, j: *j, q: e },
                UZFactor::Binomial { .. } => unreachable!(),
            };
            cur.push(f);
            rec(gens, k + 1, budget - e as i64 * d, cur, out);
            cur.pop();
            e += 1;
        }
    }
    rec(&gens, 0, depth_bound as i64, &mut current, &mut out);
    out.sort_by_key(|m| m.depth(ad));
    out
}
