//! Weight multiplicities of an integrable highest-weight module up to a level bound.

use std::collections::{BTreeMap, BTreeSet};

use num::{Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::cartan::{AffineData, AffineWeight};
use crate::error::{Error, Result};
use crate::linalg::{fmt_q, q, QMatrix, Q};

/// Cap on the number of stored weights.
pub const DEFAULT_WEIGHT_BUDGET: usize = 2_000_000;

/// The weights μ = λ − Σ m_i a_i of V^λ with level m_{ℓ+1} ≤ N, keyed by m.
#[derive(Clone, Debug)]
pub struct WeightSystem {
    ad: AffineData,
    lambda: AffineWeight,
    level_bound: usize,
    table: BTreeMap<Vec<i64>, u64>,
    by_level: Vec<Vec<Vec<i64>>>,
}

/// Precomputed pairings for the Freudenthal recursion in m-coordinates.
struct Freudenthal {
    /// (a_i, a_j).
    f: QMatrix,
    /// (λ, a_i).
    lam: Vec<Q>,
    /// (λ + ρ, a_i), doubled.
    two_lam_rho: Vec<Q>,
    /// Positive roots in a-coordinates with multiplicities.
    roots: Vec<(Vec<i64>, u64)>,
}

impl Freudenthal {
    fn new(ad: &AffineData, lambda: &AffineWeight, level_bound: usize) -> Self {
        let l = ad.rank();
        let f = ad.form().block(0, 0, l + 1, l + 1);
        let rho = ad.weight_from_labels(&vec![1; l + 1]).expect("rank matches");
        let lam: Vec<Q> = (0..=l).map(|i| ad.inner(lambda, &ad.simple(i))).collect();
        let two_lam_rho: Vec<Q> = (0..=l).map(|i| q(2) * (&lam[i] + ad.inner(&rho, &ad.simple(i)))).collect();
        let roots = ad
            .affine_roots_up_to(level_bound)
            .iter()
            .map(|r| (ad.root_coords(r), r.mult as u64))
            .collect();
        Freudenthal { f, lam, two_lam_rho, roots }
    }

    fn quad(&self, u: &[i64], v: &[i64]) -> Q {
        let mut s = Q::zero();
        for (i, &ui) in u.iter().enumerate() {
            if ui == 0 {
                continue;
            }
            for (j, &vj) in v.iter().enumerate() {
                if vj != 0 && !self.f[(i, j)].is_zero() {
                    s += &self.f[(i, j)] * q(ui * vj);
                }
            }
        }
        s
    }

    /// mult(λ − m·a) from the already-known multiplicities of higher weights.
    fn mult(&self, m: &[i64], table: &BTreeMap<Vec<i64>, u64>) -> Result<u64> {
        // (λ+ρ|λ+ρ) − (μ+ρ|μ+ρ) = 2(λ+ρ|m·a) − (m·a|m·a)
        let mut lhs = -self.quad(m, m);
        for (i, &mi) in m.iter().enumerate() {
            lhs += &self.two_lam_rho[i] * q(mi);
        }
        // |μ+ρ| < |λ+ρ| for every weight μ ≠ λ, so a vanishing or negative
        // coefficient marks a non-weight.
        if !lhs.is_positive() {
            return Ok(0);
        }
        let mut rhs = Q::zero();
        let mut shifted = m.to_vec();
        for (b, mult_b) in &self.roots {
            if b.iter().zip(m).any(|(bi, mi)| bi > mi) {
                continue;
            }
            // (λ, β) is constant along the string.
            let lam_b: Q = b.iter().zip(&self.lam).map(|(&bi, l)| l * q(bi)).fold(Q::zero(), |a, c| a + c);
            let mut j = 1;
            loop {
                let mut valid = true;
                for k in 0..m.len() {
                    shifted[k] = m[k] - j * b[k];
                    valid &= shifted[k] >= 0;
                }
                if !valid {
                    break;
                }
                if let Some(&mu) = table.get(&shifted) {
                    let pair = &lam_b - self.quad(&shifted, b);
                    rhs += pair * q((mu * mult_b) as i64);
                }
                j += 1;
            }
        }
        let val = q(2) * rhs / lhs;
        if !val.is_integer() || val.is_negative() {
            return Err(Error::BudgetExceeded(format!("non-integral multiplicity {val} at {m:?}")));
        }
        val.to_integer()
            .to_u64()
            .ok_or_else(|| Error::BudgetExceeded(format!("multiplicity overflow at {m:?}")))
    }
}

impl WeightSystem {
    pub fn new(ad: &AffineData, lambda: &AffineWeight, level_bound: usize) -> Result<Self> {
        Self::with_budget(ad, lambda, level_bound, DEFAULT_WEIGHT_BUDGET)
    }

    pub fn with_budget(ad: &AffineData, lambda: &AffineWeight, level_bound: usize, budget: usize) -> Result<Self> {
        if !ad.is_dominant_integral(lambda) {
            return Err(Error::NotDominant);
        }
        if !ad.pair_c(lambda).is_positive() {
            return Err(Error::NonPositiveLevel(fmt_q(&ad.pair_c(lambda))));
        }
        let l = ad.rank();
        let fr = Freudenthal::new(ad, lambda, level_bound);
        let mut table: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
        let root = vec![0i64; l + 1];
        table.insert(root.clone(), 1);
        let mut layer = vec![root];
        while !layer.is_empty() {
            let mut candidates: BTreeSet<Vec<i64>> = BTreeSet::new();
            for m in &layer {
                for i in 0..=l {
                    if i == l && m[l] as usize >= level_bound {
                        continue;
                    }
                    let mut n = m.clone();
                    n[i] += 1;
                    candidates.insert(n);
                }
            }
            let mut next = Vec::new();
            for m in candidates {
                let k = fr.mult(&m, &table)?;
                if k > 0 {
                    table.insert(m.clone(), k);
                    next.push(m);
                }
            }
            if table.len() > budget {
                return Err(Error::BudgetExceeded(format!("more than {budget} weights")));
            }
            layer = next;
        }
        let mut by_level = vec![Vec::new(); level_bound + 1];
        for m in table.keys() {
            by_level[m[l] as usize].push(m.clone());
        }
        for lv in &mut by_level {
            lv.sort_by(|a, b| a.iter().sum::<i64>().cmp(&b.iter().sum::<i64>()).then_with(|| a.cmp(b)));
        }
        Ok(WeightSystem { ad: ad.clone(), lambda: lambda.clone(), level_bound, table, by_level })
    }

    pub fn affine(&self) -> &AffineData {
        &self.ad
    }

    pub fn lambda(&self) -> &AffineWeight {
        &self.lambda
    }

    pub fn level_bound(&self) -> usize {
        self.level_bound
    }

    pub fn table(&self) -> &BTreeMap<Vec<i64>, u64> {
        &self.table
    }

    pub fn weight(&self, m: &[i64]) -> AffineWeight {
        self.ad.sub_simple_combination(&self.lambda, m)
    }

    /// Multiplicity by m-vector; 0 outside the weight set.
    pub fn mult_m(&self, m: &[i64]) -> u64 {
        self.table.get(m).copied().unwrap_or(0)
    }

    pub fn mult(&self, mu: &AffineWeight) -> Result<u64> {
        let m = match self.ad.dominance_vector(&self.lambda, mu) {
            Ok(m) => m,
            Err(_) => return Ok(0),
        };
        let level = m[self.ad.rank()];
        if level as usize > self.level_bound {
            return Err(Error::LevelOutOfRange { level, bound: self.level_bound });
        }
        Ok(self.mult_m(&m))
    }

    /// m-vectors of the weights at level n, by depth then lexicographically.
    pub fn weights_at_level(&self, n: usize) -> Result<&[Vec<i64>]> {
        self.by_level
            .get(n)
            .map(|v| v.as_slice())
            .ok_or(Error::LevelOutOfRange { level: n as i64, bound: self.level_bound })
    }

    pub fn dim_level(&self, n: usize) -> Result<u64> {
        Ok(self.weights_at_level(n)?.iter().map(|m| self.table[m]).sum())
    }

    pub fn max_mult_at_level(&self, n: usize) -> Result<u64> {
        Ok(self.weights_at_level(n)?.iter().map(|m| self.table[m]).max().unwrap_or(0))
    }

    /// Weights μ with μ + ι not a weight. Since μ + ι sits one level lower it is
    /// always inside the computed range, so maximality is decided everywhere.
    pub fn maximal_weights(&self) -> Vec<Vec<i64>> {
        let iota = self.ad.iota_coords();
        self.table
            .keys()
            .filter(|m| {
                let up: Vec<i64> = m.iter().zip(&iota).map(|(a, b)| a - b).collect();
                !self.table.contains_key(&up)
            })
            .cloned()
            .collect()
    }

    /// The maximal weight η and n′ with μ = η − n′ι.
    pub fn maximal_above(&self, m: &[i64]) -> (Vec<i64>, usize) {
        let iota = self.ad.iota_coords();
        let mut cur = m.to_vec();
        let mut k = 0;
        loop {
            let up: Vec<i64> = cur.iter().zip(&iota).map(|(a, b)| a - b).collect();
            if !self.table.contains_key(&up) {
                return (cur, k);
            }
            cur = up;
            k += 1;
        }
    }

    /// |μ̄|² − 2a₀⁻¹·p·n over stored weights, n the level; a₀ = 1 is tried first.
    pub fn check_linear_quadratic(&self) -> (u32, Q) {
        let bound = self.ad.inner(&self.lambda, &self.lambda);
        let mut last = (1, Q::zero());
        for a0 in [1u32, 2] {
            let r = self.linear_quadratic_residual(a0);
            if r <= bound {
                return (a0, r);
            }
            if a0 == 1 {
                last = (1, r);
            }
        }
        last
    }

    pub fn linear_quadratic_residual(&self, a0: u32) -> Q {
        let l = self.ad.rank();
        let p = self.ad.pair_c(&self.lambda);
        self.table
            .keys()
            .map(|m| {
                let mu = self.weight(m);
                self.ad.classical_norm_sq(&mu) - q(2) * &p * q(m[l]) / q(a0 as i64)
            })
            .max()
            .unwrap()
    }

    /// (A, C′) with mult(μ) ≤ C′e^{A√n}: A is the least-squares slope of
    /// ln(max mult at level n) against √n, clamped at 0, and C′ is minimal for it.
    pub fn fit_kp_constants(&self) -> (f64, f64) {
        let pts: Vec<(f64, f64)> = (0..=self.level_bound)
            .filter_map(|n| {
                let m = self.max_mult_at_level(n).ok()?;
                (m > 0).then(|| ((n as f64).sqrt(), (m as f64).ln()))
            })
            .collect();
        let k = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let den = k * sxx - sx * sx;
        let a = if den.abs() < 1e-300 { 0.0 } else { ((k * sxy - sx * sy) / den).max(0.0) };
        let c = pts.iter().map(|(x, y)| (y - a * x).exp()).fold(0.0, f64::max);
        (a, c)
    }

    /// (μ, mult) up to level n_max, by (level, depth, classical part).
    pub fn formal_character(&self, n_max: usize) -> Result<Vec<(AffineWeight, u64)>> {
        if n_max > self.level_bound {
            return Err(Error::LevelOutOfRange { level: n_max as i64, bound: self.level_bound });
        }
        let mut out = Vec::new();
        for n in 0..=n_max {
            let mut ws: Vec<(i64, Vec<Q>, AffineWeight, u64)> = self.by_level[n]
                .iter()
                .map(|m| {
                    let mu = self.weight(m);
                    (m.iter().sum(), self.ad.decompose_weight(&mu).classical, mu, self.table[m])
                })
                .collect();
            ws.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            out.extend(ws.into_iter().map(|(_, _, mu, k)| (mu, k)));
        }
        Ok(out)
    }

    pub fn weight_json(&self, m: &[i64]) -> Value {
        let mu = self.weight(m);
        let d = self.ad.decompose_weight(&mu);
        json!({
            "m": m,
            "coords": mu.coords.iter().map(fmt_q).collect::<Vec<_>>(),
            "p": fmt_q(&d.p),
            "classical": d.classical.iter().map(fmt_q).collect::<Vec<_>>(),
            "iota": fmt_q(&d.iota_coeff),
        })
    }

    pub fn to_json(&self) -> Value {
        let levels: Vec<Value> = (0..=self.level_bound)
            .map(|n| {
                let weights: Vec<Value> = self.by_level[n]
                    .iter()
                    .map(|m| {
                        let mut w = self.weight_json(m);
                        w["mult"] = json!(self.table[m]);
                        w
                    })
                    .collect();
                json!({"n": n, "dim": self.dim_level(n).unwrap(), "weights": weights})
            })
            .collect();
        json!({
            "lambda": {
                "coords": self.lambda.coords.iter().map(fmt_q).collect::<Vec<_>>(),
                "labels": self.ad.labels(&self.lambda).iter().map(fmt_q).collect::<Vec<_>>(),
            },
            "level_bound": self.level_bound,
            "levels": levels,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::CartanMatrix;

    fn basic_a1(n: usize) -> WeightSystem {
        let ad = AffineData::from_cartan(CartanMatrix::a(1));
        WeightSystem::new(&ad, &ad.lambda_top(), n).unwrap()
    }

    #[test]
    fn basic_a1_small_levels() {
        let ws = basic_a1(6);
        assert_eq!(ws.mult_m(&[0, 0]), 1);
        assert_eq!(ws.mult_m(&[0, 1]), 1);
        assert_eq!(ws.mult_m(&[1, 0]), 0);
        let dims: Vec<u64> = (0..=2).map(|n| ws.dim_level(n).unwrap()).collect();
        assert_eq!(dims, vec![1, 3, 4]);
        assert!(ws.dim_level(7).is_err());
    }

    #[test]
    fn rejects_bad_highest_weights() {
        let ad = AffineData::from_cartan(CartanMatrix::a(1));
        let zero = ad.zero_weight();
        assert!(matches!(WeightSystem::new(&ad, &zero, 2), Err(Error::NonPositiveLevel(_))));
        let neg = ad.sub_simple_combination(&ad.lambda_top(), &[0, -1]);
        assert_eq!(WeightSystem::new(&ad, &neg, 2).unwrap_err(), Error::NotDominant);
    }

    #[test]
    fn lookups_by_weight() {
        let ws = basic_a1(3);
        let ad = ws.affine().clone();
        let lam = ad.lambda_top();
        assert_eq!(ws.mult(&lam).unwrap(), 1);
        let above = ad.sub_simple_combination(&lam, &[-1, 0]);
        assert_eq!(ws.mult(&above).unwrap(), 0);
        let deep = ad.sub_simple_combination(&lam, &[0, 4]);
        assert!(matches!(ws.mult(&deep), Err(Error::LevelOutOfRange { .. })));
    }

    #[test]
    fn maximal_weights_of_basic_a1() {
        let ws = basic_a1(5);
        let max = ws.maximal_weights();
        assert!(max.contains(&vec![0, 0]));
        for n in 1..=5 {
            assert!(!max.contains(&vec![n, n]));
        }
        for m in ws.table().keys() {
            let (eta, k) = ws.maximal_above(m);
            assert!(max.contains(&eta));
            assert_eq!(eta[1] + k as i64, m[1]);
        }
    }

    #[test]
    fn linear_quadratic_for_basic_a1() {
        let ws = basic_a1(8);
        let (a0, r) = ws.check_linear_quadratic();
        assert_eq!(a0, 1);
        assert!(r <= Q::zero());
    }

    #[test]
    fn kp_fit_dominates() {
        let ws = basic_a1(10);
        let (a, c) = ws.fit_kp_constants();
        let mut tight = false;
        for n in 0..=10usize {
            let m = ws.max_mult_at_level(n).unwrap() as f64;
            let b = c * (a * (n as f64).sqrt()).exp();
            assert!(m <= b * (1.0 + 1e-12));
            tight |= (m - b).abs() <= 1e-9 * b;
        }
        assert!(tight);
    }

    #[test]
    fn formal_character_order() {
        let ws = basic_a1(2);
        let ch = ws.formal_character(0).unwrap();
        assert_eq!(ch, vec![(ws.lambda().clone(), 1)]);
        let ch = ws.formal_character(2).unwrap();
        let distinct: usize = (0..=2).map(|n| ws.weights_at_level(n).unwrap().len()).sum();
        assert_eq!(ch.len(), distinct);
        assert!(ws.formal_character(3).is_err());
    }
}
