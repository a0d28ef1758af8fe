//! Finite-rank Euclidean lattices presented by a Gram matrix, and their theta invariants.

use std::f64::consts::PI;

use num::{One, Zero};
use serde_json::{json, Value};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{fmt_q, parse_q, q_ln_abs, q_to_f64, QMatrix, Q};

/// A lattice Z^rank with the Euclidean structure ‖v‖² = e^{-2·twist}·vᵀ·gram·v.
#[derive(Clone, Debug, PartialEq)]
pub struct GramLattice {
    gram: QMatrix,
    twist: f64,
    label: Option<String>,
}

#[derive(Clone, Debug)]
pub struct ThetaOptions {
    pub tail_tolerance: f64,
    pub max_radius: Option<f64>,
    pub scale_t: f64,
    /// Maximum number of enumeration tree nodes before giving up.
    pub node_budget: u64,
}

impl Default for ThetaOptions {
    fn default() -> Self {
        ThetaOptions { tail_tolerance: 1e-12, max_radius: None, scale_t: 1.0, node_budget: 200_000_000 }
    }
}

impl ThetaOptions {
    pub fn with_tolerance(tol: f64) -> Self {
        ThetaOptions { tail_tolerance: tol, ..Default::default() }
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.scale_t = t;
        self
    }
}

/// Result of a theta evaluation with its certificate.
#[derive(Clone, Debug)]
pub struct ThetaEval {
    /// h⁰_θ = log Σ e^{-π t ‖v‖²} over the enumerated points.
    pub h0: f64,
    /// log of the contribution of the nonzero enumerated vectors (−∞ if none).
    pub ln_nonzero: f64,
    /// Certified upper bound on the omitted part of the sum.
    pub tail_bound: f64,
    /// Squared enumeration radius in the scaled quadratic form π-free units (t‖v‖²).
    pub radius_sq: f64,
    pub points: usize,
}

#[derive(Clone, Debug)]
pub struct ShortestVector {
    /// Exact squared length of the shortest vector before the twist factor.
    pub norm_sq_untwisted: Q,
    pub lambda1: f64,
    pub witness: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroenewegenBound {
    pub exact_bound: f64,
    pub ln_exact_bound: f64,
    pub simplified_bound: Option<f64>,
    pub ln_simplified_bound: Option<f64>,
}

impl GramLattice {
    pub fn new(gram: QMatrix) -> Result<Self> {
        if !gram.is_square() {
            return Err(Error::InvalidLattice("gram matrix is not square".into()));
        }
        if !gram.is_symmetric() {
            return Err(Error::InvalidLattice("gram matrix is not symmetric".into()));
        }
        if !gram.is_positive_definite() {
            return Err(Error::InvalidLattice("gram matrix is not positive definite".into()));
        }
        Ok(GramLattice { gram, twist: 0.0, label: None })
    }

    pub fn zero() -> Self {
        GramLattice { gram: QMatrix::zeros(0, 0), twist: 0.0, label: None }
    }

    pub fn identity(rank: usize) -> Self {
        GramLattice { gram: QMatrix::identity(rank), twist: 0.0, label: None }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn rank(&self) -> usize {
        self.gram.rows()
    }

    /// The exact Gram matrix, without the twist factor.
    pub fn exact_gram(&self) -> &QMatrix {
        &self.gram
    }

    /// Accumulated twist δ: the true Gram matrix is e^{-2δ}·exact_gram.
    pub fn twist(&self) -> f64 {
        self.twist
    }

    pub fn gram_f64(&self) -> nalgebra::DMatrix<f64> {
        let s = (-2.0 * self.twist).exp();
        self.gram.to_f64() * s
    }

    fn ln_det(&self) -> f64 {
        if self.rank() == 0 {
            return 0.0;
        }
        q_ln_abs(&self.gram.det())
    }

    pub fn covolume(&self) -> f64 {
        (-self.arithmetic_degree()).exp()
    }

    pub fn arithmetic_degree(&self) -> f64 {
        -0.5 * self.ln_det() + self.rank() as f64 * self.twist
    }

    pub fn dual(&self) -> Self {
        let gram = if self.rank() == 0 { self.gram.clone() } else { self.gram.inverse().expect("positive definite") };
        GramLattice { gram, twist: -self.twist, label: self.label.as_ref().map(|l| format!("dual({l})")) }
    }

    pub fn twist_by_o(&self, delta: f64) -> Self {
        GramLattice { gram: self.gram.clone(), twist: self.twist + delta, label: self.label.clone() }
    }

    /// Upper-triangular R with (scaled Gram) = RᵀR, for the quadratic form t·‖v‖².
    fn cholesky_upper(&self, t: f64) -> Result<Vec<Vec<f64>>> {
        let n = self.rank();
        let f = self.gram_f64() * t;
        let ch = nalgebra::linalg::Cholesky::new(f)
            .ok_or_else(|| Error::InvalidLattice("float Cholesky failed".into()))?;
        let l = ch.l();
        Ok((0..n).map(|i| (0..n).map(|j| l[(j, i)]).collect()).collect())
    }

    /// Exact squared norm vᵀ·gram·v (untwisted).
    pub fn exact_norm_sq(&self, v: &[i64]) -> Q {
        let n = self.rank();
        let mut acc = Q::zero();
        for i in 0..n {
            if v[i] == 0 {
                continue;
            }
            for j in 0..n {
                if v[j] == 0 {
                    continue;
                }
                acc += &self.gram[(i, j)] * Q::from_integer((v[i] * v[j]).into());
            }
        }
        acc
    }

    pub fn shortest_vector(&self) -> Result<ShortestVector> {
        let n = self.rank();
        if n == 0 {
            return Err(Error::ZeroRankLattice);
        }
        let r = self.cholesky_upper(1.0)?;
        // Start from the shortest basis vector, then shrink.
        let mut best_i = 0;
        for i in 1..n {
            if self.gram[(i, i)] < self.gram[(best_i, best_i)] {
                best_i = i;
            }
        }
        let start = q_to_f64(&self.gram[(best_i, best_i)]) * (-2.0 * self.twist).exp();
        let slack = 1e-9;
        let mut candidates: Vec<(Vec<i64>, f64)> = Vec::new();
        let mut bound = start * (1.0 + slack);
        fincke_pohst(&r, bound, u64::MAX, |x, norm| {
            if x.iter().all(|&c| c == 0) {
                return None;
            }
            candidates.push((x.to_vec(), norm));
            if norm * (1.0 + slack) < bound {
                bound = norm * (1.0 + slack);
                Some(bound)
            } else {
                None
            }
        })
        .map_err(|_| Error::EnumerationBudgetExceeded("shortest vector".into()))?;
        let mut best: Option<(Q, Vec<i64>)> = None;
        for (x, norm) in candidates {
            if norm > bound {
                continue;
            }
            let e = self.exact_norm_sq(&x);
            if best.as_ref().map(|(b, _)| e < *b).unwrap_or(true) {
                best = Some((e, x));
            }
        }
        let (e, w) = match best {
            Some(b) => b,
            None => {
                let mut w = vec![0; n];
                w[best_i] = 1;
                (self.gram[(best_i, best_i)].clone(), w)
            }
        };
        let lambda1 = (0.5 * q_ln_abs(&e) - self.twist).exp();
        Ok(ShortestVector { norm_sq_untwisted: e, lambda1, witness: w })
    }

    /// Certified bound on Σ_{t‖v‖² > ρ²} e^{-π t ‖v‖²} via a Chernoff shift and the
    /// Gram–Schmidt product majorant of the Gaussian mass.
    fn tail_bound(diag: &[f64], radius_sq: f64) -> f64 {
        let mut best = f64::INFINITY;
        for k in 1..40 {
            let s = k as f64 / 40.0;
            let ln_mass: f64 = diag.iter().map(|&d| ln_rho_z((1.0 - s).sqrt() * d)).sum();
            best = best.min(ln_mass - PI * s * radius_sq);
        }
        best.exp()
    }

    fn radius_for(diag: &[f64], tol: f64) -> f64 {
        let mut best = f64::INFINITY;
        for k in 1..40 {
            let s = k as f64 / 40.0;
            let ln_mass: f64 = diag.iter().map(|&d| ln_rho_z((1.0 - s).sqrt() * d)).sum();
            let r2 = (ln_mass - tol.ln()) / (PI * s);
            best = best.min(r2);
        }
        best.max(0.0)
    }

    pub fn theta_eval(&self, opts: &ThetaOptions) -> Result<ThetaEval> {
        self.theta_eval_inner(opts, false)
    }

    /// Like [`theta_eval`](Self::theta_eval), but the radius is enlarged if needed so
    /// that the shortest nonzero vectors are always enumerated; this keeps the
    /// log-domain value of tiny sums meaningful.
    pub fn theta_eval_with_minimum(&self, opts: &ThetaOptions) -> Result<ThetaEval> {
        self.theta_eval_inner(opts, true)
    }

    fn theta_eval_inner(&self, opts: &ThetaOptions, with_minimum: bool) -> Result<ThetaEval> {
        if !(opts.tail_tolerance > 0.0) || !(opts.scale_t > 0.0) {
            return Err(Error::InvalidLattice("theta options must be positive".into()));
        }
        let n = self.rank();
        if n == 0 {
            return Ok(ThetaEval { h0: 0.0, ln_nonzero: f64::NEG_INFINITY, tail_bound: 0.0, radius_sq: 0.0, points: 1 });
        }
        let r = self.cholesky_upper(opts.scale_t)?;
        let diag: Vec<f64> = (0..n).map(|i| r[i][i] * (1.0 - 1e-12)).collect();
        let mut radius_sq = Self::radius_for(&diag, opts.tail_tolerance);
        if let Some(cap) = opts.max_radius {
            let cap_sq = cap * cap * opts.scale_t;
            if cap_sq < radius_sq {
                return Err(Error::EnumerationBudgetExceeded(format!(
                    "radius cap {cap} is below the certified radius {}",
                    (radius_sq / opts.scale_t).sqrt()
                )));
            }
        }
        if with_minimum {
            let sv = self.shortest_vector()?;
            let m = sv.lambda1 * sv.lambda1 * opts.scale_t;
            if m * (1.0 + 1e-9) > radius_sq {
                radius_sq = m * (1.0 + 1e-9);
            }
        }
        let tail = Self::tail_bound(&diag, radius_sq);
        let mut exps: Vec<f64> = Vec::new();
        let mut points = 0usize;
        fincke_pohst(&r, radius_sq, opts.node_budget, |x, norm| {
            points += 1;
            if x.iter().any(|&c| c != 0) {
                exps.push(-PI * norm);
            }
            None
        })
        .map_err(|_| Error::EnumerationBudgetExceeded(format!("more than {} enumeration nodes", opts.node_budget)))?;
        let ln_nonzero = log_sum_exp(&exps);
        let h0 = ln_nonzero.exp().ln_1p();
        Ok(ThetaEval { h0, ln_nonzero, tail_bound: tail, radius_sq, points })
    }

    pub fn theta_h0(&self, opts: &ThetaOptions) -> Result<f64> {
        Ok(self.theta_eval(opts)?.h0)
    }

    pub fn theta_h1(&self, opts: &ThetaOptions) -> Result<f64> {
        self.dual().theta_h0(opts)
    }

    pub fn riemann_roch_residual(&self, opts: &ThetaOptions) -> Result<f64> {
        Ok(self.theta_h0(opts)? - self.theta_h1(opts)? - self.arithmetic_degree())
    }

    /// log #{v : ‖v‖ ≤ 1}.
    pub fn arakelov_h0(&self) -> Result<f64> {
        let n = self.rank();
        if n == 0 {
            return Ok(0.0);
        }
        let r = self.cholesky_upper(1.0)?;
        let mut count = 0u64;
        let exact = self.twist == 0.0;
        fincke_pohst(&r, 1.0 + 1e-9, u64::MAX, |x, norm| {
            let inside = if exact { self.exact_norm_sq(x) <= Q::one() } else { norm <= 1.0 };
            if inside {
                count += 1;
            }
            None
        })
        .map_err(|_| Error::EnumerationBudgetExceeded("arakelov count".into()))?;
        Ok((count as f64).ln())
    }

    pub fn to_json(&self) -> Value {
        let gram: Vec<Vec<String>> = self.gram.to_rows().iter().map(|r| r.iter().map(fmt_q).collect()).collect();
        let mut v = json!({ "rank": self.rank(), "gram": gram });
        if let Some(l) = &self.label {
            v["label"] = json!(l);
        }
        if self.twist != 0.0 {
            v["twist"] = json!(crate::report::fmt_f64(self.twist));
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::Parse(m.to_string());
        let obj = v.as_object().ok_or_else(|| bad("lattice must be a JSON object"))?;
        let rows = obj.get("gram").and_then(|g| g.as_array()).ok_or_else(|| bad("missing \"gram\" array"))?;
        let mut gram: Vec<Vec<Q>> = Vec::with_capacity(rows.len());
        for row in rows {
            let row = row.as_array().ok_or_else(|| bad("gram rows must be arrays"))?;
            let mut out = Vec::with_capacity(row.len());
            for e in row {
                out.push(parse_entry(e).ok_or_else(|| bad(&format!("bad gram entry {e}")))?);
            }
            gram.push(out);
        }
        if gram.iter().any(|r| r.len() != gram.len()) {
            return Err(bad("gram matrix is not square"));
        }
        if let Some(k) = obj.get("rank") {
            let k = k.as_u64().ok_or_else(|| bad("rank must be a nonnegative integer"))?;
            if k as usize != gram.len() {
                return Err(bad("rank does not match gram size"));
            }
        }
        let m = if gram.is_empty() { QMatrix::zeros(0, 0) } else { QMatrix::from_rows(&gram) };
        let mut l = GramLattice::new(m)?;
        if let Some(label) = obj.get("label").and_then(|x| x.as_str()) {
            l.label = Some(label.to_string());
        }
        if let Some(t) = obj.get("twist") {
            let t = match t {
                Value::String(s) => s.parse::<f64>().map_err(|_| bad("bad twist"))?,
                other => other.as_f64().ok_or_else(|| bad("bad twist"))?,
            };
            l.twist = t;
        }
        Ok(l)
    }
}

fn parse_entry(e: &Value) -> Option<Q> {
    match e {
        Value::String(s) => parse_q(s),
        Value::Number(n) => parse_q(&n.to_string()),
        Value::Array(a) if a.len() == 2 => {
            let n = parse_entry(&a[0])?;
            let d = parse_entry(&a[1])?;
            if d.is_zero() || !n.is_integer() || !d.is_integer() {
                return None;
            }
            Some(n / d)
        }
        _ => None,
    }
}

/// ln Σ_{k∈Z} e^{-π a² k²}.
pub fn ln_rho_z(a: f64) -> f64 {
    if a <= 0.0 {
        return f64::INFINITY;
    }
    if a >= 1.0 {
        let mut s = 0.0;
        let mut k = 1.0f64;
        loop {
            let t = (-PI * a * a * k * k).exp();
            s += t;
            if t < 1e-300 || t < s * 1e-18 {
                break;
            }
            k += 1.0;
        }
        (2.0 * s).ln_1p()
    } else {
        // Poisson: Σ e^{-π a² k²} = a⁻¹ Σ e^{-π k²/a²}.
        let b = 1.0 / a;
        -a.ln() + ln_rho_z(b)
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Depth-first enumeration of integer vectors x with xᵀ(RᵀR)x ≤ bound, where R is
/// upper triangular. The visitor receives each point with its float norm and may
/// return a smaller bound.
pub fn fincke_pohst(
    r: &[Vec<f64>],
    bound: f64,
    budget: u64,
    mut visit: impl FnMut(&[i64], f64) -> Option<f64>,
) -> std::result::Result<(), ()> {
    let n = r.len();
    if n == 0 {
        visit(&[], 0.0);
        return Ok(());
    }
    let d: Vec<f64> = (0..n).map(|i| r[i][i] * r[i][i]).collect();
    let mu: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if j > i { r[i][j] / r[i][i] } else { 0.0 }).collect()).collect();
    let mut x = vec![0i64; n];
    let mut bound = bound;
    let mut nodes = 0u64;

    struct Frame {
        center: f64,
        partial: f64,
        next: i64,
        hi: i64,
    }
    let mut stack: Vec<Frame> = Vec::with_capacity(n);
    let open = |k: usize, partial: f64, x: &[i64], bound: f64| -> Frame {
        let mut c = 0.0;
        for j in k + 1..n {
            c -= mu[k][j] * x[j] as f64;
        }
        let rem = bound - partial;
        let w = if rem > 0.0 { (rem / d[k]).sqrt() } else { 0.0 };
        let (lo, hi) = if rem < 0.0 { (1, 0) } else { ((c - w).ceil() as i64, (c + w).floor() as i64) };
        Frame { center: c, partial, next: lo, hi }
    };
    stack.push(open(n - 1, 0.0, &x, bound));
    while !stack.is_empty() {
        let k = n - stack.len();
        let top = stack.last_mut().unwrap();
        if top.next > top.hi {
            x[k] = 0;
            stack.pop();
            continue;
        }
        nodes += 1;
        if nodes > budget {
            return Err(());
        }
        let xi = top.next;
        top.next += 1;
        let diff = xi as f64 - top.center;
        let p = top.partial + d[k] * diff * diff;
        if p > bound {
            continue;
        }
        x[k] = xi;
        if k == 0 {
            if let Some(b) = visit(&x, p) {
                bound = b;
            }
        } else {
            let f = open(k - 1, p, &x, bound);
            stack.push(f);
        }
    }
    Ok(())
}

/// ln Γ(a, x), the upper incomplete gamma function, without overflow.
pub fn ln_upper_gamma(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return ln_gamma(a);
    }
    if x < a + 1.0 {
        // Series for the lower function, then complement.
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..100_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        let ln_p = -x + a * x.ln() + sum.ln() - ln_gamma(a);
        let p = ln_p.exp();
        ln_gamma(a) + if p < 0.5 { (-p).ln_1p() } else { (-(ln_p.exp_m1())).ln() }
    } else {
        // Lentz continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..100_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        -x + a * x.ln() + h.ln()
    }
}

/// The constant C(r, λ₁) bounding h⁰_θ of any rank-r lattice with minimum λ₁, and the
/// simplified closed form when λ₁ > (r/2π)^{1/2}.
pub fn groenewegen_bound(r: usize, lambda1: f64) -> GroenewegenBound {
    assert!(r >= 1 && lambda1 > 0.0);
    ln_groenewegen(r as f64, lambda1.ln())
}

/// Same as [`groenewegen_bound`] with real rank and ln λ₁ inputs, for huge arguments.
pub fn ln_groenewegen(r: f64, ln_lambda1: f64) -> GroenewegenBound {
    let ln_x = PI.ln() + 2.0 * ln_lambda1;
    let x = ln_x.exp();
    let ln3 = 3f64.ln();
    let ln_exact = r * ln3 - 0.5 * r * ln_x + ln_upper_gamma(0.5 * r + 1.0, x);
    let ln_simpl = if x > 0.5 * r {
        Some(r * ln3 - (-(0.5 * r) / x).ln_1p() - x)
    } else {
        None
    };
    GroenewegenBound {
        exact_bound: ln_exact.exp(),
        ln_exact_bound: ln_exact,
        simplified_bound: ln_simpl.map(f64::exp),
        ln_simplified_bound: ln_simpl,
    }
}
