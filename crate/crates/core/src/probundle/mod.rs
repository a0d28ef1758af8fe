//! The projective system of twisted level quotients attached to a loop-group
//! element, its admissibility and invariance checks, and the summability verdict.

use std::f64::consts::PI;
use std::fmt;

use num::{One, Signed, Zero};
use serde_json::{json, Value};
use statrs::function::gamma::ln_gamma;

use crate::cartan::AffineWeight;
use crate::error::{Error, Result};
use crate::lattice::{ln_groenewegen, log_sum_exp, GramLattice, ThetaOptions};
use crate::linalg::{q, q_ln_abs, q_to_f64, QMatrix, Q};
use crate::report::{fmt_f64, fmt_from_ln};
use crate::repspace::{root_weight, uminus_zero, GroupElement, IwasawaForm, Op, RepTruncation};
use crate::weights::WeightSystem;

/// Integral basis of the weights in `keep`, as a block-diagonal operator.
fn integral_op(rt: &RepTruncation, keep: impl Fn(usize) -> bool) -> Op {
    Op::block_diagonal((0..rt.num_weights()).filter(|&w| keep(w)).map(|w| (w, rt.integral_basis(w).clone())))
}

fn gram_op(rt: &RepTruncation, keep: impl Fn(usize) -> bool) -> Op {
    Op::block_diagonal((0..rt.num_weights()).filter(|&w| keep(w)).map(|w| (w, rt.gram(w).clone())))
}

/// Whether `op` maps every V^n into itself, i.e. never lowers the level.
fn preserves_filtration(rt: &RepTruncation, op: &Op) -> bool {
    op.blocks().keys().all(|&(t, s)| rt.level_of(t) >= rt.level_of(s))
}

const LOWERS_LEVEL: &str = "element does not preserve the level filtration";

/// Gram matrix of Y_{n,ℤ} = V_ℤ/V_ℤ^n under the quotient norm twisted by `x_op`.
///
/// Levels are mutually orthogonal, so the quotient norm of v is ‖P_{≤n} x v‖.
pub fn twisted_tower_gram(rt: &RepTruncation, x_op: &Op, n: usize) -> QMatrix {
    let keep = |w: usize| rt.level_of(w) <= n;
    let z = x_op.restrict(|t, s| keep(t) && keep(s)).mul(&integral_op(rt, keep));
    let g = z.transpose().mul(&gram_op(rt, keep)).mul(&z);
    g.to_dense(&rt.weights_up_to_level(n), rt.dims())
}

/// Schur complement of `g` onto its first `keep` coordinates: the Gram matrix of
/// the quotient norm after dividing out the remaining coordinates.
pub fn quotient_gram(g: &QMatrix, keep: usize) -> QMatrix {
    let n = g.rows();
    if keep == n {
        return g.clone();
    }
    let a = g.block(0, 0, keep, keep);
    let b = g.block(0, keep, keep, n - keep);
    let c = g.block(keep, keep, n - keep, n - keep);
    let c_inv_bt = c.solve(&b.transpose()).expect("positive definite block");
    &a - &(&b * &c_inv_bt)
}

fn iwasawa(rt: &RepTruncation, x: &GroupElement) -> Result<(IwasawaForm, Vec<(Vec<i64>, Q)>)> {
    let form = x.iwasawa_form(rt.affine())?;
    let u0 = uminus_zero(rt, &form.unipotent)?;
    Ok((form, u0))
}

/// K̄_n = V_ℤ[n] with v ↦ ‖u⁻(0)·h·η(τ)·v‖, the reduced form of the quotient norm.
pub fn twisted_kernel_lattice(rt: &RepTruncation, x: &GroupElement, n: usize) -> Result<GramLattice> {
    if n > rt.level_bound() {
        return Err(Error::RangeExceeded(format!("level {n} exceeds the truncation bound {}", rt.level_bound())));
    }
    let (form, u0) = iwasawa(rt, x)?;
    let ad = rt.affine();
    let at_n = |w: usize| rt.level_of(w) == n;
    let mut m = rt.identity();
    for (a, s) in &u0 {
        m = m.mul(&rt.chi(a, s)?);
    }
    let mut scalars = Vec::with_capacity(rt.num_weights());
    for w in 0..rt.num_weights() {
        scalars.push(if at_n(w) { form.torus_scalar(ad, &rt.weight(w))? } else { Q::zero() });
    }
    let d = rt.diagonal(|w| scalars[w].clone());
    let z = m.restrict(|t, s| at_n(t) && at_n(s)).mul(&d).mul(&integral_op(rt, at_n));
    let g = z.transpose().mul(&gram_op(rt, at_n)).mul(&z).to_dense(&rt.weights_at_level(n), rt.dims());
    Ok(GramLattice::new(g)?.with_label(format!("K{n}")))
}

/// Checks ‖u⁻v‖_{V/Vⁿ} = ‖u⁻(0)v‖ on the integral basis of V[n], as an exact
/// identity of Gram matrices. The left side is a generic quotient norm computed
/// on the whole truncation.
pub fn unipotent_quotient_identity(rt: &RepTruncation, word: &[(Vec<i64>, Q)], n: usize) -> Result<bool> {
    if n > rt.level_bound() {
        return Err(Error::RangeExceeded(format!("level {n} exceeds the truncation bound {}", rt.level_bound())));
    }
    let mut u = rt.identity();
    for (a, s) in word {
        u = u.mul(&rt.chi(a, s)?);
    }
    let at_n = |w: usize| rt.level_of(w) == n;
    let all: Vec<usize> = rt.weights_up_to_level(rt.level_bound());
    let dims = rt.dims();
    // Images of the level-n integral basis, as columns over the whole truncation.
    let img = u.mul(&integral_op(rt, at_n));
    let level_n = rt.weights_at_level(n);
    let rn: usize = level_n.iter().map(|&w| dims[w]).sum();
    let total: usize = all.iter().map(|&w| dims[w]).sum();
    let mut z = QMatrix::zeros(total, rn);
    let mut row_off = std::collections::HashMap::new();
    let mut off = 0;
    for &w in &all {
        row_off.insert(w, off);
        off += dims[w];
    }
    let mut col_off = std::collections::HashMap::new();
    let mut off = 0;
    for &w in &level_n {
        col_off.insert(w, off);
        off += dims[w];
    }
    for (&(t, s), blk) in img.blocks() {
        if let (Some(&r), Some(&c)) = (row_off.get(&t), col_off.get(&s)) {
            z.set_block(r, c, blk);
        }
    }
    let g_full = gram_op(rt, |_| true).to_dense(&all, dims);
    let keep: usize = rt.weights_up_to_level(n).iter().map(|&w| dims[w]).sum();
    let gq = quotient_gram(&g_full, keep);
    let z_top = z.block(0, 0, keep, rn);
    let lhs = &(&z_top.transpose() * &gq) * &z_top;

    let u0 = uminus_zero(rt, word)?;
    let mut m = rt.identity();
    for (a, s) in &u0 {
        m = m.mul(&rt.chi(a, s)?);
    }
    let z0 = m.restrict(|t, s| at_n(t) && at_n(s)).mul(&integral_op(rt, at_n));
    let rhs = z0.transpose().mul(&gram_op(rt, at_n)).mul(&z0).to_dense(&level_n, dims);
    Ok(lhs == rhs)
}

/// The tower Ȳ_{0,x} ← Ȳ_{1,x} ← … ← Ȳ_{N,x} and its kernels.
#[derive(Clone, Debug)]
pub struct ProSystem<'a> {
    rt: &'a RepTruncation,
    x: GroupElement,
    level_bound: usize,
    tower: Vec<QMatrix>,
    kernels: Vec<GramLattice>,
}

impl<'a> ProSystem<'a> {
    pub fn truncation(&self) -> &'a RepTruncation {
        self.rt
    }

    pub fn element(&self) -> &GroupElement {
        &self.x
    }

    pub fn level_bound(&self) -> usize {
        self.level_bound
    }

    /// Gram matrix of Ȳ_{n,x} in the integral basis, ordered by level.
    pub fn tower_gram(&self, n: usize) -> &QMatrix {
        &self.tower[n]
    }

    pub fn tower_lattice(&self, n: usize) -> Result<GramLattice> {
        Ok(GramLattice::new(self.tower[n].clone())?.with_label(format!("Y{n}")))
    }

    /// K̄_n = V_ℤ[n] with the restriction of the norm of Ȳ_{n,x}; K̄_0 = Ȳ_{0,x}.
    pub fn kernel(&self, n: usize) -> &GramLattice {
        &self.kernels[n]
    }

    pub fn rank(&self, n: usize) -> usize {
        self.tower[n].rows()
    }
}

/// Builds the tower up to level N and runs the admissibility checks: every
/// induced quotient norm equals the directly computed one, and each kernel is the
/// next level of V_ℤ.
pub fn build_pro_system<'a>(rt: &'a RepTruncation, x: &GroupElement, level_bound: usize) -> Result<ProSystem<'a>> {
    if level_bound > rt.level_bound() {
        return Err(Error::RangeExceeded(format!(
            "tower level {level_bound} exceeds the truncation bound {}",
            rt.level_bound()
        )));
    }
    let x_op = x.matrix(rt)?;
    if !preserves_filtration(rt, &x_op) {
        return Err(Error::AdmissibilityFailure(LOWERS_LEVEL.into()));
    }
    let tower: Vec<QMatrix> = (0..=level_bound).map(|n| twisted_tower_gram(rt, &x_op, n)).collect();
    for n in 0..=level_bound {
        let want: usize = (0..=n).map(|m| rt.dim_level(m)).sum();
        if tower[n].rows() != want {
            return Err(Error::AdmissibilityFailure(format!("Y{n} has rank {}, expected {want}", tower[n].rows())));
        }
        if !tower[n].is_positive_definite() {
            return Err(Error::AdmissibilityFailure(format!("Y{n} is not positive definite")));
        }
        for m in 0..n {
            if quotient_gram(&tower[n], tower[m].rows()) != tower[m] {
                return Err(Error::AdmissibilityFailure(format!(
                    "quotient norm on Y{m} induced from Y{n} differs from the direct one"
                )));
            }
        }
        if n > 0 {
            // q_{n-1} in integral coordinates, and its kernel.
            let (r1, r0) = (tower[n].rows(), tower[n - 1].rows());
            let qmap = QMatrix::from_fn(r0, r1, |i, j| if i == j { Q::one() } else { Q::zero() });
            let ker = qmap.kernel();
            let expected = rt.dim_level(n);
            let on_level_n = (0..ker.cols()).all(|c| (0..r0).all(|i| ker[(i, c)].is_zero()));
            if ker.cols() != expected || !on_level_n || qmap.rank() != r0 {
                return Err(Error::AdmissibilityFailure(format!("kernel of q{} is not V_Z[{n}]", n - 1)));
            }
        }
    }
    let mut kernels = Vec::with_capacity(level_bound + 1);
    for (n, g) in tower.iter().enumerate() {
        let r = g.rows();
        let k = rt.dim_level(n);
        kernels.push(GramLattice::new(g.block(r - k, r - k, k, k))?.with_label(format!("K{n}")));
    }
    Ok(ProSystem { rt, x: x.clone(), level_bound, tower, kernels })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// g·x with g in the isometry group.
    LeftK,
    /// x·γ with γ integral and lower triangular.
    RightGamma,
}

#[derive(Clone, Debug)]
pub struct InvarianceEvidence {
    pub holds: bool,
    /// Largest entrywise difference of the compared Gram matrices.
    pub max_deviation: f64,
    /// For the right action: the integral change of basis on each Y_n.
    pub changes_of_basis: Vec<QMatrix>,
}

/// Compares Ψ(gx) (left) or Ψ(xg) (right) with Ψ(x) on every Y_n, n ≤ N.
pub fn invariance_check(
    rt: &RepTruncation,
    x: &GroupElement,
    g: &GroupElement,
    side: Side,
    level_bound: usize,
) -> Result<InvarianceEvidence> {
    use crate::repspace::Factor;
    if level_bound > rt.level_bound() {
        return Err(Error::RangeExceeded(format!("level {level_bound} exceeds {}", rt.level_bound())));
    }
    let x_op = x.matrix(rt)?;
    let g_op = g.matrix(rt)?;
    if !preserves_filtration(rt, &g_op) {
        return Err(Error::NotInStabilizer(LOWERS_LEVEL.into()));
    }
    let mut evidence = InvarianceEvidence { holds: true, max_deviation: 0.0, changes_of_basis: Vec::new() };
    match side {
        Side::LeftK => {
            let ok = g.factors.iter().all(|f| matches!(f, Factor::W { s, .. } if s.abs() == Q::one()));
            if !ok {
                return Err(Error::NotInStabilizer(format!("{g} is not a word in w_a(±1)")));
            }
            let gx = g_op.mul(&x_op);
            for n in 0..=level_bound {
                let a = twisted_tower_gram(rt, &x_op, n);
                let b = twisted_tower_gram(rt, &gx, n);
                evidence.max_deviation = evidence.max_deviation.max(a.max_abs_diff_f64(&b));
                evidence.holds &= a == b;
            }
        }
        Side::RightGamma => {
            let xg = x_op.mul(&g_op);
            for n in 0..=level_bound {
                let keep = |w: usize| rt.level_of(w) <= n;
                let b_inv = Op::block_diagonal(
                    (0..rt.num_weights()).filter(|&w| keep(w)).map(|w| (w, rt.integral_basis(w).inverse().unwrap())),
                );
                let gamma = b_inv
                    .mul(&g_op.restrict(|t, s| keep(t) && keep(s)))
                    .mul(&integral_op(rt, keep))
                    .to_dense(&rt.weights_up_to_level(n), rt.dims());
                if !gamma.is_integral() {
                    return Err(Error::NotInStabilizer(format!("{g} does not preserve V_Z on Y{n}")));
                }
                if gamma.det().abs() != Q::one() {
                    return Err(Error::NotInStabilizer(format!("{g} is not invertible over Z on Y{n}")));
                }
                let a = &(&gamma.transpose() * &twisted_tower_gram(rt, &x_op, n)) * &gamma;
                let b = twisted_tower_gram(rt, &xg, n);
                evidence.max_deviation = evidence.max_deviation.max(a.max_abs_diff_f64(&b));
                evidence.holds &= a == b;
                evidence.changes_of_basis.push(gamma);
            }
        }
    }
    Ok(evidence)
}

/// Effective constants of the shortest-vector bound
/// λ₁(K̄_n ⊗ O(δ)) ≥ C₁C₂·e^{−(A₁+A₂)√n}·τ^{−n}·e^{−δ}.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundConstants {
    pub ln_c1: f64,
    pub a1: f64,
    pub ln_c2: f64,
    pub a2: f64,
    pub tau: f64,
}

impl BoundConstants {
    pub fn ln_lambda1_bound(&self, n: usize, delta: f64) -> f64 {
        let n = n as f64;
        self.ln_c1 + self.ln_c2 - (self.a1 + self.a2) * n.sqrt() - n * self.tau.ln() - delta
    }

    pub fn to_json(&self) -> Value {
        json!({
            "C1": fmt_from_ln(self.ln_c1),
            "A1": fmt_f64(self.a1),
            "C2": fmt_from_ln(self.ln_c2),
            "A2": fmt_f64(self.a2),
        })
    }
}

/// The constants for x = u⁻·h·η(τ), 0 < τ < 1.
///
/// Writing μ = pΛ + μ̄ + kδ, ln h^μ = ln h^{pΛ} + ⟨μ̄, H₀⟩ and |μ̄|² ≤ 2pn + K with
/// K the linear–quadratic constant, so |⟨μ̄, H₀⟩| ≤ |H₀|(√(2p)√n + √K). Each
/// classical factor χ_{−β}(s) of u⁻(0) satisfies ‖χ v‖ ≥ s′^{−M/2}‖v‖ where s′ is
/// the top eigenvalue of χ_β(s)χ_{−β}(s) in SL₂ and M bounds |⟨μ, β∨⟩|.
pub fn lower_bound_constants(rt: &RepTruncation, x: &GroupElement) -> Result<BoundConstants> {
    let (form, u0) = iwasawa(rt, x)?;
    let tau = q_to_f64(&form.tau);
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::TauOutOfRange(form.tau.to_string()));
    }
    let ad = rt.affine();
    let rs = ad.root_system();
    let l = ad.rank();
    let ws = rt.weight_system();
    let lambda = ws.lambda();
    let p = ad.pair_c(lambda);
    let p_f = q_to_f64(&p);
    let k_lq = {
        let (_, resid) = ws.check_linear_quadratic();
        let ll = ad.inner(lambda, lambda);
        q_to_f64(&resid.max(ll).max(Q::zero()))
    };
    let mut p_lambda = AffineWeight { coords: vec![Q::zero(); l + 2] };
    p_lambda.coords[l + 1] = p.clone();

    // ln h^μ = Σ_b ln|s_b|·⟨μ, b∨⟩.
    let ln_h = |mu: &AffineWeight| -> f64 {
        form.torus
            .iter()
            .map(|(b, s)| {
                let bw = root_weight(ad, b);
                q_ln_abs(s) * q_to_f64(&(q(2) * ad.inner(mu, &bw) / ad.inner(&bw, &bw)))
            })
            .sum()
    };
    let simple = |i: usize| {
        let mut v = vec![0i64; l + 1];
        v[i] = 1;
        root_weight(ad, &v)
    };
    let g: Vec<f64> = (0..l).map(|i| ln_h(&simple(i))).collect();
    let f_inv = rs.form().inverse().expect("classical form is nondegenerate").to_f64();
    let h0_norm = {
        let gv = nalgebra::DVector::from_vec(g);
        (gv.transpose() * &f_inv * &gv)[(0, 0)].max(0.0).sqrt()
    };
    let sqrt_2p = (2.0 * p_f).sqrt();
    let ln_c1 = ln_h(&p_lambda) - h0_norm * k_lq.sqrt();
    let a1 = h0_norm * sqrt_2p;

    let (mut ln_c2, mut a2) = (0.0, 0.0);
    for (neg, s) in &u0 {
        let s = q_to_f64(s);
        let s2 = s * s;
        let s_prime = ((2.0 + s2) + (s2 * s2 + 4.0 * s2).sqrt()) / 2.0;
        let ln_sp = s_prime.ln();
        let beta: Vec<i64> = neg[..l].iter().map(|c| -c).collect();
        let beta_norm = q_to_f64(&rs.inner_i(&beta, &beta)).sqrt();
        let mut bw = root_weight(ad, &beta.iter().copied().chain([0]).collect::<Vec<_>>());
        bw.coords[l] = Q::zero();
        let lam_pair = q_to_f64(&(q(2) * ad.inner(&p_lambda, &bw) / ad.inner(&bw, &bw))).abs();
        ln_c2 -= 0.5 * ln_sp * (lam_pair + 2.0 * k_lq.sqrt() / beta_norm);
        a2 += ln_sp * sqrt_2p / beta_norm;
    }
    Ok(BoundConstants { ln_c1, a1, ln_c2, a2, tau })
}

/// C₁C₂·e^{−(A₁+A₂)√n}·τ^{−n}·e^{−ε}.
pub fn lambda1_lower_bound(rt: &RepTruncation, x: &GroupElement, n: usize, eps: f64) -> Result<f64> {
    Ok(lower_bound_constants(rt, x)?.ln_lambda1_bound(n, eps).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    Inconclusive,
    DivergentSuspected,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Converged => "CONVERGED",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::DivergentSuspected => "DIVERGENT-SUSPECTED",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SummabilityOptions {
    /// Rescaling t of the squared norm, i.e. an extra twist by O(−½ log t).
    pub scale_t: f64,
    /// Largest kernel rank evaluated by enumeration.
    pub exact_rank_cap: usize,
    /// Least level up to which kernel ranks come from exact multiplicities;
    /// defaults to 2N. The horizon grows towards the remainder start, up to `max_horizon`.
    pub horizon: Option<usize>,
    pub max_horizon: usize,
    /// How far past N to look for the start of the geometric remainder.
    pub search_limit: usize,
}

impl Default for SummabilityOptions {
    fn default() -> Self {
        SummabilityOptions { scale_t: 1.0, exact_rank_cap: 200, horizon: None, max_horizon: 60, search_limit: 100_000 }
    }
}

#[derive(Clone, Debug)]
pub struct LevelTerm {
    pub n: usize,
    pub rank: u64,
    pub ln_lambda1_lb: f64,
    pub lambda1_exact: Option<f64>,
    /// ln of a certified upper bound on h⁰_θ(K̄_n ⊗ O(ε)).
    pub ln_h0_upper: f64,
    /// ln h⁰_θ(K̄_n ⊗ O(ε)) from enumeration.
    pub ln_h0_exact: Option<f64>,
    pub ln_partial_sum: f64,
}

impl LevelTerm {
    /// ln of the best available value: exact if enumerated, else the bound.
    pub fn ln_value(&self) -> f64 {
        self.ln_h0_exact.unwrap_or(self.ln_h0_upper)
    }
}

#[derive(Clone, Debug)]
pub struct SummabilityReport {
    pub tau: f64,
    pub epsilon: f64,
    pub scale_t: f64,
    pub constants: BoundConstants,
    pub levels: Vec<LevelTerm>,
    /// ln of the certified bound on Σ_{n>N} h⁰_θ(K̄_n ⊗ O(ε)).
    pub ln_tail_bound: f64,
    /// First level from which the reported terms strictly decrease up to N.
    pub n_star: Option<usize>,
    /// First level from which the analytic λ₁ bound clears (rank/2π)^{1/2} through N.
    pub groenewegen_crossover: Option<usize>,
    /// Level from which every term is bounded by e^{−n−K}.
    pub remainder_start: Option<usize>,
    pub verdict: Verdict,
}

impl SummabilityReport {
    pub fn tail_bound(&self) -> f64 {
        self.ln_tail_bound.exp()
    }

    pub fn to_json(&self) -> Value {
        let levels: Vec<Value> = self
            .levels
            .iter()
            .map(|t| {
                json!({
                    "n": t.n,
                    "rank": t.rank,
                    "lambda1_lb": fmt_from_ln(t.ln_lambda1_lb),
                    "lambda1_exact": t.lambda1_exact.map(fmt_f64),
                    "h0_upper": fmt_from_ln(t.ln_h0_upper),
                    "h0_exact": t.ln_h0_exact.map(fmt_from_ln),
                    "partial_sum": fmt_from_ln(t.ln_partial_sum),
                })
            })
            .collect();
        json!({
            "tau": fmt_f64(self.tau),
            "epsilon": fmt_f64(self.epsilon),
            "t": fmt_f64(self.scale_t),
            "constants": self.constants.to_json(),
            "levels": levels,
            "tail_bound": fmt_from_ln(self.ln_tail_bound),
            "n_star": self.n_star,
            "groenewegen_crossover": self.groenewegen_crossover,
            "remainder_start": self.remainder_start,
            "verdict": self.verdict.to_string(),
        })
    }
}

/// ln C(r, λ₁) for real rank r, valid for huge arguments.
fn ln_term_bound(r: f64, ln_l1: f64) -> f64 {
    let ln3 = 3f64.ln();
    let ln_x = PI.ln() + 2.0 * ln_l1;
    let x = ln_x.exp();
    if r <= 1e5 && ln_x < 600.0 {
        return ln_groenewegen(r, ln_l1).ln_exact_bound;
    }
    if x > r {
        // 3^r (1 − r/2x)^{-1} e^{−x}
        return r * ln3 - (-(0.5 * r) / x).ln_1p() - x;
    }
    // Γ(a, x) ≤ Γ(a).
    r * ln3 - 0.5 * r * ln_x + ln_gamma(0.5 * r + 1.0)
}

/// ln h⁰ = ln ln(1 + S) from ln S.
fn ln_h0_from_ln_sum(ln_s: f64) -> f64 {
    if ln_s == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if ln_s < -18.0 {
        ln_s - 0.5 * ln_s.exp()
    } else {
        ln_s.exp().ln_1p().ln()
    }
}

fn ln_add(a: f64, b: f64) -> f64 {
    log_sum_exp(&[a, b])
}

/// Strong summability of Ψ(x) ⊗ O(ε), with the defaults of [`SummabilityOptions`].
pub fn strong_summability(
    rt: &RepTruncation,
    x: &GroupElement,
    eps: f64,
    level_bound: usize,
    tol: f64,
) -> Result<SummabilityReport> {
    strong_summability_with(rt, x, eps, level_bound, tol, &SummabilityOptions::default())
}

/// Evaluates h⁰_θ(K̄_n ⊗ O(ε)) for n ≤ N (by enumeration on levels the truncation
/// reaches, by the Groenewegen bound above it) and certifies the tail beyond N.
///
/// Tail: once the analytic λ₁ bound satisfies x(n) = πλ₁² ≥ R(n)·ln 3 + ln 2 + n + K,
/// with R(n) = dim V[0]·e^{π√(2·dim g·n/3)} the rank bound of the generalized Verma
/// module, and the growth rate of ln x dominates that of the right side, every later
/// term is at most e^{−n−K}. Levels before that use exact ranks up to the horizon.
pub fn strong_summability_with(
    rt: &RepTruncation,
    x: &GroupElement,
    eps: f64,
    level_bound: usize,
    tol: f64,
    opts: &SummabilityOptions,
) -> Result<SummabilityReport> {
    if !(tol > 0.0) || !(opts.scale_t > 0.0) {
        return Err(Error::RangeExceeded("tolerance and t must be positive".into()));
    }
    let constants = lower_bound_constants(rt, x)?;
    let delta = eps - 0.5 * opts.scale_t.ln();
    let ad = rt.affine();
    let ln3 = 3f64.ln();
    let k_margin = (-tol.ln()).max(0.0) + 10.0;
    let ln_r0 = (rt.dim_level(0) as f64).ln();
    let dim_g = ad.root_system().dim_lie_algebra() as f64;
    let c_rate = PI * (2.0 * dim_g / 3.0).sqrt();
    let a_tot = constants.a1 + constants.a2;
    let ln_inv_tau = -constants.tau.ln();
    let verma_ln_rank = |n: usize| ln_r0 + c_rate * (n as f64).sqrt();
    let mut remainder_start = None;
    for n in level_bound + 1..=level_bound + opts.search_limit {
        let nf = n as f64;
        let ln_x = PI.ln() + 2.0 * constants.ln_lambda1_bound(n, delta);
        let ln_y = log_sum_exp(&[verma_ln_rank(n) + ln3.ln(), (2f64.ln() + nf + k_margin).ln()]);
        let rate_ok = 2.0 * ln_inv_tau - a_tot / nf.sqrt() >= (c_rate / (2.0 * nf.sqrt())).max(1.0 / nf);
        if rate_ok && ln_x >= ln_y {
            remainder_start = Some(n);
            break;
        }
    }
    let wanted = remainder_start.map_or(usize::MAX, |n1| n1 - 1);
    let horizon = opts
        .horizon
        .unwrap_or(2 * level_bound)
        .max(wanted.min(opts.max_horizon))
        .max(level_bound);
    let ws_owned;
    let ws: &WeightSystem = if rt.weight_system().level_bound() >= horizon {
        rt.weight_system()
    } else {
        ws_owned = WeightSystem::new(ad, rt.weight_system().lambda(), horizon)?;
        &ws_owned
    };
    let rank_at = |n: usize| ws.dim_level(n).map(|d| d as f64);

    let exact_top = level_bound.min(rt.level_bound());
    let pro = if exact_top > 0 || level_bound == 0 { Some(build_pro_system(rt, x, exact_top)?) } else { None };
    let mut levels = Vec::with_capacity(level_bound + 1);
    let mut ln_partial = f64::NEG_INFINITY;
    let mut crossover = None;
    for n in 0..=level_bound {
        let rank = ws.dim_level(n)?;
        let ln_lb = constants.ln_lambda1_bound(n, delta);
        if 2.0 * ln_lb > (rank as f64 / (2.0 * PI)).ln() {
            crossover.get_or_insert(n);
        } else {
            crossover = None;
        }
        let mut term = LevelTerm {
            n,
            rank,
            ln_lambda1_lb: ln_lb,
            lambda1_exact: None,
            ln_h0_upper: ln_term_bound(rank as f64, ln_lb),
            ln_h0_exact: None,
            ln_partial_sum: 0.0,
        };
        if let Some(pro) = pro.as_ref().filter(|_| n <= exact_top && (rank as usize) <= opts.exact_rank_cap) {
            let lat = pro.kernel(n).twist_by_o(delta);
            let sv = lat.shortest_vector()?;
            let ln_min = -PI * sv.lambda1 * sv.lambda1;
            let tol_n = (ln_min - 14.0).exp().max(1e-300);
            let ev = lat.theta_eval_with_minimum(&ThetaOptions::with_tolerance(tol_n))?;
            term.lambda1_exact = Some(sv.lambda1);
            term.ln_h0_exact = Some(ln_h0_from_ln_sum(ev.ln_nonzero));
            let ln_up = ln_add(ev.ln_nonzero, ev.tail_bound.ln());
            term.ln_h0_upper = term.ln_h0_upper.min(ln_h0_from_ln_sum(ln_up));
            let ln_lb_best = ln_lb.max(sv.lambda1.ln());
            term.ln_h0_upper = term.ln_h0_upper.min(ln_term_bound(rank as f64, ln_lb_best));
        }
        ln_partial = ln_add(ln_partial, term.ln_h0_upper);
        term.ln_partial_sum = ln_partial;
        levels.push(term);
    }

    // Tail beyond N: exact ranks up to the horizon, the rank bound after it.
    let tail_end = remainder_start.map_or(horizon, |n1| n1 - 1);
    let mut tail_terms = Vec::new();
    for n in level_bound + 1..=tail_end {
        let ln_r = if n <= horizon { rank_at(n)?.ln() } else { verma_ln_rank(n) };
        tail_terms.push(ln_term_bound(ln_r.exp(), constants.ln_lambda1_bound(n, delta)));
    }
    let ln_tail = match remainder_start {
        Some(n1) => {
            let ln_rem = -(n1 as f64) - k_margin - (1.0 - (-1f64).exp()).ln();
            tail_terms.push(ln_rem);
            log_sum_exp(&tail_terms)
        }
        None => f64::INFINITY,
    };

    let mut n_star = None;
    for i in (0..levels.len()).rev() {
        if i + 1 < levels.len() && levels[i + 1].ln_value() >= levels[i].ln_value() {
            break;
        }
        n_star = Some(i);
    }
    let verdict = if ln_tail < tol.ln() {
        Verdict::Converged
    } else {
        let k = levels.len();
        let growing = k >= 3 && (k - 3..k - 1).all(|i| levels[i + 1].ln_value() >= levels[i].ln_value());
        if ln_tail.is_infinite() && growing {
            Verdict::DivergentSuspected
        } else {
            Verdict::Inconclusive
        }
    };
    Ok(SummabilityReport {
        tau: constants.tau,
        epsilon: eps,
        scale_t: opts.scale_t,
        constants,
        levels,
        ln_tail_bound: ln_tail,
        n_star,
        groenewegen_crossover: crossover,
        remainder_start,
        verdict,
    })
}

/// The theta function of Ψ(x) at t, evaluated on Ȳ_{N,x}, with a certified bound
/// on the remaining increase Σ_{n>N} h⁰_θ(K̄_n ⊗ O(−½ log t)).
#[derive(Clone, Debug)]
pub struct ThetaValue {
    /// h⁰_θ(Ȳ_{N,x} ⊗ O(−½ log t)), the log of the theta sum.
    pub h0: f64,
    pub certified_tail: f64,
    pub report: SummabilityReport,
}

pub fn theta_function(
    rt: &RepTruncation,
    x: &GroupElement,
    t: f64,
    level_bound: usize,
    tol: f64,
) -> Result<ThetaValue> {
    let opts = SummabilityOptions { scale_t: t, ..Default::default() };
    // Half of the tolerance for the levels beyond N, half for the enumeration.
    let report = strong_summability_with(rt, x, 0.0, level_bound, tol / 2.0, &opts)?;
    if report.verdict != Verdict::Converged {
        return Err(Error::NotCertified(format!("summability verdict is {}", report.verdict)));
    }
    if level_bound > rt.level_bound() {
        return Err(Error::RangeExceeded(format!("level {level_bound} exceeds {}", rt.level_bound())));
    }
    let pro = build_pro_system(rt, x, level_bound)?;
    let lat = pro.tower_lattice(level_bound)?;
    let ev = lat.theta_eval(&ThetaOptions::with_tolerance(tol / 2.0).with_t(t))?;
    Ok(ThetaValue { h0: ev.h0, certified_tail: report.tail_bound() + ev.tail_bound, report })
}
