//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use loopgroup_theta::cartan::{AffineData, CartanMatrix};
use loopgroup_theta::lattice::{groenewegen_bound, GramLattice, ThetaOptions};
use loopgroup_theta::linalg::{q, qf, QMatrix, Q};
use loopgroup_theta::probundle::{
    build_pro_system, invariance_check, lambda1_lower_bound, quotient_gram, strong_summability_with,
    unipotent_quotient_identity, Side, SummabilityOptions, Verdict,
};
use loopgroup_theta::repspace::{GroupElement, Op, RepTruncation};
use loopgroup_theta::symm::{eval_lambda, lambda_poly};
use loopgroup_theta::weights::WeightSystem;
use num::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RR_TOL: f64 = 1e-9;
const BRUTE_TOL: f64 = 1e-12;
const ADMISSIBILITY_TOL: f64 = 1e-10;
const LEFT_INVARIANCE_TOL: f64 = 1e-9;
const TAIL_TOL: f64 = 1e-8;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    ensure(elapsed <= Duration::from_secs(limit_secs), || format!("took {elapsed:?}, limit {limit_secs} s"))
}

fn basic_a1(n: usize) -> RepTruncation {
    let ad = AffineData::from_cartan(CartanMatrix::a(1));
    let ws = WeightSystem::new(&ad, &ad.lambda_top(), n).unwrap();
    RepTruncation::build(&ws, n).unwrap()
}

/// Random positive definite Gram matrices with entries p/q, |p|, q ≤ 20.
fn random_grams(rng: &mut ChaCha8Rng, count: usize, max_rank: usize, min_eig: f64) -> Vec<QMatrix> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let r = rng.gen_range(1..=max_rank);
        let mut m = QMatrix::zeros(r, r);
        for i in 0..r {
            for j in i..r {
                let num = if i == j { rng.gen_range(1..=20) } else { rng.gen_range(-20..=20) };
                let den = rng.gen_range(1..=20);
                m[(i, j)] = qf(num, den);
                m[(j, i)] = qf(num, den);
            }
        }
        if !m.is_positive_definite() {
            continue;
        }
        let eig = m.to_f64().symmetric_eigenvalues().min();
        if eig >= min_eig {
            out.push(m);
        }
    }
    out
}

fn corpus() -> Vec<GramLattice> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    random_grams(&mut rng, 100, 4, 1e-3).into_iter().map(|g| GramLattice::new(g).unwrap()).collect()
}

fn riemann_roch() -> Outcome {
    let start = Instant::now();
    let opts = ThetaOptions::with_tolerance(1e-13);
    let mut worst: f64 = 0.0;
    for l in corpus() {
        let res = l.riemann_roch_residual(&opts).map_err(|e| e.to_string())?;
        worst = worst.max(res.abs());
    }
    ensure(worst < RR_TOL, || format!("max |h0 - h1 - deg| = {worst:e}"))?;
    within(start.elapsed(), 30)?;
    Ok(format!("100 lattices, max residual {worst:.2e}, {:.1?}", start.elapsed()))
}

fn groenewegen() -> Outcome {
    let opts = ThetaOptions::with_tolerance(1e-13);
    let mut violations = 0;
    let mut simplified_checked = 0;
    for l in corpus() {
        let h0 = l.theta_h0(&opts).map_err(|e| e.to_string())?;
        let l1 = l.shortest_vector().map_err(|e| e.to_string())?.lambda1;
        let b = groenewegen_bound(l.rank(), l1);
        if h0 > b.exact_bound {
            violations += 1;
        }
        if let Some(s) = b.simplified_bound {
            simplified_checked += 1;
            if s < b.exact_bound * (1.0 - 1e-12) {
                violations += 1;
            }
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok(format!("0 violations, simplified form compared on {simplified_checked} lattices"))
}

/// Σ e^{−π vᵀGv} over a box large enough that the rest is below 1e-17.
fn box_sum(g: &QMatrix) -> f64 {
    let gf = g.to_f64();
    let r = g.rows();
    let min_eig = gf.clone().symmetric_eigenvalues().min();
    // Outside the box, ‖v‖² ≥ min_eig·B², and the omitted count grows polynomially.
    let b = ((45.0 / (std::f64::consts::PI * min_eig)).sqrt()).ceil() as i64 + 1;
    let mut v = vec![-b; r];
    let mut sum = 0.0;
    loop {
        let mut n2 = 0.0;
        for i in 0..r {
            for j in 0..r {
                n2 += v[i] as f64 * gf[(i, j)] * v[j] as f64;
            }
        }
        sum += (-std::f64::consts::PI * n2).exp();
        let mut k = 0;
        loop {
            if k == r {
                return sum;
            }
            v[k] += 1;
            if v[k] <= b {
                break;
            }
            v[k] = -b;
            k += 1;
        }
    }
}

fn brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let grams = random_grams(&mut rng, 25, 3, 0.2);
    let opts = ThetaOptions::with_tolerance(1e-16);
    let mut worst: f64 = 0.0;
    for g in &grams {
        let h0 = GramLattice::new(g.clone()).unwrap().theta_h0(&opts).map_err(|e| e.to_string())?;
        worst = worst.max((h0 - box_sum(g).ln()).abs());
    }
    ensure(worst <= BRUTE_TOL, || format!("max deviation {worst:e}"))?;
    Ok(format!("25 lattices, max deviation {worst:.2e}"))
}

/// Partition numbers by Euler's pentagonal recurrence.
fn partitions(n: usize) -> Vec<u64> {
    let mut p = vec![0i64; n + 1];
    p[0] = 1;
    for m in 1..=n as i64 {
        let mut s = 0;
        for k in 1.. {
            let g1 = k * (3 * k - 1) / 2;
            if g1 > m {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            s += sign * p[(m - g1) as usize];
            let g2 = k * (3 * k + 1) / 2;
            if g2 <= m {
                s += sign * p[(m - g2) as usize];
            }
        }
        p[m as usize] = s;
    }
    p.into_iter().map(|x| x as u64).collect()
}

fn partition_identity() -> Outcome {
    let start = Instant::now();
    let ad = AffineData::from_cartan(CartanMatrix::a(1));
    let ws = WeightSystem::new(&ad, &ad.lambda_top(), 10).map_err(|e| e.to_string())?;
    let got: Vec<u64> = (0..=10i64).map(|n| ws.mult_m(&[n, n])).collect();
    let want = partitions(10);
    ensure(got == want, || format!("got {got:?}, expected {want:?}"))?;
    ensure(want == [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42], || "oracle mismatch".into())?;
    within(start.elapsed(), 60)?;
    Ok(format!("{got:?}"))
}

fn dominant_labels(len: usize, level: i64) -> Vec<Vec<i64>> {
    if len == 1 {
        return vec![vec![level]];
    }
    let mut out = Vec::new();
    for first in 0..=level {
        for mut rest in dominant_labels(len - 1, level - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn linear_quadratic() -> Outcome {
    let mut checked = 0;
    for c in [CartanMatrix::a(1), CartanMatrix::a(2)] {
        let ad = AffineData::from_cartan(c);
        let l = ad.rank();
        for level in 1..=2 {
            for labels in dominant_labels(l + 1, level) {
                let lambda = ad.weight_from_labels(&labels).map_err(|e| e.to_string())?;
                let ws = WeightSystem::new(&ad, &lambda, 8).map_err(|e| e.to_string())?;
                let ll = ad.inner(&lambda, &lambda);
                let p = ad.pair_c(&lambda);
                // Independent route: |μ̄|² − 2pn = (μ, μ) for μ = pΛ + μ̄ − nδ.
                let mut max = None::<Q>;
                for m in ws.table().keys() {
                    let mu = ws.weight(m);
                    let r = ad.classical_norm_sq(&mu) - q(2) * &p * q(m[l]);
                    ensure(r == ad.inner(&mu, &mu), || format!("residual at {m:?} is not (mu, mu)"))?;
                    max = Some(max.map_or(r.clone(), |x: Q| x.max(r)));
                    checked += 1;
                }
                let max = max.unwrap();
                ensure(max <= ll, || format!("labels {labels:?}: residual {max} > (lambda, lambda) = {ll}"))?;
                ensure(ws.linear_quadratic_residual(1) == max, || "library residual differs".into())?;
            }
        }
    }
    Ok(format!("{checked} weights, residual <= (lambda, lambda) everywhere"))
}

fn representation_consistency() -> Outcome {
    let rt = basic_a1(6);
    let ws = rt.weight_system();
    for w in 0..rt.num_weights() {
        let want = ws.mult_m(rt.weight_m(w));
        ensure(rt.dim(w) as u64 == want, || format!("weight {:?}: dim {} != {want}", rt.weight_m(w), rt.dim(w)))?;
    }
    let l = rt.affine().rank();
    for i in 0..=l {
        ensure(rt.e(i).adjoint(rt.grams(), rt.gram_inverses()) == *rt.f(i), || format!("e{i} adjoint is not f{i}"))?;
        // Self-adjoint diagonal operators separating the weights force orthogonality.
        let h = rt.h(i);
        ensure(h.adjoint(rt.grams(), rt.gram_inverses()) == h, || format!("h{i} is not self-adjoint"))?;
    }
    let gram = Op::block_diagonal((0..rt.num_weights()).map(|w| (w, rt.gram(w).clone())));
    for a in [vec![1i64, 0], vec![-1, 0]] {
        for s in [Q::one(), -Q::one()] {
            let w = rt.w_element(&a, &s).map_err(|e| e.to_string())?;
            ensure(w.transpose().mul(&gram).mul(&w) == gram, || format!("w({a:?}, {s}) is not an isometry"))?;
        }
    }
    Ok(format!("{} weights up to level 6", rt.num_weights()))
}

fn integrality() -> Outcome {
    let rt = basic_a1(6);
    for w in 0..rt.num_weights() {
        ensure(rt.integral_gram(w).is_integral(), || format!("weight {:?} Gram not integral", rt.weight_m(w)))?;
    }
    ensure(rt.integral_gram(0) == &QMatrix::identity(1), || "{v_lambda, v_lambda} != 1".into())?;
    let mut mins = Vec::new();
    for n in 0..=6 {
        let lat = GramLattice::new(rt.integral_gram_of_levels(|l| l == n)).map_err(|e| e.to_string())?;
        let sv = lat.shortest_vector().map_err(|e| e.to_string())?;
        ensure(sv.norm_sq_untwisted >= Q::one(), || format!("level {n}: minimum {}", sv.norm_sq_untwisted))?;
        mins.push(sv.norm_sq_untwisted.to_string());
    }
    Ok(format!("squared minima by level {}", mins.join(",")))
}

fn lambda_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0008);
    for _ in 0..5 {
        let x: Vec<Q> = (0..3).map(|_| qf(rng.gen_range(-9..=9), rng.gen_range(1..=7))).collect();
        let power: Vec<Q> = (1..=8u32).map(|j| x.iter().map(|xi| pow(xi, j)).sum()).collect();
        for p in 0..=8usize {
            // Complete homogeneous polynomial by direct monomial enumeration.
            let mut h = Q::zero();
            for a in 0..=p {
                for b in 0..=p - a {
                    h += pow(&x[0], a as u32) * pow(&x[1], b as u32) * pow(&x[2], (p - a - b) as u32);
                }
            }
            let rec = eval_lambda(p, &power).map_err(|e| e.to_string())?;
            let poly = lambda_poly(p).eval(&power).map_err(|e| e.to_string())?;
            ensure(rec == h && poly == h, || format!("Lambda_{p} at power sums of {x:?}"))?;
        }
    }
    for p in 0..=10 {
        let ones = vec![Q::one(); p.max(1)];
        ensure(eval_lambda(p, &ones).map_err(|e| e.to_string())? == Q::one(), || format!("Lambda_{p}(1, 1, ...) != 1"))?;
    }
    Ok("h_p for p <= 8 in 3 variables; Lambda_p(1, ...) = 1 for p <= 10".into())
}

fn pow(x: &Q, e: u32) -> Q {
    (0..e).fold(Q::one(), |acc, _| acc * x)
}

/// Negative real roots of affine A1 of level at most 3, in simple-root coordinates.
fn negative_roots() -> Vec<Vec<i64>> {
    let mut out = vec![vec![-1, 0]];
    for j in 1..=3 {
        out.push(vec![-1 - j, -j]);
        out.push(vec![1 - j, -j]);
    }
    out
}

fn random_word(rng: &mut ChaCha8Rng, integral: bool) -> Vec<(Vec<i64>, Q)> {
    let roots = negative_roots();
    let len = rng.gen_range(1..=4);
    (0..len)
        .map(|_| {
            let a = roots[rng.gen_range(0..roots.len())].clone();
            let num = rng.gen_range(-5..=5);
            let s = if integral { q(num) } else { qf(num, rng.gen_range(1..=4)) };
            (a, s)
        })
        .collect()
}

fn unipotent_identity() -> Outcome {
    let rt = basic_a1(5);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0009);
    for k in 0..5 {
        let word = random_word(&mut rng, false);
        for n in 0..=5 {
            let ok = unipotent_quotient_identity(&rt, &word, n).map_err(|e| e.to_string())?;
            ensure(ok, || format!("word {k} fails at level {n}: {word:?}"))?;
        }
    }
    Ok("5 words, levels 0..5, exact".into())
}

/// The word in the element syntax, e.g. chi(-2a1-a2,3).
fn word_element(word: &[(Vec<i64>, Q)]) -> String {
    word.iter()
        .map(|(a, s)| {
            let (c1, c2) = (a[0], a[1]);
            let mut root = String::new();
            for (c, name) in [(c1, "a1"), (c2, "a2")] {
                if c != 0 {
                    root.push_str(&format!("{}{}{}", if c < 0 { "-" } else if root.is_empty() { "" } else { "+" }, if c.abs() == 1 { String::new() } else { c.abs().to_string() }, name));
                }
            }
            format!("chi({root},{s})")
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn invariance() -> Outcome {
    let rt = basic_a1(5);
    let ad = rt.affine();
    let x = GroupElement::parse(EXAMPLE, ad).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for g in ["w(a1,1)", "w(a1,-1)", "w(a1,1);w(a1,1);w(a1,-1)"] {
        let g = GroupElement::parse(g, ad).map_err(|e| e.to_string())?;
        let ev = invariance_check(&rt, &x, &g, Side::LeftK, 5).map_err(|e| e.to_string())?;
        worst = worst.max(ev.max_deviation);
        ensure(ev.max_deviation <= LEFT_INVARIANCE_TOL, || format!("left {g}: deviation {:e}", ev.max_deviation))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_000a);
    let mut words = vec!["chi(-a1,1)".to_string()];
    words.extend((0..4).map(|_| word_element(&random_word(&mut rng, true))));
    for g in &words {
        let g = GroupElement::parse(g, ad).map_err(|e| e.to_string())?;
        let ev = invariance_check(&rt, &x, &g, Side::RightGamma, 5).map_err(|e| e.to_string())?;
        ensure(ev.holds, || format!("right {g}: Grams not equivalent"))?;
        for m in &ev.changes_of_basis {
            ensure(m.is_integral() && m.det().abs() == Q::one(), || format!("right {g}: change of basis not unimodular"))?;
        }
    }
    Ok(format!("left max deviation {worst:.1e}; {} right words unimodular", words.len()))
}

const EXAMPLE: &str = "h(a1,2);chi(-a1,1);eta(1/2)";

fn theta_finiteness() -> Outcome {
    let start = Instant::now();
    let rt = basic_a1(8);
    let x = GroupElement::parse(EXAMPLE, rt.affine()).map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for eps in [0.05, 0.5] {
        for (t_label, t) in [("1/4", 0.25), ("1/2", 0.5), ("1", 1.0), ("2", 2.0), ("4", 4.0)] {
            let opts = SummabilityOptions { scale_t: t, ..Default::default() };
            let rep = strong_summability_with(&rt, &x, eps, 20, TAIL_TOL, &opts).map_err(|e| e.to_string())?;
            let tag = format!("eps {eps}, t {t_label}");
            ensure(rep.verdict == Verdict::Converged, || format!("{tag}: verdict {}", rep.verdict))?;
            ensure(rep.tail_bound() < TAIL_TOL, || format!("{tag}: tail {:e}", rep.tail_bound()))?;
            let n_star = rep.n_star.ok_or_else(|| format!("{tag}: no decreasing range"))?;
            for w in rep.levels[n_star..].windows(2) {
                ensure(w[1].ln_value() < w[0].ln_value(), || format!("{tag}: not decreasing at level {}", w[1].n))?;
            }
            for lvl in &rep.levels {
                if let Some(exact) = lvl.lambda1_exact {
                    let lb = lvl.ln_lambda1_lb.exp();
                    ensure(lb <= exact * (1.0 + 1e-12), || format!("{tag}: bound {lb} > exact {exact} at level {}", lvl.n))?;
                }
            }
            summary.push(n_star);
        }
    }
    // The analytic bound is checked once more without the t-rescaling.
    for n in 0..=8 {
        let lb = lambda1_lower_bound(&rt, &x, n, 0.0).map_err(|e| e.to_string())?;
        let pro = build_pro_system(&rt, &x, 8).map_err(|e| e.to_string())?;
        let exact = pro.kernel(n).shortest_vector().map_err(|e| e.to_string())?.lambda1;
        ensure(lb <= exact * (1.0 + 1e-12), || format!("level {n}: bound {lb} > exact {exact}"))?;
    }
    within(start.elapsed(), 300)?;
    Ok(format!("10 runs CONVERGED at N = 20, n* in {:?}, {:.1?}", summary, start.elapsed()))
}

fn tower_admissibility() -> Outcome {
    let rt = basic_a1(6);
    let ad = rt.affine();
    let mut worst: f64 = 0.0;
    for word in [EXAMPLE, "chi(-a1,2);chi(-2a1-a2,1/3);h(a2,3);eta(2/3)"] {
        let x = GroupElement::parse(word, ad).map_err(|e| e.to_string())?;
        let pro = build_pro_system(&rt, &x, 6).map_err(|e| e.to_string())?;
        for n in 1..=6 {
            for m in 0..n {
                let induced = quotient_gram(pro.tower_gram(n), pro.rank(m));
                let direct = pro.tower_gram(m);
                worst = worst.max(induced.max_abs_diff_f64(direct));
                ensure(&induced == direct, || format!("{word}: Y{n} -> Y{m} not exact"))?;
            }
            ensure(pro.kernel(n).rank() == rt.dim_level(n), || format!("{word}: kernel rank at level {n}"))?;
        }
    }
    ensure(worst <= ADMISSIBILITY_TOL, || format!("deviation {worst:e}"))?;
    Ok("all pairs m < n <= 6 exact".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("Riemann-Roch on random lattices", riemann_roch),
        ("Groenewegen bound", groenewegen),
        ("theta enumeration vs box sum", brute_force),
        ("partition identity", partition_identity),
        ("linear-quadratic inequality", linear_quadratic),
        ("representation consistency", representation_consistency),
        ("integrality", integrality),
        ("Lambda_p identities", lambda_identities),
        ("unipotent quotient identity", unipotent_identity),
        ("Psi invariance", invariance),
        ("theta-finiteness end to end", theta_finiteness),
        ("tower admissibility", tower_admissibility),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
