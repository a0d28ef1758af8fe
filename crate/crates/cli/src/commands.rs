use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use loopgroup_theta::cartan::{affine_roots_json, height, roots_json, AffineData, AffineWeight, CartanMatrix};
use loopgroup_theta::lattice::{groenewegen_bound, GramLattice, ThetaOptions};
use loopgroup_theta::linalg::{fmt_q, parse_q, q_to_f64};
use loopgroup_theta::probundle::{
    build_pro_system, lower_bound_constants, strong_summability_with, SummabilityOptions, SummabilityReport, Verdict,
};
use loopgroup_theta::report::{fmt_f64, fmt_from_ln};
use loopgroup_theta::repspace::{GroupElement, RepTruncation};
use loopgroup_theta::weights::WeightSystem;
use serde_json::{json, Value};

use crate::{AlgebraArgs, BundleArgs, Failure, LatticeArgs, Output, Rendered, ThetaArgs};

fn number(text: &str, what: &str) -> Result<f64, Failure> {
    let t = text.trim();
    if let Some(x) = parse_q(t) {
        return Ok(q_to_f64(&x));
    }
    t.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Failure::parse(format!("bad {what} '{text}'")))
}

fn number_list(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(',').map(|x| number(x, what)).collect()
}

fn positive(x: f64, what: &str) -> Result<f64, Failure> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(Failure::parse(format!("{what} must be positive")))
    }
}

fn finish(out: &Output, json: Value, text: impl FnOnce() -> String) -> Rendered {
    let text = if out.json { format!("{}\n", serde_json::to_string_pretty(&json).unwrap()) } else { text() };
    Rendered { text, code: 0 }
}

fn algebra(a: &AlgebraArgs) -> Result<(AffineData, AffineWeight), Failure> {
    let c = CartanMatrix::parse(&a.cartan)?;
    let ad = AffineData::from_cartan(c);
    let lambda = match &a.lambda {
        None => ad.lambda_top(),
        Some(s) => {
            let labels: Result<Vec<i64>, _> = s.split(',').map(|x| x.trim().parse::<i64>()).collect();
            let labels = labels.map_err(|_| Failure::parse(format!("bad labels '{s}'")))?;
            ad.weight_from_labels(&labels)?
        }
    };
    Ok((ad, lambda))
}

fn truncation(a: &AlgebraArgs, levels: usize) -> Result<RepTruncation, Failure> {
    let (ad, lambda) = algebra(a)?;
    let ws = WeightSystem::new(&ad, &lambda, levels)?;
    Ok(RepTruncation::build(&ws, levels)?)
}

pub fn lattice(a: &LatticeArgs) -> Result<Rendered, Failure> {
    let raw = if a.input.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Failure::parse(format!("cannot read input: {e}")))?;
        s
    } else {
        std::fs::read_to_string(&a.input).map_err(|e| Failure::parse(format!("cannot read {}: {e}", a.input.display())))?
    };
    let v: Value = serde_json::from_str(&raw).map_err(|e| Failure::parse(format!("invalid JSON: {e}")))?;
    // Any defect of the input lattice is an input error.
    let l = GramLattice::from_json(&v).map_err(|e| Failure::parse(e.to_string()))?;
    let t = positive(number(&a.t, "t")?, "t")?;
    let tol = positive(number(&a.tol, "tolerance")?, "tolerance")?;
    // Scaling by t is the twist by O(−½ log t).
    let scaled = l.twist_by_o(-0.5 * t.ln());
    let h0 = scaled.theta_h0(&ThetaOptions::with_tolerance(tol))?;
    let h1 = scaled.theta_h1(&ThetaOptions::with_tolerance(tol))?;
    let deg = scaled.arithmetic_degree();
    let (lambda1, groenewegen) = if l.rank() == 0 {
        (Value::Null, Value::Null)
    } else {
        let l1 = scaled.shortest_vector()?.lambda1;
        let b = groenewegen_bound(l.rank(), l1);
        (
            json!(fmt_f64(l1)),
            json!({
                "exact": fmt_from_ln(b.ln_exact_bound),
                "simplified": b.ln_simplified_bound.map(fmt_from_ln),
            }),
        )
    };
    let j = json!({
        "rank": l.rank(),
        "t": fmt_f64(t),
        "covol": fmt_f64((-deg).exp()),
        "deg": fmt_f64(deg),
        "h0": fmt_f64(h0),
        "h1": fmt_f64(h1),
        "rr_residual": fmt_f64(h0 - h1 - deg),
        "lambda1": lambda1,
        "groenewegen": groenewegen,
    });
    Ok(finish(&a.output, j.clone(), || {
        let mut s = String::new();
        for key in ["rank", "t", "covol", "deg", "h0", "h1", "rr_residual", "lambda1"] {
            let v = &j[key];
            let shown = v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string());
            writeln!(s, "{key:<12} {shown}").unwrap();
        }
        if let Some(b) = j["groenewegen"]["exact"].as_str() {
            writeln!(s, "{:<12} {b}", "groenewegen").unwrap();
        }
        s
    }))
}

pub fn roots(a: &AlgebraArgs) -> Result<Rendered, Failure> {
    let (ad, _) = algebra(a)?;
    let rs = ad.root_system();
    Ok(finish(&a.output, roots_json(rs), || {
        let mut s = format!("{} positive roots, highest {:?}\n", rs.positive_roots().len(), rs.highest_root());
        writeln!(s, "{:<8} root", "height").unwrap();
        for r in rs.positive_roots() {
            writeln!(s, "{:<8} {r:?}", height(r)).unwrap();
        }
        s
    }))
}

pub fn affine(a: &AlgebraArgs) -> Result<Rendered, Failure> {
    let (ad, _) = algebra(a)?;
    let j = affine_roots_json(&ad, a.level_bound);
    Ok(finish(&a.output, j.clone(), || {
        let mut s = String::from("affine Cartan matrix\n");
        for row in ad.affine_cartan() {
            writeln!(s, "  {row:?}").unwrap();
        }
        writeln!(s, "{:<6} {:<10} {:<16} {}", "iota", "type", "coords", "mult").unwrap();
        for r in j["roots"].as_array().unwrap() {
            writeln!(s, "{:<6} {:<10} {:<16} {}", r["iota"], r["type"].as_str().unwrap(), r["coords"].to_string(), r["mult"])
                .unwrap();
        }
        s
    }))
}

pub fn weights(a: &AlgebraArgs) -> Result<Rendered, Failure> {
    let (ad, lambda) = algebra(a)?;
    let ws = WeightSystem::new(&ad, &lambda, a.level_bound)?;
    Ok(finish(&a.output, ws.to_json(), || {
        let mut s = format!("{:<6} {:<20} mult\n", "level", "lambda - m");
        for n in 0..=a.level_bound {
            for m in ws.weights_at_level(n).unwrap() {
                writeln!(s, "{:<6} {:<20} {}", n, format!("{m:?}"), ws.mult_m(m)).unwrap();
            }
        }
        s
    }))
}

pub fn rep(a: &AlgebraArgs) -> Result<Rendered, Failure> {
    let rt = truncation(a, a.level_bound)?;
    Ok(finish(&a.output, rt.to_json(), || {
        let mut s = format!("{:<6} {:<20} {:<5} integral Gram det\n", "level", "lambda - m", "dim");
        for w in 0..rt.num_weights() {
            let det = rt.integral_gram(w).det();
            writeln!(s, "{:<6} {:<20} {:<5} {}", rt.level_of(w), format!("{:?}", rt.weight_m(w)), rt.dim(w), fmt_q(&det))
                .unwrap();
        }
        s
    }))
}

pub fn bundle(a: &BundleArgs) -> Result<Rendered, Failure> {
    let rt = truncation(&a.algebra, a.algebra.level_bound)?;
    let x = GroupElement::parse(&a.element, rt.affine())?;
    let pro = build_pro_system(&rt, &x, a.algebra.level_bound)?;
    let constants = lower_bound_constants(&rt, &x).ok();
    let opts = ThetaOptions::with_tolerance(1e-12);
    let mut levels = Vec::new();
    for n in 0..=pro.level_bound() {
        let k = pro.kernel(n);
        let sv = k.shortest_vector()?;
        levels.push(json!({
            "n": n,
            "tower_rank": pro.rank(n),
            "kernel_rank": k.rank(),
            "kernel_deg": fmt_f64(k.arithmetic_degree()),
            "kernel_lambda1": fmt_f64(sv.lambda1),
            "kernel_h0": fmt_f64(k.theta_h0(&opts)?),
            "kernel": k.to_json(),
        }));
    }
    let j = json!({
        "element": x.to_string(),
        "admissible": true,
        "constants": constants.as_ref().map(|c| c.to_json()),
        "levels": levels,
    });
    Ok(finish(&a.algebra.output, j.clone(), || {
        let mut s = format!("element {x}\ntower admissible through level {}\n", pro.level_bound());
        writeln!(s, "{:<4} {:<6} {:<6} {:<22} {:<22} h0(kernel)", "n", "rank Y", "rank K", "deg(kernel)", "lambda1(kernel)").unwrap();
        for l in &levels {
            writeln!(
                s,
                "{:<4} {:<6} {:<6} {:<22} {:<22} {}",
                l["n"],
                l["tower_rank"],
                l["kernel_rank"],
                l["kernel_deg"].as_str().unwrap(),
                l["kernel_lambda1"].as_str().unwrap(),
                l["kernel_h0"].as_str().unwrap()
            )
            .unwrap();
        }
        s
    }))
}

fn level_rows(rep: &SummabilityReport) -> Vec<[String; 7]> {
    rep.levels
        .iter()
        .map(|l| {
            [
                l.n.to_string(),
                l.rank.to_string(),
                fmt_from_ln(l.ln_lambda1_lb),
                l.lambda1_exact.map(fmt_f64).unwrap_or_else(|| "-".into()),
                fmt_from_ln(l.ln_h0_upper),
                l.ln_h0_exact.map(fmt_from_ln).unwrap_or_else(|| "-".into()),
                fmt_from_ln(l.ln_partial_sum),
            ]
        })
        .collect()
}

pub fn theta_finite(a: &ThetaArgs) -> Result<Rendered, Failure> {
    let epsilons = number_list(&a.epsilon, "epsilon")?;
    let ts: Vec<f64> = number_list(&a.t, "t")?.into_iter().map(|t| positive(t, "t")).collect::<Result<_, _>>()?;
    let tol = positive(number(&a.tol, "tolerance")?, "tolerance")?;
    if epsilons.iter().any(|&e| e < 0.0) {
        return Err(Failure::parse("epsilon must be nonnegative"));
    }
    let n = a.algebra.level_bound;
    let exact = a.exact_levels.min(n);
    let rt = truncation(&a.algebra, exact)?;
    let x = GroupElement::parse(&a.element, rt.affine())?;
    let mut reports = Vec::new();
    for &eps in &epsilons {
        for &t in &ts {
            let opts = SummabilityOptions { scale_t: t, ..Default::default() };
            reports.push(strong_summability_with(&rt, &x, eps, n, tol, &opts)?);
        }
    }
    let all = reports.iter().all(|r| r.verdict == Verdict::Converged);
    if let Some(path) = &a.csv {
        write_csv(path, &reports)?;
    }
    let j = json!({
        "element": x.to_string(),
        "level_bound": n,
        "exact_levels": exact,
        "tolerance": fmt_f64(tol),
        "all_converged": all,
        "reports": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
    });
    let mut out = finish(&a.algebra.output, j, || {
        let mut s = format!("element {x}, N = {n}, exact levels 0..{exact}\n");
        for r in &reports {
            writeln!(s, "\nepsilon {}  t {}  tau {}", fmt_f64(r.epsilon), fmt_f64(r.scale_t), fmt_f64(r.tau)).unwrap();
            writeln!(
                s,
                "{:<4} {:<7} {:<22} {:<22} {:<22} {:<22} {}",
                "n", "rank", "lambda1_lb", "lambda1_exact", "h0_upper", "h0_exact", "partial_sum"
            )
            .unwrap();
            for row in level_rows(r) {
                writeln!(
                    s,
                    "{:<4} {:<7} {:<22} {:<22} {:<22} {:<22} {}",
                    row[0], row[1], row[2], row[3], row[4], row[5], row[6]
                )
                .unwrap();
            }
            let opt = |v: Option<usize>| v.map_or("-".to_string(), |n| n.to_string());
            writeln!(
                s,
                "tail {}  n* {}  crossover {}  remainder from {}  verdict {}",
                fmt_from_ln(r.ln_tail_bound),
                opt(r.n_star),
                opt(r.groenewegen_crossover),
                opt(r.remainder_start),
                r.verdict
            )
            .unwrap();
        }
        s
    });
    out.code = if all { 0 } else { 1 };
    Ok(out)
}

fn write_csv(path: &Path, reports: &[SummabilityReport]) -> Result<(), Failure> {
    let mut s = String::from("epsilon,t,n,rank,lambda1_lb,lambda1_exact,h0_upper,h0_exact,partial_sum\n");
    for r in reports {
        for row in level_rows(r) {
            writeln!(s, "{},{},{}", fmt_f64(r.epsilon), fmt_f64(r.scale_t), row.join(",")).unwrap();
        }
    }
    std::fs::write(path, s).map_err(|e| Failure { code: 3, message: format!("cannot write {}: {e}", path.display()) })
}
