//! Acceptance suite. Runs every criterion, prints one `PASS`/`FAIL` line
//! each, and exits non-zero if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use sfd_cli::bench::{parse_summary, run_figure, BenchOutput, Figure, Scale, SummaryRow};
use sfd_core::criteria::{apply_swap_delta, init_swap_state, mc_discrepancy_oracle};
use sfd_core::design::{generate_random_lhs, generate_srs, validate_lhs};
use sfd_core::diagnostics::{mst_kruskal, mst_prim};
use sfd_core::optimize::{optimize, OptimizerConfig};
use sfd_core::{evaluate, CriterionSpec, DesignMatrix, Seed};

const BENCH_SEED: Seed = Seed(20_240_601);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Type-7 median, computed here rather than taken from the library.
fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * 0.5;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

fn file<'a>(out: &'a BenchOutput, name: &str) -> &'a str {
    &out.files.iter().find(|(n, _)| n == name).unwrap_or_else(|| panic!("{name} missing")).1
}

/// `(panel, metric, d) -> values` from a long subprojection CSV.
fn long_values(csv: &str) -> BTreeMap<(String, String, usize), Vec<f64>> {
    let mut out: BTreeMap<_, Vec<f64>> = BTreeMap::new();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        out.entry((f[0].to_string(), f[1].to_string(), f[2].parse().unwrap()))
            .or_default()
            .push(f[5].parse().unwrap());
    }
    out
}

fn figure(fig: Figure) -> &'static BenchOutput {
    static CACHE: OnceLock<Vec<(Figure, OnceLock<BenchOutput>)>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Figure::ALL.iter().map(|&f| (f, OnceLock::new())).collect());
    let slot = &cache.iter().find(|(f, _)| *f == fig).unwrap().1;
    slot.get_or_init(|| run_figure(fig, Scale::Desk, BENCH_SEED).unwrap())
}

fn summary_row<'a>(rows: &'a [SummaryRow], panel: &str, metric: &str, d: usize) -> &'a SummaryRow {
    rows.iter()
        .find(|r| r.panel == panel && r.metric == metric && r.d == d)
        .unwrap_or_else(|| panic!("no {panel}/{metric}/{d} row"))
}

fn incremental_equivalence() -> Outcome {
    let design = generate_random_lhs(100, 10, Seed(1)).unwrap();
    let specs = [
        CriterionSpec::centered_l2(),
        CriterionSpec::wraparound_l2(),
        CriterionSpec::star_l2(),
        CriterionSpec::phi_p(50),
    ];
    let mut worst = Vec::new();
    for spec in specs {
        let mut state = init_swap_state(&design, spec).unwrap();
        let mut current = design.clone();
        let mut rng = Seed(2).rng();
        let mut err = 0.0f64;
        for _ in 0..1000 {
            let col = rng.random_range(0..10);
            let a = rng.random_range(0..100);
            let b = (a + rng.random_range(1..100)) % 100;
            let (value, next) = apply_swap_delta(&mut state, &current, col, a, b).unwrap();
            let full = evaluate(next.matrix(), spec).unwrap().value;
            err = err.max((value.value - full).abs() / full.abs());
            current = next;
        }
        worst.push((spec, err));
    }
    let max = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    let parts: Vec<String> = worst.iter().map(|(s, e)| format!("{s} {e:.1e}")).collect();
    outcome(max <= 1e-10, format!("max relative error {max:.1e} <= 1e-10 ({})", parts.join(", ")))
}

fn star_oracle() -> Outcome {
    let mut hits = 0;
    for k in 0..20u64 {
        let design = generate_random_lhs(20, 3, Seed(100 + k)).unwrap().into_matrix();
        let closed = evaluate(&design, CriterionSpec::star_l2()).unwrap().value.powi(2);
        let mc = mc_discrepancy_oracle(&design, 2_000_000, Seed(500 + k)).unwrap();
        if (closed - mc.estimate).abs() <= 3.0 * mc.standard_error {
            hits += 1;
        }
    }
    outcome(hits >= 19, format!("{hits}/20 designs within 3 standard errors (need 19)"))
}

fn analytic_values() -> Outcome {
    let one = |row: &[f64]| DesignMatrix::from_rows(&[row]).unwrap();
    let c2_a = evaluate(&one(&[0.5, 0.5]), CriterionSpec::centered_l2()).unwrap().value;
    let c2_b = evaluate(&one(&[0.0]), CriterionSpec::centered_l2()).unwrap().value;
    let w2 = evaluate(&one(&[0.3]), CriterionSpec::wraparound_l2()).unwrap().value;
    let pass = (c2_a - 25.0 / 144.0).abs() <= 1e-12
        && (c2_b - 1.0 / 3.0).abs() <= 1e-12
        && (w2 - 1.0 / 6.0).abs() <= 1e-12;
    outcome(
        pass,
        format!("C2(0.5,0.5) = {c2_a:.15}, C2(0) = {c2_b:.15}, W2(x) = {w2:.15} (squared convention)"),
    )
}

fn ese_reaches_half_unit() -> Outcome {
    let budget = 30_000;
    let mut first_hits = Vec::new();
    for r in 0..10u64 {
        let seed = Seed(1).offset(r);
        let initial = generate_random_lhs(50, 5, seed).unwrap();
        let config = OptimizerConfig::ese(100, 50, budget, seed)
            .with_monitors(vec![CriterionSpec::mindist().into()]);
        let res = optimize(&initial, CriterionSpec::phi_p(50), &config).unwrap();
        let hit = res
            .trace
            .records
            .iter()
            .find(|rec| rec.perturbations <= budget && rec.monitors[0] > 0.5)
            .map(|rec| rec.perturbations);
        first_hits.push(hit);
    }
    let reached = first_hits.iter().flatten().count();
    let counts: Vec<String> = first_hits
        .iter()
        .map(|h| h.map_or("-".to_string(), |c| c.to_string()))
        .collect();
    outcome(
        reached >= 8,
        format!("{reached}/10 runs reach mindist > 0.5 within {budget} (first hit at: {})", counts.join(" ")),
    )
}

fn phi_p_beats_mindist_driver() -> Outcome {
    let csv = file(figure(Figure::Fig4), "fig4.csv");
    let final_mean = |variant: &str| -> f64 {
        csv.lines()
            .filter(|l| l.starts_with("50000,") && l.split(',').nth(1) == Some(variant))
            .map(|l| l.split(',').nth(7).unwrap().parse().unwrap())
            .next()
            .unwrap()
    };
    let (phip, direct) = (final_mean("phip"), final_mean("mindist"));
    outcome(
        phip > direct,
        format!("mean final mindist: phi_p driver {phip:.4} > mindist driver {direct:.4}"),
    )
}

fn subprojection_robustness() -> Outcome {
    let values = long_values(file(figure(Figure::Fig9), "fig9.csv"));
    let mut pass = true;
    let mut parts = Vec::new();
    let mut squared_in_band = true;
    let mut squared = Vec::new();
    for d in [5, 10, 20] {
        let key = |panel: &str| (panel.to_string(), "c2".to_string(), d);
        let random = &values[&key("random")];
        let optimized = &values[&key("c2-optimized")];
        let rooted = |v: &[f64]| v.iter().map(|x| x.sqrt()).collect::<Vec<_>>();
        let (m_rand, m_opt) = (median(random), median(optimized));
        let r_rand = median(&rooted(random));
        let in_band = (r_rand - 0.017).abs() <= 0.005;
        squared_in_band &= (m_rand - 0.017).abs() <= 0.005;
        squared.push(format!("{m_rand:.2e}"));
        pass &= m_opt < m_rand && in_band;
        parts.push(format!(
            "d={d}: optimized {:.4} < random {:.4} (rooted), random in 0.017+-0.005: {in_band}",
            median(&rooted(optimized)),
            r_rand
        ));
    }
    let finding = if squared_in_band {
        "squared values also in band".to_string()
    } else {
        format!("band holds for rooted C2 only (squared random medians {})", squared.join(", "))
    };
    outcome(pass, format!("{}; {finding}", parts.join("; ")))
}

fn maximin_non_robustness() -> Outcome {
    let d = 20;
    let c2_opt = parse_summary(file(figure(Figure::Fig9), "fig9-summary.csv")).unwrap();
    let maximin = parse_summary(file(figure(Figure::Fig12), "fig12-summary.csv")).unwrap();
    let mst_maximin = parse_summary(file(figure(Figure::Fig13), "fig13-summary.csv")).unwrap();
    let mst_c2 = parse_summary(file(figure(Figure::Fig14), "fig14-summary.csv")).unwrap();
    let c2_a = summary_row(&maximin, "maximin", "c2", d).median;
    let c2_b = summary_row(&c2_opt, "c2-optimized", "c2", d).median;
    let m_a = summary_row(&mst_maximin, "maximin", "mst-m", d).median;
    let m_b = summary_row(&mst_c2, "c2-optimized", "mst-m", d).median;
    let s_a = summary_row(&mst_maximin, "maximin", "mst-sigma", d).median;
    let s_b = summary_row(&mst_c2, "c2-optimized", "mst-sigma", d).median;
    outcome(
        c2_a > c2_b && m_a < m_b && s_a > s_b,
        format!(
            "d=20 medians, maximin vs C2-optimized: C2 {c2_a:.3e} > {c2_b:.3e}, MST m {m_a:.4} < {m_b:.4}, MST sigma {s_a:.4} > {s_b:.4}"
        ),
    )
}

fn dist(m: &DesignMatrix, i: usize, j: usize) -> f64 {
    m.row(i).iter().zip(m.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn brute_force_mst(m: &DesignMatrix) -> f64 {
    let n = m.n_points();
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << edges.len()) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let chosen: Vec<(usize, usize)> =
            (0..edges.len()).filter(|k| mask >> k & 1 == 1).map(|k| edges[k]).collect();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &(i, j) in &chosen {
                let v = if i == u { j } else if j == u { i } else { continue };
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        if seen.iter().all(|&s| s) {
            best = best.min(chosen.iter().map(|&(i, j)| dist(m, i, j)).sum());
        }
    }
    best
}

fn mst_properties() -> Outcome {
    let mut worst_gap = 0.0f64;
    let mut counts_ok = true;
    for k in 0..100u64 {
        let n = 2 + (k as usize * 53) % 199;
        let m = generate_srs(n, 1 + k as usize % 7, Seed(900 + k)).unwrap();
        let (p, q) = (mst_prim(&m).unwrap(), mst_kruskal(&m).unwrap());
        counts_ok &= p.len() == n - 1 && q.len() == n - 1;
        let wp: f64 = p.iter().map(|e| e.length).sum();
        let wq: f64 = q.iter().map(|e| e.length).sum();
        worst_gap = worst_gap.max((wp - wq).abs() / wp.max(1.0));
    }
    let mut brute_ok = 0;
    let mut brute_total = 0;
    for n in 2..=6 {
        for s in 0..6u64 {
            let m = generate_srs(n, 2, Seed(70 * n as u64 + s)).unwrap();
            let w: f64 = mst_prim(&m).unwrap().iter().map(|e| e.length).sum();
            brute_total += 1;
            if (w - brute_force_mst(&m)).abs() <= 1e-12 * w.max(1.0) {
                brute_ok += 1;
            }
        }
    }
    outcome(
        worst_gap <= 1e-12 && counts_ok && brute_ok == brute_total,
        format!(
            "Prim vs Kruskal weight gap {worst_gap:.1e} on 100 designs, N-1 edges: {counts_ok}, enumeration {brute_ok}/{brute_total}"
        ),
    )
}

fn structural_invariants() -> Outcome {
    let mut design = generate_random_lhs(20, 5, Seed(3)).unwrap();
    let mut rng = Seed(4).rng();
    let mut lhs_ok = true;
    for _ in 0..100_000 {
        let a = rng.random_range(0..20);
        let b = (a + rng.random_range(1..20)) % 20;
        design.swap_in_place(rng.random_range(0..5), a, b).unwrap();
        lhs_ok &= validate_lhs(&design).is_valid();
    }

    let p = 50;
    let mut bracket_ok = 0;
    for k in 0..1000u64 {
        let n = 3 + (k as usize % 30);
        let m = generate_random_lhs(n, 1 + k as usize % 6, Seed(k)).unwrap().into_matrix();
        let phi = evaluate(&m, CriterionSpec::phi_p(p)).unwrap().value;
        let md = evaluate(&m, CriterionSpec::mindist()).unwrap().value;
        let upper = ((n * (n - 1) / 2) as f64).powf(1.0 / p as f64);
        let prod = phi * md;
        if prod >= 1.0 - 1e-12 && prod <= upper + 1e-12 {
            bracket_ok += 1;
        }
    }

    let mut worst_shift = 0.0f64;
    let mut worst_reflect = 0.0f64;
    for k in 0..50u64 {
        let m = generate_random_lhs(30, 4, Seed(300 + k)).unwrap().into_matrix();
        let mut r = Seed(400 + k).rng();
        let shifts: Vec<f64> = (0..4).map(|_| r.random::<f64>()).collect();
        let flip: Vec<bool> = (0..4).map(|_| r.random::<bool>()).collect();
        let shifted: Vec<Vec<f64>> = m
            .rows()
            .map(|row| row.iter().zip(&shifts).map(|(x, t)| (x + t).fract()).collect())
            .collect();
        let reflected: Vec<Vec<f64>> = m
            .rows()
            .map(|row| row.iter().zip(&flip).map(|(x, &f)| if f { 1.0 - x } else { *x }).collect())
            .collect();
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs();
        let w = |m: &DesignMatrix| evaluate(m, CriterionSpec::wraparound_l2()).unwrap().value;
        let c = |m: &DesignMatrix| evaluate(m, CriterionSpec::centered_l2()).unwrap().value;
        worst_shift = worst_shift.max(rel(w(&m), w(&DesignMatrix::from_rows(&shifted).unwrap())));
        worst_reflect = worst_reflect.max(rel(c(&m), c(&DesignMatrix::from_rows(&reflected).unwrap())));
    }
    outcome(
        lhs_ok && bracket_ok == 1000 && worst_shift <= 1e-10 && worst_reflect <= 1e-10,
        format!(
            "1e5 swaps keep LHS: {lhs_ok}; phi_p*mindist bracket {bracket_ok}/1000; W2 shift {worst_shift:.1e}; C2 reflection {worst_reflect:.1e}"
        ),
    )
}

fn bench_run(fig: &str, dir: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_sfd"))
        .args(["bench", fig, "--scale", "desk", "--seed", "7", "--out-dir"])
        .arg(dir)
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn data_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn manifest_config(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    serde_json::json!({ "config": v["config"], "seed": v["seed"], "outputs": v["outputs"] })
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for fig in ["fig6", "fig9"] {
        let (a, b) = (tmp.path().join(format!("{fig}-a")), tmp.path().join(format!("{fig}-b")));
        if !(bench_run(fig, &a) && bench_run(fig, &b)) {
            return outcome(false, format!("sfd bench {fig} failed"));
        }
        let (fa, fb) = (data_files(&a), data_files(&b));
        let same = !fa.is_empty() && fa == fb && manifest_config(&a) == manifest_config(&b);
        pass &= same;
        parts.push(format!("{fig}: {} CSV files identical: {same}", fa.len()));
    }
    outcome(pass, parts.join("; "))
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("incremental update equivalence", incremental_equivalence),
        ("star L2 vs Monte Carlo oracle", star_oracle),
        ("analytic single-point values", analytic_values),
        ("ESE reaches mindist > 0.5", ese_reaches_half_unit),
        ("phi_p driver beats direct mindist", phi_p_beats_mindist_driver),
        ("subprojection robustness of C2-optimized LHS", subprojection_robustness),
        ("maximin non-robustness at d=20", maximin_non_robustness),
        ("MST property suite", mst_properties),
        ("structural invariants", structural_invariants),
        ("bench determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let status = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {status} [{:.1}s] {name}: {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            result.detail
        );
        failed += usize::from(!result.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
