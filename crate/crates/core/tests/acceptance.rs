//! The acceptance suite: one PASS/FAIL line per criterion, nonzero exit on
//! any failure. Runs at the desk preset.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use junta_lab::bitspace::Point;
use junta_lab::harness::build_tester;
use junta_lab::instances::{sample_no, theorem_query_bound, ExperimentParams};
use junta_lab::oracles::{truth_table, BooleanFunction, NoOracle};
use junta_lab::seed::{derive_seed, rng_from_seed};
use junta_lab::verification::claims::EXACT_GRID;
use junta_lab::verification::exact::exact_c32;
use junta_lab::verification::suite::{desk_config, run_claim, Claim};
use junta_lab::verification::{Check, ClaimReport, Relation};
use rand::Rng;
use serde_json::Value;

const SEED: u64 = 42;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn failures(checks: &[&Check]) -> Vec<String> {
    checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{}: {} vs {}", c.name, c.statistic, c.threshold))
        .collect()
}

fn claim_report(claim: Claim) -> Result<ClaimReport, String> {
    let cfg = desk_config(claim).map_err(|e| e.to_string())?;
    run_claim(claim, &cfg, SEED).map_err(|e| e.to_string())
}

fn judge(checks: Vec<&Check>, summary: String) -> Outcome {
    if checks.is_empty() {
        return Err("no checks selected".into());
    }
    let bad = failures(&checks);
    if bad.is_empty() {
        Ok(summary)
    } else {
        Err(bad.join("; "))
    }
}

fn whole_report(claim: Claim) -> Outcome {
    let r = claim_report(claim)?;
    let line = r.summary_line();
    judge(r.checks.iter().collect(), line)
}

fn c1_junta() -> Outcome {
    let r = claim_report(Claim::C1)?;
    if r.trials != 100 || r.checks.len() != 2 {
        return Err(format!("expected 100 trials and probe + truth-table checks, got {:?}", r.checks));
    }
    let line = r.summary_line();
    judge(r.checks.iter().collect(), line)
}

fn c2_far() -> Outcome {
    let cfg = desk_config(Claim::C2).map_err(|e| e.to_string())?;
    let p = &cfg.params;
    if (p.n(), p.k(), p.m(), cfg.trials) != (8, 2, 110, 200) {
        return Err(format!("unexpected regime n={} k={} m={} trials={}", p.n(), p.k(), p.m(), cfg.trials));
    }
    whole_report(Claim::C2)
}

fn scattering_regime_ok() -> Result<(), String> {
    let cfg = desk_config(Claim::Events).map_err(|e| e.to_string())?;
    let k = cfg.params.k() as i32;
    let q_max = 2f64.powf(k as f64 / 2.0 - 3.0);
    if (cfg.q as f64) > q_max || cfg.params.m() < 1 << k || cfg.trials < 10_000 {
        return Err(format!("regime violates q <= {q_max}, m >= 2^k or 1e4 trials"));
    }
    Ok(())
}

fn events_subset(names: &[&str]) -> Outcome {
    scattering_regime_ok()?;
    static EVENTS: OnceLock<Result<ClaimReport, String>> = OnceLock::new();
    let r = EVENTS.get_or_init(|| claim_report(Claim::Events)).as_ref()?;
    let picked: Vec<&Check> = r
        .checks
        .iter()
        .filter(|c| names.iter().any(|n| c.name.ends_with(&format!(": {n}"))))
        .collect();
    let worst = picked
        .iter()
        .filter(|c| c.relation != Relation::Exact)
        .map(|c| c.statistic - c.threshold)
        .fold(f64::INFINITY, f64::min);
    let summary = format!("{} checks, smallest margin {worst:.4}", picked.len());
    judge(picked, summary)
}

fn c31_alpha_law() -> Outcome {
    let cfg = desk_config(Claim::C31).map_err(|e| e.to_string())?;
    if cfg.q != 3 || cfg.trials != 100_000 {
        return Err("expected q=3 and 1e5 trials".into());
    }
    whole_report(Claim::C31)
}

fn c32_exact() -> Outcome {
    let mut cases = 0;
    for case in EXACT_GRID {
        if case.n > 10 || case.q > 2 {
            return Err(format!("grid case {case:?} is outside n <= 10, q <= 2"));
        }
        let cfg = desk_config(Claim::C32).map_err(|e| e.to_string())?;
        for name in &cfg.testers {
            let tester = build_tester(name, case.n, case.k, case.q, SEED).map_err(|e| e.to_string())?;
            let cmp = exact_c32(tester.as_ref(), case.n, case.k, case.m, case.q).map_err(|e| e.to_string())?;
            if !cmp.equal {
                return Err(format!("{name} at {case:?}: {} != {}", cmp.acc_yes, cmp.acc_hybrid));
            }
            cases += 1;
        }
    }
    Ok(format!("{cases} (tester, case) pairs equal as rationals"))
}

fn gap_regime() -> Outcome {
    let cfg = desk_config(Claim::Gap).map_err(|e| e.to_string())?;
    let qb = cfg.params.q_bound();
    if qb < 4.0 || cfg.q != qb.floor() as usize {
        return Err(format!("q={} is not floor(qBound={qb}) with qBound >= 4", cfg.q));
    }
    whole_report(Claim::Gap)
}

/// First-principles evaluation of the NO function on bit vectors.
fn naive_no_table(g: &NoOracle, lambda: f64) -> Vec<bool> {
    let n = g.dimension();
    let mut support: Vec<Vec<bool>> = g.support().points().iter().map(|p| p.bits().collect()).collect();
    support.sort();
    let labels = g.gamma();
    let j: Vec<usize> = g.coords().coords().to_vec();
    let raw = (0.5 - lambda) * n as f64;
    let threshold = if raw < -1e-9 { None } else { Some((raw + 1e-9).floor() as usize) };
    (0..1u64 << n)
        .map(|idx| {
            let x: Vec<bool> = (0..n).map(|i| (idx >> (n - 1 - i)) & 1 == 1).collect();
            if let Some(pos) = support.iter().position(|y| *y == x) {
                return labels[pos];
            }
            if let Some(t) = threshold {
                for (pos, y) in support.iter().enumerate() {
                    let same_section = j.iter().all(|&c| x[c] == y[c]);
                    let d = x.iter().zip(y).filter(|(a, b)| a != b).count();
                    if same_section && d <= t {
                        return labels[pos];
                    }
                }
            }
            g.background().eval(&Point::from_bits(&x)).expect("dimension matches")
        })
        .collect()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = rng_from_seed(derive_seed(SEED, "acceptance-oracle", 0));
    let mut near_hits = 0usize;
    for i in 0..20u64 {
        let n = rng.random_range(6..=12usize);
        let k = rng.random_range(2..=3usize);
        let m = rng.random_range(4..=(1usize << n).min(200));
        let lambda = [0.0, 0.1, 0.2, 0.3, 0.45][rng.random_range(0..5)];
        let params = ExperimentParams::derive(n, k, 2.0)
            .and_then(|p| p.with_override(m, lambda))
            .map_err(|e| e.to_string())?;
        let inst = sample_no(&params, derive_seed(SEED, "acceptance-no", i), false).map_err(|e| e.to_string())?;
        let g = inst.no_oracle().ok_or("NO instance without a NO oracle")?;
        let fast = truth_table(g).map_err(|e| e.to_string())?;
        let slow = naive_no_table(g, lambda);
        if fast != slow {
            let at = fast.iter().zip(&slow).position(|(a, b)| a != b).unwrap_or(0);
            return Err(format!("instance {i} (n={n}, k={k}, m={m}, lambda={lambda}) differs at index {at}"));
        }
        near_hits += (0..1u64 << n)
            .filter(|&x| matches!(g.branch(&Point::from_index(n, x)), junta_lab::oracles::NoBranch::Near(_)))
            .count();
    }
    if near_hits == 0 {
        return Err("the near-support branch never fired".into());
    }
    Ok(format!("20 instances bit-exact, {near_hits} near-support points exercised"))
}

fn bound_grid() -> Outcome {
    whole_report(Claim::Bounds)
}

fn significant_match(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    ((a - b) / b).abs() < 5e-12
}

fn golden_values() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/params.json");
    let rows: Vec<Value> = serde_json::from_str(&fs::read_to_string(&path).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let num = |v: &Value, key: &str| -> f64 { v[key].as_str().and_then(|s| s.parse().ok()).expect(key) };
    for row in &rows {
        let n = row["n"].as_u64().unwrap() as usize;
        let k = row["k"].as_u64().unwrap() as usize;
        let p = if row["lnC_label"] == "juntas" {
            ExperimentParams::for_junta_class(n, k)
        } else {
            ExperimentParams::derive(n, k, num(row, "lnC"))
        }
        .map_err(|e| e.to_string())?;
        let pairs = [
            ("lnC", p.ln_class_size()),
            ("lambda", p.lambda()),
            ("qBound", p.q_bound()),
            ("nMin", p.regime_min_n()),
        ];
        for (key, got) in pairs {
            if !significant_match(got, num(row, key)) {
                return Err(format!("n={n} k={k} {key}: {got} vs {}", row[key]));
            }
        }
        if !significant_match(theorem_query_bound(k, p.lambda()), num(row, "qBound")) {
            return Err(format!("theorem_query_bound mismatch at n={n} k={k}"));
        }
        if p.m() as u64 != row["m"].as_u64().unwrap() {
            return Err(format!("n={n} k={k} m: {} vs {}", p.m(), row["m"]));
        }
    }
    Ok(format!("{} grid rows match to 12 significant digits", rows.len()))
}

fn run_verify_all(out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_junta-lab"))
        .args(["verify", "--claim", "all", "--preset", "desk", "--seed", "42", "--out"])
        .arg(out)
        .env_remove("JUNTA_LAB_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.code() != Some(0) {
        return Err(format!(
            "exit {:?}: {}",
            status.status.code(),
            String::from_utf8_lossy(&status.stdout)
        ));
    }
    Ok(())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_verify_all(&a)?;
    run_verify_all(&b)?;
    let mut files: Vec<_> = fs::read_dir(&a)
        .map_err(|e| e.to_string())?
        .map(|e| e.map(|e| e.file_name()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    files.sort();
    if files.len() != Claim::ALL.len() {
        return Err(format!("expected {} reports, found {}", Claim::ALL.len(), files.len()));
    }
    for f in &files {
        let x = fs::read(a.join(f)).map_err(|e| e.to_string())?;
        let y = fs::read(b.join(f)).map_err(|e| e.to_string())?;
        if x != y {
            return Err(format!("{} differs between runs", f.to_string_lossy()));
        }
    }
    Ok(format!("{} reports byte-identical", files.len()))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("C1 YES draws are k-juntas", c1_junta),
        ("C2 NO draws are (1/3)-far", c2_far),
        ("Scattering Pr[E0] >= 15/16", || events_subset(&["freqE0"])),
        ("Goodness >= 7/8, E1 and E2 >= 31/32", || {
            events_subset(&["freqGood", "freqE1", "freqE2", "freqGood <= min(freqE0, freqE1, freqE2)"])
        }),
        ("C3.1 alpha law uniform", c31_alpha_law),
        ("C3.2 exact equality A vs A'", c32_exact),
        ("C3.3 gap <= 1/8", || whole_report(Claim::C33)),
        ("End-to-end gap <= 1/4", gap_regime),
        ("NO oracle vs naive re-implementation", oracle_equivalence),
        ("Chernoff and birthday bounds", bound_grid),
        ("Formula golden values", golden_values),
        ("Determinism of verify --claim all", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}  ({secs:.1}s)  {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}  ({secs:.1}s)  {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
