//! Acceptance criteria, one test per criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line; run with `--nocapture` to see them.

use std::time::{Duration, Instant};

use rand::Rng;

use euclid_sr::checks::{
    check_chain_dichotomy, check_star3, check_validator_sensitivity, random_instance, random_matching, sample_star_d,
    star3_instance, stream,
};
use euclid_sr::io;
use euclid_sr::layout::OrthogonalLayout;
use euclid_sr::reduction::{build_solution, extract_cover, literal_audit, reduce, Reduction, ReductionParams};
use euclid_sr::x3c::{solve_x3c_bruteforce, X3CInstance};
use euclid_sr::{enumerate_stable, find_blocking, greedy_match_2, verify_stable, SearchMode, Verdict};

const SEED: u64 = 20_240_601;

fn report(n: u32, ok: bool, limit: Duration, elapsed: Duration, detail: &str) {
    let fast = elapsed < limit;
    let verdict = if ok && fast { "PASS" } else { "FAIL" };
    println!("criterion {n:>2}: {verdict} {detail} ({:.3} s, limit {} s)", elapsed.as_secs_f64(), limit.as_secs_f64());
    assert!(ok, "criterion {n}: {detail}");
    assert!(fast, "criterion {n}: took {elapsed:?}, limit {limit:?}");
}

fn fixture(d: usize) -> Reduction {
    reduce(&X3CInstance::prism(), &OrthogonalLayout::prism_fixture(), ReductionParams::new(d)).expect("fixture reduces")
}

#[test]
fn criterion_01_star3_exhaustive() {
    let t = Instant::now();
    let r = check_star3();
    let pruned = enumerate_stable(&star3_instance(), None, None);
    let elapsed = t.elapsed();
    // Frozen from the unpruned reference enumeration.
    let ok = r.passed() && r.stable.len() == 3 && pruned.complete() && pruned.matchings.len() == r.stable.len();
    report(1, ok, Duration::from_secs(5), elapsed, &format!("{}; {} stable matchings", r.summary(), r.stable.len()));
}

#[test]
fn criterion_02_greedy_pairs_are_stable() {
    let t = Instant::now();
    let mut bad = Vec::new();
    for k in 0..200u64 {
        let n = 10 + 2 * stream(SEED, 1_000_000 + k).gen_range(0..=15usize);
        let inst = random_instance(n, 2, 100.0, SEED, k);
        let m = greedy_match_2(&inst).expect("even n");
        if verify_stable(&m, &inst) != Verdict::Stable {
            bad.push(k);
        }
    }
    report(2, bad.is_empty(), Duration::from_secs(10), t.elapsed(), &format!("200 instances, unstable: {bad:?}"));
}

#[test]
fn criterion_03_pruned_matches_naive() {
    let t = Instant::now();
    let (mut blocked, mut mismatches) = (0, Vec::new());
    for k in 0..500u64 {
        let n = 3 * (1 + (k % 5) as usize);
        let inst = random_instance(n, 3, 30.0, SEED, k);
        let m = random_matching(&inst, &mut stream(SEED + 1, k));
        let p = find_blocking(&m, &inst, SearchMode::Pruned).is_some();
        let q = find_blocking(&m, &inst, SearchMode::Naive).is_some();
        blocked += p as usize;
        if p != q {
            mismatches.push(k);
        }
    }
    let detail = format!("500 instances, {blocked} blocked, mismatches: {mismatches:?}");
    report(3, mismatches.is_empty(), Duration::from_secs(60), t.elapsed(), &detail);
}

#[test]
fn criterion_04_chain_dichotomy() {
    let t = Instant::now();
    let r = check_chain_dichotomy(&ReductionParams::new(3), None).expect("miniature builds");
    report(4, r.passed(), Duration::from_secs(600), t.elapsed(), &r.summary());
}

fn forward(d: usize) -> (bool, String) {
    let red = fixture(d);
    let cover = solve_x3c_bruteforce(&red.certificate.x3c).expect("fixture has a cover");
    let m = build_solution(&red.instance, &red.certificate, &cover).expect("cover builds");
    match verify_stable(&m, &red.instance) {
        Verdict::Stable => (true, format!("d={d}: {} agents, cover {:?} stable", red.instance.len(), cover.0)),
        Verdict::Unstable(w) => (false, format!("d={d}: blocked by {:?}", w.ids(&red.instance))),
    }
}

#[test]
fn criterion_05_forward_d3() {
    let t = Instant::now();
    assert_eq!(ReductionParams::new(3).scale, 40);
    let (ok, detail) = forward(3);
    report(5, ok, Duration::from_secs(60), t.elapsed(), &detail);
}

#[test]
fn criterion_06_forward_d4_d5() {
    for d in [4, 5] {
        let t = Instant::now();
        let (ok, detail) = forward(d);
        report(6, ok, Duration::from_secs(120), t.elapsed(), &detail);
    }
}

#[test]
fn criterion_07_roundtrip() {
    let reds: Vec<Reduction> = [3, 4, 5].into_iter().map(fixture).collect();
    let t = Instant::now();
    let mut failures = Vec::new();
    for red in &reds {
        let x = &red.certificate.x3c;
        let cover = solve_x3c_bruteforce(x).expect("fixture has a cover");
        let m = build_solution(&red.instance, &red.certificate, &cover).expect("cover builds");
        let back = extract_cover(&red.instance, &red.certificate, &m);
        if back != cover || !x.is_cover(&back) {
            failures.push(format!("d={}: {:?} -> {:?}", red.certificate.params.d, cover.0, back.0));
        }
    }
    report(7, failures.is_empty(), Duration::from_secs(1), t.elapsed(), &format!("d=3,4,5, failures: {failures:?}"));
}

#[test]
fn criterion_08_validator_sensitivity() {
    let t = Instant::now();
    let r = check_validator_sensitivity(&[4, 5, 6, 7]).expect("default stars build");
    let missed: Vec<_> = r.missed().iter().map(|p| format!("{} {:?}", p.star, p.pair)).collect();
    report(8, r.passed(), Duration::from_secs(1), t.elapsed(), &format!("{}; missed: {missed:?}", r.summary()));
}

#[test]
fn criterion_09_star5_sampled() {
    let t = Instant::now();
    let r = sample_star_d(5, 10_000, SEED).expect("closed star builds");
    report(9, r.passed(), Duration::from_secs(300), t.elapsed(), &r.summary());
}

/// Runs the full audit. Two groups of quoted literals cannot be realised:
/// three set leaves pairwise 17.5 apart have circumradius 17.5/sqrt(3) >
/// 10, so no point is within 10 of all three; and no point lies in the
/// (ell, 2 ell) band around every agent of a clustered star. The test is
/// kept so the failure stays visible with `--include-ignored`.
#[test]
#[ignore = "17.5 leaf spacing and the (ell, 2 ell) garbage band are geometrically infeasible"]
fn criterion_10_literal_audit() {
    let t = Instant::now();
    let mut failures = Vec::new();
    for d in [3, 4, 5] {
        let red = fixture(d);
        let rep = literal_audit(&red.instance, &red.certificate);
        failures.extend(rep.failures().iter().map(|c| format!("d={d} {}: {}", c.name, c.detail)));
    }
    report(10, failures.is_empty(), Duration::from_secs(5), t.elapsed(), &format!("failures: {failures:?}"));
}

/// Prints the criterion 10 verdict and guards every audited literal
/// outside the two infeasible groups.
#[test]
fn criterion_10_literal_audit_feasible_part() {
    let t = Instant::now();
    let (mut failed, mut unexpected, mut total) = (Vec::new(), Vec::new(), 0);
    for d in [3, 4, 5] {
        let red = fixture(d);
        let rep = literal_audit(&red.instance, &red.certificate);
        total += rep.checks.len();
        for c in rep.failures() {
            let infeasible = c.name.starts_with("set leaves 17.5") || c.name.starts_with("R within 2 ell");
            if infeasible {
                failed.push(format!("d={d} {}", c.name));
            } else {
                unexpected.push(format!("d={d} {}: {}", c.name, c.detail));
            }
        }
    }
    let elapsed = t.elapsed();
    let verdict = if failed.is_empty() && unexpected.is_empty() { "PASS" } else { "FAIL" };
    println!(
        "criterion 10: {verdict} {}/{total} literals hold; infeasible: {failed:?} ({:.3} s, limit 5 s)",
        total - failed.len() - unexpected.len(),
        elapsed.as_secs_f64()
    );
    assert!(unexpected.is_empty(), "{unexpected:?}");
    assert!(elapsed < Duration::from_secs(5));
}

fn same(bad: &mut Vec<String>, name: &str, a: String, b: String) {
    if a != b {
        bad.push(name.to_string());
    }
}

#[test]
fn criterion_11_io_stability() {
    let reds: Vec<Reduction> = [3, 4].into_iter().map(fixture).collect();
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut bad = Vec::new();
    let star = star3_instance();
    let p = dir.path().join("star3.json");
    io::write_instance(&p, &star).unwrap();
    let first = std::fs::read(&p).unwrap();
    io::write_instance(&p, &star).unwrap();
    if first != std::fs::read(&p).unwrap() || io::read_instance(&p).unwrap() != star {
        bad.push("star3 file".into());
    }
    for red in &reds {
        let inst = &red.instance;
        let cert = &red.certificate;
        let text = io::instance_to_string(inst);
        same(&mut bad, "instance", text.clone(), io::instance_to_string(&io::instance_from_str(&text, "i").unwrap()));
        let text = io::certificate_to_string(cert);
        let back = io::certificate_from_str(&text, "c").unwrap();
        same(&mut bad, "certificate", text, io::certificate_to_string(&back));
        if back != *cert {
            bad.push("certificate value".into());
        }
        let text = io::x3c_to_string(&cert.x3c);
        same(&mut bad, "x3c", text.clone(), io::x3c_to_string(&io::x3c_from_str(&text, "x").unwrap()));
        let text = io::layout_to_string(&cert.layout).unwrap();
        same(&mut bad, "layout", text.clone(), io::layout_to_string(&io::layout_from_str(&text, "l").unwrap()).unwrap());
        let cover = solve_x3c_bruteforce(&cert.x3c).unwrap();
        let text = io::cover_to_string(&cover);
        same(&mut bad, "cover", text.clone(), io::cover_to_string(&io::cover_from_str(&text, "k").unwrap()));
        let m = build_solution(inst, cert, &cover).unwrap();
        let text = io::matching_to_string(&m, inst);
        let back = io::matching_from_str(&text, "m", inst).unwrap();
        same(&mut bad, "matching", text, io::matching_to_string(&back, inst));
        if back != m {
            bad.push("matching value".into());
        }
    }
    report(11, bad.is_empty(), Duration::from_secs(1), t.elapsed(), &format!("mismatches: {bad:?}"));
}
