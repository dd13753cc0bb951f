//! Acceptance suite: runs the full `verify` report at seed 0 and reports one
//! PASS/FAIL line per acceptance criterion.

use std::time::Instant;

use grasskit::verify::{run, Report, Suite, VerifyOptions};
use grasskit::Tolerance;

const CRITERIA: &[(u32, &str, &[&str])] = &[
    (1, "2x2 norm closed form on a 1000-point grid", &["canon.norm_2x2_grid"]),
    (2, "rank-one gap identity", &["metric.rank_one_identity"]),
    (3, "singular values doubled, gap is the largest sine", &["metric.doubling", "metric.largest_angle"]),
    (4, "canonical form round trip and block counts", &["canon.round_trip_ratio", "canon.block_counts"]),
    (5, "M(P,Q) block identities and outside witnesses", &["mpq.block_identities", "mpq.outside_witness"]),
    (
        6,
        "M(P,Q) of orthogonal pairs is parametrized by unitaries",
        &["mpq.constructed_gaps", "mpq.extract_unitary", "mpq.extract_round_trip", "mpq.exhaustive_structure_ratio"],
    ),
    (7, "adjacency by double tops agrees with rank", &["tops.equivalence", "tops.deterministic_refutation"]),
    (
        8,
        "isometry recovery kind, form and residual",
        &["wigner.kind_form", "wigner.residual", "wigner.action", "wigner.rejected_hypothesis"],
    ),
    (9, "isometries preserve the lattice relations", &["wigner.structure"]),
];

fn criterion_passes(report: &Report, names: &[&str]) -> Result<(), String> {
    for name in names {
        match report.check(name) {
            None => return Err(format!("{name} missing from report")),
            Some(c) if !c.passed() => return Err(c.to_string()),
            Some(_) => {}
        }
    }
    Ok(())
}

#[test]
fn acceptance_criteria() {
    let tol = Tolerance::default();
    let opts = VerifyOptions { seed: 0, ..VerifyOptions::default() };

    let start = Instant::now();
    let first = run(Suite::All, opts, &tol);
    let elapsed = start.elapsed();
    let second = run(Suite::All, opts, &tol);

    let mut failures = Vec::new();
    for &(id, what, names) in CRITERIA {
        match criterion_passes(&first, names) {
            Ok(()) => println!("PASS criterion {id}: {what}"),
            Err(why) => {
                println!("FAIL criterion {id}: {what} ({why})");
                failures.push(id);
            }
        }
    }
    let (a, b) = (first.render(), second.render());
    if a == b {
        println!("PASS criterion 10: identical verify output on rerun ({} bytes)", a.len());
    } else {
        println!("FAIL criterion 10: verify output differs between runs with the same seed");
        failures.push(10);
    }
    println!("suite runtime {:.1}s", elapsed.as_secs_f64());

    if !first.passed() {
        eprintln!("{a}");
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
    assert!(first.passed(), "verify report has failing checks");
}
