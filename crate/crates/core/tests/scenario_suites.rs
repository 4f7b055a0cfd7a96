//! Every built-in scenario's expected assertions must pass.

use misbelief::scenarios::{build, catalog, run_scenario_assertions};

fn run(name: &str) {
    let scenario = build(name).unwrap();
    let outcomes = run_scenario_assertions(&scenario).unwrap();
    assert!(!outcomes.is_empty(), "{name} has no assertions");
    for o in &outcomes {
        println!("{name} / {}: {} ({})", o.id, if o.passed { "pass" } else { "FAIL" }, o.detail);
        assert!(o.passed, "{name} / {}: {}", o.id, o.detail);
    }
}

#[test]
fn example1_suite() {
    run("example1");
}

#[test]
fn overconfidence1_suite() {
    run("overconfidence1");
}

#[test]
fn overconfidence2_suite() {
    run("overconfidence2");
}

#[test]
fn overfitting_suite() {
    run("overfitting");
}

#[test]
fn investment_pessimism_suite() {
    run("investment_pessimism");
}

#[test]
fn investment_optimism_suite() {
    run("investment_optimism");
}

#[test]
fn team_over_suite() {
    run("team_over");
}

#[test]
fn team_under_suite() {
    run("team_under");
}

#[test]
fn mixed_sce_suite() {
    run("mixed_sce");
}

#[test]
fn appendix_c1_suite() {
    run("appendix_c1");
}

#[test]
fn appendix_c2_suite() {
    run("appendix_c2");
}

#[test]
fn martingale_check_suite() {
    run("martingale_check");
}

#[test]
fn catalog_is_complete() {
    assert_eq!(catalog().len(), 12);
}
