//! Acceptance criteria, one test per criterion. Each prints a PASS/FAIL line.

use geoflow::suite::{criterion, CriterionResult};

const SEED: u64 = geoflow::config::DEFAULT_SEED;

fn check(id: &str) -> CriterionResult {
    let r = criterion(id)
        .expect("known criterion")
        .run(SEED, 1.0)
        .unwrap_or_else(|e| panic!("{id} errored: {e}"));
    println!("{}", r.line());
    assert!(r.runtime_s <= r.runtime_limit_s, "{id} exceeded its runtime limit");
    assert!(r.passed, "{}\n{}", r.line(), serde_json::to_string_pretty(&r.details).unwrap());
    r
}

#[test]
fn ac01_hemisphere_exponential_map() {
    check("ac01");
}

#[test]
fn ac02_sphere_jacobi_field_is_sine() {
    check("ac02");
}

#[test]
fn ac03_flow_differential_matches_finite_differences() {
    check("ac03");
}

#[test]
fn ac04_gauss_equation_consistency() {
    check("ac04");
}

#[test]
fn ac05_mollified_differentials_converge() {
    check("ac05");
}

#[test]
fn ac06_vee_flow_is_lipschitz() {
    check("ac06");
}

#[test]
fn ac07_osgood_dominance() {
    check("ac07");
}

#[test]
fn ac08_hoelder_branch() {
    check("ac08");
}

#[test]
fn ac09_short_geodesics_minimize() {
    check("ac09");
}

#[test]
fn ac10_non_branching_and_composition() {
    check("ac10");
}

#[test]
fn ac11_mixed_partials_commute() {
    check("ac11");
}
