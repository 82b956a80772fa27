//! Every example runs and reproduces its headline result.

mod exp_map {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/exp_map.rs"));
}
mod jacobi_fields {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/jacobi_fields.rs"));
}
mod flow_differential {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/flow_differential.rs"));
}
mod gauss_curvature {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/gauss_curvature.rs"));
}
mod smoothing_convergence {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/smoothing_convergence.rs"));
}
mod lipschitz_flow {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/lipschitz_flow.rs"));
}
mod osgood_modulus {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/osgood_modulus.rs"));
}
mod minimality {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/minimality.rs"));
}

#[test]
fn exp_map_runs() {
    let errors = exp_map::run_example().expect("exp_map example");
    assert!(errors.iter().all(|(_, e)| *e < 1e-8));
}

#[test]
fn jacobi_fields_runs() {
    assert!(jacobi_fields::run_example().expect("jacobi_fields example") < 1e-7);
}

#[test]
fn flow_differential_runs() {
    let diffs = flow_differential::run_example().expect("flow_differential example");
    assert!(diffs.iter().all(|(_, d)| *d < 1e-5));
}

#[test]
fn gauss_curvature_runs() {
    assert!(gauss_curvature::run_example().expect("gauss_curvature example") < 1e-5);
}

#[test]
fn smoothing_convergence_runs() {
    let reps = smoothing_convergence::run_example().expect("smoothing_convergence example");
    assert_eq!(reps[0].verdict, "converging");
}

#[test]
fn lipschitz_flow_runs() {
    assert!(lipschitz_flow::run_example().expect("lipschitz_flow example").holds);
}

#[test]
fn osgood_modulus_runs() {
    let (cubic, holder) = osgood_modulus::run_example().expect("osgood_modulus example");
    assert!(cubic.dominance.holds);
    assert!(holder.holder(0.5).holds);
}

#[test]
fn minimality_runs() {
    let (margins, branching) = minimality::run_example().expect("minimality example");
    assert!(margins.iter().all(|(_, m)| *m >= 0.0));
    assert!(branching.holds);
}
