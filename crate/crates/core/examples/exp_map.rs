// Exponential map and geodesics on the hemisphere: great circles from the pole.

use geoflow::catalog;
use geoflow::flow::{self, FlowOptions, TangentVector};

pub fn run_example() -> geoflow::Result<Vec<(f64, f64)>> {
    let s = catalog::surface("hemisphere")?;
    let opts = FlowOptions::for_surface(&s);
    let mut errors = Vec::new();
    for r in [0.1, 0.25, 0.5, 0.75] {
        let x = flow::exp_map(&s, &TangentVector::new([0.0, 0.0], [r, 0.0]), &opts)?;
        let err = (x[0] - f64::sin(r)).abs() + x[1].abs();
        println!("exp(0, ({r}, 0)) = ({:.12}, {:.1e})   |error| {err:.1e}", x[0], x[1]);
        errors.push((r, err));
    }
    // a geodesic that runs off the chart stops at the boundary
    let traj = flow::integrate_geodesic(&s, &TangentVector::new([0.0, 0.0], [0.0, 1.0]), 3.0, &opts)?;
    println!("unit-speed geodesic leaves the chart at t = {:.10} ({:?})", traj.end_time(), traj.exit_reason);
    println!("speed drift {:.1e}", traj.speed_drift());
    Ok(errors)
}

#[allow(dead_code)]
fn main() -> geoflow::Result<()> {
    run_example().map(|_| ())
}
