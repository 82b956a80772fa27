// Jacobi fields along a great circle have length `sin t`; tangential fields grow linearly.

use geoflow::catalog;
use geoflow::flow::{self, FlowOptions, TangentVector};
use geoflow::jacobi::{propagate_jacobi, JacobiState};
use nalgebra::DVector;

pub fn run_example() -> geoflow::Result<f64> {
    let s = catalog::surface("hemisphere")?;
    let opts = FlowOptions::for_surface(&s);
    let v = TangentVector::new([0.0, 0.0], [1.0, 0.0]);
    let normal = JacobiState::new([0.0, 0.0], [0.0, 1.0]);
    let tangential = JacobiState::new([0.0, 0.0], [1.0, 0.0]);
    let mut worst: f64 = 0.0;
    println!("   t    |J|_g          sin t        |J_tan|_g");
    for k in 1..=7 {
        let t = 0.1 * k as f64;
        let x = flow::geodesic_flow(&s, t, &v, &opts)?.x;
        let g = s.metric_at(&x)?.g;
        let norm = |j: &[f64]| {
            let j = DVector::from_column_slice(j);
            j.dot(&(&g * &j)).sqrt()
        };
        let n = norm(&propagate_jacobi(&s, &v, &normal, t, &opts)?.j);
        let tn = norm(&propagate_jacobi(&s, &v, &tangential, t, &opts)?.j);
        worst = worst.max((n - t.sin()).abs());
        println!("  {t:.1}   {n:.10}   {:.10}   {tn:.10}", t.sin());
    }
    println!("largest deviation from sin t: {worst:.1e}");
    Ok(worst)
}

#[allow(dead_code)]
fn main() -> geoflow::Result<()> {
    run_example().map(|_| ())
}
