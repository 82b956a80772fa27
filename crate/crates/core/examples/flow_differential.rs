// The differential of the geodesic flow from Jacobi propagation, checked
// against central differences of the flow itself.

use geoflow::catalog;
use geoflow::flow::{FlowOptions, TangentVector};
use geoflow::jacobi::{fd_flow_differential, flow_differential};

pub fn run_example() -> geoflow::Result<Vec<(String, f64)>> {
    let v = TangentVector::new([0.1, -0.05], [0.4, 0.25]);
    let t = 0.8;
    let mut out = Vec::new();
    for name in ["flat", "hemisphere", "trough", "c21_cubic"] {
        let s = catalog::surface(name)?;
        let d = flow_differential(&s, t, &v, &FlowOptions::for_surface(&s))?;
        let fd = fd_flow_differential(&s, t, &v, 1e-5)?;
        let diff = (&d.matrix - &fd).abs().max();
        println!("{name:>10}: max |Dφ − FD| = {diff:.2e}");
        out.push((name.to_string(), diff));
    }
    let s = catalog::surface("hemisphere")?;
    let d = flow_differential(&s, t, &v, &FlowOptions::for_surface(&s))?;
    println!("Dφ on the hemisphere in (J, K) coordinates:{:.6}", d.matrix);
    Ok(out)
}

#[allow(dead_code)]
fn main() -> geoflow::Result<()> {
    run_example().map(|_| ())
}
