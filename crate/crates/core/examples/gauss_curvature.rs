// Curvature from products of the second fundamental form, compared with the
// curvature tensor built from derivatives of the Christoffel symbols.

use geoflow::catalog;
use nalgebra::DVector;

pub fn run_example() -> geoflow::Result<f64> {
    let mut worst: f64 = 0.0;
    for name in catalog::names() {
        let s = catalog::surface(name)?;
        let x = s.domain().map_unit(&[0.62, 0.41], 0.05);
        let (e1, e2) = (DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![0.0, 1.0]));
        let k = s.sectional_curvature(&x, &e1, &e2)?;
        let v = DVector::from_vec(vec![0.6, -0.8]);
        let a = s.curvature_operator(&x, &v)?.0;
        let b = s.curvature_operator_via_christoffel(&x, &v)?.0;
        let diff = (&a - &b).abs().max();
        if s.regularity().at_least_c3() {
            worst = worst.max(diff);
        }
        println!("{name:>10} at ({:.3}, {:.3}): K = {k:+.10}, |Π route − Γ route| = {diff:.1e}", x[0], x[1]);
    }
    Ok(worst)
}

#[allow(dead_code)]
fn main() -> geoflow::Result<()> {
    run_example().map(|_| ())
}
