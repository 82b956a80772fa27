// Lipschitz dependence of the geodesic flow on the `C^{1,1}` vee surface.

use geoflow::catalog;
use geoflow::flow::FlowOptions;
use geoflow::regularity::{lipschitz_check, perturbation_pairs, LipschitzReport};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> geoflow::Result<LipschitzReport> {
    let surface = catalog::surface("vee")?;
    let opts = FlowOptions::for_surface(&surface);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pairs = perturbation_pairs(&surface, 200, 1e-4, &mut rng);
    let rep = lipschitz_check(&surface, &pairs, 41, &opts)?;
    println!("C̄ = {:.4}", rep.c_bar);
    println!("max quotient {:.4}, worst quotient / e^(C̄t) = {:.4}", rep.max_quotient, rep.worst_ratio);
    Ok(rep)
}

#[allow(dead_code)]
fn main() -> geoflow::Result<()> {
    run_example().map(|_| ())
}
