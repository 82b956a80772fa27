// Mollify `c21_cubic` and `vee` at four widths and watch the flows and
// their differentials converge.

use geoflow::catalog;
use geoflow::regularity::{approximation_sequence, default_probes, flow_convergence_report, ConvergenceReport};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SCALES: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

pub fn converge(name: &str, seed: u64) -> geoflow::Result<ConvergenceReport> {
    let surface = catalog::surface(name)?;
    let seq = approximation_sequence(&surface, &SCALES)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes = default_probes(&surface, 20, &mut rng);
    flow_convergence_report(&seq, &probes)
}

pub fn run_example() -> geoflow::Result<Vec<ConvergenceReport>> {
    let mut out = Vec::new();
    for name in ["c21_cubic", "vee"] {
        let rep = converge(name, 2024)?;
        println!("{name}: verdict {}", rep.verdict);
        println!("  metric_c1 {:?}", rep.metric_c1);
        println!("  pi_c0     {:?}", rep.pi_c0);
        println!("  flow_c0   {:?} (factor {:.2})", rep.flow_c0, rep.flow_factor);
        println!("  dflow_c0  {:?} (factor {:.2})", rep.dflow_c0, rep.dflow_factor);
        out.push(rep);
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> geoflow::Result<()> {
    run_example().map(|_| ())
}
