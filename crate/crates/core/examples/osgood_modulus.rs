// Modulus of continuity of `x₀ ↦ (J, K)(t₁)` against the Osgood bound on
// `c21_cubic`, and the Hölder branch on `c2alpha`.

use geoflow::catalog;
use geoflow::flow::FlowOptions;
use geoflow::regularity::{differential_modulus_study, ModulusStudy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const T1: f64 = 0.3;

/// Base points scattered across the crease `x₁ = 0`.
pub fn base_points(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| vec![rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)])
        .collect()
}

pub fn study(name: &str) -> geoflow::Result<ModulusStudy> {
    let surface = catalog::surface(name)?;
    let opts = FlowOptions::for_surface(&surface);
    differential_modulus_study(&surface, &base_points(40, 5), &[0.6, 0.2], T1, 61, &opts)
}

pub fn run_example() -> geoflow::Result<(ModulusStudy, ModulusStudy)> {
    let cubic = study("c21_cubic")?;
    println!(
        "c21_cubic: C̄ = {:.4}, C̃ = {:.4}, dominance {} over {} bins (worst ratio {:.3})",
        cubic.c_bar, cubic.c_tilde, cubic.dominance.holds, cubic.dominance.bins_checked, cubic.dominance.worst_ratio
    );
    let holder = study("c2alpha")?;
    let check = holder.holder(0.5);
    println!(
        "c2alpha: Hölder(0.5) {} with C = {:.4} (required {:.4})",
        check.holds, check.c_bound, check.required
    );
    print!("{}", cubic.empirical.to_csv(cubic.empirical.delta_max().unwrap_or(1.0), 8));
    Ok((cubic, holder))
}

#[allow(dead_code)]
fn main() -> geoflow::Result<()> {
    run_example().map(|_| ())
}
