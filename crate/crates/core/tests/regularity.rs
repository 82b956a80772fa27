//! Smoothing sequences, Grönwall and Osgood bounds on the catalog surfaces.

use geoflow::catalog;
use geoflow::flow::{FlowOptions, TangentVector};
use geoflow::regularity::{
    self, approximation_sequence, gronwall_dominance, modulus, osgood_integral_check, sample_jacobi, Modulus,
};
use geoflow::surface::BOUNDS_INFLATION;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SCALES: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

fn strictly_decreasing(d: &[f64]) -> bool {
    d.windows(2).all(|w| w[1] < w[0])
}

#[test]
fn c2_bases_converge_in_metric_and_second_fundamental_form() {
    for name in ["c21_cubic", "c2alpha"] {
        let s = catalog::surface(name).unwrap();
        let seq = approximation_sequence(&s, &SCALES).unwrap();
        assert!(strictly_decreasing(&seq.metric_c1()), "{name}: {:?}", seq.metric_c1());
        assert!(strictly_decreasing(&seq.pi_c0()), "{name}: {:?}", seq.pi_c0());
        let h: Vec<f64> = seq.distances.iter().map(|d| d.height_c1).collect();
        assert!(h.windows(2).all(|w| w[1] <= w[0]), "{name}: {h:?}");
        for level in &seq.smoothed {
            let a = level.height(&[0.0, 0.0]).unwrap()[0];
            let b = s.height(&[0.0, 0.0]).unwrap()[0];
            assert!((a - b).abs() <= 1e-12);
            assert!(level.regularity() == geoflow::Regularity::Smooth);
        }
    }
}

#[test]
fn vee_second_fundamental_forms_stay_bounded() {
    let s = catalog::surface("vee").unwrap();
    let seq = approximation_sequence(&s, &SCALES).unwrap();
    assert!(seq.pi_sup() <= 2.0 * BOUNDS_INFLATION, "{}", seq.pi_sup());
}

#[test]
fn gronwall_dominates_on_every_catalog_surface() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for name in catalog::names() {
        let s = catalog::surface(name).unwrap();
        let geos: Vec<_> = regularity::default_probes(&s, 50, &mut rng)
            .into_iter()
            .map(|(_, v)| {
                let x0: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
                (v, x0)
            })
            .collect();
        let rep = gronwall_dominance(&s, &geos, 0.6, 31, &FlowOptions::for_surface(&s)).unwrap();
        assert!(rep.holds, "{name}: {rep:?}");
    }
}

#[test]
fn osgood_inequality_holds_for_nearby_base_points() {
    let s = catalog::surface("c21_cubic").unwrap();
    let opts = FlowOptions::for_surface(&s);
    let t1 = 0.3;
    let times = regularity::uniform_times(t1, 31);
    let y = vec![0.6, 0.2];
    let a_run = sample_jacobi(&s, &TangentVector::new(vec![-0.02, 0.0], y.clone()), &times, &opts).unwrap();
    let b_run = sample_jacobi(&s, &TangentVector::new(vec![0.015, 0.01], y), &times, &opts).unwrap();
    let x0 = DVector::from_vec(vec![0.3, -0.5, 0.8, 0.1]);
    let c_bar = a_run.c_bar_raw().max(b_run.c_bar_raw()) * BOUNDS_INFLATION;
    let c_tilde = a_run
        .differentials
        .iter()
        .chain(&b_run.differentials)
        .map(|d| (d * &x0).norm())
        .fold(0.0, f64::max)
        * BOUNDS_INFLATION;
    let dr = a_run
        .coefficients
        .iter()
        .zip(&b_run.coefficients)
        .map(|(p, q)| regularity::operator_norm(&(p - q)))
        .fold(0.0, f64::max);
    let a = c_tilde * t1 * dr;
    let samples: Vec<(f64, f64)> = times
        .iter()
        .zip(a_run.differentials.iter().zip(&b_run.differentials))
        .map(|(t, (p, q))| (*t, ((p - q) * &x0).norm()))
        .collect();
    let check = osgood_integral_check(&samples, 0.0, a, &Modulus::linear(c_bar)).unwrap();
    assert!(check.holds && check.margin > 0.0, "{check:?}");
}

#[test]
fn paper_gamma_dominates_on_both_c2_catalog_surfaces() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for name in ["c21_cubic", "c2alpha"] {
        let s = catalog::surface(name).unwrap();
        let pts: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)]).collect();
        let st = regularity::differential_modulus_study(&s, &pts, &[0.4, -0.3], 0.3, 41, &FlowOptions::for_surface(&s)).unwrap();
        assert!(st.dominance.holds, "{name}: {:?}", st.dominance);
        assert!(st.worst_pair_ratio <= 1.0, "{name}: {}", st.worst_pair_ratio);
    }
}

#[test]
fn gamma_of_power_modulus_is_proportional() {
    let g = modulus::osgood_gamma(&Modulus::power(2.0, 0.5), 1.5, 0.7, 0.4).unwrap();
    let k = 1.5 * 0.4 * (0.7f64 * 0.4).exp() * 2.0;
    for d in [1e-4, 1e-2, 0.3] {
        assert!((g.eval(d) - k * d.sqrt()).abs() < 1e-14);
    }
}
