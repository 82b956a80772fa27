//! Mollification of height functions on box charts.
//!
//! `h_ε = h ∗ ρ_ε` is evaluated on a regular grid over the chart shrunk by
//! `ε`. The kernel `exp(−1/(1 − |u|²))` is sampled at the grid offsets inside
//! its support and normalized to unit discrete mass, so affine functions are
//! reproduced exactly. Derivatives come from convolving the base jets, which
//! for `W^{2,∞}` heights equals differentiating the convolution.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{GeoError, Result};
use crate::surface::grid::field_count;
use crate::surface::{ChartDomain, GraphSurface, GridField, Regularity, TensorGrid};

/// Fewest kernel samples per unit of `ε` the grid must provide.
pub const MIN_SAMPLES_PER_EPS: usize = 2;

/// Unnormalized bump `exp(−1/(1 − r²))` on the unit ball.
pub fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Discrete kernel weights on grid offsets: `(offset index, weight)`, unit mass.
pub fn kernel_weights(steps: &[f64], eps: f64) -> Result<Vec<(Vec<isize>, f64)>> {
    let reach: Vec<isize> = steps.iter().map(|d| (eps / d).floor() as isize).collect();
    if reach.iter().any(|&k| k < MIN_SAMPLES_PER_EPS as isize) {
        return Err(GeoError::Config(format!(
            "grid too coarse for eps = {eps}: need at least {MIN_SAMPLES_PER_EPS} nodes per eps on every axis"
        )));
    }
    let m = steps.len();
    let widths: Vec<usize> = reach.iter().map(|k| (2 * k + 1) as usize).collect();
    let total: usize = widths.iter().product();
    let mut out = Vec::new();
    let mut mass = 0.0;
    for lin in 0..total {
        let mut rem = lin;
        let mut off = vec![0isize; m];
        let mut r2 = 0.0;
        for a in 0..m {
            off[a] = (rem % widths[a]) as isize - reach[a];
            rem /= widths[a];
            let u = off[a] as f64 * steps[a] / eps;
            r2 += u * u;
        }
        let w = bump(r2);
        if w > 0.0 {
            mass += w;
            out.push((off, w));
        }
    }
    for (_, w) in out.iter_mut() {
        *w /= mass;
    }
    Ok(out)
}

/// Mollify `surface` at width `eps` on a grid with `grid_res` nodes per axis.
pub fn mollify(surface: &GraphSurface, eps: f64, grid_res: usize) -> Result<GraphSurface> {
    let (lo, hi) = match surface.domain() {
        ChartDomain::Box { lo, hi } => (lo.clone(), hi.clone()),
        ChartDomain::Ball { .. } => {
            return Err(GeoError::Config("mollification is implemented for box charts only".into()));
        }
    };
    if !(eps > 0.0) {
        return Err(GeoError::Config("mollification width must be positive".into()));
    }
    if eps >= 0.5 * surface.domain().width() {
        return Err(GeoError::DomainTooSmall(format!(
            "eps = {eps} is not below half the chart width {}",
            surface.domain().width()
        )));
    }
    let m = surface.dim();
    let c = surface.codim();
    let out_lo: Vec<f64> = lo.iter().map(|l| l + eps).collect();
    let out_hi: Vec<f64> = hi.iter().map(|h| h - eps).collect();
    let grid = TensorGrid::new(out_lo.clone(), out_hi, vec![grid_res; m])?;
    let steps: Vec<f64> = (0..m).map(|a| grid.step(a)).collect();
    let weights = kernel_weights(&steps, eps)?;
    let reach: Vec<usize> = steps.iter().map(|d| (eps / d).floor() as usize).collect();

    // base jets on the grid extended by the kernel reach
    let ext_counts: Vec<usize> = (0..m).map(|a| grid_res + 2 * reach[a]).collect();
    let ext_lo: Vec<f64> = (0..m).map(|a| out_lo[a] - reach[a] as f64 * steps[a]).collect();
    let ext_total: usize = ext_counts.iter().product();
    let nf = field_count(m, c);
    let field = surface.field().clone();
    let ext: Vec<f64> = (0..ext_total)
        .into_par_iter()
        .flat_map_iter(|lin| {
            let mut rem = lin;
            let p: Vec<f64> = (0..m)
                .map(|a| {
                    let i = rem % ext_counts[a];
                    rem /= ext_counts[a];
                    (ext_lo[a] + i as f64 * steps[a]).clamp(lo[a], hi[a])
                })
                .collect();
            let jet = field.jet(&p);
            let mut buf = Vec::with_capacity(nf);
            buf.extend(jet.value.iter());
            for a in 0..c {
                for i in 0..m {
                    buf.push(jet.grad[(i, a)]);
                }
            }
            for h in &jet.hess {
                for j in 0..m {
                    for i in 0..m {
                        buf.push(h[(i, j)]);
                    }
                }
            }
            buf
        })
        .collect();

    let mut ext_strides = vec![1usize; m];
    for a in 1..m {
        ext_strides[a] = ext_strides[a - 1] * ext_counts[a - 1];
    }
    let taps: Vec<(isize, f64)> = weights
        .iter()
        .map(|(off, w)| {
            let lin: isize = off.iter().zip(&ext_strides).map(|(o, s)| o * *s as isize).sum();
            (lin, *w)
        })
        .collect();
    let mut data = vec![0.0; grid.len() * nf];
    data.par_chunks_mut(nf).enumerate().for_each(|(lin, out)| {
        let idx = grid.unravel(lin);
        let centre: usize = idx
            .iter()
            .zip(&reach)
            .zip(&ext_strides)
            .map(|((i, r), s)| (i + r) * s)
            .sum();
        for &(off, w) in &taps {
            let src = (centre as isize + off) as usize * nf;
            for (o, v) in out.iter_mut().zip(&ext[src..src + nf]) {
                *o += w * v;
            }
        }
    });

    let mut gf = GridField::from_nodal(grid, c, data)?;
    // normalization: the smoothed graph passes through the base point over the anchor
    let anchor = surface.domain().shrink(eps).expect("checked above").anchor();
    let target = surface.height(&anchor)?;
    let current = crate::surface::HeightField::value(&gf, &anchor);
    let shift: Vec<f64> = (0..c).map(|a| target[a] - current[a]).collect();
    gf = gf.shifted(&shift);
    GraphSurface::new(
        format!("{}@eps={eps}", surface.name()),
        Arc::new(gf),
        ChartDomain::Box {
            lo: out_lo,
            hi: hi.iter().map(|h| h - eps).collect(),
        },
        Regularity::Smooth,
    )
}

/// Grid resolution giving about `per_eps` nodes per `ε`, capped at `max_res`.
pub fn default_grid_res(domain: &ChartDomain, eps: f64, per_eps: usize, max_res: usize) -> usize {
    let usable = domain.width() - 2.0 * eps;
    let n = (usable * per_eps as f64 / eps).ceil() as usize + 1;
    // odd counts put a node on the chart centre
    let n = n.clamp(17, max_res);
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::surface::analytic::Flat;
    use crate::surface::HeightField;

    #[test]
    fn kernel_has_unit_mass_and_symmetry() {
        let w = kernel_weights(&[0.01, 0.01], 0.05).unwrap();
        let mass: f64 = w.iter().map(|(_, w)| w).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        let first: f64 = w.iter().map(|(o, w)| o[0] as f64 * w).sum();
        assert!(first.abs() < 1e-15);
        assert!(kernel_weights(&[0.01, 0.01], 0.015).is_err());
    }

    #[test]
    fn flat_stays_flat() {
        let s = catalog::surface("flat").unwrap();
        let sm = mollify(&s, 0.1, 81).unwrap();
        assert_eq!(sm.regularity(), Regularity::Smooth);
        for p in sm.domain().sample_grid(7) {
            assert_eq!(sm.height(&p).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn affine_heights_are_reproduced() {
        #[derive(Debug)]
        struct Affine;
        impl HeightField for Affine {
            fn dim(&self) -> usize {
                2
            }
            fn codim(&self) -> usize {
                1
            }
            fn value(&self, x: &[f64]) -> nalgebra::DVector<f64> {
                nalgebra::DVector::from_element(1, 0.2 + 0.5 * x[0] - 0.3 * x[1])
            }
            fn jet(&self, x: &[f64]) -> crate::surface::Jet2 {
                let mut j = Flat { dim: 2, codim: 1 }.jet(x);
                j.value = self.value(x);
                j.grad[(0, 0)] = 0.5;
                j.grad[(1, 0)] = -0.3;
                j
            }
        }
        let s = GraphSurface::new("affine", Arc::new(Affine), ChartDomain::cube(2, 1.0), Regularity::Smooth).unwrap();
        let sm = mollify(&s, 0.2, 61).unwrap();
        for p in sm.domain().sample_grid(9) {
            let a = sm.jet(&p).unwrap();
            let b = s.jet(&p).unwrap();
            assert!((a.value[0] - b.value[0]).abs() < 1e-12);
            assert!((&a.grad - &b.grad).abs().max() < 1e-12);
        }
    }

    #[test]
    fn vee_second_derivative_stays_bounded_and_converges() {
        let s = catalog::surface("vee").unwrap();
        let eps = 0.05;
        let sm = mollify(&s, eps, default_grid_res(s.domain(), eps, 8, 801)).unwrap();
        let mut sup: f64 = 0.0;
        for p in sm.domain().sample_grid(41) {
            let h = sm.jet(&p).unwrap().hess[0][(0, 0)];
            sup = sup.max(h.abs());
            if p[0].abs() > eps + 1e-9 {
                assert!((h - 2.0 * p[0].signum()).abs() < 1e-6, "{p:?}: {h}");
            }
        }
        // cubic interpolation of nodal values may overshoot slightly
        assert!(sup <= 2.0 + 1e-3, "{sup}");
        // anchoring
        assert!((sm.height(&[0.0, 0.0]).unwrap()[0] - 0.0).abs() < 1e-12);
    }

    #[test]
    fn anchor_value_matches_base() {
        let s = catalog::surface("c21_cubic").unwrap();
        let sm = mollify(&s, 0.05, 81).unwrap();
        assert!((sm.height(&[0.0, 0.0]).unwrap()[0] - s.height(&[0.0, 0.0]).unwrap()[0]).abs() < 1e-12);
    }

    #[test]
    fn rejects_oversized_eps_and_balls() {
        let s = catalog::surface("vee").unwrap();
        assert!(matches!(mollify(&s, 0.5, 81), Err(GeoError::DomainTooSmall(_))));
        assert!(mollify(&catalog::surface("hemisphere").unwrap(), 0.05, 81).is_err());
    }
}
