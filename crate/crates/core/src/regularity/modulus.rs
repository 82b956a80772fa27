//! Moduli of continuity: parametric forms and binned empirical estimates.

use serde::Serialize;

use crate::error::{GeoError, Result};

pub const DEFAULT_BINS: usize = 32;
pub const MIN_DELTA: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModulusKind {
    Empirical,
    Linear { c: f64 },
    Power { c: f64, alpha: f64 },
    /// `Γ(δ) = C̃ · t₁ · e^{C̄ t₁} · μ_R(δ)`.
    PaperGamma { c_tilde: f64, c_bar: f64, t1: f64 },
}

/// Nondecreasing `μ` with `μ(0) = 0`.
///
/// Empirical moduli are step functions over log-spaced bins: `values[b]` is
/// the running maximum of the deviations with input gap at most `edges[b + 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Modulus {
    pub kind: ModulusKind,
    pub edges: Vec<f64>,
    pub values: Vec<f64>,
    pub populated: Vec<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner: Option<Box<Modulus>>,
}

fn log_edges(delta_max: f64, bins: usize) -> Vec<f64> {
    let lo = MIN_DELTA.min(delta_max * 0.5);
    let (a, b) = (lo.ln(), delta_max.ln());
    (0..=bins).map(|i| (a + (b - a) * i as f64 / bins as f64).exp()).collect()
}

impl Modulus {
    pub fn linear(c: f64) -> Self {
        Modulus {
            kind: ModulusKind::Linear { c },
            edges: Vec::new(),
            values: Vec::new(),
            populated: Vec::new(),
            inner: None,
        }
    }

    pub fn power(c: f64, alpha: f64) -> Self {
        Modulus {
            kind: ModulusKind::Power { c, alpha },
            ..Modulus::linear(0.0)
        }
    }

    /// Binned sup of `(gap, deviation)` pairs over `bins` log-spaced bins on
    /// `[1e-6, delta_max]`; gaps below the first edge land in the first bin,
    /// gaps above `delta_max` are ignored.
    pub fn from_deviations(pairs: &[(f64, f64)], bins: usize, delta_max: f64) -> Result<Self> {
        if bins == 0 || !(delta_max > 0.0) {
            return Err(GeoError::Config("modulus needs at least one bin and delta_max > 0".into()));
        }
        let edges = log_edges(delta_max, bins);
        let mut raw = vec![0.0f64; bins];
        let mut populated = vec![false; bins];
        for &(d, dev) in pairs {
            if !(d >= 0.0) || d > delta_max * (1.0 + 1e-12) {
                continue;
            }
            let b = edges[1..].iter().position(|&e| d <= e).unwrap_or(bins - 1);
            raw[b] = raw[b].max(dev);
            populated[b] = true;
        }
        let mut run = 0.0f64;
        let values = raw
            .iter()
            .map(|v| {
                run = run.max(*v);
                run
            })
            .collect();
        Ok(Modulus {
            kind: ModulusKind::Empirical,
            edges,
            values,
            populated,
            inner: None,
        })
    }

    pub fn delta_max(&self) -> Option<f64> {
        self.edges.last().copied()
    }

    pub fn eval(&self, delta: f64) -> f64 {
        if delta <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            ModulusKind::Linear { c } => c * delta,
            ModulusKind::Power { c, alpha } => c * delta.powf(*alpha),
            ModulusKind::PaperGamma { c_tilde, c_bar, t1 } => {
                let inner = self.inner.as_ref().map_or(0.0, |m| m.eval(delta));
                c_tilde * t1 * (c_bar * t1).exp() * inner
            }
            ModulusKind::Empirical => {
                let b = self.edges[1..]
                    .iter()
                    .position(|&e| delta <= e)
                    .unwrap_or(self.values.len() - 1);
                self.values[b]
            }
        }
    }

    /// Bin upper edges with the modulus value there, for CSV dumps.
    pub fn table(&self, delta_max: f64, bins: usize) -> Vec<(f64, f64)> {
        let edges = if self.edges.is_empty() {
            log_edges(delta_max, bins)
        } else {
            self.edges.clone()
        };
        edges[1..].iter().map(|&e| (e, self.eval(e))).collect()
    }

    pub fn to_csv(&self, delta_max: f64, bins: usize) -> String {
        let rows: Vec<Vec<f64>> = self.table(delta_max, bins).into_iter().map(|(d, m)| vec![d, m]).collect();
        crate::io::csv_string(&["delta", "mu"], &rows)
    }

    /// Whether `∫₀ dδ/μ(δ)` diverges (the Osgood condition).
    pub fn is_osgood(&self) -> bool {
        match &self.kind {
            ModulusKind::Linear { .. } => true,
            ModulusKind::Power { alpha, .. } => *alpha >= 1.0,
            ModulusKind::PaperGamma { .. } => self.inner.as_ref().is_none_or(|m| m.is_osgood()),
            // a step function that is positive near 0 has an integrable reciprocal
            ModulusKind::Empirical => self.values.first().is_none_or(|v| *v == 0.0),
        }
    }

    /// Per populated bin of `self`, `self(edge) ≤ other(edge)` at the bin's upper edge.
    pub fn dominated_by(&self, other: &Modulus) -> DominanceCheck {
        let mut worst_ratio: f64 = 0.0;
        let mut failures = Vec::new();
        let mut checked = 0;
        for (b, &pop) in self.populated.iter().enumerate() {
            if !pop {
                continue;
            }
            checked += 1;
            let e = self.edges[b + 1];
            let (mine, theirs) = (self.values[b], other.eval(e));
            let ratio = if theirs > 0.0 {
                mine / theirs
            } else if mine > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            worst_ratio = worst_ratio.max(ratio);
            if mine > theirs {
                failures.push(e);
            }
        }
        DominanceCheck {
            holds: failures.is_empty() && checked > 0,
            bins_checked: checked,
            worst_ratio,
            failing_edges: failures,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceCheck {
    pub holds: bool,
    pub bins_checked: usize,
    /// Largest `empirical / bound` over the populated bins.
    pub worst_ratio: f64,
    pub failing_edges: Vec<f64>,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// All-pairs empirical modulus of the sampled map `input ↦ output`
/// (Euclidean distances on both sides).
pub fn empirical_modulus(samples: &[(Vec<f64>, Vec<f64>)], bins: usize) -> Result<Modulus> {
    if samples.len() < 2 {
        return Err(GeoError::Config("empirical modulus needs at least two samples".into()));
    }
    let mut pairs = Vec::with_capacity(samples.len() * (samples.len() - 1) / 2);
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            pairs.push((euclid(&samples[i].0, &samples[j].0), euclid(&samples[i].1, &samples[j].1)));
        }
    }
    let dmax = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
    if dmax == 0.0 {
        return Err(GeoError::Config("all samples share one input".into()));
    }
    Modulus::from_deviations(&pairs, bins, dmax)
}

/// `Γ(δ) = C̃ · t₁ · e^{C̄ t₁} · μ_R(δ)`.
pub fn osgood_gamma(mu_r: &Modulus, c_tilde: f64, c_bar: f64, t1: f64) -> Result<Modulus> {
    if !(t1 > 0.0) || c_tilde < 0.0 || c_bar < 0.0 {
        return Err(GeoError::Config("osgood_gamma needs t1 > 0 and nonnegative constants".into()));
    }
    Ok(Modulus {
        kind: ModulusKind::PaperGamma { c_tilde, c_bar, t1 },
        edges: mu_r.edges.clone(),
        values: Vec::new(),
        populated: Vec::new(),
        inner: Some(Box::new(mu_r.clone())),
    })
}

/// Smallest `C` with `μ(edge) ≤ C · edgeᵅ` at every bin edge of an empirical modulus.
pub fn power_fit(mu: &Modulus, alpha: f64) -> f64 {
    mu.edges[1..]
        .iter()
        .zip(&mu.values)
        .map(|(e, v)| v / e.powf(alpha))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderCheck {
    pub holds: bool,
    pub alpha: f64,
    pub c_bound: f64,
    /// Smallest constant that would have sufficed.
    pub required: f64,
}

/// Checks `μ_emp(δ) ≤ C · δᵅ` in every populated bin (at the bin's upper edge).
pub fn holder_modulus_check(samples: &[(Vec<f64>, Vec<f64>)], alpha: f64, c_bound: f64) -> Result<HolderCheck> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(GeoError::Config("alpha must lie in (0, 1]".into()));
    }
    let emp = empirical_modulus(samples, DEFAULT_BINS)?;
    Ok(holder_check_modulus(&emp, alpha, c_bound))
}

pub fn holder_check_modulus(emp: &Modulus, alpha: f64, c_bound: f64) -> HolderCheck {
    let required = emp
        .populated
        .iter()
        .enumerate()
        .filter(|(_, p)| **p)
        .map(|(b, _)| emp.values[b] / emp.edges[b + 1].powf(alpha))
        .fold(0.0, f64::max);
    HolderCheck {
        holds: required <= c_bound,
        alpha,
        c_bound,
        required,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OsgoodCheck {
    pub holds: bool,
    /// `min (t − t₀) − ∫_a^{L(t)} ds/μ(s)` over samples with `L(t) > a`.
    pub margin: f64,
}

/// Adaptive Simpson quadrature of `f` on `[lo, hi]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Option<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if !delta.is_finite() {
            return None;
        }
        if delta.abs() <= 15.0 * tol || depth == 0 {
            if depth == 0 && delta.abs() > 15.0 * tol {
                return None;
            }
            return Some(left + right + delta / 15.0);
        }
        Some(rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)? + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    if hi == lo {
        return Ok(0.0);
    }
    let (fa, fb, fm) = (f(lo), f(hi), f(0.5 * (lo + hi)));
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, lo, hi, fa, fm, fb, whole, tol, 50).ok_or(GeoError::QuadratureFailure { lo, hi })
}

/// Checks `∫_a^{L(t)} ds/μ(s) ≤ t − t₀` at every sample `(t, L(t))`.
///
/// With `a = 0` and an Osgood modulus the inequality forces `L ≡ 0`, which is
/// checked against a floor of `1e-12`.
pub fn osgood_integral_check(samples: &[(f64, f64)], t0: f64, a: f64, mu: &Modulus) -> Result<OsgoodCheck> {
    if a < 0.0 {
        return Err(GeoError::Config("a must be nonnegative".into()));
    }
    if a == 0.0 && mu.is_osgood() {
        let worst = samples.iter().map(|s| s.1).fold(0.0, f64::max);
        return Ok(OsgoodCheck {
            holds: worst <= 1e-12,
            margin: if worst <= 1e-12 { 0.0 } else { -worst },
        });
    }
    let mut margin = f64::INFINITY;
    for &(t, l) in samples {
        if t <= t0 {
            continue;
        }
        if l <= a {
            // the integral is nonpositive
            margin = margin.min(t - t0);
            continue;
        }
        let integral = match &mu.kind {
            // closed forms keep the equality cases exact
            ModulusKind::Linear { c } => (l / a).ln() / c,
            ModulusKind::Power { c, alpha } if (*alpha - 1.0).abs() > 1e-15 => {
                (l.powf(1.0 - alpha) - a.powf(1.0 - alpha)) / (c * (1.0 - alpha))
            }
            _ => {
                let f = |s: f64| 1.0 / mu.eval(s);
                adaptive_simpson(&f, a, l, 1e-12 * (1.0 + (t - t0).abs()))?
            }
        };
        margin = margin.min((t - t0) - integral);
    }
    if margin == f64::INFINITY {
        margin = 0.0;
    }
    Ok(OsgoodCheck {
        holds: margin >= -1e-9,
        margin,
    })
}

/// `min(π / C, l / 2)`.
pub fn injradius_lower_bound(c: f64, l: f64) -> Result<f64> {
    if !(c > 0.0 && l > 0.0) {
        return Err(GeoError::Config("injectivity radius bound needs C > 0 and l > 0".into()));
    }
    Ok((std::f64::consts::PI / c).min(0.5 * l))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_samples(slope: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..50).map(|i| {
            let x = i as f64 / 49.0;
            (vec![x], vec![slope * x])
        }).collect()
    }

    #[test]
    fn gamma_formula() {
        let g = osgood_gamma(&Modulus::linear(1.0), 1.0, 1.0, 1.0).unwrap();
        assert!((g.eval(0.1) - 0.1 * std::f64::consts::E).abs() < 1e-15);
        let zero = osgood_gamma(&Modulus::linear(0.0), 2.0, 1.0, 1.0).unwrap();
        assert_eq!(zero.eval(0.3), 0.0);
        let p = osgood_gamma(&Modulus::power(1.0, 0.5), 1.0, 0.0, 2.0).unwrap();
        assert!((p.eval(0.04) / p.eval(0.01) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_examples() {
        let constant: Vec<_> = (0..10).map(|i| (vec![i as f64], vec![3.0])).collect();
        let m = empirical_modulus(&constant, DEFAULT_BINS).unwrap();
        assert!(m.values.iter().all(|v| *v == 0.0));
        let id = empirical_modulus(&line_samples(1.0), DEFAULT_BINS).unwrap();
        for (b, pop) in id.populated.iter().enumerate() {
            if *pop {
                assert!(id.values[b] <= id.edges[b + 1] * (1.0 + 1e-12));
                assert!(id.values[b] >= id.edges[b]);
            }
        }
        assert!(id.values.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(id.eval(0.0), 0.0);
    }

    #[test]
    fn holder_examples() {
        let s = line_samples(2.0);
        assert!(holder_modulus_check(&s, 1.0, 2.0 + 1e-9).unwrap().holds);
        assert!(!holder_modulus_check(&s, 1.0, 1.9).unwrap().holds);
        let constant: Vec<_> = (0..10).map(|i| (vec![i as f64], vec![3.0])).collect();
        assert!(holder_modulus_check(&constant, 0.3, 0.0).unwrap().holds);
    }

    #[test]
    fn osgood_examples() {
        let zero: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 * 0.1, 0.0)).collect();
        assert!(osgood_integral_check(&zero, 0.0, 0.0, &Modulus::linear(1.0)).unwrap().holds);
        let (a, c) = (0.01, 2.0);
        let equality: Vec<(f64, f64)> = (0..=10).map(|i| {
            let t = i as f64 * 0.1;
            (t, a * (c * t).exp())
        }).collect();
        let r = osgood_integral_check(&equality, 0.0, a, &Modulus::linear(c)).unwrap();
        assert!(r.holds && r.margin.abs() < 1e-12, "{r:?}");
        // the same through quadrature on an empirical-kind wrapper
        let g = osgood_gamma(&Modulus::linear(c), 1.0, 0.0, 1.0).unwrap();
        let r = osgood_integral_check(&equality, 0.0, a, &g).unwrap();
        assert!(r.margin.abs() < 1e-9, "{r:?}");
        let grow: Vec<(f64, f64)> = vec![(0.5, a * (c * 1.0f64).exp())];
        assert!(!osgood_integral_check(&grow, 0.0, a, &Modulus::linear(c)).unwrap().holds);
    }

    #[test]
    fn injectivity_radius_examples() {
        use std::f64::consts::PI;
        assert!((injradius_lower_bound(1.0, 2.0 * PI).unwrap() - PI).abs() < 1e-15);
        assert!((injradius_lower_bound(2.0, 10.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(injradius_lower_bound(0.1, 1.0).unwrap(), 0.5);
        assert!(injradius_lower_bound(0.0, 1.0).is_err());
    }

    #[test]
    fn simpson_handles_smooth_integrands() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
    }
}
