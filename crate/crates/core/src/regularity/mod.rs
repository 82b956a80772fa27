//! Smooth approximation of low-regularity graphs and the quantitative bounds
//! that control the geodesic flow along such approximations.

pub mod mollify;
pub mod modulus;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GeoError, Result};
use crate::flow::{self, FlowOptions, PhaseState, TangentVector};
use crate::jacobi;
use crate::surface::{GraphSurface, LocalGeometry, BOUNDS_INFLATION};

pub use mollify::{default_grid_res, mollify};
pub use modulus::{
    empirical_modulus, holder_modulus_check, injradius_lower_bound, osgood_gamma, osgood_integral_check,
    DominanceCheck, HolderCheck, Modulus, ModulusKind, OsgoodCheck,
};

/// Grid nodes per mollification width used by [`approximation_sequence`].
pub const NODES_PER_EPS: usize = 8;
pub const MAX_GRID_RES: usize = 801;
/// Samples per axis of the common domain for level distances.
pub const DISTANCE_SAMPLES: usize = 81;
/// Distances at or below this count as zero in verdicts.
pub const DISTANCE_FLOOR: f64 = 1e-9;
/// Required geometric-mean decrease per level.
pub const CONVERGENCE_FACTOR: f64 = 1.5;

/// Distances of one smoothed level to the base surface on the common domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelDistances {
    pub scale: f64,
    pub grid_res: usize,
    /// `sup |h_l − h| + sup |∂h_l − ∂h|`.
    pub height_c1: f64,
    /// `sup |g_l − g| + sup |∂g_l − ∂g|`.
    pub metric_c1: f64,
    /// `sup |Π_l(eᵢ, eⱼ) − Π(eᵢ, eⱼ)|`.
    pub pi_c0: f64,
    /// `sup |Π_l(eᵢ, eⱼ)|`.
    pub pi_sup: f64,
}

#[derive(Debug, Clone)]
pub struct SmoothingSequence {
    pub base: GraphSurface,
    pub scales: Vec<f64>,
    pub smoothed: Vec<GraphSurface>,
    pub distances: Vec<LevelDistances>,
}

impl SmoothingSequence {
    pub fn metric_c1(&self) -> Vec<f64> {
        self.distances.iter().map(|d| d.metric_c1).collect()
    }
    pub fn pi_c0(&self) -> Vec<f64> {
        self.distances.iter().map(|d| d.pi_c0).collect()
    }
    pub fn pi_sup(&self) -> f64 {
        self.distances.iter().map(|d| d.pi_sup).fold(0.0, f64::max)
    }
}

fn metric_derivative(lg: &LocalGeometry) -> Vec<DMatrix<f64>> {
    // ∂ₖ g_ij = Σₐ ∂²ₖᵢhᵃ ∂ⱼhᵃ + ∂ᵢhᵃ ∂²ₖⱼhᵃ
    let m = lg.dim();
    (0..m)
        .map(|k| {
            DMatrix::from_fn(m, m, |i, j| {
                lg.jet
                    .hess
                    .iter()
                    .enumerate()
                    .map(|(a, h)| h[(k, i)] * lg.jet.grad[(j, a)] + lg.jet.grad[(i, a)] * h[(k, j)])
                    .sum()
            })
        })
        .collect()
}

fn level_distances(base: &GraphSurface, level: &GraphSurface, points: &[Vec<f64>]) -> Result<(f64, f64, f64, f64)> {
    let m = base.dim();
    let basis: Vec<DVector<f64>> = (0..m).map(|i| DVector::from_fn(m, |r, _| if r == i { 1.0 } else { 0.0 })).collect();
    let per_point = points
        .par_iter()
        .map(|p| -> Result<[f64; 7]> {
            let a = base.local(p)?;
            let b = level.local(p)?;
            let dh = (&a.jet.value - &b.jet.value).abs().max();
            let dgrad = (&a.jet.grad - &b.jet.grad).abs().max();
            let dg = (&a.g - &b.g).abs().max();
            let dga = metric_derivative(&a);
            let dgb = metric_derivative(&b);
            let ddg = dga.iter().zip(&dgb).map(|(x, y)| (x - y).abs().max()).fold(0.0, f64::max);
            let mut dpi: f64 = 0.0;
            let mut pis: f64 = 0.0;
            for i in 0..m {
                for j in i..m {
                    let pa = a.second_fundamental_form(&basis[i], &basis[j]).0;
                    let pb = b.second_fundamental_form(&basis[i], &basis[j]).0;
                    dpi = dpi.max((&pa - &pb).norm());
                    pis = pis.max(pb.norm());
                }
            }
            Ok([dh, dgrad, dg, ddg, dpi, pis, 0.0])
        })
        .collect::<Result<Vec<_>>>()?;
    let sup = |k: usize| per_point.iter().map(|r| r[k]).fold(0.0, f64::max);
    Ok((sup(0) + sup(1), sup(2) + sup(3), sup(4), sup(5)))
}

/// Mollify at each scale (about [`NODES_PER_EPS`] grid nodes per width) and
/// measure distances to the base on the domain shrunk by the largest scale.
pub fn approximation_sequence(surface: &GraphSurface, scales: &[f64]) -> Result<SmoothingSequence> {
    approximation_sequence_with(surface, scales, NODES_PER_EPS, MAX_GRID_RES)
}

pub fn approximation_sequence_with(
    surface: &GraphSurface,
    scales: &[f64],
    nodes_per_eps: usize,
    max_res: usize,
) -> Result<SmoothingSequence> {
    if scales.is_empty() {
        return Err(GeoError::Config("at least one smoothing scale is required".into()));
    }
    if scales.windows(2).any(|w| !(w[1] < w[0])) || scales.iter().any(|s| !(*s > 0.0)) {
        return Err(GeoError::Config("scales must be positive and strictly decreasing".into()));
    }
    let common = surface
        .domain()
        .shrink(scales[0] * (1.0 + 1e-9))
        .ok_or_else(|| GeoError::DomainTooSmall("largest scale leaves no common domain".into()))?;
    let points = common.sample_grid(DISTANCE_SAMPLES);
    let mut smoothed = Vec::with_capacity(scales.len());
    let mut distances = Vec::with_capacity(scales.len());
    for &eps in scales {
        let res = default_grid_res(surface.domain(), eps, nodes_per_eps, max_res);
        let level = mollify(surface, eps, res)?;
        let (height_c1, metric_c1, pi_c0, pi_sup) = level_distances(surface, &level, &points)?;
        distances.push(LevelDistances {
            scale: eps,
            grid_res: res,
            height_c1,
            metric_c1,
            pi_c0,
            pi_sup,
        });
        smoothed.push(level);
    }
    Ok(SmoothingSequence {
        base: surface.clone(),
        scales: scales.to_vec(),
        smoothed,
        distances,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesVerdict {
    /// Every distance is at or below the floor.
    Negligible,
    /// Strictly decreasing with geometric-mean factor at least [`CONVERGENCE_FACTOR`].
    Converging,
    /// Finite, not converging, and not more than doubling overall.
    Bounded,
    Growing,
}

/// Geometric-mean decrease factor `(d₀ / d_last)^{1/(n−1)}`.
pub fn mean_decrease_factor(d: &[f64]) -> f64 {
    if d.len() < 2 {
        return 1.0;
    }
    let (first, last) = (d[0].max(DISTANCE_FLOOR), d[d.len() - 1].max(DISTANCE_FLOOR));
    (first / last).powf(1.0 / (d.len() - 1) as f64)
}

pub fn classify_series(d: &[f64]) -> SeriesVerdict {
    if d.iter().all(|x| *x <= DISTANCE_FLOOR) {
        return SeriesVerdict::Negligible;
    }
    if d.iter().any(|x| !x.is_finite()) {
        return SeriesVerdict::Growing;
    }
    let monotone = d.windows(2).all(|w| w[1] < w[0] || w[0] <= DISTANCE_FLOOR);
    if d.len() >= 2 && monotone && mean_decrease_factor(d) >= CONVERGENCE_FACTOR {
        SeriesVerdict::Converging
    } else if d.last().copied().unwrap_or(0.0) <= 2.0 * d[0].max(DISTANCE_FLOOR) {
        SeriesVerdict::Bounded
    } else {
        SeriesVerdict::Growing
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub scales: Vec<f64>,
    pub metric_c1: Vec<f64>,
    pub pi_c0: Vec<f64>,
    pub pi_sup: f64,
    /// `sup |φ_l − φ_{l+1}|` over the probes, one entry per consecutive pair of levels.
    pub flow_c0: Vec<f64>,
    /// `sup ‖dφ_l − dφ_{l+1}‖` (max entry) over the probes.
    pub dflow_c0: Vec<f64>,
    pub flow_verdict: SeriesVerdict,
    pub dflow_verdict: SeriesVerdict,
    pub flow_factor: f64,
    pub dflow_factor: f64,
    pub verdict: String,
    pub probes_used: usize,
    pub pruned: Vec<usize>,
}

impl ConvergenceReport {
    /// `delta-vs-level` rows: level, scale, metric_c1, pi_c0, flow_c0, dflow_c0
    /// (successive distances are attached to the finer level).
    pub fn level_csv(&self) -> String {
        let rows: Vec<Vec<f64>> = (0..self.scales.len())
            .map(|l| {
                let succ = |v: &Vec<f64>| if l == 0 { f64::NAN } else { v[l - 1] };
                vec![
                    l as f64,
                    self.scales[l],
                    self.metric_c1[l],
                    self.pi_c0[l],
                    succ(&self.flow_c0),
                    succ(&self.dflow_c0),
                ]
            })
            .collect();
        crate::io::csv_string(&["level", "scale", "metric_c1", "pi_c0", "flow_c0", "dflow_c0"], &rows)
    }
}

/// Successive sup-distances of `φ_l` and `dφ_l` over `probes = [(t, v)]`.
///
/// Probes that leave the chart of any level are dropped and listed in `pruned`.
pub fn flow_convergence_report(seq: &SmoothingSequence, probes: &[(f64, TangentVector)]) -> Result<ConvergenceReport> {
    let levels = &seq.smoothed;
    let per_probe: Vec<Option<Vec<(TangentVector, DMatrix<f64>)>>> = probes
        .par_iter()
        .map(|(t, v)| -> Result<Option<Vec<_>>> {
            let mut out = Vec::with_capacity(levels.len());
            for s in levels {
                let opts = FlowOptions::for_surface(s);
                match jacobi::flow_differential_along(s, &[*t], v, &opts) {
                    Ok(mut r) => out.push(r.remove(0)),
                    Err(GeoError::OutOfDomain { .. }) | Err(GeoError::OutOfChart { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                }
            }
            Ok(Some(out))
        })
        .collect::<Result<Vec<_>>>()?;
    let pruned: Vec<usize> = per_probe
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_none())
        .map(|(i, _)| i)
        .collect();
    let kept: Vec<&Vec<(TangentVector, DMatrix<f64>)>> = per_probe.iter().flatten().collect();
    if kept.is_empty() && !probes.is_empty() {
        return Err(GeoError::OutOfDomain { t: probes[0].0, exit_time: 0.0 });
    }
    let n = levels.len();
    let mut flow_c0 = vec![0.0f64; n.saturating_sub(1)];
    let mut dflow_c0 = vec![0.0f64; n.saturating_sub(1)];
    for probe in &kept {
        for l in 0..n - 1 {
            flow_c0[l] = flow_c0[l].max(probe[l].0.distance(&probe[l + 1].0));
            dflow_c0[l] = dflow_c0[l].max((&probe[l].1 - &probe[l + 1].1).abs().max());
        }
    }
    let flow_verdict = classify_series(&flow_c0);
    let dflow_verdict = classify_series(&dflow_c0);
    let good = |v: SeriesVerdict| matches!(v, SeriesVerdict::Converging | SeriesVerdict::Negligible);
    let verdict = if good(flow_verdict) && good(dflow_verdict) {
        "converging"
    } else if good(flow_verdict) && dflow_verdict == SeriesVerdict::Bounded {
        "flow_converging_differential_bounded"
    } else {
        "not_converging"
    };
    Ok(ConvergenceReport {
        scales: seq.scales.clone(),
        metric_c1: seq.metric_c1(),
        pi_c0: seq.pi_c0(),
        pi_sup: seq.pi_sup(),
        flow_factor: mean_decrease_factor(&flow_c0),
        dflow_factor: mean_decrease_factor(&dflow_c0),
        flow_c0,
        dflow_c0,
        flow_verdict,
        dflow_verdict,
        verdict: verdict.into(),
        probes_used: kept.len(),
        pruned,
    })
}

/// Random probes `(t, v)` whose geodesics stay well inside the chart and
/// cross the hyperplane `x₁ = centre₁` (where the catalog creases sit).
pub fn default_probes(surface: &GraphSurface, n: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, TangentVector)> {
    let m = surface.dim();
    let c = surface.domain().center();
    let r = surface.domain().inradius();
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..m).map(|a| c[a] + 0.3 * r * rng.gen_range(-1.0..1.0)).collect();
            let mut dir: Vec<f64> = (0..m).map(|_| rng.gen_range(-0.5..0.5)).collect();
            dir[0] = if x[0] > c[0] { -1.0 } else { 1.0 };
            let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
            let y: Vec<f64> = dir.iter().map(|d| 0.5 * r * d / norm).collect();
            let t = rng.gen_range(0.6..1.0);
            (t, TangentVector::new(x, y))
        })
        .collect()
}

/// Pairs `(v, w)` with `v` drawn like [`default_probes`] and `w` a perturbation
/// of relative size `rel` in a random phase direction; also returns each `t`.
pub fn perturbation_pairs(
    surface: &GraphSurface,
    n: usize,
    rel: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<(f64, TangentVector, TangentVector)> {
    let m = surface.dim();
    let r = surface.domain().inradius();
    default_probes(surface, n, rng)
        .into_iter()
        .map(|(t, v)| {
            let d: Vec<f64> = (0..2 * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = d.iter().map(|a| a * a).sum::<f64>().sqrt();
            let mut w = v.to_vec();
            for (wi, di) in w.iter_mut().zip(&d) {
                *wi += rel * r * di / norm;
            }
            (t, v, TangentVector::from_slice(&w))
        })
        .collect()
}

/// `‖X₀‖ · e^{C̄ t}`.
pub fn gronwall_bound(c_bar: f64, x0_norm: f64, t: f64) -> f64 {
    x0_norm * (c_bar * t).exp()
}

/// Coefficient matrix of the linear part of the joint system,
/// `X′ = R X` with `X = (J, K)`: `R = [[−Γ(y,·), I], [𝓡_y, −Γ(y,·)]]`.
pub fn curvature_matrix(surface: &GraphSurface, s: &PhaseState) -> Result<DMatrix<f64>> {
    let m = surface.dim();
    let lg = surface.local(&s.x)?;
    let y = s.velocity();
    let gy = lg.christoffel().partial(&y);
    let op = lg.curvature_operator(&y).0;
    let mut r = DMatrix::zeros(2 * m, 2 * m);
    r.view_mut((0, 0), (m, m)).copy_from(&(-&gy));
    r.view_mut((0, m), (m, m)).copy_from(&DMatrix::identity(m, m));
    r.view_mut((m, 0), (m, m)).copy_from(&op);
    r.view_mut((m, m), (m, m)).copy_from(&(-&gy));
    Ok(r)
}

/// Largest singular value.
pub fn operator_norm(a: &DMatrix<f64>) -> f64 {
    a.singular_values().max()
}

/// Uniform sample times `0, t/(n−1), …, t`.
pub fn uniform_times(t: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| t * i as f64 / (n - 1) as f64).collect()
}

/// Phase states, curvature matrices and flow differentials along `γ_v`.
#[derive(Debug, Clone)]
pub struct JacobiSamples {
    pub times: Vec<f64>,
    pub phases: Vec<PhaseState>,
    pub coefficients: Vec<DMatrix<f64>>,
    pub differentials: Vec<DMatrix<f64>>,
}

impl JacobiSamples {
    pub fn c_bar_raw(&self) -> f64 {
        self.coefficients.iter().map(operator_norm).fold(0.0, f64::max)
    }
    pub fn c_tilde_raw(&self) -> f64 {
        self.differentials.iter().map(operator_norm).fold(0.0, f64::max)
    }
}

pub fn sample_jacobi(surface: &GraphSurface, v: &TangentVector, times: &[f64], opts: &FlowOptions) -> Result<JacobiSamples> {
    let along = jacobi::flow_differential_along(surface, times, v, opts)?;
    let coefficients = along
        .iter()
        .map(|(p, _)| curvature_matrix(surface, p))
        .collect::<Result<Vec<_>>>()?;
    let (phases, differentials) = along.into_iter().unzip();
    Ok(JacobiSamples {
        times: times.to_vec(),
        phases,
        coefficients,
        differentials,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GronwallReport {
    /// Largest inflated `C̄` over the geodesics.
    pub c_bar: f64,
    /// Largest `‖X(t)‖ / (‖X₀‖ e^{C̄ t})` over all geodesics, initial states and times.
    pub worst_ratio: f64,
    pub holds: bool,
    pub geodesics: usize,
}

/// Checks `‖X(t)‖ ≤ ‖X₀‖ e^{C̄ t}` along each geodesic, with `C̄` the
/// inflated sup of `‖R‖₂` sampled along that geodesic.
pub fn gronwall_dominance(
    surface: &GraphSurface,
    geodesics: &[(TangentVector, Vec<f64>)],
    t_end: f64,
    samples: usize,
    opts: &FlowOptions,
) -> Result<GronwallReport> {
    let times = uniform_times(t_end, samples);
    let rows = geodesics
        .par_iter()
        .map(|(v, x0)| -> Result<(f64, f64)> {
            let js = sample_jacobi(surface, v, &times, opts)?;
            let c_bar = js.c_bar_raw() * BOUNDS_INFLATION;
            let x0v = DVector::from_column_slice(x0);
            let n0 = x0v.norm();
            let worst = js
                .times
                .iter()
                .zip(&js.differentials)
                .map(|(t, d)| (d * &x0v).norm() / gronwall_bound(c_bar, n0, *t))
                .fold(0.0, f64::max);
            Ok((c_bar, worst))
        })
        .collect::<Result<Vec<_>>>()?;
    let c_bar = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let worst_ratio = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(GronwallReport {
        c_bar,
        worst_ratio,
        holds: worst_ratio <= 1.0,
        geodesics: geodesics.len(),
    })
}

/// Measured constants and moduli for the map `x₀ ↦ Dφ(t₁, (x₀, y))`.
#[derive(Debug, Clone, Serialize)]
pub struct ModulusStudy {
    pub t1: f64,
    pub c_bar: f64,
    pub c_tilde: f64,
    pub mu_r: Modulus,
    pub empirical: Modulus,
    pub gamma: Modulus,
    pub dominance: DominanceCheck,
    /// Largest pairwise `‖ΔX(t₁)‖ / (C̃ t₁ e^{C̄ t₁} sup_t ‖ΔR(t)‖)`.
    pub worst_pair_ratio: f64,
    pub base_points: usize,
}

impl ModulusStudy {
    /// Hölder check of the empirical modulus against the power form of `Γ`
    /// built from the best `C_R` with `μ_R(δ) ≤ C_R δᵅ`.
    pub fn holder(&self, alpha: f64) -> HolderCheck {
        let c_r = modulus::power_fit(&self.mu_r, alpha);
        let c_bound = self.c_tilde * self.t1 * (self.c_bar * self.t1).exp() * c_r;
        modulus::holder_check_modulus(&self.empirical, alpha, c_bound)
    }
}

/// Measures `C̄`, `C̃`, `μ_R` and the empirical modulus of
/// `x₀ ↦ Dφ(t₁, (x₀, velocity))` over the given base points, with operator
/// 2-norms throughout and constants inflated by the bounds safety factor.
pub fn differential_modulus_study(
    surface: &GraphSurface,
    base_points: &[Vec<f64>],
    velocity: &[f64],
    t1: f64,
    samples: usize,
    opts: &FlowOptions,
) -> Result<ModulusStudy> {
    if base_points.len() < 2 {
        return Err(GeoError::Config("need at least two base points".into()));
    }
    let times = uniform_times(t1, samples);
    let runs = base_points
        .par_iter()
        .map(|x| sample_jacobi(surface, &TangentVector::new(x.clone(), velocity.to_vec()), &times, opts))
        .collect::<Result<Vec<_>>>()?;
    let c_bar = runs.iter().map(|r| r.c_bar_raw()).fold(0.0, f64::max) * BOUNDS_INFLATION;
    let c_tilde = runs.iter().map(|r| r.c_tilde_raw()).fold(0.0, f64::max) * BOUNDS_INFLATION;
    let factor = c_tilde * t1 * (c_bar * t1).exp();
    let mut r_pairs = Vec::new();
    let mut x_pairs = Vec::new();
    let mut worst_pair_ratio: f64 = 0.0;
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            let d: f64 = base_points[i]
                .iter()
                .zip(&base_points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let dr = runs[i]
                .coefficients
                .iter()
                .zip(&runs[j].coefficients)
                .map(|(a, b)| operator_norm(&(a - b)))
                .fold(0.0, f64::max);
            let dx = operator_norm(&(runs[i].differentials.last().unwrap() - runs[j].differentials.last().unwrap()));
            if dr > 0.0 {
                worst_pair_ratio = worst_pair_ratio.max(dx / (factor * dr));
            } else if dx > 0.0 {
                worst_pair_ratio = f64::INFINITY;
            }
            r_pairs.push((d, dr));
            x_pairs.push((d, dx));
        }
    }
    let dmax = r_pairs.iter().map(|p| p.0).fold(0.0, f64::max);
    let mu_r = Modulus::from_deviations(&r_pairs, modulus::DEFAULT_BINS, dmax)?;
    let empirical = Modulus::from_deviations(&x_pairs, modulus::DEFAULT_BINS, dmax)?;
    let gamma = osgood_gamma(&mu_r, c_tilde, c_bar, t1)?;
    let dominance = empirical.dominated_by(&gamma);
    Ok(ModulusStudy {
        t1,
        c_bar,
        c_tilde,
        mu_r,
        empirical,
        gamma,
        dominance,
        worst_pair_ratio,
        base_points: base_points.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    /// Inflated sup of `‖R‖₂` over the sampled geodesics.
    pub c_bar: f64,
    pub max_quotient: f64,
    /// Largest `quotient / e^{C̄ t}` over the pairs.
    pub worst_ratio: f64,
    pub holds: bool,
    pub pairs: usize,
}

/// Chart Lipschitz quotients `|φ(t,v) − φ(t,w)| / |v − w|` over `(t, v, w)`
/// triples against `e^{C̄ t}`, with `C̄` the inflated sup of `‖R‖₂` sampled
/// along the geodesics of the pairs.
pub fn lipschitz_check(
    surface: &GraphSurface,
    pairs: &[(f64, TangentVector, TangentVector)],
    samples: usize,
    opts: &FlowOptions,
) -> Result<LipschitzReport> {
    let rows = pairs
        .par_iter()
        .map(|(t, v, w)| -> Result<(f64, f64)> {
            let times = uniform_times(*t, samples);
            let fv = flow::geodesic_flow_at(surface, &times, v, opts)?;
            let fw = flow::geodesic_flow_at(surface, &times, w, opts)?;
            let mut c: f64 = 0.0;
            for p in fv.iter().chain(&fw) {
                c = c.max(operator_norm(&curvature_matrix(surface, p)?));
            }
            let (ev, ew) = (fv.last().expect("samples"), fw.last().expect("samples"));
            let q = ev.distance(ew) / v.distance(w);
            Ok((c, q))
        })
        .collect::<Result<Vec<_>>>()?;
    let c_bar = rows.iter().map(|r| r.0).fold(0.0, f64::max) * BOUNDS_INFLATION;
    let max_quotient = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let worst_ratio = rows
        .iter()
        .zip(pairs)
        .map(|(r, (t, _, _))| r.1 / (c_bar * t).exp())
        .fold(0.0, f64::max);
    Ok(LipschitzReport {
        c_bar,
        max_quotient,
        worst_ratio,
        holds: worst_ratio <= 1.0,
        pairs: pairs.len(),
    })
}

/// Chart-coordinate Lipschitz quotient `|φ(t,v) − φ(t,w)| / |v − w|`.
pub fn chart_lipschitz_quotient(
    surface: &GraphSurface,
    v: &TangentVector,
    w: &TangentVector,
    t: f64,
    opts: &FlowOptions,
) -> Result<f64> {
    let a = flow::geodesic_flow(surface, t, v, opts)?;
    let b = flow::geodesic_flow(surface, t, w, opts)?;
    Ok(a.distance(&b) / v.distance(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use rand::SeedableRng;

    #[test]
    fn gronwall_examples() {
        assert_eq!(gronwall_bound(0.0, 1.5, 3.0), 1.5);
        assert!((gronwall_bound(1.0, 1.0, 1.0) - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn flat_sequence_has_zero_distances() {
        let s = catalog::surface("flat").unwrap();
        let seq = approximation_sequence(&s, &[0.2, 0.1]).unwrap();
        assert!(seq.distances.iter().all(|d| d.metric_c1 == 0.0 && d.pi_c0 == 0.0 && d.height_c1 == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let probes = default_probes(&s, 4, &mut rng);
        let rep = flow_convergence_report(&seq, &probes).unwrap();
        assert!(rep.flow_c0.iter().all(|d| *d <= 1e-10));
        assert_eq!(rep.flow_verdict, SeriesVerdict::Negligible);
    }

    #[test]
    fn series_classification() {
        assert_eq!(classify_series(&[1.0, 0.5, 0.25]), SeriesVerdict::Converging);
        assert_eq!(classify_series(&[1.0, 0.9, 0.8]), SeriesVerdict::Bounded);
        assert_eq!(classify_series(&[1.0, 3.0, 9.0]), SeriesVerdict::Growing);
        assert_eq!(classify_series(&[0.0, 1e-12]), SeriesVerdict::Negligible);
        assert!((mean_decrease_factor(&[8.0, 4.0, 2.0, 1.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn curvature_matrix_on_flat_is_shift() {
        let s = catalog::surface("flat").unwrap();
        let r = curvature_matrix(&s, &TangentVector::new([0.1, 0.1], [1.0, 0.0])).unwrap();
        assert!((operator_norm(&r) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gronwall_dominates_on_hemisphere() {
        let s = catalog::surface("hemisphere").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let geos: Vec<_> = (0..6)
            .map(|_| {
                let x = vec![rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)];
                let y = vec![rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
                let x0: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
                (TangentVector::new(x, y), x0)
            })
            .collect();
        let rep = gronwall_dominance(&s, &geos, 0.5, 26, &FlowOptions::for_surface(&s)).unwrap();
        assert!(rep.holds, "{rep:?}");
    }
}
