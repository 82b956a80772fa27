//! Discrete shortest-path oracle on a king-move chart mesh, minimality margins
//! for integrated geodesics and non-branching checks.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GeoError, Result};
use crate::flow::{self, FlowOptions, TangentVector, Trajectory};
use crate::regularity::{self, LipschitzReport};
use crate::surface::GraphSurface;

pub const MIN_RESOLUTION: usize = 8;

/// Worst length ratio of a king-move path to the straight chart segment.
pub fn king_move_anisotropy() -> f64 {
    1.0 / (std::f64::consts::PI / 8.0).cos()
}

/// Weighted king-move graph on a regular chart grid.
#[derive(Debug, Clone)]
pub struct MeshGeodesicOracle {
    /// Cells per axis of the bounding box.
    pub resolution: usize,
    pub lo: Vec<f64>,
    pub step: Vec<f64>,
    /// `resolution + 1` nodes per axis, row-major with axis 0 fastest.
    inside: Vec<bool>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    /// Largest `‖∂h‖₂` over the vertices.
    pub grad_sup: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct Dist(f64);
impl Eq for Dist {}
impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshPath {
    pub length: f64,
    pub hops: usize,
    /// Chart distances from the query points to their snapped vertices.
    pub snap_p: f64,
    pub snap_q: f64,
}

impl MeshGeodesicOracle {
    fn nodes(&self) -> usize {
        self.resolution + 1
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.inside.iter().filter(|b| **b).count()
    }

    pub fn mesh_step(&self) -> f64 {
        self.step.iter().cloned().fold(0.0, f64::max)
    }

    fn point(&self, lin: usize) -> Vec<f64> {
        let n = self.nodes();
        let mut rem = lin;
        (0..self.dim())
            .map(|a| {
                let i = rem % n;
                rem /= n;
                self.lo[a] + i as f64 * self.step[a]
            })
            .collect()
    }

    pub fn edges(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.targets[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    /// Nearest in-domain vertex and its chart distance.
    pub fn snap(&self, p: &[f64]) -> Result<(usize, f64)> {
        if p.len() != self.dim() {
            return Err(GeoError::DimensionMismatch {
                expected: self.dim(),
                got: p.len(),
            });
        }
        let n = self.nodes();
        let rounded: Vec<isize> = (0..self.dim())
            .map(|a| ((p[a] - self.lo[a]) / self.step[a]).round() as isize)
            .collect();
        let mut best: Option<(usize, f64)> = None;
        // search the 3^m block around the rounded node, enough for convex domains
        let m = self.dim();
        for code in 0..3usize.pow(m as u32) {
            let mut c = code;
            let mut lin = 0usize;
            let mut stride = 1usize;
            let mut ok = true;
            for a in 0..m {
                let i = rounded[a] + (c % 3) as isize - 1;
                c /= 3;
                if i < 0 || i >= n as isize {
                    ok = false;
                    break;
                }
                lin += i as usize * stride;
                stride *= n;
            }
            if !ok || !self.inside[lin] {
                continue;
            }
            let q = self.point(lin);
            let d = q.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((lin, d));
            }
        }
        best.ok_or_else(|| GeoError::OutOfChart { point: p.to_vec() })
    }

    /// Dijkstra between the vertices nearest to `p` and `q`.
    pub fn shortest_path(&self, p: &[f64], q: &[f64]) -> Result<MeshPath> {
        let (s, snap_p) = self.snap(p)?;
        let (t, snap_q) = self.snap(q)?;
        let total = self.inside.len();
        let mut dist = vec![f64::INFINITY; total];
        let mut hops = vec![0usize; total];
        let mut heap = BinaryHeap::new();
        dist[s] = 0.0;
        heap.push(Reverse((Dist(0.0), s)));
        while let Some(Reverse((Dist(d), u))) = heap.pop() {
            if u == t {
                break;
            }
            if d > dist[u] {
                continue;
            }
            for (w, len) in self.edges(u) {
                let nd = d + len;
                if nd < dist[w] {
                    dist[w] = nd;
                    hops[w] = hops[u] + 1;
                    heap.push(Reverse((Dist(nd), w)));
                }
            }
        }
        if !dist[t].is_finite() {
            return Err(GeoError::Disconnected(s, t));
        }
        Ok(MeshPath {
            length: dist[t],
            hops: hops[t],
            snap_p,
            snap_q,
        })
    }

    pub fn shortest_path_length(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        Ok(self.shortest_path(p, q)?.length)
    }

    /// Slack for comparing a mesh length with a smooth curve length:
    /// king-move excess per hop plus the ambient size of both snaps.
    pub fn error_budget(&self, path: &MeshPath) -> f64 {
        let lift = (1.0 + self.grad_sup * self.grad_sup).sqrt();
        lift * (king_move_anisotropy() - 1.0) * self.mesh_step() * path.hops as f64 + lift * (path.snap_p + path.snap_q)
    }
}

/// King-move mesh over the chart with `resolution` cells per axis; edges are
/// weighted by ambient chord length.
pub fn build_mesh_oracle(surface: &GraphSurface, resolution: usize) -> Result<MeshGeodesicOracle> {
    if resolution < MIN_RESOLUTION {
        return Err(GeoError::Config(format!("mesh resolution must be at least {MIN_RESOLUTION}")));
    }
    let (lo, hi) = surface.domain().bounding_box();
    let m = lo.len();
    let n = resolution + 1;
    let step: Vec<f64> = (0..m).map(|a| (hi[a] - lo[a]) / resolution as f64).collect();
    let total = n.pow(m as u32);
    let mut oracle = MeshGeodesicOracle {
        resolution,
        lo,
        step,
        inside: Vec::new(),
        offsets: Vec::new(),
        targets: Vec::new(),
        weights: Vec::new(),
        grad_sup: 0.0,
    };
    let samples: Vec<Option<(nalgebra::DVector<f64>, f64)>> = (0..total)
        .into_par_iter()
        .map(|lin| {
            let p = oracle.point(lin);
            if !surface.contains(&p) {
                return Ok(None);
            }
            let jet = surface.jet(&p)?;
            let g = jet.grad.singular_values().max();
            Ok(Some((surface.embed(&p)?, g)))
        })
        .collect::<Result<Vec<_>>>()?;
    oracle.inside = samples.iter().map(Option::is_some).collect();
    oracle.grad_sup = samples.iter().flatten().map(|s| s.1).fold(0.0, f64::max);

    let moves: Vec<Vec<isize>> = (0..3usize.pow(m as u32))
        .map(|code| {
            let mut c = code;
            (0..m)
                .map(|_| {
                    let d = (c % 3) as isize - 1;
                    c /= 3;
                    d
                })
                .collect()
        })
        .filter(|d: &Vec<isize>| d.iter().any(|x| *x != 0))
        .collect();
    oracle.offsets.push(0);
    for lin in 0..total {
        if let Some((e, _)) = &samples[lin] {
            let mut idx = Vec::with_capacity(m);
            let mut rem = lin;
            for _ in 0..m {
                idx.push((rem % n) as isize);
                rem /= n;
            }
            for d in &moves {
                let mut w = 0usize;
                let mut stride = 1usize;
                let mut ok = true;
                for a in 0..m {
                    let i = idx[a] + d[a];
                    if i < 0 || i >= n as isize {
                        ok = false;
                        break;
                    }
                    w += i as usize * stride;
                    stride *= n;
                }
                if !ok {
                    continue;
                }
                if let Some((f, _)) = &samples[w] {
                    oracle.targets.push(w);
                    oracle.weights.push((e - f).norm());
                }
            }
        }
        oracle.offsets.push(oracle.targets.len());
    }
    Ok(oracle)
}

/// Sum of ambient chords between consecutive embedded samples.
pub fn curve_length(surface: &GraphSurface, samples: &[Vec<f64>]) -> Result<f64> {
    let pts = samples.iter().map(|p| surface.embed(p)).collect::<Result<Vec<_>>>()?;
    Ok(pts.windows(2).map(|w| (&w[1] - &w[0]).norm()).sum())
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalityReport {
    pub geodesic_length: f64,
    pub mesh_length: f64,
    pub error_budget: f64,
    pub margin: f64,
    pub hops: usize,
    pub verdict: String,
}

/// `mesh distance + error budget − curve length` between the endpoints of `traj`.
pub fn minimality_margin(surface: &GraphSurface, traj: &Trajectory, oracle: &MeshGeodesicOracle) -> Result<MinimalityReport> {
    let pts: Vec<Vec<f64>> = traj.states.iter().map(|s| s.x.clone()).collect();
    let (p, q) = match (pts.first(), pts.last()) {
        (Some(p), Some(q)) if pts.len() >= 2 => (p, q),
        _ => return Err(GeoError::Config("trajectory needs at least two samples".into())),
    };
    for x in [p, q] {
        if !surface.contains(x) {
            return Err(GeoError::OutOfDomain {
                t: traj.end_time(),
                exit_time: traj.end_time(),
            });
        }
    }
    let geodesic_length = curve_length(surface, &pts)?;
    let path = oracle.shortest_path(p, q)?;
    let error_budget = oracle.error_budget(&path);
    let margin = path.length + error_budget - geodesic_length;
    Ok(MinimalityReport {
        geodesic_length,
        mesh_length: path.length,
        error_budget,
        margin,
        hops: path.hops,
        verdict: if margin >= 0.0 { "minimal" } else { "not_certified" }.into(),
    })
}

/// Length below which geodesics are expected to minimize:
/// `½ min(π / C, inradius)` with `C` the sampled bound on the second derivatives.
pub fn minimizing_length(surface: &GraphSurface) -> f64 {
    let c = surface.bounds().hess;
    let curv = if c > 0.0 { std::f64::consts::PI / c } else { f64::INFINITY };
    0.5 * curv.min(surface.domain().inradius())
}

/// Random geodesics of g-length `length` starting within `0.3·inradius` of the
/// chart centre, sampled at `samples` points.
pub fn random_short_geodesics(
    surface: &GraphSurface,
    count: usize,
    length: f64,
    samples: usize,
    opts: &FlowOptions,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Trajectory>> {
    let m = surface.dim();
    let c = surface.domain().center();
    let r = surface.domain().inradius();
    let times = regularity::uniform_times(1.0, samples);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 20 * count.max(1) {
            return Err(GeoError::DomainTooSmall("could not place short geodesics inside the chart".into()));
        }
        let x: Vec<f64> = (0..m).map(|a| c[a] + 0.3 * r * rng.gen_range(-1.0..1.0)).collect();
        let dir: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let speed = surface.speed(&x, &nalgebra::DVector::from_column_slice(&dir))?;
        if speed < 1e-3 {
            continue;
        }
        let y: Vec<f64> = dir.iter().map(|d| d * length / speed).collect();
        let traj = flow::integrate_geodesic_at(surface, &TangentVector::new(x, y), &times, 1.0, opts)?;
        if traj.exit_reason == crate::ode::ExitReason::Completed {
            out.push(traj);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchingReport {
    pub steps: Vec<f64>,
    /// `|φ_{hₖ}(t, v) − φ_{hₖ₊₁}(t, v)|` for consecutive step sizes.
    pub spreads: Vec<f64>,
    pub spread_shrinks: bool,
    pub lipschitz: LipschitzReport,
    pub holds: bool,
}

/// Spreads below this are treated as converged.
pub const SPREAD_FLOOR: f64 = 1e-12;

/// Endpoint spread of fixed-step RK4 runs across `steps` and Lipschitz
/// quotients against each perturbation `w` of `v`.
pub fn branching_check(
    surface: &GraphSurface,
    v: &TangentVector,
    t_end: f64,
    steps: &[f64],
    perturbations: &[TangentVector],
) -> Result<BranchingReport> {
    let ends = steps
        .iter()
        .map(|h| flow::geodesic_flow(surface, t_end, v, &FlowOptions::rk4(*h)))
        .collect::<Result<Vec<_>>>()?;
    let spreads: Vec<f64> = ends.windows(2).map(|w| w[0].distance(&w[1])).collect();
    let spread_shrinks = spreads.windows(2).all(|w| w[1] < w[0] || w[1] <= SPREAD_FLOOR);
    let pairs: Vec<_> = perturbations.iter().map(|w| (t_end, v.clone(), w.clone())).collect();
    let lipschitz = regularity::lipschitz_check(surface, &pairs, 21, &FlowOptions::for_surface(surface))?;
    let holds = spread_shrinks && lipschitz.holds;
    Ok(BranchingReport {
        steps: steps.to_vec(),
        spreads,
        spread_shrinks,
        lipschitz,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use rand::SeedableRng;

    #[test]
    fn flat_edges_are_chart_steps() {
        let s = catalog::surface("flat").unwrap();
        let o = build_mesh_oracle(&s, 64).unwrap();
        let h = o.mesh_step();
        for v in [0, 100, 2000] {
            for (_, w) in o.edges(v) {
                assert!((w - h).abs() < 1e-14 || (w - h * 2f64.sqrt()).abs() < 1e-14);
            }
        }
        let d = o.shortest_path_length(&[0.0, 0.0], &[0.5, 0.0]).unwrap();
        assert!((d - 0.5).abs() <= h);
        assert_eq!(o.shortest_path_length(&[0.1, 0.1], &[0.1, 0.1]).unwrap(), 0.0);
    }

    #[test]
    fn hemisphere_edges_dominate_chart_length() {
        let s = catalog::surface("hemisphere").unwrap();
        let o = build_mesh_oracle(&s, 64).unwrap();
        for v in (0..o.inside.len()).filter(|v| o.inside[*v]).step_by(37) {
            let p = o.point(v);
            for (w, len) in o.edges(v) {
                let q = o.point(w);
                let chart = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                assert!(len >= chart - 1e-15);
            }
        }
        let d = o.shortest_path_length(&[0.0, 0.0], &[0.5f64.sin(), 0.0]).unwrap();
        assert!(d >= 0.5 - o.mesh_step() && d <= 0.5 * king_move_anisotropy() + 2.0 * o.mesh_step(), "{d}");
    }

    #[test]
    fn rejects_coarse_mesh_and_builds_on_vee() {
        let s = catalog::surface("vee").unwrap();
        assert!(build_mesh_oracle(&s, 4).is_err());
        assert!(build_mesh_oracle(&s, 16).is_ok());
    }

    #[test]
    fn curve_length_examples() {
        let flat = catalog::surface("flat").unwrap();
        let seg: Vec<Vec<f64>> = (0..11).map(|i| vec![i as f64 / 10.0, 0.0]).collect();
        assert!((curve_length(&flat, &seg).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(curve_length(&flat, &[vec![0.2, 0.2], vec![0.2, 0.2]]).unwrap(), 0.0);
        let hemi = catalog::surface("hemisphere").unwrap();
        let arc: Vec<Vec<f64>> = (0..1000).map(|i| vec![(0.5 * i as f64 / 999.0).sin(), 0.0]).collect();
        assert!((curve_length(&hemi, &arc).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn minimality_examples() {
        let cases = [("flat", [0.0, 0.0], [0.5, 0.0]), ("hemisphere", [0.0, 0.0], [0.5, 0.0]), ("vee", [-0.15, 0.0], [1.0, 0.1])];
        for (name, x, dir) in cases {
            let s = catalog::surface(name).unwrap();
            let target = if name == "vee" { 0.3 } else { 0.5 };
            let speed = s.speed(&x, &nalgebra::DVector::from_column_slice(&dir)).unwrap();
            let y: Vec<f64> = dir.iter().map(|d| d * target / speed).collect();
            let times = regularity::uniform_times(1.0, 201);
            let traj = flow::integrate_geodesic_at(&s, &TangentVector::new(x, y), &times, 1.0, &FlowOptions::for_surface(&s)).unwrap();
            let o = build_mesh_oracle(&s, 128).unwrap();
            let rep = minimality_margin(&s, &traj, &o).unwrap();
            assert!(rep.margin >= 0.0, "{name}: {rep:?}");
            assert!((rep.geodesic_length - target).abs() < 1e-4, "{name}: {rep:?}");
        }
    }

    #[test]
    fn detour_is_not_certified() {
        let s = catalog::surface("flat").unwrap();
        let n = 201;
        let states: Vec<TangentVector> = (0..n)
            .map(|i| {
                let a = std::f64::consts::PI * (1.0 - i as f64 / (n - 1) as f64);
                TangentVector::new(vec![0.3 * a.cos(), 0.3 * a.sin()], vec![0.0, 0.0])
            })
            .collect();
        let traj = Trajectory {
            times: regularity::uniform_times(1.0, n),
            speeds: vec![0.0; n],
            speed: 0.0,
            exit_reason: crate::ode::ExitReason::Completed,
            states,
        };
        let o = build_mesh_oracle(&s, 128).unwrap();
        let rep = minimality_margin(&s, &traj, &o).unwrap();
        assert!((rep.geodesic_length - 0.3 * std::f64::consts::PI).abs() < 1e-4);
        assert!(rep.margin < 0.0, "{rep:?}");
        assert_eq!(rep.verdict, "not_certified");
    }

    #[test]
    fn flat_oracle_within_anisotropy_bounds() {
        let s = catalog::surface("flat").unwrap();
        let o = build_mesh_oracle(&s, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let q: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let e = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
            let d = o.shortest_path_length(&p, &q).unwrap();
            assert!(d >= e - 2.0 * o.mesh_step() && d <= e * king_move_anisotropy() + 2.0 * o.mesh_step());
        }
    }

    #[test]
    fn flat_branching_is_trivial() {
        let s = catalog::surface("flat").unwrap();
        let v = TangentVector::new([0.0, 0.0], [0.3, 0.1]);
        let w = vec![TangentVector::new([1e-4, 0.0], [0.3, 0.1]), TangentVector::new([0.0, 0.0], [0.3, 0.1001])];
        let rep = branching_check(&s, &v, 1.0, &[1e-2, 5e-3, 2.5e-3], &w).unwrap();
        assert!(rep.spreads.iter().all(|d| *d < 1e-14));
        assert!(rep.lipschitz.max_quotient <= 2f64.sqrt() + 1e-9);
        assert!(rep.holds);
    }
}
