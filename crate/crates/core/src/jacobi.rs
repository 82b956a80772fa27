//! Jacobi fields along geodesics and the differential of the geodesic flow.
//!
//! `J` is kept in chart components and `K` holds the chart components of the
//! covariant derivative `∇ₜJ`. Along `γ` with chart velocity `y`:
//! `J′ = K − Γ(y, J)` and `K′ = 𝓡(J) − Γ(y, K)`, where `𝓡` is the curvature
//! operator `J ↦ J″` of the surface in direction `y`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::flow::{self, FlowOptions, PhaseState, TangentVector};
use crate::ode::{self, AdaptiveOptions, ExitReason, OdeSystem, Stepper};
use crate::surface::GraphSurface;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiState {
    pub j: Vec<f64>,
    pub k: Vec<f64>,
}

impl JacobiState {
    pub fn new(j: impl Into<Vec<f64>>, k: impl Into<Vec<f64>>) -> Self {
        JacobiState { j: j.into(), k: k.into() }
    }

    pub fn zeros(m: usize) -> Self {
        JacobiState::new(vec![0.0; m], vec![0.0; m])
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.j.iter().chain(&self.k).copied().collect()
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let m = s.len() / 2;
        JacobiState::new(s[..m].to_vec(), s[m..2 * m].to_vec())
    }

    pub fn j_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.j)
    }

    pub fn k_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.k)
    }
}

/// Linear map `(J₀, K₀) ↦ (J(t), K(t))` along `γ_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDifferential {
    pub t: f64,
    pub v: TangentVector,
    pub matrix: DMatrix<f64>,
}

impl FlowDifferential {
    pub fn apply(&self, j0: &JacobiState) -> JacobiState {
        let out = &self.matrix * DVector::from_vec(j0.to_vec());
        JacobiState::from_slice(out.as_slice())
    }
}

/// JSON report comparing the Jacobi-based differential with finite differences.
#[derive(Debug, Clone, Serialize)]
pub struct FlowDifferentialReport {
    pub t: f64,
    pub v: TangentVector,
    pub matrix: Vec<Vec<f64>>,
    pub fd_matrix: Vec<Vec<f64>>,
    pub max_abs_diff: f64,
}

impl FlowDifferentialReport {
    pub fn new(d: &FlowDifferential, fd: &DMatrix<f64>) -> Self {
        FlowDifferentialReport {
            t: d.t,
            v: d.v.clone(),
            matrix: crate::io::matrix_rows(&d.matrix),
            fd_matrix: crate::io::matrix_rows(fd),
            max_abs_diff: (&d.matrix - fd).abs().max(),
        }
    }
}

/// Derivatives of the geodesic state and of one Jacobi state.
pub fn joint_rhs(surface: &GraphSurface, phase: &PhaseState, jac: &JacobiState) -> Result<(PhaseState, JacobiState)> {
    let lg = surface.local(&phase.x)?;
    let y = phase.velocity();
    let acc = -lg.christoffel_contract(&y, &y);
    let op = lg.curvature_operator(&y);
    let j = jac.j_vec();
    let k = jac.k_vec();
    let dj = &k - lg.christoffel_contract(&y, &j);
    let dk = op.apply(&j) - lg.christoffel_contract(&y, &k);
    Ok((
        TangentVector::new(phase.y.clone(), acc.as_slice().to_vec()),
        JacobiState::new(dj.as_slice().to_vec(), dk.as_slice().to_vec()),
    ))
}

/// Geodesic state followed by `columns` Jacobi states `(J, K)`.
struct JointSystem<'a> {
    surface: &'a GraphSurface,
    columns: usize,
}

impl OdeSystem for JointSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.surface.dim() * (1 + self.columns)
    }
    fn rhs(&self, s: &[f64], ds: &mut [f64]) -> Result<()> {
        let m = self.surface.dim();
        let lg = self.surface.local(&s[..m])?;
        let y = DVector::from_column_slice(&s[m..2 * m]);
        let acc = lg.christoffel_contract(&y, &y);
        ds[..m].copy_from_slice(&s[m..2 * m]);
        for i in 0..m {
            ds[m + i] = -acc[i];
        }
        let gy = lg.christoffel().partial(&y);
        let op = lg.curvature_operator(&y).0;
        for c in 0..self.columns {
            let off = 2 * m * (1 + c);
            let j = DVector::from_column_slice(&s[off..off + m]);
            let k = DVector::from_column_slice(&s[off + m..off + 2 * m]);
            let dj = &k - &gy * &j;
            let dk = &op * &j - &gy * &k;
            ds[off..off + m].copy_from_slice(dj.as_slice());
            ds[off + m..off + 2 * m].copy_from_slice(dk.as_slice());
        }
        Ok(())
    }
    fn admissible(&self, s: &[f64]) -> bool {
        self.surface.contains(&s[..self.surface.dim()])
    }
}

fn check_jacobi(surface: &GraphSurface, v: &TangentVector, j0: &JacobiState) -> Result<()> {
    let m = surface.dim();
    for len in [v.x.len(), v.y.len(), j0.j.len(), j0.k.len()] {
        if len != m {
            return Err(GeoError::DimensionMismatch { expected: m, got: len });
        }
    }
    surface.check(&v.x)
}

fn exit_error(sol: &ode::OdeSolution, t: f64) -> Option<GeoError> {
    match sol.exit {
        ExitReason::Completed => None,
        ExitReason::LeftChart => Some(GeoError::OutOfDomain {
            t,
            exit_time: sol.last_time(),
        }),
        ExitReason::StepFailure => Some(GeoError::StepFailure {
            t: sol.last_time(),
            step: 0.0,
        }),
    }
}

/// Co-integrate the geodesic with several Jacobi states, returning the
/// Jacobi states at each requested time (non-negative, sorted ascending).
fn propagate_columns(
    surface: &GraphSurface,
    v: &TangentVector,
    columns: &[JacobiState],
    times: &[f64],
    opts: &FlowOptions,
) -> Result<Vec<(TangentVector, Vec<JacobiState>)>> {
    let m = surface.dim();
    let sys = JointSystem {
        surface,
        columns: columns.len(),
    };
    let mut s0 = v.to_vec();
    for c in columns {
        s0.extend(c.to_vec());
    }
    let t_end = times.iter().copied().fold(0.0, f64::max);
    let sol = ode::solve(&sys, &s0, t_end, &opts.stepper, Some(times))?;
    if let Some(e) = exit_error(&sol, t_end) {
        return Err(e);
    }
    times
        .iter()
        .map(|&t| {
            let i = sol
                .times
                .iter()
                .position(|&s| s == t)
                .ok_or_else(|| GeoError::Config(format!("sample time {t} was not reached")))?;
            let s = &sol.states[i];
            let phase = TangentVector::from_slice(&s[..2 * m]);
            let cols = (0..columns.len())
                .map(|c| JacobiState::from_slice(&s[2 * m * (1 + c)..2 * m * (2 + c)]))
                .collect();
            Ok((phase, cols))
        })
        .collect()
}

/// Jacobi field along `γ_v` with initial data `j0`, evaluated at `t_end ≥ 0`.
pub fn propagate_jacobi(
    surface: &GraphSurface,
    v: &TangentVector,
    j0: &JacobiState,
    t_end: f64,
    opts: &FlowOptions,
) -> Result<JacobiState> {
    check_jacobi(surface, v, j0)?;
    if t_end < 0.0 {
        // (J, K) along the reversed geodesic: J unchanged, K and velocity flip sign
        let flipped = JacobiState::new(j0.j.clone(), j0.k.iter().map(|x| -x).collect::<Vec<_>>());
        let out = propagate_jacobi(surface, &v.reversed(), &flipped, -t_end, opts)?;
        return Ok(JacobiState::new(out.j, out.k.iter().map(|x| -x).collect::<Vec<_>>()));
    }
    if t_end == 0.0 {
        return Ok(j0.clone());
    }
    let mut out = propagate_columns(surface, v, std::slice::from_ref(j0), &[t_end], opts)?;
    Ok(out.remove(0).1.remove(0))
}

fn basis_columns(m: usize) -> Vec<JacobiState> {
    (0..2 * m)
        .map(|c| {
            let mut e = vec![0.0; 2 * m];
            e[c] = 1.0;
            JacobiState::from_slice(&e)
        })
        .collect()
}

fn assemble(cols: &[JacobiState]) -> DMatrix<f64> {
    let n = cols.len();
    DMatrix::from_fn(n, n, |r, c| cols[c].to_vec()[r])
}

/// `Dφ(t, ·)` at `v` in `(J, K)` coordinates, all `2m` columns co-integrated
/// with the geodesic under one step controller.
pub fn flow_differential(surface: &GraphSurface, t: f64, v: &TangentVector, opts: &FlowOptions) -> Result<FlowDifferential> {
    let mut out = flow_differential_at(surface, &[t], v, opts)?;
    Ok(out.remove(0))
}

/// `Dφ(t, ·)` at `v` for several times of one sign.
pub fn flow_differential_at(
    surface: &GraphSurface,
    times: &[f64],
    v: &TangentVector,
    opts: &FlowOptions,
) -> Result<Vec<FlowDifferential>> {
    let m = surface.dim();
    check_jacobi(surface, v, &JacobiState::zeros(m))?;
    if times.iter().any(|t| *t < 0.0) {
        if times.iter().any(|t| *t > 0.0) {
            return Err(GeoError::Config("flow differential times must share one sign".into()));
        }
        // φ(−t, ·) = R ∘ φ(t, ·) ∘ R with R(x, y) = (x, −y); in (J, K) terms R = diag(I, −I)
        let pos: Vec<f64> = times.iter().map(|t| -t).collect();
        let s = DMatrix::from_diagonal(&DVector::from_fn(2 * m, |i, _| if i < m { 1.0 } else { -1.0 }));
        return Ok(flow_differential_at(surface, &pos, &v.reversed(), opts)?
            .into_iter()
            .map(|d| FlowDifferential {
                t: -d.t,
                v: v.clone(),
                matrix: &s * d.matrix * &s,
            })
            .collect());
    }
    let cols = basis_columns(m);
    let positive: Vec<f64> = times.iter().copied().filter(|t| *t > 0.0).collect();
    let solved = if positive.is_empty() {
        Vec::new()
    } else {
        propagate_columns(surface, v, &cols, &positive, opts)?
    };
    let mut it = solved.into_iter();
    Ok(times
        .iter()
        .map(|&t| {
            let matrix = if t == 0.0 {
                DMatrix::identity(2 * m, 2 * m)
            } else {
                assemble(&it.next().expect("one solution per positive time").1)
            };
            FlowDifferential { t, v: v.clone(), matrix }
        })
        .collect())
}

/// Geodesic state and `Dφ(t, ·)` at each of the given non-negative times.
pub fn flow_differential_along(
    surface: &GraphSurface,
    times: &[f64],
    v: &TangentVector,
    opts: &FlowOptions,
) -> Result<Vec<(TangentVector, DMatrix<f64>)>> {
    let m = surface.dim();
    check_jacobi(surface, v, &JacobiState::zeros(m))?;
    if times.iter().any(|t| *t < 0.0) {
        return Err(GeoError::Config("times must be non-negative".into()));
    }
    let positive: Vec<f64> = times.iter().copied().filter(|t| *t > 0.0).collect();
    let solved = if positive.is_empty() {
        Vec::new()
    } else {
        propagate_columns(surface, v, &basis_columns(m), &positive, opts)?
    };
    let mut it = solved.into_iter();
    Ok(times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                (v.clone(), DMatrix::identity(2 * m, 2 * m))
            } else {
                let (phase, cols) = it.next().expect("one solution per positive time");
                (phase, assemble(&cols))
            }
        })
        .collect())
}

/// Two-pass variant: first the geodesic alone with RK4 at half the step, then
/// the Jacobi equation along the stored samples with RK4 at `step`.
pub fn flow_differential_two_pass(
    surface: &GraphSurface,
    t: f64,
    v: &TangentVector,
    step: f64,
) -> Result<FlowDifferential> {
    let m = surface.dim();
    check_jacobi(surface, v, &JacobiState::zeros(m))?;
    if !(t > 0.0 && step > 0.0) {
        return Err(GeoError::Config("two-pass propagation needs t > 0 and step > 0".into()));
    }
    let n = (t / step).ceil() as usize;
    let h = t / n as f64;
    let half: Vec<f64> = (1..=2 * n).map(|i| i as f64 * h / 2.0).collect();
    let traj = flow::integrate_geodesic_at(surface, v, &half, t, &FlowOptions::rk4(h / 2.0))?;
    if traj.exit_reason != ExitReason::Completed {
        return Err(GeoError::OutOfDomain {
            t,
            exit_time: traj.end_time(),
        });
    }
    // coefficient matrix of the linear system X′ = A(t) X at every half step
    let coef = |s: &PhaseState| -> Result<DMatrix<f64>> {
        let lg = surface.local(&s.x)?;
        let y = s.velocity();
        let gy = lg.christoffel().partial(&y);
        let op = lg.curvature_operator(&y).0;
        let mut a = DMatrix::zeros(2 * m, 2 * m);
        a.view_mut((0, 0), (m, m)).copy_from(&(-&gy));
        a.view_mut((0, m), (m, m)).copy_from(&DMatrix::identity(m, m));
        a.view_mut((m, 0), (m, m)).copy_from(&op);
        a.view_mut((m, m), (m, m)).copy_from(&(-&gy));
        Ok(a)
    };
    let mats = traj.states.iter().map(coef).collect::<Result<Vec<_>>>()?;
    let mut x = DMatrix::identity(2 * m, 2 * m);
    for i in 0..n {
        let (a0, a1, a2) = (&mats[2 * i], &mats[2 * i + 1], &mats[2 * i + 2]);
        let k1 = a0 * &x;
        let k2 = a1 * (&x + &k1 * (h / 2.0));
        let k3 = a1 * (&x + &k2 * (h / 2.0));
        let k4 = a2 * (&x + &k3 * h);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Ok(FlowDifferential {
        t,
        v: v.clone(),
        matrix: x,
    })
}

/// Finite-difference stencil for the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FdStencil {
    Second,
    Fourth,
}

impl FdStencil {
    pub fn for_surface(surface: &GraphSurface) -> Self {
        if surface.regularity().at_least_c3() {
            FdStencil::Fourth
        } else {
            FdStencil::Second
        }
    }
}

/// Integrator settings for the finite-difference oracle: tolerances far
/// below the perturbation size so differences are not swamped by step noise.
pub fn fd_flow_options(surface: &GraphSurface) -> FlowOptions {
    let mut o = AdaptiveOptions::new(1e-13, 1e-14);
    if let Stepper::Adaptive(d) = FlowOptions::for_surface(surface).stepper {
        o.h_max = d.h_max;
    }
    FlowOptions {
        stepper: Stepper::Adaptive(o),
    }
}

/// Chart-to-`(J, K)` conversion at `(x, y)`: `J = δx`, `K = δy + Γ(y, δx)`.
fn chart_to_jk(surface: &GraphSurface, s: &TangentVector) -> Result<DMatrix<f64>> {
    let m = surface.dim();
    let gy = surface.christoffel_at(&s.x)?.partial(&s.velocity());
    let mut b = DMatrix::identity(2 * m, 2 * m);
    b.view_mut((m, 0), (m, m)).copy_from(&gy);
    Ok(b)
}

/// Central-difference oracle for `Dφ(t, ·)` at `v`, in `(J, K)` coordinates,
/// with the stencil and integrator chosen from the surface's regularity.
pub fn fd_flow_differential(surface: &GraphSurface, t: f64, v: &TangentVector, eps: f64) -> Result<DMatrix<f64>> {
    fd_flow_differential_with(surface, t, v, eps, FdStencil::for_surface(surface), &fd_flow_options(surface))
}

pub fn fd_flow_differential_with(
    surface: &GraphSurface,
    t: f64,
    v: &TangentVector,
    eps: f64,
    stencil: FdStencil,
    opts: &FlowOptions,
) -> Result<DMatrix<f64>> {
    let m = surface.dim();
    if !(eps > 0.0) {
        return Err(GeoError::Config("eps must be positive".into()));
    }
    let base = v.to_vec();
    let flow_at = |c: usize, h: f64| -> Result<Vec<f64>> {
        let mut p = base.clone();
        p[c] += h;
        Ok(flow::geodesic_flow(surface, t, &TangentVector::from_slice(&p), opts)?.to_vec())
    };
    let mut d = DMatrix::zeros(2 * m, 2 * m);
    for c in 0..2 * m {
        let col: Vec<f64> = match stencil {
            FdStencil::Second => {
                let p = flow_at(c, eps)?;
                let q = flow_at(c, -eps)?;
                p.iter().zip(&q).map(|(a, b)| (a - b) / (2.0 * eps)).collect()
            }
            FdStencil::Fourth => {
                let p1 = flow_at(c, eps)?;
                let m1 = flow_at(c, -eps)?;
                let p2 = flow_at(c, 2.0 * eps)?;
                let m2 = flow_at(c, -2.0 * eps)?;
                (0..2 * m)
                    .map(|r| (8.0 * (p1[r] - m1[r]) - (p2[r] - m2[r])) / (12.0 * eps))
                    .collect()
            }
        };
        for r in 0..2 * m {
            d[(r, c)] = col[r];
        }
    }
    let end = flow::geodesic_flow(surface, t, v, opts)?;
    let b_end = chart_to_jk(surface, &end)?;
    let b0 = chart_to_jk(surface, v)?;
    let b0_inv = {
        let mut inv = b0.clone();
        let blk = -b0.view((m, 0), (m, m)).clone_owned();
        inv.view_mut((m, 0), (m, m)).copy_from(&blk);
        inv
    };
    Ok(b_end * d * b0_inv)
}

/// Sample times at which [`mixed_partials_residual`] compares the two routes.
pub const MIXED_PARTIAL_TIMES: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Difference of the two finite-difference routes to `∂ₛ∂ₜτ` for the
/// variation `τ(t, s) = F(π φ(t, v + s w))`.
///
/// One route differences the exact `∂ₜτ = dF·y` in `s`; the other differences
/// `τ` first in `s`, then in `t`. All geodesics use RK4 with step `eps`, so the
/// discrete flow is smooth in `s` and the residual is pure discretization error.
pub fn mixed_partials_residual(surface: &GraphSurface, v: &TangentVector, w: &TangentVector, eps: f64) -> Result<f64> {
    let m = surface.dim();
    if w.dim() != m || w.y.len() != m {
        return Err(GeoError::DimensionMismatch { expected: m, got: w.dim() });
    }
    if !(eps > 0.0 && eps < 0.1) {
        return Err(GeoError::Config("eps must lie in (0, 0.1)".into()));
    }
    let mut times = Vec::new();
    for &t in &MIXED_PARTIAL_TIMES {
        times.extend([t - eps, t, t + eps]);
    }
    let opts = FlowOptions::rk4(eps);
    let run = |s: f64| -> Result<Vec<TangentVector>> {
        let start = TangentVector::new(
            v.x.iter().zip(&w.x).map(|(a, b)| a + s * b).collect::<Vec<_>>(),
            v.y.iter().zip(&w.y).map(|(a, b)| a + s * b).collect::<Vec<_>>(),
        );
        flow::geodesic_flow_at(surface, &times, &start, &opts)
    };
    let plus = run(eps)?;
    let minus = run(-eps)?;
    let embed_vel = |s: &TangentVector| -> Result<DVector<f64>> {
        let jet = surface.jet(&s.x)?;
        let y = s.velocity();
        Ok(DVector::from_iterator(
            surface.ambient_dim(),
            s.y.iter().copied().chain((jet.grad.transpose() * &y).iter().copied()),
        ))
    };
    let ds_tau = |i: usize| -> Result<DVector<f64>> {
        Ok((surface.embed(&plus[i].x)? - surface.embed(&minus[i].x)?) / (2.0 * eps))
    };
    let mut worst: f64 = 0.0;
    for k in 0..MIXED_PARTIAL_TIMES.len() {
        let (lo, mid, hi) = (3 * k, 3 * k + 1, 3 * k + 2);
        let route1 = (embed_vel(&plus[mid])? - embed_vel(&minus[mid])?) / (2.0 * eps);
        let route2 = (ds_tau(hi)? - ds_tau(lo)?) / (2.0 * eps);
        worst = worst.max((route1 - route2).abs().max());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn g_norm(s: &GraphSurface, x: &[f64], v: &[f64]) -> f64 {
        s.speed(x, &DVector::from_column_slice(v)).unwrap()
    }

    #[test]
    fn joint_rhs_examples() {
        let flat = catalog::surface("flat").unwrap();
        let (_, d) = joint_rhs(
            &flat,
            &TangentVector::new([0.1, 0.2], [0.3, 0.4]),
            &JacobiState::new([1.0, 2.0], [3.0, 4.0]),
        )
        .unwrap();
        assert_eq!(d, JacobiState::new([3.0, 4.0], [0.0, 0.0]));
        let hemi = catalog::surface("hemisphere").unwrap();
        let (_, d) = joint_rhs(
            &hemi,
            &TangentVector::new([0.0, 0.0], [1.0, 0.0]),
            &JacobiState::new([0.0, 1.0], [0.0, 0.0]),
        )
        .unwrap();
        assert!((d.k[0]).abs() < 1e-14 && (d.k[1] + 1.0).abs() < 1e-14);
        let (_, d) = joint_rhs(&hemi, &TangentVector::new([0.2, 0.1], [0.3, -0.5]), &JacobiState::zeros(2)).unwrap();
        assert_eq!(d, JacobiState::zeros(2));
    }

    #[test]
    fn joint_system_matches_single_rhs() {
        let s = catalog::surface("hemisphere").unwrap();
        let phase = TangentVector::new([0.2, 0.1], [0.3, -0.5]);
        let jac = JacobiState::new([0.4, -0.2], [0.1, 0.7]);
        let (_, d) = joint_rhs(&s, &phase, &jac).unwrap();
        let sys = JointSystem { surface: &s, columns: 1 };
        let mut st = phase.to_vec();
        st.extend(jac.to_vec());
        let mut ds = vec![0.0; 8];
        sys.rhs(&st, &mut ds).unwrap();
        for (a, b) in ds[4..].iter().zip(d.to_vec()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_propagation_is_affine() {
        let flat = catalog::surface("flat").unwrap();
        let opts = FlowOptions::for_surface(&flat);
        let v = TangentVector::new([0.0, 0.0], [0.3, 0.2]);
        let out = propagate_jacobi(&flat, &v, &JacobiState::new([1.0, -1.0], [0.5, 0.25]), 2.0, &opts).unwrap();
        assert!((out.j[0] - 2.0).abs() < 1e-12 && (out.j[1] + 0.5).abs() < 1e-12);
        let d = flow_differential(&flat, 1.0, &v, &opts).unwrap();
        let mut expected = DMatrix::identity(4, 4);
        expected[(0, 2)] = 1.0;
        expected[(1, 3)] = 1.0;
        assert!((&d.matrix - expected).abs().max() < 1e-12);
        let d0 = flow_differential(&flat, 0.0, &v, &opts).unwrap();
        assert_eq!(d0.matrix, DMatrix::identity(4, 4));
    }

    #[test]
    fn sphere_jacobi_field_is_sine() {
        let hemi = catalog::surface("hemisphere").unwrap();
        let opts = FlowOptions::for_surface(&hemi);
        let v = TangentVector::new([0.0, 0.0], [1.0, 0.0]);
        let out = propagate_jacobi(&hemi, &v, &JacobiState::new([0.0, 0.0], [0.0, 1.0]), 0.5, &opts).unwrap();
        let end = flow::geodesic_flow(&hemi, 0.5, &v, &opts).unwrap();
        assert!((g_norm(&hemi, &end.x, &out.j) - 0.5f64.sin()).abs() < 1e-9);
        assert!((g_norm(&hemi, &end.x, &out.k) - 0.5f64.cos()).abs() < 1e-9);
        let d = flow_differential(&hemi, 0.5, &v, &opts).unwrap();
        let col = d.apply(&JacobiState::new([0.0, 0.0], [0.0, 1.0]));
        assert!((g_norm(&hemi, &end.x, &col.j) - 0.5f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn tangential_field_grows_linearly() {
        for name in catalog::names() {
            let s = catalog::surface(name).unwrap();
            let opts = FlowOptions::for_surface(&s);
            let v = TangentVector::new([0.05, -0.1], [0.3, 0.2]);
            let t = 0.6;
            let out = propagate_jacobi(&s, &v, &JacobiState::new([0.0, 0.0], v.y.clone()), t, &opts).unwrap();
            let end = flow::geodesic_flow(&s, t, &v, &opts).unwrap();
            for i in 0..2 {
                assert!((out.j[i] - t * end.y[i]).abs() < 1e-8, "{name}");
                assert!((out.k[i] - end.y[i]).abs() < 1e-8, "{name}");
            }
        }
    }

    #[test]
    fn fd_oracle_agrees_on_hemisphere() {
        let hemi = catalog::surface("hemisphere").unwrap();
        let v = TangentVector::new([0.0, 0.0], [1.0, 0.0]);
        let d = flow_differential(&hemi, 0.5, &v, &FlowOptions::for_surface(&hemi)).unwrap();
        let fd = fd_flow_differential(&hemi, 0.5, &v, 1e-5).unwrap();
        assert!((&d.matrix - &fd).abs().max() < 1e-6);
        let flat = catalog::surface("flat").unwrap();
        let fd = fd_flow_differential(&flat, 1.0, &TangentVector::new([0.0, 0.0], [0.2, 0.1]), 1e-5).unwrap();
        let mut expected = DMatrix::identity(4, 4);
        expected[(0, 2)] = 1.0;
        expected[(1, 3)] = 1.0;
        assert!((fd - expected).abs().max() < 1e-9);
    }

    #[test]
    fn fd_conversion_handles_curved_start() {
        let s = catalog::surface("trough").unwrap();
        let v = TangentVector::new([0.3, -0.2], [0.5, 0.4]);
        let d = flow_differential(&s, 0.7, &v, &FlowOptions::for_surface(&s)).unwrap();
        let fd = fd_flow_differential(&s, 0.7, &v, 1e-5).unwrap();
        assert!((&d.matrix - &fd).abs().max() < 1e-6, "{}", (&d.matrix - &fd).abs().max());
    }

    #[test]
    fn backward_differential_inverts_forward() {
        let s = catalog::surface("hemisphere").unwrap();
        let opts = FlowOptions::for_surface(&s);
        let v = TangentVector::new([0.1, 0.0], [0.2, 0.5]);
        let fwd = flow_differential(&s, 0.6, &v, &opts).unwrap();
        let end = flow::geodesic_flow(&s, 0.6, &v, &opts).unwrap();
        let back = flow_differential(&s, -0.6, &end, &opts).unwrap();
        let prod = &back.matrix * &fwd.matrix;
        assert!((prod - DMatrix::identity(4, 4)).abs().max() < 1e-8);
    }

    #[test]
    fn two_pass_agrees_with_joint() {
        let s = catalog::surface("hemisphere").unwrap();
        let v = TangentVector::new([0.1, 0.0], [0.2, 0.5]);
        let joint = flow_differential(&s, 0.8, &v, &FlowOptions::for_surface(&s)).unwrap();
        let two = flow_differential_two_pass(&s, 0.8, &v, 1e-3).unwrap();
        assert!((&joint.matrix - &two.matrix).abs().max() < 1e-9);
    }

    #[test]
    fn mixed_partials_examples() {
        let flat = catalog::surface("flat").unwrap();
        let v = TangentVector::new([0.0, 0.0], [0.3, 0.1]);
        let w = TangentVector::new([0.1, 0.0], [0.0, 0.2]);
        assert!(mixed_partials_residual(&flat, &v, &w, 1e-3).unwrap() < 1e-10);
        let hemi = catalog::surface("hemisphere").unwrap();
        let v = TangentVector::new([0.0, 0.0], [0.5, 0.0]);
        let w = TangentVector::new([0.0, 0.0], [0.0, 0.3]);
        let r = mixed_partials_residual(&hemi, &v, &w, 1e-4).unwrap();
        assert!(r < 1e-6, "{r}");
    }
}
