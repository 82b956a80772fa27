//! Geodesic flow on a graph chart: `x′ = y`, `y′ = −Γ(y, y)`.

use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::ode::{self, AdaptiveOptions, ExitReason, OdeSystem, Stepper};
use crate::surface::{GraphSurface, Regularity};

/// A point of `TM` in chart coordinates: base point `x` and velocity `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// ODE state of the geodesic system; same layout as [`TangentVector`].
pub type PhaseState = TangentVector;

impl TangentVector {
    pub fn new(x: impl Into<Vec<f64>>, y: impl Into<Vec<f64>>) -> Self {
        TangentVector { x: x.into(), y: y.into() }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let m = s.len() / 2;
        TangentVector::new(s[..m].to_vec(), s[m..2 * m].to_vec())
    }

    pub fn velocity(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.y)
    }

    pub fn reversed(&self) -> Self {
        TangentVector::new(self.x.clone(), self.y.iter().map(|v| -v).collect::<Vec<_>>())
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        TangentVector::new(self.x.clone(), self.y.iter().map(|v| lambda * v).collect::<Vec<_>>())
    }

    /// Euclidean distance in `ℝ²ᵐ`.
    pub fn distance(&self, other: &TangentVector) -> f64 {
        self.to_vec()
            .iter()
            .zip(other.to_vec())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }
}

/// Integrator settings for geodesic and Jacobi integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub stepper: Stepper,
}

impl FlowOptions {
    /// Default tolerances for the regularity class of `surface`.
    pub fn for_surface(surface: &GraphSurface) -> Self {
        let opts = match surface.regularity() {
            Regularity::Smooth | Regularity::C3 => AdaptiveOptions::new(1e-10, 1e-12),
            Regularity::C2 | Regularity::C2Alpha(_) => AdaptiveOptions::new(1e-8, 1e-10),
            Regularity::C11 => {
                AdaptiveOptions::new(1e-8, 1e-10).with_max_step(1e-3 * surface.domain().width())
            }
        };
        FlowOptions {
            stepper: Stepper::Adaptive(opts),
        }
    }

    pub fn adaptive(rtol: f64, atol: f64) -> Self {
        FlowOptions {
            stepper: Stepper::Adaptive(AdaptiveOptions::new(rtol, atol)),
        }
    }

    pub fn rk4(step: f64) -> Self {
        FlowOptions {
            stepper: Stepper::Rk4 { step },
        }
    }

    /// Same stepper with both tolerances multiplied by `factor` (no-op for RK4).
    pub fn scaled_tolerance(mut self, factor: f64) -> Self {
        if let Stepper::Adaptive(ref mut a) = self.stepper {
            a.rtol *= factor;
            a.atol *= factor;
        }
        self
    }
}

/// Sampled geodesic `t ↦ γ′(t)`.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub exit_reason: ExitReason,
    /// g-speed of the initial velocity.
    pub speed: f64,
    /// g-speed at each sample.
    pub speeds: Vec<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &PhaseState {
        self.states.last().expect("trajectories hold the initial state")
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("trajectories hold the initial state")
    }

    /// `sup |‖γ′(t)‖_g − ‖v‖_g| / ‖v‖_g` over the samples (absolute when `v = 0`).
    pub fn speed_drift(&self) -> f64 {
        let scale = if self.speed > 0.0 { self.speed } else { 1.0 };
        self.speeds
            .iter()
            .map(|s| (s - self.speed).abs() / scale)
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let m = self.states.first().map_or(0, |s| s.dim());
        let mut header = vec!["t".to_string()];
        header.extend((1..=m).map(|i| format!("x{i}")));
        header.extend((1..=m).map(|i| format!("y{i}")));
        header.push("speed".into());
        writeln!(w, "{}", header.join(","))?;
        for ((t, s), sp) in self.times.iter().zip(&self.states).zip(&self.speeds) {
            let mut row = vec![crate::io::fmt_f64(*t)];
            row.extend(s.x.iter().chain(&s.y).map(|v| crate::io::fmt_f64(*v)));
            row.push(crate::io::fmt_f64(*sp));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// `(x, y) ↦ (y, −Γ(y, y))`.
pub fn geodesic_rhs(surface: &GraphSurface, s: &PhaseState) -> Result<PhaseState> {
    let lg = surface.local(&s.x)?;
    let y = s.velocity();
    let acc = -lg.christoffel_contract(&y, &y);
    Ok(TangentVector::new(s.y.clone(), acc.as_slice().to_vec()))
}

pub(crate) struct GeodesicSystem<'a> {
    pub surface: &'a GraphSurface,
}

impl OdeSystem for GeodesicSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.surface.dim()
    }
    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let m = self.surface.dim();
        let lg = self.surface.local(&y[..m])?;
        let v = DVector::from_column_slice(&y[m..]);
        let acc = lg.christoffel_contract(&v, &v);
        dy[..m].copy_from_slice(&y[m..]);
        for k in 0..m {
            dy[m + k] = -acc[k];
        }
        Ok(())
    }
    fn admissible(&self, y: &[f64]) -> bool {
        self.surface.contains(&y[..self.surface.dim()])
    }
}

fn check_start(surface: &GraphSurface, v: &TangentVector) -> Result<()> {
    surface.check(&v.x)?;
    if v.y.len() != surface.dim() {
        return Err(GeoError::DimensionMismatch {
            expected: surface.dim(),
            got: v.y.len(),
        });
    }
    if !v.is_finite() {
        return Err(GeoError::Config("non-finite tangent vector".into()));
    }
    Ok(())
}

fn to_trajectory(surface: &GraphSurface, sol: ode::OdeSolution, sign: f64) -> Result<Trajectory> {
    let states: Vec<PhaseState> = sol
        .states
        .iter()
        .map(|s| TangentVector::from_slice(s).scaled(sign))
        .collect();
    let speeds = states
        .iter()
        .map(|s| surface.speed(&s.x, &s.velocity()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times: sol.times.iter().map(|t| sign * t).collect(),
        speed: speeds[0],
        speeds,
        states,
        exit_reason: sol.exit,
    })
}

fn solve_signed(
    surface: &GraphSurface,
    v: &TangentVector,
    t_end: f64,
    opts: &FlowOptions,
    samples: Option<&[f64]>,
) -> Result<Trajectory> {
    check_start(surface, v)?;
    if !t_end.is_finite() {
        return Err(GeoError::Config("non-finite integration time".into()));
    }
    // backward flow: φ(−t, (x, y)) = reverse(φ(t, (x, −y)))
    let sign = if t_end < 0.0 { -1.0 } else { 1.0 };
    let start = if sign < 0.0 { v.reversed() } else { v.clone() };
    let sys = GeodesicSystem { surface };
    let abs_samples: Option<Vec<f64>> = samples.map(|s| s.iter().map(|t| t * sign).collect());
    let sol = ode::solve(&sys, &start.to_vec(), t_end.abs(), &opts.stepper, abs_samples.as_deref())?;
    to_trajectory(surface, sol, sign)
}

/// Integrate the geodesic with `γ′(0) = v` up to `t_end` or chart exit,
/// recording every accepted step. Negative `t_end` integrates backwards.
pub fn integrate_geodesic(
    surface: &GraphSurface,
    v: &TangentVector,
    t_end: f64,
    opts: &FlowOptions,
) -> Result<Trajectory> {
    solve_signed(surface, v, t_end, opts, None)
}

/// Like [`integrate_geodesic`] but records only the initial state and the
/// states at `times` (all of the same sign as `t_end`, which is recorded last).
pub fn integrate_geodesic_at(
    surface: &GraphSurface,
    v: &TangentVector,
    times: &[f64],
    t_end: f64,
    opts: &FlowOptions,
) -> Result<Trajectory> {
    solve_signed(surface, v, t_end, opts, Some(times))
}

fn endpoint(traj: &Trajectory, t: f64) -> Result<TangentVector> {
    match traj.exit_reason {
        ExitReason::Completed => Ok(traj.last().clone()),
        ExitReason::LeftChart => Err(GeoError::OutOfDomain {
            t,
            exit_time: traj.end_time(),
        }),
        ExitReason::StepFailure => Err(GeoError::StepFailure {
            t: traj.end_time(),
            step: 0.0,
        }),
    }
}

/// `φ(t, v) = γ_v′(t)`.
pub fn geodesic_flow(surface: &GraphSurface, t: f64, v: &TangentVector, opts: &FlowOptions) -> Result<TangentVector> {
    if t == 0.0 {
        check_start(surface, v)?;
        return Ok(v.clone());
    }
    let traj = solve_signed(surface, v, t, opts, Some(&[]))?;
    endpoint(&traj, t)
}

/// `φ(t, v)` at each of the given times (all of one sign), in the order given.
pub fn geodesic_flow_at(
    surface: &GraphSurface,
    times: &[f64],
    v: &TangentVector,
    opts: &FlowOptions,
) -> Result<Vec<TangentVector>> {
    let t_max = times.iter().copied().fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a });
    if t_max == 0.0 {
        check_start(surface, v)?;
        return Ok(vec![v.clone(); times.len()]);
    }
    let traj = solve_signed(surface, v, t_max, opts, Some(times))?;
    endpoint(&traj, t_max)?;
    times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(v.clone());
            }
            traj.times
                .iter()
                .position(|&s| s == t)
                .map(|i| traj.states[i].clone())
                .ok_or(GeoError::Config(format!("sample time {t} not of the same sign as the horizon")))
        })
        .collect()
}

/// `exp(v) = π(φ(1, v))`.
pub fn exp_map(surface: &GraphSurface, v: &TangentVector, opts: &FlowOptions) -> Result<Vec<f64>> {
    Ok(geodesic_flow(surface, 1.0, v, opts)?.x)
}

/// `|φ(s + t, v) − φ(s, φ(t, v))|` in `ℝ²ᵐ`.
pub fn flow_property_residual(
    surface: &GraphSurface,
    s: f64,
    t: f64,
    v: &TangentVector,
    opts: &FlowOptions,
) -> Result<f64> {
    let direct = geodesic_flow(surface, s + t, v, opts)?;
    let mid = geodesic_flow(surface, t, v, opts)?;
    let composed = geodesic_flow(surface, s, &mid, opts)?;
    Ok(direct.distance(&composed))
}
