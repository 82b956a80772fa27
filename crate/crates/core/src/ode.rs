//! Explicit Runge–Kutta integrators for autonomous systems confined to a chart.
//!
//! The adaptive method is the Dormand–Prince 5(4) pair with PI step control;
//! classical RK4 with a fixed step is available for convergence studies, where
//! a step sequence independent of the initial data is required. Both stop at
//! the boundary of the admissible set: when a trial step leaves it, the step
//! length is bisected until the crossing time is pinned down and the last
//! admissible state is reported.

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};

/// First-order autonomous system `y′ = f(y)` on an admissible set.
pub trait OdeSystem: Sync {
    fn dim(&self) -> usize;
    /// Evaluate `f(y)`; `OutOfChart` signals a state outside the admissible set.
    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()>;
    fn admissible(&self, y: &[f64]) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
    pub safety: f64,
    pub fac_min: f64,
    pub fac_max: f64,
    pub beta: f64,
}

impl AdaptiveOptions {
    pub fn new(rtol: f64, atol: f64) -> Self {
        AdaptiveOptions {
            rtol,
            atol,
            ..Default::default()
        }
    }

    pub fn with_max_step(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: f64::INFINITY,
            h_min: 1e-14,
            max_steps: 2_000_000,
            safety: 0.9,
            fac_min: 0.2,
            fac_max: 10.0,
            beta: 0.04,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stepper {
    Adaptive(AdaptiveOptions),
    Rk4 { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExitReason {
    Completed,
    LeftChart,
    StepFailure,
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub exit: ExitReason,
    pub accepted: usize,
    pub rejected: usize,
}

impl OdeSolution {
    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("solutions always hold the initial state")
    }
    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("solutions always hold the initial state")
    }
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

enum Attempt {
    Inside { y: Vec<f64>, err: f64, f_end: Vec<f64> },
    Outside,
}

fn eval(sys: &dyn OdeSystem, y: &[f64], dy: &mut [f64]) -> Result<bool> {
    if !sys.admissible(y) {
        return Ok(false);
    }
    match sys.rhs(y, dy) {
        Ok(()) => Ok(true),
        Err(GeoError::OutOfChart { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], opts: &AdaptiveOptions) -> f64 {
    let n = err.len().max(1) as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
            (e / sc) * (e / sc)
        })
        .sum();
    (s / n).sqrt()
}

fn dopri_step(sys: &dyn OdeSystem, y: &[f64], f0: &[f64], h: f64, opts: &AdaptiveOptions) -> Result<Attempt> {
    let n = y.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    k.push(f0.to_vec());
    let mut ys = vec![0.0; n];
    for s in 1..7 {
        for i in 0..n {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate() {
                acc += A[s][j] * kj[i];
            }
            ys[i] = y[i] + h * acc;
        }
        let mut ks = vec![0.0; n];
        if !eval(sys, &ys, &mut ks)? {
            return Ok(Attempt::Outside);
        }
        k.push(ks);
    }
    // stage 7 sits at the 5th-order solution (FSAL)
    let y_new = ys;
    let err: Vec<f64> = (0..n)
        .map(|i| h * (0..7).map(|s| E[s] * k[s][i]).sum::<f64>())
        .collect();
    let e = error_norm(&err, y, &y_new, opts);
    let f_end = k.pop().expect("seven stages");
    Ok(Attempt::Inside { y: y_new, err: e, f_end })
}

fn rk4_step(sys: &dyn OdeSystem, y: &[f64], f0: &[f64], h: f64) -> Result<Attempt> {
    let n = y.len();
    let mut tmp = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * f0[i];
    }
    if !eval(sys, &tmp, &mut k2)? {
        return Ok(Attempt::Outside);
    }
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    if !eval(sys, &tmp, &mut k3)? {
        return Ok(Attempt::Outside);
    }
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    if !eval(sys, &tmp, &mut k4)? {
        return Ok(Attempt::Outside);
    }
    let y_new: Vec<f64> = (0..n)
        .map(|i| y[i] + h / 6.0 * (f0[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    let mut f_end = vec![0.0; n];
    if !eval(sys, &y_new, &mut f_end)? {
        return Ok(Attempt::Outside);
    }
    Ok(Attempt::Inside { y: y_new, err: 0.0, f_end })
}

fn initial_step(sys: &dyn OdeSystem, y0: &[f64], f0: &[f64], opts: &AdaptiveOptions) -> Result<f64> {
    let sc = |v: &[f64]| -> f64 {
        let n = v.len().max(1) as f64;
        (v.iter()
            .zip(y0)
            .map(|(a, y)| {
                let s = opts.atol + opts.rtol * y.abs();
                (a / s) * (a / s)
            })
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let d0 = sc(y0);
    let d1 = sc(f0);
    let h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(opts.h_max);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    if !eval(sys, &y1, &mut f1)? {
        return Ok(h0);
    }
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = sc(&diff) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(opts.h_max))
}

/// Integrate `y′ = f(y)` from `y0` over `[0, t_end]`.
///
/// With `sample_times`, steps are clamped to land on each listed time and
/// only those states (plus the initial one) are recorded; otherwise every
/// accepted step is recorded. Fails only when the initial state itself is
/// not admissible; later trouble is reported through `exit`.
pub fn solve(
    sys: &dyn OdeSystem,
    y0: &[f64],
    t_end: f64,
    stepper: &Stepper,
    sample_times: Option<&[f64]>,
) -> Result<OdeSolution> {
    if y0.len() != sys.dim() {
        return Err(GeoError::DimensionMismatch {
            expected: sys.dim(),
            got: y0.len(),
        });
    }
    let mut f = vec![0.0; y0.len()];
    if !eval(sys, y0, &mut f)? {
        return Err(GeoError::OutOfChart { point: y0.to_vec() });
    }
    let mut targets: Vec<f64> = sample_times
        .map(|s| s.iter().copied().filter(|&t| t > 0.0 && t < t_end).collect())
        .unwrap_or_default();
    targets.sort_by(|a, b| a.partial_cmp(b).expect("finite sample times"));
    targets.dedup();
    targets.push(t_end);
    let record_all = sample_times.is_none();

    let mut sol = OdeSolution {
        times: vec![0.0],
        states: vec![y0.to_vec()],
        exit: ExitReason::Completed,
        accepted: 0,
        rejected: 0,
    };
    if t_end <= 0.0 {
        return Ok(sol);
    }

    let (mut h, opts) = match stepper {
        Stepper::Adaptive(o) => (initial_step(sys, y0, &f, o)?, *o),
        Stepper::Rk4 { step } => {
            if !(*step > 0.0) {
                return Err(GeoError::Config("fixed step must be positive".into()));
            }
            (*step, AdaptiveOptions::default())
        }
    };
    let adaptive = matches!(stepper, Stepper::Adaptive(_));
    let attempt = |y: &[f64], f0: &[f64], hh: f64| -> Result<Attempt> {
        if adaptive {
            dopri_step(sys, y, f0, hh, &opts)
        } else {
            rk4_step(sys, y, f0, hh)
        }
    };

    let mut t = 0.0;
    let mut y = y0.to_vec();
    let mut target_idx = 0;
    let mut facold: f64 = 1e-4;
    let expo = 0.2 - 0.75 * opts.beta;
    let mut iterations = 0usize;

    while target_idx < targets.len() {
        iterations += 1;
        if iterations > opts.max_steps {
            sol.exit = ExitReason::StepFailure;
            break;
        }
        let target = targets[target_idx];
        let remaining = target - t;
        let hits_target = h >= remaining * (1.0 - 1e-12);
        let hh = if hits_target { remaining } else { h };
        if hh < opts.h_min.max(1e-15 * t.abs()) && !hits_target {
            sol.exit = ExitReason::StepFailure;
            break;
        }
        match attempt(&y, &f, hh)? {
            Attempt::Outside => {
                // the chart boundary lies within this step: pin down the crossing
                let time_tol = 1e-13 * t.abs().max(1.0);
                let (mut lo, mut hi) = (0.0, hh);
                let mut best: Option<(f64, Vec<f64>, f64, Vec<f64>)> = None;
                while hi - lo > time_tol {
                    let mid = 0.5 * (lo + hi);
                    match attempt(&y, &f, mid)? {
                        Attempt::Inside { y: ym, err, f_end } => {
                            lo = mid;
                            best = Some((mid, ym, err, f_end));
                        }
                        Attempt::Outside => hi = mid,
                    }
                }
                match best {
                    Some((step, ym, err, _)) if err <= 1.0 => {
                        t += step;
                        y = ym;
                        sol.accepted += 1;
                        sol.times.push(t);
                        sol.states.push(y.clone());
                        sol.exit = ExitReason::LeftChart;
                        break;
                    }
                    Some((step, ..)) => {
                        // admissible but too inaccurate: retry with a shorter step
                        sol.rejected += 1;
                        h = step * 0.5;
                    }
                    None => {
                        sol.exit = ExitReason::LeftChart;
                        if !record_all && sol.times.last() != Some(&t) {
                            sol.times.push(t);
                            sol.states.push(y.clone());
                        }
                        break;
                    }
                }
            }
            Attempt::Inside { y: y_new, err, f_end } => {
                if err <= 1.0 {
                    t = if hits_target { target } else { t + hh };
                    y = y_new;
                    f = f_end;
                    sol.accepted += 1;
                    if record_all || hits_target {
                        sol.times.push(t);
                        sol.states.push(y.clone());
                    }
                    if hits_target {
                        target_idx += 1;
                    }
                    if adaptive {
                        let fac11 = err.max(1e-300).powf(expo);
                        let fac = (fac11 / facold.powf(opts.beta) / opts.safety)
                            .clamp(1.0 / opts.fac_max, 1.0 / opts.fac_min);
                        let proposed = (hh / fac).min(opts.h_max);
                        // a clamped final step should not collapse the step size
                        h = if hits_target { proposed.max(h.min(opts.h_max)) } else { proposed };
                        facold = err.max(1e-4);
                    }
                } else {
                    sol.rejected += 1;
                    let fac11 = err.powf(expo);
                    h = hh / (fac11 / opts.safety).min(1.0 / opts.fac_min);
                }
            }
        }
    }
    if !record_all && sol.exit != ExitReason::Completed && sol.times.last() != Some(&t) {
        sol.times.push(t);
        sol.states.push(y);
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Harmonic oscillator restricted to `q ≤ q_max`.
    struct Oscillator {
        q_max: f64,
    }

    impl OdeSystem for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        }
        fn admissible(&self, y: &[f64]) -> bool {
            y[0] <= self.q_max
        }
    }

    #[test]
    fn adaptive_matches_closed_form() {
        let sys = Oscillator { q_max: 10.0 };
        let sol = solve(&sys, &[0.0, 1.0], 3.0, &Stepper::Adaptive(AdaptiveOptions::default()), None).unwrap();
        assert_eq!(sol.exit, ExitReason::Completed);
        assert_eq!(sol.last_time(), 3.0);
        assert!((sol.last_state()[0] - 3f64.sin()).abs() < 1e-9);
        assert!((sol.last_state()[1] - 3f64.cos()).abs() < 1e-9);
        assert!(sol.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let sys = Oscillator { q_max: 10.0 };
        let err = |h: f64| {
            let s = solve(&sys, &[0.0, 1.0], 1.0, &Stepper::Rk4 { step: h }, None).unwrap();
            (s.last_state()[0] - 1f64.sin()).abs()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn boundary_crossing_is_located() {
        let sys = Oscillator { q_max: 0.8 };
        for stepper in [Stepper::Adaptive(AdaptiveOptions::default()), Stepper::Rk4 { step: 0.01 }] {
            let sol = solve(&sys, &[0.0, 1.0], 3.0, &stepper, None).unwrap();
            assert_eq!(sol.exit, ExitReason::LeftChart);
            assert!((sol.last_time() - 0.8f64.asin()).abs() < 1e-8);
            assert!(sol.last_state()[0] <= 0.8 && sol.last_state()[0] > 0.8 - 1e-10);
        }
    }

    #[test]
    fn sample_times_are_hit_exactly() {
        let sys = Oscillator { q_max: 10.0 };
        let ts = [0.25, 0.5, 0.75];
        let sol = solve(&sys, &[0.0, 1.0], 1.0, &Stepper::Adaptive(AdaptiveOptions::default()), Some(&ts)).unwrap();
        assert_eq!(sol.times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        for (t, s) in sol.times.iter().zip(&sol.states) {
            assert!((s[0] - t.sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn inadmissible_start_is_an_error() {
        let sys = Oscillator { q_max: 0.0 };
        assert!(solve(&sys, &[1.0, 0.0], 1.0, &Stepper::Rk4 { step: 0.1 }, None).is_err());
    }
}
