//! Closed-form height functions with hand-coded derivatives.

use nalgebra::{DMatrix, DVector};

use super::field::{HeightField, Jet2, ThirdPartials};

/// `h ≡ 0`.
#[derive(Debug, Clone)]
pub struct Flat {
    pub dim: usize,
    pub codim: usize,
}

impl HeightField for Flat {
    fn dim(&self) -> usize {
        self.dim
    }
    fn codim(&self) -> usize {
        self.codim
    }
    fn value(&self, _x: &[f64]) -> DVector<f64> {
        DVector::zeros(self.codim)
    }
    fn jet(&self, _x: &[f64]) -> Jet2 {
        Jet2::zeros(self.dim, self.codim)
    }
    fn third(&self, _x: &[f64]) -> Option<ThirdPartials> {
        Some(ThirdPartials(vec![
            vec![DMatrix::zeros(self.dim, self.dim); self.dim];
            self.codim
        ]))
    }
}

/// Upper unit hemisphere `h(x) = √(1 − |x|²)`.
#[derive(Debug, Clone)]
pub struct Hemisphere {
    pub dim: usize,
}

impl Hemisphere {
    fn height(x: &[f64]) -> f64 {
        (1.0 - x.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }
}

impl HeightField for Hemisphere {
    fn dim(&self) -> usize {
        self.dim
    }
    fn codim(&self) -> usize {
        1
    }
    fn value(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_element(1, Self::height(x))
    }
    fn jet(&self, x: &[f64]) -> Jet2 {
        let m = self.dim;
        let h = Self::height(x);
        let h3 = h * h * h;
        let grad = DMatrix::from_fn(m, 1, |i, _| -x[i] / h);
        let hess = DMatrix::from_fn(m, m, |i, j| {
            let d = if i == j { 1.0 } else { 0.0 };
            -d / h - x[i] * x[j] / h3
        });
        Jet2 {
            value: DVector::from_element(1, h),
            grad,
            hess: vec![hess],
        }
    }
    fn third(&self, x: &[f64]) -> Option<ThirdPartials> {
        let m = self.dim;
        let h = Self::height(x);
        let h3 = h * h * h;
        let h5 = h3 * h * h;
        let kd = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let slices = (0..m)
            .map(|p| {
                DMatrix::from_fn(m, m, |i, j| {
                    -kd(i, j) * x[p] / h3
                        - (kd(i, p) * x[j] + kd(j, p) * x[i]) / h3
                        - 3.0 * x[i] * x[j] * x[p] / h5
                })
            })
            .collect();
        Some(ThirdPartials(vec![slices]))
    }
}

/// Cylinder over a catenary profile: `h(x) = cosh(x₁) − 1`. Intrinsically flat.
#[derive(Debug, Clone)]
pub struct Trough {
    pub dim: usize,
}

impl HeightField for Trough {
    fn dim(&self) -> usize {
        self.dim
    }
    fn codim(&self) -> usize {
        1
    }
    fn value(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_element(1, x[0].cosh() - 1.0)
    }
    fn jet(&self, x: &[f64]) -> Jet2 {
        let m = self.dim;
        let mut grad = DMatrix::zeros(m, 1);
        grad[(0, 0)] = x[0].sinh();
        let mut hess = DMatrix::zeros(m, m);
        hess[(0, 0)] = x[0].cosh();
        Jet2 {
            value: DVector::from_element(1, x[0].cosh() - 1.0),
            grad,
            hess: vec![hess],
        }
    }
    fn third(&self, x: &[f64]) -> Option<ThirdPartials> {
        let m = self.dim;
        let mut slices = vec![DMatrix::zeros(m, m); m];
        slices[0][(0, 0)] = x[0].sinh();
        Some(ThirdPartials(vec![slices]))
    }
}

/// Crease profiles in the first coordinate: `|x₁|ᵖ` or, when `odd`, `sign(x₁)·|x₁|ᵖ`.
///
/// `p = 3` gives a C^{2,1} graph, `p = 2 + α` a C^{2,α} graph and the odd
/// `p = 2` profile `x₁|x₁|` a C^{1,1} graph whose Hessian jumps across `x₁ = 0`.
#[derive(Debug, Clone)]
pub struct PowerCrease {
    pub dim: usize,
    pub power: f64,
    pub odd: bool,
}

impl PowerCrease {
    /// (h, h', h'') of the one-dimensional profile.
    fn profile(&self, t: f64) -> (f64, f64, f64) {
        let p = self.power;
        let a = t.abs();
        let s = if t > 0.0 {
            1.0
        } else if t < 0.0 {
            -1.0
        } else {
            0.0
        };
        let v = a.powf(p);
        let d1 = p * a.powf(p - 1.0);
        let d2 = p * (p - 1.0) * a.powf(p - 2.0);
        if self.odd {
            (s * v, d1, s * d2)
        } else {
            (v, s * d1, d2)
        }
    }
}

impl HeightField for PowerCrease {
    fn dim(&self) -> usize {
        self.dim
    }
    fn codim(&self) -> usize {
        1
    }
    fn value(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_element(1, self.profile(x[0]).0)
    }
    fn jet(&self, x: &[f64]) -> Jet2 {
        let m = self.dim;
        let (v, d1, d2) = self.profile(x[0]);
        let mut grad = DMatrix::zeros(m, 1);
        grad[(0, 0)] = d1;
        let mut hess = DMatrix::zeros(m, m);
        hess[(0, 0)] = d2;
        Jet2 {
            value: DVector::from_element(1, v),
            grad,
            hess: vec![hess],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(field: &dyn HeightField, x: &[f64], tol: f64) {
        let m = field.dim();
        let step = 1e-5;
        let jet = field.jet(x);
        for i in 0..m {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += step;
            xm[i] -= step;
            let d = (field.value(&xp)[0] - field.value(&xm)[0]) / (2.0 * step);
            assert!((d - jet.grad[(i, 0)]).abs() < tol, "grad {i}: {d} vs {}", jet.grad[(i, 0)]);
            let gp = field.jet(&xp).grad;
            let gm = field.jet(&xm).grad;
            for j in 0..m {
                let dd = (gp[(j, 0)] - gm[(j, 0)]) / (2.0 * step);
                assert!((dd - jet.hess[0][(i, j)]).abs() < tol, "hess {i}{j}");
            }
            if let Some(t) = field.third(x) {
                let hp = &field.jet(&xp).hess[0];
                let hm = &field.jet(&xm).hess[0];
                for j in 0..m {
                    for k in 0..m {
                        let ddd = (hp[(j, k)] - hm[(j, k)]) / (2.0 * step);
                        assert!((ddd - t.get(0, i, j, k)).abs() < tol, "third {i}{j}{k}");
                    }
                }
            }
        }
    }

    #[test]
    fn hemisphere_derivatives_match_differences() {
        let f = Hemisphere { dim: 2 };
        fd_check(&f, &[0.3, -0.2], 1e-8);
        fd_check(&f, &[0.5, 0.4], 1e-7);
    }

    #[test]
    fn trough_and_creases_match_differences() {
        fd_check(&Trough { dim: 2 }, &[0.4, 0.1], 1e-8);
        let c21 = PowerCrease { dim: 2, power: 3.0, odd: false };
        fd_check(&c21, &[-0.3, 0.2], 1e-8);
        let vee = PowerCrease { dim: 2, power: 2.0, odd: true };
        fd_check(&vee, &[0.25, 0.0], 1e-8);
        fd_check(&vee, &[-0.25, 0.0], 1e-8);
        let c2a = PowerCrease { dim: 2, power: 2.5, odd: false };
        fd_check(&c2a, &[0.2, 0.0], 1e-7);
    }

    #[test]
    fn vee_hessian_is_bounded_jump() {
        let vee = PowerCrease { dim: 2, power: 2.0, odd: true };
        assert_eq!(vee.jet(&[0.1, 0.0]).hess[0][(0, 0)], 2.0);
        assert_eq!(vee.jet(&[-0.1, 0.0]).hess[0][(0, 0)], -2.0);
        assert_eq!(vee.jet(&[0.0, 0.0]).hess[0][(0, 0)], 0.0);
    }

    #[test]
    fn hemisphere_hessian_at_pole_is_minus_identity() {
        let j = Hemisphere { dim: 2 }.jet(&[0.0, 0.0]);
        assert_eq!(j.hess[0], -DMatrix::<f64>::identity(2, 2));
        assert_eq!(j.value[0], 1.0);
    }
}
