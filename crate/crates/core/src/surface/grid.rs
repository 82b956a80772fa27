//! Grid-backed height fields.
//!
//! Nodal jets (value, gradient, Hessian) live on a regular tensor grid and are
//! interpolated per component with tensor-product Catmull–Rom cubics. Outside
//! the interior cells, ghost nodes are linearly extrapolated so that affine
//! data is reproduced exactly everywhere on the grid.

use nalgebra::{DMatrix, DVector};

use super::field::{HeightField, Jet2};
use crate::error::{GeoError, Result};

/// Regular tensor grid; axis 0 varies fastest in the linear node index.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
}

impl TensorGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != counts.len() || lo.is_empty() {
            return Err(GeoError::Config("grid bounds and counts disagree in length".into()));
        }
        if counts.iter().any(|&n| n < 4) {
            return Err(GeoError::Config("grids need at least 4 nodes per axis".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(h > l)) {
            return Err(GeoError::Config("grid box has empty extent".into()));
        }
        Ok(TensorGrid { lo, hi, counts })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn step(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.counts[axis] - 1) as f64
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.dim());
        let mut acc = 1;
        for &n in &self.counts {
            s.push(acc);
            acc *= n;
        }
        s
    }

    pub fn unravel(&self, mut lin: usize) -> Vec<usize> {
        self.counts
            .iter()
            .map(|&n| {
                let i = lin % n;
                lin /= n;
                i
            })
            .collect()
    }

    pub fn node(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(a, &i)| self.lo[a] + self.step(a) * i as f64)
            .collect()
    }

    /// Catmull–Rom stencil along one axis: up to four `(node index, weight)` pairs.
    fn axis_stencil(&self, axis: usize, x: f64) -> [(usize, f64); 4] {
        let n = self.counts[axis];
        let h = self.step(axis);
        let s = ((x - self.lo[axis]) / h).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        let t2 = t * t;
        let t3 = t2 * t;
        let mut w = [
            0.5 * (-t3 + 2.0 * t2 - t),
            0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2),
        ];
        let mut idx = [i.wrapping_sub(1), i, i + 1, i + 2];
        if i == 0 {
            w[1] += 2.0 * w[0];
            w[2] -= w[0];
            w[0] = 0.0;
            idx[0] = i;
        }
        if i + 2 > n - 1 {
            w[2] += 2.0 * w[3];
            w[1] -= w[3];
            w[3] = 0.0;
            idx[3] = i + 1;
        }
        [(idx[0], w[0]), (idx[1], w[1]), (idx[2], w[2]), (idx[3], w[3])]
    }
}

/// Height field given by nodal jets on a tensor grid.
#[derive(Debug, Clone)]
pub struct GridField {
    grid: TensorGrid,
    codim: usize,
    nf: usize,
    /// Node-major: `data[node * nf + field]`, fields ordered value, grad, hess.
    data: Vec<f64>,
}

pub(crate) fn field_count(m: usize, c: usize) -> usize {
    c + m * c + m * m * c
}

impl GridField {
    /// Wrap precomputed nodal jets. Field order per node: `value[a]`,
    /// `grad[i + m·a]`, `hess[i + m·j + m²·a]`.
    pub fn from_nodal(grid: TensorGrid, codim: usize, data: Vec<f64>) -> Result<Self> {
        let nf = field_count(grid.dim(), codim);
        if data.len() != grid.len() * nf {
            return Err(GeoError::DimensionMismatch {
                expected: grid.len() * nf,
                got: data.len(),
            });
        }
        Ok(GridField { grid, codim, nf, data })
    }

    /// Build from height samples (`samples[node * c + a]`) with fourth-order
    /// central differences. The usable grid loses two nodes on every side.
    pub fn from_samples(grid: TensorGrid, codim: usize, samples: &[f64]) -> Result<Self> {
        let m = grid.dim();
        if samples.len() != grid.len() * codim {
            return Err(GeoError::DimensionMismatch {
                expected: grid.len() * codim,
                got: samples.len(),
            });
        }
        if grid.counts.iter().any(|&n| n < 8) {
            return Err(GeoError::DomainTooSmall(
                "sampled grids need at least 8 nodes per axis for fourth-order stencils".into(),
            ));
        }
        let strides = grid.strides();
        let steps: Vec<f64> = (0..m).map(|a| grid.step(a)).collect();
        let inner_counts: Vec<usize> = grid.counts.iter().map(|n| n - 4).collect();
        let inner = TensorGrid::new(
            (0..m).map(|a| grid.lo[a] + 2.0 * steps[a]).collect(),
            (0..m).map(|a| grid.hi[a] - 2.0 * steps[a]).collect(),
            inner_counts,
        )?;
        let nf = field_count(m, codim);
        let d1 = [(-2isize, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
        let d2 = [
            (-2isize, -1.0 / 12.0),
            (-1, 16.0 / 12.0),
            (0, -30.0 / 12.0),
            (1, 16.0 / 12.0),
            (2, -1.0 / 12.0),
        ];
        let mut data = vec![0.0; inner.len() * nf];
        for lin in 0..inner.len() {
            let idx = inner.unravel(lin);
            let base: usize = idx.iter().zip(&strides).map(|(i, s)| (i + 2) * s).sum();
            let at = |offset: isize, a: usize| samples[(base as isize + offset) as usize * codim + a];
            let out = &mut data[lin * nf..(lin + 1) * nf];
            for a in 0..codim {
                out[a] = at(0, a);
                for i in 0..m {
                    let si = strides[i] as isize;
                    let g: f64 = d1.iter().map(|&(k, w)| w * at(k * si, a)).sum();
                    out[codim + i + m * a] = g / steps[i];
                    for j in 0..m {
                        let sj = strides[j] as isize;
                        let v = if i == j {
                            d2.iter().map(|&(k, w)| w * at(k * si, a)).sum::<f64>() / (steps[i] * steps[i])
                        } else {
                            let mut acc = 0.0;
                            for &(ki, wi) in &d1 {
                                for &(kj, wj) in &d1 {
                                    acc += wi * wj * at(ki * si + kj * sj, a);
                                }
                            }
                            acc / (steps[i] * steps[j])
                        };
                        out[codim + m * codim + i + m * j + m * m * a] = v;
                    }
                }
            }
        }
        GridField::from_nodal(inner, codim, data)
    }

    /// Same field with `shift[a]` added to the value of every component `a`.
    pub fn shifted(mut self, shift: &[f64]) -> Self {
        for node in self.data.chunks_mut(self.nf) {
            for (v, s) in node.iter_mut().zip(shift) {
                *v += s;
            }
        }
        self
    }

    pub fn grid(&self) -> &TensorGrid {
        &self.grid
    }

    pub fn nodal(&self) -> &[f64] {
        &self.data
    }

    fn interpolate(&self, x: &[f64], out: &mut [f64]) {
        let m = self.grid.dim();
        let strides = self.grid.strides();
        let stencils: Vec<[(usize, f64); 4]> =
            (0..m).map(|a| self.grid.axis_stencil(a, x[a])).collect();
        out.iter_mut().for_each(|v| *v = 0.0);
        let combos = 4usize.pow(m as u32);
        for combo in 0..combos {
            let mut rem = combo;
            let mut weight = 1.0;
            let mut node = 0;
            for a in 0..m {
                let (i, w) = stencils[a][rem % 4];
                rem /= 4;
                weight *= w;
                node += i * strides[a];
            }
            if weight == 0.0 {
                continue;
            }
            let src = &self.data[node * self.nf..(node + 1) * self.nf];
            for (o, s) in out.iter_mut().zip(src) {
                *o += weight * s;
            }
        }
    }
}

impl HeightField for GridField {
    fn dim(&self) -> usize {
        self.grid.dim()
    }
    fn codim(&self) -> usize {
        self.codim
    }
    fn value(&self, x: &[f64]) -> DVector<f64> {
        self.jet(x).value
    }
    fn jet(&self, x: &[f64]) -> Jet2 {
        let m = self.grid.dim();
        let c = self.codim;
        let mut buf = vec![0.0; self.nf];
        self.interpolate(x, &mut buf);
        let value = DVector::from_column_slice(&buf[..c]);
        let grad = DMatrix::from_fn(m, c, |i, a| buf[c + i + m * a]);
        let hess = (0..c)
            .map(|a| {
                let h = DMatrix::from_fn(m, m, |i, j| buf[c + m * c + i + m * j + m * m * a]);
                // interpolation of independently stored entries keeps symmetry up to rounding
                (&h + h.transpose()) * 0.5
            })
            .collect();
        Jet2 { value, grad, hess }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(grid: &TensorGrid, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..grid.len()).map(|l| f(&grid.node(&grid.unravel(l)))).collect()
    }

    #[test]
    fn affine_data_is_reproduced_everywhere() {
        let grid = TensorGrid::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![9, 9]).unwrap();
        let s = sample(&grid, |p| 0.3 + 2.0 * p[0] - 0.7 * p[1]);
        let f = GridField::from_samples(grid, 1, &s).unwrap();
        for x in [[0.0, 0.0], [0.49, -0.5], [-0.5, 0.5], [0.123, 0.377]] {
            let j = f.jet(&x);
            assert!((j.value[0] - (0.3 + 2.0 * x[0] - 0.7 * x[1])).abs() < 1e-12);
            assert!((j.grad[(0, 0)] - 2.0).abs() < 1e-12);
            assert!((j.grad[(1, 0)] + 0.7).abs() < 1e-12);
            assert!(j.hess[0].abs().max() < 1e-10);
        }
    }

    #[test]
    fn fourth_order_derivatives_of_smooth_samples() {
        let n = 81;
        let grid = TensorGrid::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![n, n]).unwrap();
        let f = |p: &[f64]| (p[0] * 1.3).sin() * (0.7 * p[1]).cos();
        let s = sample(&grid, f);
        let field = GridField::from_samples(grid, 1, &s).unwrap();
        let x = [0.3, -0.2];
        let j = field.jet(&x);
        let exact_dx = 1.3 * (1.3 * x[0]).cos() * (0.7 * x[1]).cos();
        let exact_dxy = -1.3 * 0.7 * (1.3 * x[0]).cos() * (0.7 * x[1]).sin();
        assert!((j.value[0] - f(&x)).abs() < 1e-6);
        assert!((j.grad[(0, 0)] - exact_dx).abs() < 1e-5);
        assert!((j.hess[0][(0, 1)] - exact_dxy).abs() < 1e-4);
        assert_eq!(j.hess[0][(0, 1)], j.hess[0][(1, 0)]);
    }

    #[test]
    fn rejects_mismatched_sample_count() {
        let grid = TensorGrid::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![8, 8]).unwrap();
        assert!(GridField::from_samples(grid, 1, &[0.0; 10]).is_err());
    }
}
