use serde::{Deserialize, Serialize};

/// Chart domain `U ⊂ ℝᵐ` over which a graph surface is defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartDomain {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl ChartDomain {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        ChartDomain::Box {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
        }
    }

    pub fn from_bounds(bounds: &[[f64; 2]]) -> Self {
        ChartDomain::Box {
            lo: bounds.iter().map(|b| b[0]).collect(),
            hi: bounds.iter().map(|b| b[1]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ChartDomain::Box { lo, .. } => lo.len(),
            ChartDomain::Ball { center, .. } => center.len(),
        }
    }

    /// Closed-set membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            ChartDomain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&v, (&l, &h))| v >= l && v <= h),
            ChartDomain::Ball { center, radius } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                r2 <= radius * radius
            }
        }
    }

    /// Distance from `x` to the complement of the domain (0 outside).
    pub fn depth(&self, x: &[f64]) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        match self {
            ChartDomain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&v, (&l, &h))| (v - l).min(h - v))
                .fold(f64::INFINITY, f64::min),
            ChartDomain::Ball { center, radius } => {
                let r: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt();
                radius - r
            }
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            ChartDomain::Box { lo, hi } => (lo.clone(), hi.clone()),
            ChartDomain::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }

    /// Smallest side length (box) or diameter (ball).
    pub fn width(&self) -> f64 {
        match self {
            ChartDomain::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| h - l)
                .fold(f64::INFINITY, f64::min),
            ChartDomain::Ball { radius, .. } => 2.0 * radius,
        }
    }

    pub fn inradius(&self) -> f64 {
        0.5 * self.width()
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            ChartDomain::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
            ChartDomain::Ball { center, .. } => center.clone(),
        }
    }

    /// Chart origin when it lies in the domain, otherwise the center.
    pub fn anchor(&self) -> Vec<f64> {
        let origin = vec![0.0; self.dim()];
        if self.contains(&origin) {
            origin
        } else {
            self.center()
        }
    }

    /// Domain with every boundary moved inward by `margin`; `None` if nothing is left.
    pub fn shrink(&self, margin: f64) -> Option<ChartDomain> {
        match self {
            ChartDomain::Box { lo, hi } => {
                let lo2: Vec<f64> = lo.iter().map(|l| l + margin).collect();
                let hi2: Vec<f64> = hi.iter().map(|h| h - margin).collect();
                if lo2.iter().zip(&hi2).all(|(l, h)| l < h) {
                    Some(ChartDomain::Box { lo: lo2, hi: hi2 })
                } else {
                    None
                }
            }
            ChartDomain::Ball { center, radius } => (radius - margin > 0.0).then(|| ChartDomain::Ball {
                center: center.clone(),
                radius: radius - margin,
            }),
        }
    }

    /// Regular samples of the bounding box (`per_axis` per axis) that fall inside the domain.
    pub fn sample_grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let (lo, hi) = self.bounding_box();
        let m = lo.len();
        let n = per_axis.max(2);
        let total = n.pow(m as u32);
        let mut pts = Vec::with_capacity(total);
        for lin in 0..total {
            let mut rem = lin;
            let mut p = vec![0.0; m];
            for a in 0..m {
                let i = rem % n;
                rem /= n;
                p[a] = lo[a] + (hi[a] - lo[a]) * i as f64 / (n - 1) as f64;
            }
            if self.contains(&p) {
                pts.push(p);
            }
        }
        pts
    }

    /// Map a point of the unit cube `[0,1]ᵐ` into the domain shrunk by `margin`.
    /// For a ball the cube is mapped onto the inscribed square/cube, so the result always lies inside.
    pub fn map_unit(&self, u: &[f64], margin: f64) -> Vec<f64> {
        match self {
            ChartDomain::Box { lo, hi } => u
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&s, (&l, &h))| (l + margin) + s * ((h - l) - 2.0 * margin).max(0.0))
                .collect(),
            ChartDomain::Ball { center, radius } => {
                let half = ((radius - margin).max(0.0)) / (center.len() as f64).sqrt();
                u.iter()
                    .zip(center)
                    .map(|(&s, &c)| c + (2.0 * s - 1.0) * half)
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_membership_and_depth() {
        let d = ChartDomain::cube(2, 1.0);
        assert!(d.contains(&[1.0, -1.0]));
        assert!(!d.contains(&[1.0 + 1e-12, 0.0]));
        assert!((d.depth(&[0.5, 0.0]) - 0.5).abs() < 1e-15);
        assert_eq!(d.depth(&[2.0, 0.0]), 0.0);
        assert!(!d.contains(&[f64::NAN, 0.0]));
    }

    #[test]
    fn ball_membership_and_shrink() {
        let d = ChartDomain::Ball { center: vec![0.0, 0.0], radius: 0.8 };
        assert!(d.contains(&[0.8, 0.0]));
        assert!(!d.contains(&[0.6, 0.6]));
        let s = d.shrink(0.3).unwrap();
        assert!(!s.contains(&[0.6, 0.0]));
        assert!(d.shrink(1.0).is_none());
    }

    #[test]
    fn sample_grid_stays_inside() {
        let d = ChartDomain::Ball { center: vec![0.0, 0.0], radius: 0.8 };
        let pts = d.sample_grid(16);
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|p| d.contains(p)));
        assert_eq!(ChartDomain::cube(2, 1.0).sample_grid(8).len(), 64);
    }

    #[test]
    fn map_unit_lands_inside() {
        let d = ChartDomain::Ball { center: vec![0.0, 0.0], radius: 0.8 };
        for u in [[0.0, 0.0], [1.0, 1.0], [0.3, 0.9]] {
            assert!(d.map_unit(&u, 0.1).iter().all(|v| v.is_finite()));
            assert!(d.contains(&d.map_unit(&u, 0.1)));
        }
    }
}
