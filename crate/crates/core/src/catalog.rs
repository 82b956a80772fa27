//! Named test surfaces with closed-form facts that serve as oracles.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{GeoError, Result};
use crate::surface::analytic::{Flat, Hemisphere, PowerCrease, Trough};
use crate::surface::{ChartDomain, GraphSurface, Regularity};

pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceCatalogEntry {
    pub name: &'static str,
    pub formula: &'static str,
    pub regularity: &'static str,
    pub parameters: &'static str,
    pub facts: &'static [&'static str],
}

pub const CATALOG: &[SurfaceCatalogEntry] = &[
    SurfaceCatalogEntry {
        name: "flat",
        formula: "h = 0",
        regularity: "smooth",
        parameters: "domain [-1,1]^2",
        facts: &["geodesics are straight lines", "curvature 0", "flow differential [[I, tI], [0, I]]"],
    },
    SurfaceCatalogEntry {
        name: "hemisphere",
        formula: "h = sqrt(1 - |x|^2)",
        regularity: "smooth",
        parameters: "domain |x| <= 0.8",
        facts: &[
            "geodesics are great circles; from the pole x(t) = sin(t) u",
            "sectional curvature 1",
            "normal Jacobi fields |J(t)| = sin t",
            "geodesics from the pole leave the chart at t = arcsin 0.8",
        ],
    },
    SurfaceCatalogEntry {
        name: "trough",
        formula: "h = cosh(x1) - 1",
        regularity: "smooth",
        parameters: "domain [-1,1]^2",
        facts: &["intrinsically flat: Gauss curvature 0"],
    },
    SurfaceCatalogEntry {
        name: "c21_cubic",
        formula: "h = |x1|^3",
        regularity: "C2alpha(1)",
        parameters: "domain [-0.5,0.5]^2",
        facts: &["second derivative 6|x1| is Lipschitz", "Gauss curvature 0"],
    },
    SurfaceCatalogEntry {
        name: "c2alpha",
        formula: "h = |x1|^(2+alpha)",
        regularity: "C2alpha(alpha)",
        parameters: "domain [-0.5,0.5]^2, alpha (default 0.5)",
        facts: &["second derivative is alpha-Hoelder at x1 = 0", "Gauss curvature 0"],
    },
    SurfaceCatalogEntry {
        name: "vee",
        formula: "h = x1|x1|",
        regularity: "C11",
        parameters: "domain [-0.5,0.5]^2",
        facts: &["second derivative jumps from -2 to 2 across x1 = 0", "sup |hess| = 2"],
    },
];

pub fn entry(name: &str) -> Option<&'static SurfaceCatalogEntry> {
    CATALOG.iter().find(|e| e.name == name)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    CATALOG.iter().map(|e| e.name)
}

/// Build a catalog surface with its default chart.
pub fn surface(name: &str) -> Result<GraphSurface> {
    build(name, None, None)
}

/// Build a catalog surface, optionally overriding the domain and (for `c2alpha`) the exponent.
pub fn build(name: &str, domain: Option<ChartDomain>, alpha: Option<f64>) -> Result<GraphSurface> {
    let crease_box = || ChartDomain::cube(2, 0.5);
    let (field, default_domain, regularity): (Arc<dyn crate::surface::HeightField>, ChartDomain, Regularity) =
        match name {
            "flat" => (Arc::new(Flat { dim: 2, codim: 1 }), ChartDomain::cube(2, 1.0), Regularity::Smooth),
            "hemisphere" => (
                Arc::new(Hemisphere { dim: 2 }),
                ChartDomain::Ball { center: vec![0.0, 0.0], radius: 0.8 },
                Regularity::Smooth,
            ),
            "trough" => (Arc::new(Trough { dim: 2 }), ChartDomain::cube(2, 1.0), Regularity::Smooth),
            "c21_cubic" => (
                Arc::new(PowerCrease { dim: 2, power: 3.0, odd: false }),
                crease_box(),
                Regularity::C2Alpha(1.0),
            ),
            "c2alpha" => {
                let a = alpha.unwrap_or(DEFAULT_ALPHA);
                if !(a > 0.0 && a < 1.0) {
                    return Err(GeoError::Config(format!("c2alpha needs alpha in (0, 1), got {a}")));
                }
                (
                    Arc::new(PowerCrease { dim: 2, power: 2.0 + a, odd: false }),
                    crease_box(),
                    Regularity::C2Alpha(a),
                )
            }
            "vee" => (
                Arc::new(PowerCrease { dim: 2, power: 2.0, odd: true }),
                crease_box(),
                Regularity::C11,
            ),
            other => return Err(GeoError::UnknownSurface(other.to_string())),
        };
    let domain = domain.unwrap_or(default_domain);
    if name == "hemisphere" {
        let far = match &domain {
            ChartDomain::Ball { center, radius } => center.iter().map(|c| c * c).sum::<f64>().sqrt() + radius,
            ChartDomain::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| l.abs().max(h.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
        };
        if far >= 1.0 {
            return Err(GeoError::Config("hemisphere chart must stay inside the open unit ball".into()));
        }
    }
    GraphSurface::new(name, field, domain, regularity)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_builds_and_passes_self_checks() {
        assert_eq!(CATALOG.len(), 6);
        for name in names() {
            let s = surface(name).unwrap();
            assert_eq!(s.name(), name);
            for p in s.domain().sample_grid(9) {
                let j = s.jet(&p).unwrap();
                for h in &j.hess {
                    assert_eq!(h[(0, 1)], h[(1, 0)]);
                    assert!(h.norm() <= s.bounds().hess + 1e-12);
                }
                let md = s.metric_at(&p).unwrap();
                assert!(md.g.symmetric_eigenvalues().min() >= 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn unknown_name_is_rejected() {
        assert_eq!(surface("nosuch").unwrap_err(), GeoError::UnknownSurface("nosuch".into()));
    }

    #[test]
    fn hemisphere_domain_override_is_validated() {
        assert!(build("hemisphere", Some(ChartDomain::cube(2, 0.8)), None).is_err());
        assert!(build("hemisphere", Some(ChartDomain::cube(2, 0.6)), None).is_ok());
    }
}
