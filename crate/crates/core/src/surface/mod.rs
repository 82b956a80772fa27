//! Graph submanifolds `M = {(x, h(x))} ⊂ ℝⁿ` and their local geometry.
//!
//! First-order geometry (metric, Christoffel symbols) uses `∂h` and `∂²h`.
//! Curvature is assembled from products of second fundamental form values,
//! which also only needs `∂²h`. The third-derivative route through
//! Christoffel derivatives exists solely as a cross-check.

pub mod analytic;
pub mod domain;
pub mod field;
pub mod grid;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use domain::ChartDomain;
pub use field::{HeightField, Jet2, ThirdPartials};
pub use grid::{GridField, TensorGrid};

use crate::error::{GeoError, Result};

/// Samples per axis used when estimating sup-norm bounds.
pub const BOUNDS_SAMPLES_PER_AXIS: usize = 64;
/// Multiplicative inflation applied to sampled sup-norms.
pub const BOUNDS_INFLATION: f64 = 1.1;

/// Regularity class of the height function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularity {
    C11,
    C2,
    C2Alpha(f64),
    C3,
    Smooth,
}

impl Regularity {
    /// Total order key: `k + α` with `Smooth` on top.
    pub fn order(&self) -> f64 {
        match self {
            Regularity::C11 => 1.0 + 1.0 - 1e-9,
            Regularity::C2 => 2.0,
            Regularity::C2Alpha(a) => 2.0 + a.clamp(0.0, 1.0) * 0.999,
            Regularity::C3 => 3.0,
            Regularity::Smooth => f64::INFINITY,
        }
    }

    pub fn at_least_c2(&self) -> bool {
        self.order() >= 2.0
    }

    pub fn at_least_c3(&self) -> bool {
        self.order() >= 3.0
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Regularity::C11 => "C11",
            Regularity::C2 => "C2",
            Regularity::C2Alpha(_) => "C2alpha",
            Regularity::C3 => "C3",
            Regularity::Smooth => "smooth",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Regularity::C2Alpha(a) => Some(*a),
            _ => None,
        }
    }

    pub fn parse(tag: &str, alpha: Option<f64>) -> Result<Self> {
        match tag {
            "C11" => Ok(Regularity::C11),
            "C2" => Ok(Regularity::C2),
            "C2alpha" => alpha
                .filter(|a| *a > 0.0 && *a <= 1.0)
                .map(Regularity::C2Alpha)
                .ok_or_else(|| GeoError::Config("C2alpha needs alpha in (0, 1]".into())),
            "C3" => Ok(Regularity::C3),
            "smooth" | "Smooth" => Ok(Regularity::Smooth),
            other => Err(GeoError::Config(format!("unknown regularity tag '{other}'"))),
        }
    }
}

impl fmt::Display for Regularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regularity::C2Alpha(a) => write!(f, "C2alpha({a})"),
            other => f.write_str(other.tag()),
        }
    }
}

/// Sampled sup-norms of `∂h` and `∂²h` over the domain.
///
/// `grad_sup`/`hess_sup` are the raw sampled maxima of the Frobenius norms;
/// `grad`/`hess` carry the safety inflation and are what estimators use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceBounds {
    pub grad_sup: f64,
    pub hess_sup: f64,
    pub grad: f64,
    pub hess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricData {
    pub point: DVector<f64>,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
}

/// `gamma[k][(i, j)] = Γᵏᵢⱼ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelSymbols {
    pub gamma: Vec<DMatrix<f64>>,
}

impl ChristoffelSymbols {
    /// `Γ(u, v)ᵏ = Σ Γᵏᵢⱼ uⁱ vʲ`.
    pub fn contract(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.gamma.len(), self.gamma.iter().map(|gk| u.dot(&(gk * v))))
    }

    /// The matrix of `w ↦ Γ(u, w)`.
    pub fn partial(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let m = self.gamma.len();
        let mut out = DMatrix::zeros(m, m);
        for (k, gk) in self.gamma.iter().enumerate() {
            let row = u.transpose() * gk;
            out.row_mut(k).copy_from(&row);
        }
        out
    }
}

/// Ambient vector in the normal space at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondFundamentalFormValue(pub DVector<f64>);

/// The linear map `J ↦ J″ = −R(J, V)V` on chart vectors, for a fixed velocity `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureOperator(pub DMatrix<f64>);

impl CurvatureOperator {
    pub fn apply(&self, j: &DVector<f64>) -> DVector<f64> {
        &self.0 * j
    }
}

/// Everything the flow and Jacobi right-hand sides need at one chart point.
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    pub x: DVector<f64>,
    pub jet: Jet2,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
}

impl LocalGeometry {
    fn new(x: &[f64], jet: Jet2) -> Result<Self> {
        let m = x.len();
        let gr = &jet.grad;
        let g = DMatrix::identity(m, m) + gr * gr.transpose();
        let g_inv = g
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| GeoError::OutOfChart { point: x.to_vec() })?;
        Ok(LocalGeometry {
            x: DVector::from_column_slice(x),
            jet,
            g,
            g_inv,
        })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn codim(&self) -> usize {
        self.jet.value.len()
    }

    /// `a(u, v)ₐ = uᵀ ∂²hᵃ v`, the codimension part of the ambient second derivative.
    fn hess_pair(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.codim(), self.jet.hess.iter().map(|h| u.dot(&(h * v))))
    }

    /// `Γ(u, v) = g⁻¹ ∂h · a(u, v)`.
    pub fn christoffel_contract(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        &self.g_inv * (&self.jet.grad * self.hess_pair(u, v))
    }

    pub fn christoffel(&self) -> ChristoffelSymbols {
        let m = self.dim();
        let c = self.codim();
        // S_l,ij = Σ_a ∂_l h^a ∂²_ij h^a, then raise l with g⁻¹
        let mut gamma = vec![DMatrix::zeros(m, m); m];
        for k in 0..m {
            for l in 0..m {
                let gkl = self.g_inv[(k, l)];
                if gkl == 0.0 {
                    continue;
                }
                for a in 0..c {
                    let coef = gkl * self.jet.grad[(l, a)];
                    if coef != 0.0 {
                        gamma[k] += &self.jet.hess[a] * coef;
                    }
                }
            }
        }
        ChristoffelSymbols { gamma }
    }

    /// Tangent frame columns `(eᵢ, ∂ᵢh)` as an `n × m` matrix.
    pub fn frame(&self) -> DMatrix<f64> {
        let m = self.dim();
        let c = self.codim();
        let mut t = DMatrix::zeros(m + c, m);
        for i in 0..m {
            t[(i, i)] = 1.0;
            for a in 0..c {
                t[(m + a, i)] = self.jet.grad[(i, a)];
            }
        }
        t
    }

    /// Normal projection of the ambient vector `(0, a(u, v))`.
    ///
    /// With `T` the tangent frame, `P_N = I − T g⁻¹ Tᵀ` and `Tᵀ(0, a) = ∂h·a`,
    /// so `Π(u, v) = (−Γ(u, v), a − ∂hᵀ Γ(u, v))`.
    pub fn second_fundamental_form(&self, u: &DVector<f64>, v: &DVector<f64>) -> SecondFundamentalFormValue {
        let m = self.dim();
        let a = self.hess_pair(u, v);
        let gamma = &self.g_inv * (&self.jet.grad * &a);
        let normal_part = &a - self.jet.grad.transpose() * &gamma;
        let mut out = DVector::zeros(m + self.codim());
        out.rows_mut(0, m).copy_from(&(-gamma));
        out.rows_mut(m, self.codim()).copy_from(&normal_part);
        SecondFundamentalFormValue(out)
    }

    /// `J ↦ J″` from second fundamental form products:
    /// `⟨J″, ∂ₗ⟩ = ⟨Π(J,V), Π(V,∂ₗ)⟩ − ⟨Π(V,V), Π(J,∂ₗ)⟩`, index raised with `g⁻¹`.
    pub fn curvature_operator(&self, v: &DVector<f64>) -> CurvatureOperator {
        let m = self.dim();
        let basis: Vec<DVector<f64>> = (0..m)
            .map(|i| {
                let mut e = DVector::zeros(m);
                e[i] = 1.0;
                e
            })
            .collect();
        let pi_vv = self.second_fundamental_form(v, v).0;
        let pi_v: Vec<DVector<f64>> = basis
            .iter()
            .map(|e| self.second_fundamental_form(v, e).0)
            .collect();
        let mut lowered = DMatrix::zeros(m, m);
        for j in 0..m {
            for l in 0..m {
                let pi_jl = self.second_fundamental_form(&basis[j], &basis[l]).0;
                lowered[(l, j)] = pi_v[j].dot(&pi_v[l]) - pi_vv.dot(&pi_jl);
            }
        }
        CurvatureOperator(&self.g_inv * lowered)
    }
}

/// A graph submanifold over a chart domain.
#[derive(Clone)]
pub struct GraphSurface {
    name: String,
    field: Arc<dyn HeightField>,
    domain: ChartDomain,
    regularity: Regularity,
    bounds: SurfaceBounds,
}

impl fmt::Debug for GraphSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphSurface")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("codim", &self.codim())
            .field("domain", &self.domain)
            .field("regularity", &self.regularity)
            .field("bounds", &self.bounds)
            .finish()
    }
}

impl GraphSurface {
    pub fn new(
        name: impl Into<String>,
        field: Arc<dyn HeightField>,
        domain: ChartDomain,
        regularity: Regularity,
    ) -> Result<Self> {
        if field.dim() != domain.dim() {
            return Err(GeoError::DimensionMismatch {
                expected: field.dim(),
                got: domain.dim(),
            });
        }
        if field.codim() == 0 || field.dim() == 0 {
            return Err(GeoError::Config("dimension and codimension must be positive".into()));
        }
        let bounds = sample_bounds(field.as_ref(), &domain)?;
        Ok(GraphSurface {
            name: name.into(),
            field,
            domain,
            regularity,
            bounds,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim(&self) -> usize {
        self.field.dim()
    }
    pub fn codim(&self) -> usize {
        self.field.codim()
    }
    pub fn ambient_dim(&self) -> usize {
        self.dim() + self.codim()
    }
    pub fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    pub fn regularity(&self) -> Regularity {
        self.regularity
    }
    pub fn bounds(&self) -> &SurfaceBounds {
        &self.bounds
    }
    pub fn field(&self) -> &Arc<dyn HeightField> {
        &self.field
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.domain.contains(x)
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(GeoError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(GeoError::OutOfChart { point: x.to_vec() })
        }
    }

    pub fn height(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check(x)?;
        Ok(self.field.value(x))
    }

    /// `F(x) = (x, h(x)) ∈ ℝⁿ`.
    pub fn embed(&self, x: &[f64]) -> Result<DVector<f64>> {
        let h = self.height(x)?;
        Ok(DVector::from_iterator(
            self.ambient_dim(),
            x.iter().copied().chain(h.iter().copied()),
        ))
    }

    pub fn jet(&self, x: &[f64]) -> Result<Jet2> {
        self.check(x)?;
        Ok(self.field.jet(x))
    }

    pub fn local(&self, x: &[f64]) -> Result<LocalGeometry> {
        let jet = self.jet(x)?;
        LocalGeometry::new(x, jet)
    }

    pub fn metric_at(&self, x: &[f64]) -> Result<MetricData> {
        let lg = self.local(x)?;
        Ok(MetricData {
            point: lg.x,
            g: lg.g,
            g_inv: lg.g_inv,
        })
    }

    pub fn christoffel_at(&self, x: &[f64]) -> Result<ChristoffelSymbols> {
        Ok(self.local(x)?.christoffel())
    }

    pub fn second_fundamental_form(
        &self,
        x: &[f64],
        u: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<SecondFundamentalFormValue> {
        Ok(self.local(x)?.second_fundamental_form(u, v))
    }

    pub fn curvature_operator(&self, x: &[f64], v: &DVector<f64>) -> Result<CurvatureOperator> {
        Ok(self.local(x)?.curvature_operator(v))
    }

    /// Gauß curvature of the plane spanned by `u, v`.
    pub fn sectional_curvature(&self, x: &[f64], u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let lg = self.local(x)?;
        let guu = u.dot(&(&lg.g * u));
        let gvv = v.dot(&(&lg.g * v));
        let guv = u.dot(&(&lg.g * v));
        let area = guu * gvv - guv * guv;
        if area.abs() < 1e-12 {
            return Err(GeoError::DegeneratePlane { area });
        }
        let puu = lg.second_fundamental_form(u, u).0;
        let pvv = lg.second_fundamental_form(v, v).0;
        let puv = lg.second_fundamental_form(u, v).0;
        Ok((puu.dot(&pvv) - puv.norm_squared()) / area)
    }

    /// `∂ₚΓᵏᵢⱼ` as `out[p].gamma[k][(i, j)]`.
    ///
    /// Uses analytic third partials of `h` when the field provides them and
    /// central differences of `christoffel_at` otherwise.
    pub fn christoffel_derivatives(&self, x: &[f64]) -> Result<Vec<ChristoffelSymbols>> {
        let lg = self.local(x)?;
        let m = lg.dim();
        let c = lg.codim();
        if let Some(third) = self.field.third(x) {
            let gr = &lg.jet.grad;
            let hs = &lg.jet.hess;
            let mut out = Vec::with_capacity(m);
            for p in 0..m {
                // ∂ₚg_ij = Σ_a ∂²_pi h^a ∂_j h^a + ∂_i h^a ∂²_pj h^a
                let dg = DMatrix::from_fn(m, m, |i, j| {
                    (0..c)
                        .map(|a| hs[a][(p, i)] * gr[(j, a)] + gr[(i, a)] * hs[a][(p, j)])
                        .sum::<f64>()
                });
                let dg_inv = -(&lg.g_inv * dg * &lg.g_inv);
                let mut dgamma = vec![DMatrix::zeros(m, m); m];
                for k in 0..m {
                    for l in 0..m {
                        let s = DMatrix::from_fn(m, m, |i, j| {
                            (0..c).map(|a| gr[(l, a)] * hs[a][(i, j)]).sum::<f64>()
                        });
                        let ds = DMatrix::from_fn(m, m, |i, j| {
                            (0..c)
                                .map(|a| hs[a][(p, l)] * hs[a][(i, j)] + gr[(l, a)] * third.get(a, p, i, j))
                                .sum::<f64>()
                        });
                        dgamma[k] += s * dg_inv[(k, l)] + ds * lg.g_inv[(k, l)];
                    }
                }
                out.push(ChristoffelSymbols { gamma: dgamma });
            }
            Ok(out)
        } else {
            let (lo, hi) = self.domain.bounding_box();
            let scale = lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max);
            let step = 1e-5 * scale.max(1e-3);
            let mut out = Vec::with_capacity(m);
            for p in 0..m {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[p] += step;
                xm[p] -= step;
                let gp = self.christoffel_at(&xp)?;
                let gm = self.christoffel_at(&xm)?;
                let gamma = gp
                    .gamma
                    .iter()
                    .zip(&gm.gamma)
                    .map(|(a, b)| (a - b) / (2.0 * step))
                    .collect();
                out.push(ChristoffelSymbols { gamma });
            }
            Ok(out)
        }
    }

    /// Cross-check of the curvature operator through Christoffel derivatives:
    /// `(J″)ˡ = −Σ Jⁱ Vʲ Vᵏ Rˡᵢⱼₖ` with
    /// `Rˡᵢⱼₖ = ∂ᵢΓˡⱼₖ − ∂ⱼΓˡᵢₖ + ΓˡᵢₚΓᵖⱼₖ − ΓˡⱼₚΓᵖᵢₖ`.
    pub fn curvature_operator_via_christoffel(
        &self,
        x: &[f64],
        v: &DVector<f64>,
    ) -> Result<CurvatureOperator> {
        let m = self.dim();
        let gam = self.christoffel_at(x)?;
        let dgam = self.christoffel_derivatives(x)?;
        let riem = |l: usize, i: usize, j: usize, k: usize| -> f64 {
            let mut r = dgam[i].gamma[l][(j, k)] - dgam[j].gamma[l][(i, k)];
            for p in 0..m {
                r += gam.gamma[l][(i, p)] * gam.gamma[p][(j, k)]
                    - gam.gamma[l][(j, p)] * gam.gamma[p][(i, k)];
            }
            r
        };
        let mut op = DMatrix::zeros(m, m);
        for l in 0..m {
            for i in 0..m {
                let mut acc = 0.0;
                for j in 0..m {
                    for k in 0..m {
                        acc += v[j] * v[k] * riem(l, i, j, k);
                    }
                }
                op[(l, i)] = -acc;
            }
        }
        Ok(CurvatureOperator(op))
    }

    /// Metric speed `‖y‖_g` at `x`.
    pub fn speed(&self, x: &[f64], y: &DVector<f64>) -> Result<f64> {
        let md = self.metric_at(x)?;
        Ok(y.dot(&(&md.g * y)).max(0.0).sqrt())
    }
}

fn sample_bounds(field: &dyn HeightField, domain: &ChartDomain) -> Result<SurfaceBounds> {
    let pts = domain.sample_grid(BOUNDS_SAMPLES_PER_AXIS);
    if pts.is_empty() {
        return Err(GeoError::DomainTooSmall("no sample points inside the chart".into()));
    }
    let mut grad_sup: f64 = 0.0;
    let mut hess_sup: f64 = 0.0;
    for p in &pts {
        let j = field.jet(p);
        let hn = j.hess.iter().map(|h| h.norm_squared()).sum::<f64>().sqrt();
        if !(j.grad.norm().is_finite() && hn.is_finite()) {
            return Err(GeoError::Config(format!("height derivatives not finite at {p:?}")));
        }
        grad_sup = grad_sup.max(j.grad.norm());
        hess_sup = hess_sup.max(hn);
    }
    Ok(SurfaceBounds {
        grad_sup,
        hess_sup,
        grad: grad_sup * BOUNDS_INFLATION,
        hess: hess_sup * BOUNDS_INFLATION,
    })
}

#[cfg(test)]
mod tests {
    use super::analytic::{Flat, Hemisphere, PowerCrease, Trough};
    use super::*;

    fn hemisphere() -> GraphSurface {
        GraphSurface::new(
            "hemisphere",
            Arc::new(Hemisphere { dim: 2 }),
            ChartDomain::Ball { center: vec![0.0, 0.0], radius: 0.8 },
            Regularity::Smooth,
        )
        .unwrap()
    }

    fn flat() -> GraphSurface {
        GraphSurface::new("flat", Arc::new(Flat { dim: 2, codim: 1 }), ChartDomain::cube(2, 1.0), Regularity::Smooth)
            .unwrap()
    }

    fn trough() -> GraphSurface {
        GraphSurface::new("trough", Arc::new(Trough { dim: 2 }), ChartDomain::cube(2, 1.0), Regularity::Smooth).unwrap()
    }

    fn vec2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b])
    }

    #[test]
    fn embed_examples() {
        assert_eq!(flat().embed(&[0.2, -0.1]).unwrap().as_slice(), &[0.2, -0.1, 0.0]);
        assert_eq!(hemisphere().embed(&[0.0, 0.0]).unwrap().as_slice(), &[0.0, 0.0, 1.0]);
        let p = hemisphere().embed(&[0.3, 0.0]).unwrap();
        assert!((p[2] - 0.91f64.sqrt()).abs() < 1e-15);
        assert!((p[2] - 0.953939).abs() < 1e-6);
        assert!(matches!(hemisphere().embed(&[0.7, 0.7]), Err(GeoError::OutOfChart { .. })));
    }

    #[test]
    fn metric_examples() {
        assert_eq!(flat().metric_at(&[0.3, 0.1]).unwrap().g, DMatrix::identity(2, 2));
        assert_eq!(hemisphere().metric_at(&[0.0, 0.0]).unwrap().g, DMatrix::identity(2, 2));
        let md = hemisphere().metric_at(&[0.3, 0.0]).unwrap();
        // closed form g = I + x xᵀ / (1 − |x|²)
        assert!((md.g[(0, 0)] - (1.0 + 0.09 / 0.91)).abs() < 1e-14);
        assert!((md.g[(0, 0)] - 1.098901).abs() < 1e-6);
        assert_eq!(md.g[(0, 1)], 0.0);
        assert!((md.g[(1, 1)] - 1.0).abs() < 1e-15);
        assert!((&md.g_inv * &md.g - DMatrix::identity(2, 2)).abs().max() < 1e-12);
    }

    #[test]
    fn christoffel_examples() {
        let z = flat().christoffel_at(&[0.4, 0.4]).unwrap();
        assert!(z.gamma.iter().all(|g| g.abs().max() == 0.0));
        let z = hemisphere().christoffel_at(&[0.0, 0.0]).unwrap();
        assert!(z.gamma.iter().all(|g| g.abs().max() == 0.0));
        let g = hemisphere().christoffel_at(&[0.3, 0.0]).unwrap();
        // sphere graph: Γᵏᵢⱼ = xᵏ (δᵢⱼ + xᵢxⱼ/(1−|x|²)) → Γ¹₁₁ = 0.3 · (1 + 0.09/0.91)
        let expected = 0.3 * (1.0 + 0.09 / 0.91);
        assert!((g.gamma[0][(0, 0)] - expected).abs() < 1e-14);
        assert!((g.gamma[0][(0, 0)] - 0.32967).abs() < 1e-5);
        for gk in &g.gamma {
            assert_eq!(gk[(0, 1)], gk[(1, 0)]);
        }
    }

    /// Γ from the general formula ½gᵏˡ(∂ᵢg_jl + ∂ⱼg_il − ∂ₗg_ij) with differenced metrics.
    fn christoffel_from_metric(s: &GraphSurface, x: &[f64]) -> Vec<DMatrix<f64>> {
        let m = s.dim();
        let step = 1e-5;
        let dg: Vec<DMatrix<f64>> = (0..m)
            .map(|p| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[p] += step;
                xm[p] -= step;
                (s.metric_at(&xp).unwrap().g - s.metric_at(&xm).unwrap().g) / (2.0 * step)
            })
            .collect();
        let ginv = s.metric_at(x).unwrap().g_inv;
        (0..m)
            .map(|k| {
                DMatrix::from_fn(m, m, |i, j| {
                    (0..m)
                        .map(|l| 0.5 * ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
                        .sum()
                })
            })
            .collect()
    }

    #[test]
    fn graph_christoffels_match_general_formula() {
        for s in [hemisphere(), trough()] {
            for x in [[0.3, 0.0], [0.2, -0.4], [-0.5, 0.1]] {
                let a = s.christoffel_at(&x).unwrap();
                let b = christoffel_from_metric(&s, &x);
                for k in 0..2 {
                    assert!((&a.gamma[k] - &b[k]).abs().max() < 1e-8, "{} at {x:?}", s.name());
                }
            }
        }
    }

    #[test]
    fn second_fundamental_form_examples() {
        let e1 = vec2(1.0, 0.0);
        let e2 = vec2(0.0, 1.0);
        let z = flat().second_fundamental_form(&[0.1, 0.2], &e1, &e2).unwrap();
        assert_eq!(z.0.norm(), 0.0);
        let p = hemisphere().second_fundamental_form(&[0.0, 0.0], &e1, &e1).unwrap();
        assert!((p.0 - DVector::from_vec(vec![0.0, 0.0, -1.0])).norm() < 1e-15);
        let s = hemisphere();
        let x = [0.31, -0.22];
        let u = vec2(0.7, -1.1);
        let v = vec2(0.3, 0.5);
        let a = s.second_fundamental_form(&x, &u, &v).unwrap().0;
        let b = s.second_fundamental_form(&x, &v, &u).unwrap().0;
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn curvature_operator_examples() {
        let e1 = vec2(1.0, 0.0);
        let e2 = vec2(0.0, 1.0);
        assert_eq!(flat().curvature_operator(&[0.3, 0.3], &e1).unwrap().0.abs().max(), 0.0);
        let c = hemisphere().curvature_operator(&[0.0, 0.0], &e1).unwrap();
        assert!((c.apply(&e2) + &e2).norm() < 1e-15);
        for s in [hemisphere(), trough()] {
            let v = vec2(0.4, -0.9);
            let c = s.curvature_operator(&[0.2, 0.3], &v).unwrap();
            assert!(c.apply(&v).norm() < 1e-14);
        }
    }

    #[test]
    fn sectional_curvature_examples() {
        let e1 = vec2(1.0, 0.0);
        let e2 = vec2(0.0, 1.0);
        assert_eq!(flat().sectional_curvature(&[0.0, 0.0], &e1, &e2).unwrap(), 0.0);
        for x in [[0.0, 0.0], [0.3, -0.5], [-0.6, 0.2]] {
            let k = hemisphere().sectional_curvature(&x, &vec2(1.0, 0.2), &vec2(-0.3, 0.8)).unwrap();
            assert!((k - 1.0).abs() < 1e-8);
        }
        let k = trough().sectional_curvature(&[0.5, 0.1], &e1, &e2).unwrap();
        assert!(k.abs() < 1e-8);
        assert!(matches!(
            hemisphere().sectional_curvature(&[0.1, 0.1], &e1, &(e1.clone() * 2.0)),
            Err(GeoError::DegeneratePlane { .. })
        ));
    }

    #[test]
    fn gauss_route_matches_christoffel_route() {
        for s in [hemisphere(), trough()] {
            for x in [[0.1, 0.2], [-0.4, 0.3], [0.55, -0.1]] {
                let v = vec2(0.6, -0.3);
                let a = s.curvature_operator(&x, &v).unwrap().0;
                let b = s.curvature_operator_via_christoffel(&x, &v).unwrap().0;
                let scale = a.abs().max().max(b.abs().max());
                assert!((&a - &b).abs().max() <= 1e-10 * scale.max(1.0), "{}: {a} vs {b}", s.name());
            }
        }
    }

    #[test]
    fn bounds_of_vee() {
        let vee = GraphSurface::new(
            "vee",
            Arc::new(PowerCrease { dim: 2, power: 2.0, odd: true }),
            ChartDomain::cube(2, 0.5),
            Regularity::C11,
        )
        .unwrap();
        assert_eq!(vee.bounds().hess_sup, 2.0);
        assert!((vee.bounds().hess - 2.2).abs() < 1e-12);
    }

    #[test]
    fn regularity_order() {
        assert!(Regularity::C11.order() < Regularity::C2.order());
        assert!(Regularity::C2.order() < Regularity::C2Alpha(0.5).order());
        assert!(Regularity::C2Alpha(1.0).order() < Regularity::C3.order());
        assert!(!Regularity::C2Alpha(1.0).at_least_c3());
        assert!(Regularity::Smooth.at_least_c3());
        assert!(Regularity::parse("C2alpha", None).is_err());
        assert_eq!(Regularity::parse("C2alpha", Some(0.5)).unwrap(), Regularity::C2Alpha(0.5));
    }
}
