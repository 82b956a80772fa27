use nalgebra::{DMatrix, DVector};
use std::fmt;

/// Value and first two derivatives of a height function `h: U → ℝᶜ` at one point.
///
/// `grad` is `m × c` with `grad[(i, a)] = ∂ᵢhᵃ`; `hess[a]` is the symmetric `m × m`
/// matrix `∂²ᵢⱼhᵃ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: DVector<f64>,
    pub grad: DMatrix<f64>,
    pub hess: Vec<DMatrix<f64>>,
}

impl Jet2 {
    pub fn zeros(m: usize, c: usize) -> Self {
        Jet2 {
            value: DVector::zeros(c),
            grad: DMatrix::zeros(m, c),
            hess: vec![DMatrix::zeros(m, m); c],
        }
    }
}

/// Third partials `∂³ₚᵢⱼhᵃ`, stored as `third[a][p]` = the `m × m` matrix over `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThirdPartials(pub Vec<Vec<DMatrix<f64>>>);

impl ThirdPartials {
    pub fn get(&self, a: usize, p: usize, i: usize, j: usize) -> f64 {
        self.0[a][p][(i, j)]
    }
}

/// A height function with derivatives, evaluable pointwise.
///
/// Implementations may be closed-form (catalog surfaces) or grid-backed
/// (sampled or mollified surfaces). Callers are responsible for staying
/// inside the chart domain; the `GraphSurface` wrapper enforces that.
pub trait HeightField: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn codim(&self) -> usize;
    fn value(&self, x: &[f64]) -> DVector<f64>;
    fn jet(&self, x: &[f64]) -> Jet2;
    /// Third derivatives; `None` when the field is not known to be C³.
    fn third(&self, _x: &[f64]) -> Option<ThirdPartials> {
        None
    }
}
