//! Run configuration and surface definition files.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{GeoError, Result};
use crate::flow::FlowOptions;
use crate::surface::{ChartDomain, GraphSurface, GridField, Regularity, TensorGrid};

pub const SCHEMA: u32 = 1;
pub const DEFAULT_SEED: u64 = 20240601;

/// Surface definition, either a catalog entry or sampled heights on a box grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SurfaceSpec {
    Catalog {
        name: String,
        /// `[[lo, hi], ...]` per axis.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    Grid {
        #[serde(default = "default_grid_name")]
        name: String,
        samples: Samples,
        domain: Vec<[f64; 2]>,
        regularity: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
}

fn default_grid_name() -> String {
    "grid".into()
}

/// Height samples: a table `[row][col]` over a 2-d chart (rows along `x₂`,
/// columns along `x₁`), or a flat node-major list with explicit node counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Samples {
    Table(Vec<Vec<f64>>),
    Flat {
        counts: Vec<usize>,
        #[serde(default = "one")]
        codim: usize,
        values: Vec<f64>,
    },
}

fn one() -> usize {
    1
}

impl SurfaceSpec {
    pub fn catalog(name: &str) -> Self {
        SurfaceSpec::Catalog {
            name: name.into(),
            domain: None,
            alpha: None,
        }
    }

    pub fn build(&self) -> Result<GraphSurface> {
        match self {
            SurfaceSpec::Catalog { name, domain, alpha } => {
                catalog::build(name, domain.as_ref().map(|d| ChartDomain::from_bounds(d)), *alpha)
            }
            SurfaceSpec::Grid {
                name,
                samples,
                domain,
                regularity,
                alpha,
            } => {
                let (counts, codim, values) = match samples {
                    Samples::Table(rows) => {
                        let ncols = rows.first().map_or(0, Vec::len);
                        if rows.iter().any(|r| r.len() != ncols) {
                            return Err(GeoError::Config("sample table rows differ in length".into()));
                        }
                        (vec![ncols, rows.len()], 1, rows.concat())
                    }
                    Samples::Flat { counts, codim, values } => (counts.clone(), *codim, values.clone()),
                };
                if counts.len() != domain.len() {
                    return Err(GeoError::DimensionMismatch {
                        expected: domain.len(),
                        got: counts.len(),
                    });
                }
                let grid = TensorGrid::new(
                    domain.iter().map(|d| d[0]).collect(),
                    domain.iter().map(|d| d[1]).collect(),
                    counts,
                )?;
                let field = GridField::from_samples(grid, codim, &values)?;
                let inner = field.grid();
                let dom = ChartDomain::Box {
                    lo: inner.lo.clone(),
                    hi: inner.hi.clone(),
                };
                GraphSurface::new(name.clone(), Arc::new(field), dom, Regularity::parse(regularity, *alpha)?)
            }
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| GeoError::Config(format!("{}: {e}", path.display())))
    }
}

impl Default for SurfaceSpec {
    fn default() -> Self {
        SurfaceSpec::catalog("hemisphere")
    }
}

/// Integrator tolerances; unset values fall back to the surface's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    /// Fixed RK4 step instead of adaptive stepping.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rk4_step: Option<f64>,
}

impl Tolerances {
    pub fn flow_options(&self, surface: &GraphSurface) -> FlowOptions {
        if let Some(h) = self.rk4_step {
            return FlowOptions::rk4(h);
        }
        let mut opts = FlowOptions::for_surface(surface);
        if let crate::ode::Stepper::Adaptive(ref mut a) = opts.stepper {
            if let Some(r) = self.rtol {
                a.rtol = r;
            }
            if let Some(t) = self.atol {
                a.atol = t;
            }
        }
        opts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeodesicParams {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub t_end: f64,
    /// Output samples; 0 records every accepted step.
    pub samples: usize,
}

impl Default for GeodesicParams {
    fn default() -> Self {
        GeodesicParams {
            x0: vec![0.0, 0.0],
            y0: vec![1.0, 0.0],
            t_end: 0.5,
            samples: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JacobianParams {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub t: f64,
    pub fd_check: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_eps: Option<f64>,
}

impl Default for JacobianParams {
    fn default() -> Self {
        JacobianParams {
            x0: vec![0.0, 0.0],
            y0: vec![1.0, 0.0],
            t: 0.5,
            fd_check: false,
            fd_eps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothingParams {
    pub scales: Vec<f64>,
    pub probes: usize,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams {
            scales: vec![0.1, 0.05, 0.025, 0.0125],
            probes: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimalityParams {
    pub x0: Vec<f64>,
    /// Initial velocity; the geodesic runs for unit time, so its g-length is `‖y0‖_g`.
    pub y0: Vec<f64>,
    pub resolution: usize,
    pub samples: usize,
}

impl Default for MinimalityParams {
    fn default() -> Self {
        MinimalityParams {
            x0: vec![0.0, 0.0],
            y0: vec![0.5, 0.0],
            resolution: 128,
            samples: 401,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportParams {
    /// Criterion identifiers (`ac01`…`ac11`) or `all`.
    pub suites: Vec<String>,
    /// Multiplies every pass threshold.
    pub tolerance_scale: f64,
}

impl Default for ReportParams {
    fn default() -> Self {
        ReportParams {
            suites: vec!["all".into()],
            tolerance_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    /// Main JSON output; stdout when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Companion CSV (trajectory, delta-vs-level).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub schema: u32,
    pub surface: SurfaceSpec,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub geodesic: GeodesicParams,
    pub jacobian: JacobianParams,
    pub smoothing: SmoothingParams,
    pub minimality: MinimalityParams,
    pub report: ReportParams,
    pub output: OutputPaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema: SCHEMA,
            surface: SurfaceSpec::default(),
            seed: DEFAULT_SEED,
            tolerances: Tolerances::default(),
            geodesic: GeodesicParams::default(),
            jacobian: JacobianParams::default(),
            smoothing: SmoothingParams::default(),
            minimality: MinimalityParams::default(),
            report: ReportParams::default(),
            output: OutputPaths::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| GeoError::Config(e.to_string()))?;
        if cfg.schema != SCHEMA {
            return Err(GeoError::Config(format!("unsupported config schema {}", cfg.schema)));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
