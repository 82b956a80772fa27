//! Geodesic flows, exponential maps and Jacobi-field flow differentials on
//! graph submanifolds `{(x, h(x))}` of low regularity.

pub mod catalog;
pub mod cli;
pub mod config;
pub mod error;
pub mod flow;
pub mod io;
pub mod jacobi;
pub mod minimality;
pub mod ode;
pub mod regularity;
pub mod suite;
pub mod surface;

pub use error::{GeoError, Result};
pub use surface::{ChartDomain, GraphSurface, Regularity};
