//! Special moduli of smoothness for 1-periodic functions: B-spline (Boman–Shapiro type)
//! moduli, the classical second modulus, best trigonometric approximation and
//! Peetre-type K-functionals, all computed as certified enclosures.

pub mod bspline;
pub mod certified;
pub mod error;
pub mod extremal;
pub mod moduli;
pub mod function;
pub mod kfun;
pub mod lp;
pub mod minimax;
pub mod piecewise;
pub mod poly;
pub mod quadrature;
pub mod smoothing;
pub mod supnorm;
pub mod trig;
pub mod verify;

pub use bspline::BSplineKernel;
pub use certified::{CertifiedValue, Method};
pub use error::{Error, Result};
pub use function::PeriodicFunction;
pub use piecewise::PiecewisePoly;
pub use trig::TrigPoly;
