//! Numerical toolkit for one-dimensional fractional Lane–Emden type systems
//! with singular nonlinearities on a bounded interval.

pub mod error;
pub mod exponents;
pub mod fraclap;
pub mod grid;
pub mod linalg;
pub mod quad;
pub mod rate;
pub mod regimes;
pub mod singular;
pub mod spectral;
pub mod system;

pub use error::{Error, Result};
pub use exponents::Exponents;
pub use fraclap::FracOp;
pub use grid::{Grid, GridFn};
pub use rate::{fit_rate, RateFit, Side};
