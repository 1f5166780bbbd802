//! Intrinsic cost of shortcuts to adiabaticity for a parametric oscillator.
//!
//! The crate is organised bottom-up:
//!
//! * [`protocol`]: frequency schedules ω(t), their derivatives and the
//!   counterdiabatic frequency Ω²(t) that makes the WKB mode exact.
//! * [`modes`]: mode-equation solver, WKB modes, Bogoliubov coefficients and
//!   action-angle variables.
//! * [`oscillatory`]: the oscillatory integrals I₀, I₁ and the shape
//!   function F\[x, y\].
//! * [`cost`]: noise/dissipation kernels, the coefficients ν and μ,
//!   transition weights and the injected work.
//! * [`wigner`]: Laguerre-based Wigner eigenfunctions and the final-state
//!   operator.
//! * [`oracle`]: Monte Carlo check of the perturbative cost with c-number
//!   fluctuations of the driving.
//!
//! [`ode`], [`quad`] and [`spline`] are the numerical substrate.

pub mod cost;
pub mod error;
pub mod modes;
pub mod ode;
pub mod oracle;
pub mod oscillatory;
pub mod protocol;
pub mod quad;
pub mod spline;
pub mod wigner;

pub use cost::{CostReport, DrivingSpec};
pub use error::{Error, Result};
pub use modes::{BogoliubovCoefficients, CauchyData, ModeFunction, Vacuum};
pub use oracle::{OracleReport, SampleSpec};
pub use oscillatory::{Domain, OscillatoryResult};
pub use protocol::{FrequencyProtocol, ProtocolSpec, SystemSpec, Window};
pub use wigner::WignerEigenstate;

pub use num_complex::Complex64;
