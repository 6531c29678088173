//! Theta-functional solutions of the Camassa-Holm equation
//! `m_t + u m_x + 2 m u_x = 0`, `m = u - u_xx + k`, on real hyperelliptic
//! M-curves.

pub mod ch;
pub mod curve;
pub mod error;
pub mod fay;
pub mod periods;
pub mod quadrature;
pub mod theta;
pub mod validate;

pub use curve::{build_curve, holo_basis, mu_value, Curve, Location, Sheet, SurfacePoint};
pub use error::{Error, Result};
pub use periods::{DirectionVector, LocalParam, PeriodData, Surface};
pub use quadrature::QuadConfig;
pub use theta::{char_to_shift, Characteristics, Jet, Scaled, ThetaContext};
