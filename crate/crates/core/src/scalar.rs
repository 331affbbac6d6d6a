//! Scalar bound shared by the numerical core.
//!
//! Densities, quadrature, critical costs and the disclosure heuristics are
//! written against [`Scalar`] so they run in `f32` or `f64`. Special
//! functions (erfc, log-gamma, ...) are evaluated in `f64` and cast back.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// floating point: f32 or f64
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// Default absolute quadrature tolerance: 1e-8, or the best the type can
    /// resolve when that is coarser.
    fn quad_tolerance() -> Self {
        Self::lit(1e-8).max(Self::epsilon() * Self::lit(1e3))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
