//! Scalar abstraction the whole crate is generic over.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar type of the library: `f64` in production, `f32` available.
///
/// Everything numeric in the crate is expressed through this trait plus
/// [`Complex`]; concrete aliases live at the crate root.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Convert an `f64` literal into this scalar.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal converts to scalar")
    }

    /// Lossy view as `f64`, used for diagnostics and serialization.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn pi() -> Self {
        Self::of(std::f64::consts::PI)
    }

    /// 2π, the torus period.
    #[inline]
    fn two_pi() -> Self {
        Self::of(std::f64::consts::TAU)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the crate scalar.
pub type C<R> = Complex<R>;

/// Imaginary unit.
#[inline]
pub fn im<R: Real>() -> C<R> {
    Complex::new(R::zero(), R::one())
}

/// Real constant as a complex number.
#[inline]
pub fn cr<R: Real>(x: R) -> C<R> {
    Complex::new(x, R::zero())
}
