//! Scalar abstraction: the real field underlying all complex matrices.
//!
//! Every numerical routine in this crate is generic over [`Real`], which is
//! satisfied by `f32` and `f64`. Concrete aliases at the crate root pin the
//! default precision (`f64`) used by the compiler pipeline and the CLI.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar type: `f32` or `f64`.
///
/// Bundles the `num-traits` bounds the kernels need (IEEE float ops, the
/// constants π/e, conversion from literals) plus the usual thread-safety
/// bounds so matrices can cross thread boundaries.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
    /// Convert an `f64` literal. Panics only if the target type cannot
    /// represent any approximation of `x`, which does not happen for finite
    /// literals with `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Machine epsilon for this scalar.
    #[inline]
    fn eps() -> Self {
        Self::epsilon()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the crate's scalar abstraction.
pub type C<T> = Complex<T>;

/// `0 + 0i`.
#[inline]
pub fn czero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

/// `1 + 0i`.
#[inline]
pub fn cone<T: Real>() -> C<T> {
    Complex::new(T::one(), T::zero())
}

/// `e^{iφ}`.
#[inline]
pub fn cis<T: Real>(phi: T) -> C<T> {
    Complex::new(phi.cos(), phi.sin())
}

/// Primitive d-th root of unity ω = e^{2πi/d}.
#[inline]
pub fn omega<T: Real>(d: usize) -> C<T> {
    cis(T::lit(2.0) * T::PI() / T::lit(d as f64))
}
