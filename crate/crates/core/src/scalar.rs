use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar used by the level, decode and metric routines.
///
/// `exp` and `ln` go through the pure-Rust `libm` so results are bit-identical
/// across platforms, whatever the system math library does.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {
    fn portable_exp(self) -> Self;

    fn portable_ln(self) -> Self;

    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("count representable in scalar type")
    }
}

impl Scalar for f32 {
    fn portable_exp(self) -> Self {
        libm::expf(self)
    }

    fn portable_ln(self) -> Self {
        libm::logf(self)
    }
}

impl Scalar for f64 {
    fn portable_exp(self) -> Self {
        libm::exp(self)
    }

    fn portable_ln(self) -> Self {
        libm::log(self)
    }
}
