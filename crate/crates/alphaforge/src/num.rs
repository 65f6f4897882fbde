//! Scalar abstraction for the numeric core.
//!
//! Matrix kernels, operator semantics, and metric formulas are generic over
//! [`Scalar`]; the crate root exports `f64`-backed aliases for everyday use.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar usable by the evaluation and metric kernels.
///
/// Invalid (missing) cells are encoded as NaN, so the type must carry a NaN
/// representation; `f32` and `f64` both qualify.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Copy + 'static {
    /// Lossy conversion from `f64` for constants baked into formulas.
    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }

    /// Lossy conversion from `usize` for counts entering averages.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Whether the cell holds a usable value. Non-finite means missing.
    fn is_valid(self) -> bool {
        self.is_finite()
    }

    /// The canonical missing-value encoding.
    fn invalid() -> Self {
        Self::nan()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
