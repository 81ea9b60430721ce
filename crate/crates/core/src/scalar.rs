//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the calculus is carried out in: `f64` for production runs,
/// `f32` where memory matters more than the last digits.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for finite inputs and the float types implementing this trait.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal not representable")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Generalized inverse: `1/a` for `a != 0`, otherwise `0`.
pub fn gen_inverse<T: Real>(a: T) -> T {
    if a == T::zero() {
        T::zero()
    } else {
        a.recip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generalized_inverse() {
        assert_eq!(gen_inverse(2.0_f64), 0.5);
        assert_eq!(gen_inverse(0.0_f64), 0.0);
        assert_eq!(gen_inverse(-0.0_f64), 0.0);
        for a in [3.0_f64, -0.25, 1e-7, 7.5e5] {
            let back = gen_inverse(gen_inverse(a));
            assert!((back - a).abs() <= 1e-15 * a.abs());
        }
        assert_eq!(gen_inverse(4.0_f32), 0.25);
    }
}
