//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::num_complex::Complex;
use rustfft::FftNum;

/// Floating-point scalar the transforms are generic over (`f32` or `f64`).
///
/// `Float` and `Signed` (pulled in through `FftNum`) both define `abs`, so
/// call sites use `Float::abs(x)` explicitly.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Default + Display + Debug + Sum
{
    /// Converts an `f64` literal; every `Real` can represent it up to rounding.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    fn from_i64_lossy(n: i64) -> Self {
        Self::from_i64(n).expect("i64 representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `e^{2πi·num/den}` with the ratio reduced in exact integer arithmetic first.
pub(crate) fn unit_phase<T: Real>(num: i64, den: i64) -> Complex<T> {
    debug_assert!(den > 0);
    let r = num.rem_euclid(den);
    let angle = T::TAU() * T::from_i64_lossy(r) / T::from_i64_lossy(den);
    Complex::new(angle.cos(), angle.sin())
}

pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// Maps `items` in parallel and folds the results into `acc` in item order,
/// so floating-point sums do not depend on thread scheduling.
pub(crate) fn ordered_fold<I: Sync, P: Send, A>(
    items: &[I],
    mut acc: A,
    map: impl Fn(&I) -> P + Sync + Send,
    mut add: impl FnMut(&mut A, P),
) -> A {
    use rayon::prelude::*;
    let batch = 2 * rayon::current_num_threads().max(1);
    for chunk in items.chunks(batch) {
        let parts: Vec<P> = chunk.par_iter().map(&map).collect();
        for part in parts {
            add(&mut acc, part);
        }
    }
    acc
}
