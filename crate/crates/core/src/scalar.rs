//! Floating-point scalar bound shared by the numerical modules.
//!
//! Coupling coefficients are evaluated exactly and handed out as `f64`; every
//! matrix, eigensystem and state downstream of them is generic over [`Real`].

use std::fmt;

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real field usable for Hamiltonian assembly, diagonalization and propagation.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + fmt::Display + Send + Sync + 'static
{
    /// Unit roundoff of the type.
    const EPSILON: f64;

    /// Lossy conversion from `f64`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Real")
    }

    /// Widening conversion to `f64`.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {
    const EPSILON: f64 = f32::EPSILON as f64;
}

impl Real for f64 {
    const EPSILON: f64 = f64::EPSILON;
}

/// `exp(-2πi·cycles)` for a phase already reduced to a fraction of a turn.
#[inline]
pub(crate) fn unit_phase<T: Real>(cycles: f64) -> Complex<T> {
    let angle = -std::f64::consts::TAU * cycles;
    Complex::new(T::of(angle.cos()), T::of(angle.sin()))
}
