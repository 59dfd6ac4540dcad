//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All math is written against [`Real`], which is satisfied by `f32` and
//! `f64`. Tolerances quoted throughout the crate assume `f64`; `f32` builds
//! run the same algorithms at single precision.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar usable by the solvers.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a count into the scalar type.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `exp(z)` for a complex argument.
#[inline]
pub fn cexp<T: Real>(z: Complex<T>) -> Complex<T> {
    let r = z.re.exp();
    Complex::new(r * z.im.cos(), r * z.im.sin())
}

/// `|z|` without overflow in the intermediate squares.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

/// `exp(i z x)`, the plane wave `e_z(x)`.
#[inline]
pub fn plane_wave<T: Real>(z: Complex<T>, x: T) -> Complex<T> {
    // i z x = i (re + i im) x = -im x + i re x
    cexp(Complex::new(-z.im * x, z.re * x))
}

/// `cos(z)` for a complex argument.
#[inline]
pub fn ccos<T: Real>(z: Complex<T>) -> Complex<T> {
    let half = T::lit(0.5);
    let iz = Complex::new(-z.im, z.re);
    (cexp(iz) + cexp(-iz)) * half
}

/// `sin(z)` for a complex argument.
#[inline]
pub fn csin<T: Real>(z: Complex<T>) -> Complex<T> {
    let iz = Complex::new(-z.im, z.re);
    let d = cexp(iz) - cexp(-iz);
    // (e^{iz} - e^{-iz}) / (2i)
    Complex::new(d.im, -d.re) * T::lit(0.5)
}
