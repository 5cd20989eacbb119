//! Float intrinsics shim: inherent `f64` methods under `std`, `libm` otherwise.
//!
//! Modules that use transcendentals import `F64Ext`; under `std` the trait is
//! empty and inherent methods win, without `std` it supplies the methods.

#[cfg(feature = "std")]
#[allow(dead_code)]
pub(crate) trait F64Ext {}

#[cfg(feature = "std")]
impl F64Ext for f64 {}

#[cfg(not(feature = "std"))]
pub(crate) trait F64Ext: Sized {
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn floor(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn hypot(self, other: Self) -> Self;
}

#[cfg(not(feature = "std"))]
impl F64Ext for f64 {
    #[inline]
    fn sqrt(self) -> f64 {
        libm::sqrt(self)
    }
    #[inline]
    fn sin(self) -> f64 {
        libm::sin(self)
    }
    #[inline]
    fn cos(self) -> f64 {
        libm::cos(self)
    }
    #[inline]
    fn tan(self) -> f64 {
        libm::tan(self)
    }
    #[inline]
    fn exp(self) -> f64 {
        libm::exp(self)
    }
    #[inline]
    fn ln(self) -> f64 {
        libm::log(self)
    }
    #[inline]
    fn floor(self) -> f64 {
        libm::floor(self)
    }
    #[inline]
    fn powi(self, n: i32) -> f64 {
        libm::pow(self, n as f64)
    }
    #[inline]
    fn hypot(self, other: f64) -> f64 {
        libm::hypot(self, other)
    }
}
