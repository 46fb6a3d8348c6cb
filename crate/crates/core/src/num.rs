//! Float math that works with and without `std`.
//!
//! `f64` transcendentals are inherent methods of the standard library, not of
//! `core`; under `no_std` they come from `libm` instead.

#![allow(dead_code)]

macro_rules! unary {
    ($name:ident, $libm:path) => {
        #[inline(always)]
        pub(crate) fn $name(x: f64) -> f64 {
            #[cfg(feature = "std")]
            {
                x.$name()
            }
            #[cfg(not(feature = "std"))]
            {
                $libm(x)
            }
        }
    };
}

unary!(exp, libm::exp);
unary!(ln, libm::log);
unary!(log10, libm::log10);
unary!(sqrt, libm::sqrt);
unary!(sin, libm::sin);
unary!(cos, libm::cos);
unary!(tanh, libm::tanh);
unary!(floor, libm::floor);
unary!(ceil, libm::ceil);
unary!(round, libm::round);

#[inline(always)]
pub(crate) fn powi(x: f64, n: i32) -> f64 {
    #[cfg(feature = "std")]
    {
        x.powi(n)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::pow(x, n as f64)
    }
}

#[inline(always)]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.powf(y)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::pow(x, y)
    }
}

#[inline(always)]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.hypot(y)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::hypot(x, y)
    }
}
