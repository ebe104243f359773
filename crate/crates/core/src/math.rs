//! Float intrinsics routed through `std` or `libm` depending on features.
//!
//! Only the handful of operations the crate actually uses. Everything else
//! (`min`, `max`, `abs`, comparisons) is available in `core` already.

#[cfg(feature = "std")]
mod imp {
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    #[inline]
    pub fn sin(x: f64) -> f64 {
        x.sin()
    }
    #[inline]
    pub fn cos(x: f64) -> f64 {
        x.cos()
    }
    #[inline]
    pub fn atan2(y: f64, x: f64) -> f64 {
        y.atan2(x)
    }
    #[inline]
    pub fn floor(x: f64) -> f64 {
        x.floor()
    }
    #[inline]
    pub fn ceil(x: f64) -> f64 {
        x.ceil()
    }
}

#[cfg(not(feature = "std"))]
mod imp {
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    #[inline]
    pub fn sin(x: f64) -> f64 {
        libm::sin(x)
    }
    #[inline]
    pub fn cos(x: f64) -> f64 {
        libm::cos(x)
    }
    #[inline]
    pub fn atan2(y: f64, x: f64) -> f64 {
        libm::atan2(y, x)
    }
    #[inline]
    pub fn floor(x: f64) -> f64 {
        libm::floor(x)
    }
    #[inline]
    pub fn ceil(x: f64) -> f64 {
        libm::ceil(x)
    }
}

pub(crate) use imp::{atan2, ceil, cos, floor, sin, sqrt};

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    // Coordinates in this crate are metres in a room-sized workspace, so the
    // naive formula cannot overflow.
    sqrt(x * x + y * y)
}

/// Wraps an angle to `(-pi, pi]`.
#[inline]
pub(crate) fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * core::f64::consts::PI;
    let mut r = a - two_pi * floor(a / two_pi);
    if r > core::f64::consts::PI {
        r -= two_pi;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn wrap_angle_range() {
        let cases = [0.0, 1.0, -1.0, PI, -PI, 3.0 * PI, -3.0 * PI, 7.5, -12.25];
        for &a in &cases {
            let w = wrap_angle(a);
            assert!(w > -PI - 1e-12 && w <= PI + 1e-12, "{a} -> {w}");
            // Same direction.
            assert!((sin(w) - sin(a)).abs() < 1e-9);
            assert!((cos(w) - cos(a)).abs() < 1e-9);
        }
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
    }
}
