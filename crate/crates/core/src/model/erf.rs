//! Error function of a complex argument.
//!
//! Inside a region around the origin the Maclaurin series is summed
//! directly. Elsewhere the Faddeeva function `w(zeta) = exp(-zeta^2)
//! erfc(-i zeta)` is evaluated by its Laplace continued fraction (modified
//! Lentz) and `erf(z) = 1 - exp(-z^2) w(iz)`. Symmetries reduce every
//! argument to the first quadrant first, so `erf(-z) = -erf(z)` and
//! `erf(conj z) = conj erf(z)` hold exactly.

use std::f64::consts::FRAC_2_SQRT_PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Largest `y^2 - x^2` for which `exp(y^2 - x^2)` stays finite.
const EXP_OVERFLOW: f64 = 709.0;

/// Series region, first quadrant. Outside it, either `x >= 2` (so the
/// continued fraction is evaluated at least two units above the real axis)
/// or the point lies beyond the ellipse `(y/6.3)^2 + (x/4.4)^2 = 1` where
/// the fraction converges in a few dozen terms.
fn in_series_region(x: f64, y: f64) -> bool {
    x < 2.0 && (y / 6.3).powi(2) + (x / 4.4).powi(2) < 1.0
}

/// `erf(z)` by its Maclaurin series.
fn erf_series(z: Complex64) -> Complex64 {
    let z2 = z * z;
    let mut power = z; // (-1)^n z^(2n+1) / n!
    let mut sum = z;
    for n in 1..400u32 {
        power *= -z2 / f64::from(n);
        let term = power / f64::from(2 * n + 1);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum * FRAC_2_SQRT_PI
}

/// Faddeeva `w(zeta)` for `Im zeta >= 0` outside the series region,
/// from `w = (i/sqrt(pi)) / (zeta - (1/2)/(zeta - 1/(zeta - (3/2)/(zeta - ...))))`.
fn faddeeva_cf(zeta: Complex64) -> Complex64 {
    const TINY: f64 = 1e-300;
    let tiny = Complex64::new(TINY, 0.0);
    let mut f = if zeta.norm() == 0.0 { tiny } else { zeta };
    let mut c = f;
    let mut d = Complex64::new(0.0, 0.0);
    for k in 1..20_000u32 {
        let a = -0.5 * f64::from(k);
        d = zeta + a * d;
        if d.norm() == 0.0 {
            d = tiny;
        }
        c = zeta + a / c;
        if c.norm() == 0.0 {
            c = tiny;
        }
        d = d.inv();
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    Complex64::new(0.0, FRAC_1_SQRT_PI) / f
}

/// `exp(-x^2 - 2ixy) w(-y + ix)` for `x, y >= 0`, i.e. `exp(-y^2) (1 - erf(x + iy))`.
fn scaled_erfc_first_quadrant(x: f64, y: f64) -> Complex64 {
    let w = faddeeva_cf(Complex64::new(-y, x));
    let phase = 2.0 * x * y;
    let e = (-x * x).exp();
    Complex64::new(e * phase.cos(), -e * phase.sin()) * w
}

fn erf_first_quadrant(x: f64, y: f64) -> Result<Complex64> {
    if in_series_region(x, y) {
        return Ok(erf_series(Complex64::new(x, y)));
    }
    let growth = (y - x) * (y + x);
    if growth > EXP_OVERFLOW {
        return Err(Error::ErfOverflow { re: x, im: y });
    }
    // erf = 1 - exp(-z^2) w(iz), with exp(-z^2) = exp(y^2 - x^2) exp(-2ixy)
    let w = faddeeva_cf(Complex64::new(-y, x));
    let phase = 2.0 * x * y;
    let e = growth.exp();
    Ok(Complex64::new(1.0, 0.0) - Complex64::new(e * phase.cos(), -e * phase.sin()) * w)
}

/// Error function of a complex argument.
///
/// Fails with [`Error::ErfOverflow`] when `|Im z|` is so much larger than
/// `|Re z|` that the result is not representable; the coincidence model
/// never needs that regime because it goes through [`scaled_dip_term`].
pub fn erf_complex(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::invalid("z", "must be finite"));
    }
    let q = erf_first_quadrant(z.re.abs(), z.im.abs())?;
    Ok(match (z.re < 0.0, z.im < 0.0) {
        (false, false) => q,
        (false, true) => q.conj(),
        (true, false) => -q.conj(),
        (true, true) => -q,
    })
}

/// Real error function, sharing the code path of [`scaled_dip_term`] on the
/// real axis so that `scaled_dip_term(x, 0) == erf_real(x)` bit for bit.
pub fn erf_real(x: f64) -> f64 {
    scaled_dip_term(x, 0.0)
}

/// `exp(-y^2) Re[erf(x + iy)]`, evaluated without forming either factor.
///
/// Equivalent to `(2/sqrt(pi)) int_0^x exp(-u^2) cos(2uy) du`, so it is odd
/// in `x`, even in `y` and bounded by `|erf(x)|`. Non-finite input yields NaN.
pub fn scaled_dip_term(x: f64, y: f64) -> f64 {
    if !(x.is_finite() && y.is_finite()) {
        return f64::NAN;
    }
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let (x, y) = (x.abs(), y.abs());
    if x == 0.0 {
        return 0.0;
    }
    let value = if in_series_region(x, y) {
        (-y * y).exp() * erf_series(Complex64::new(x, y)).re
    } else {
        (-y * y).exp() - scaled_erfc_first_quadrant(x, y).re
    };
    sign * value
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_special_values() {
        assert_eq!(erf_complex(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
        let one = erf_complex(Complex64::new(1.0, 0.0)).unwrap();
        assert!((one.re - 0.842_700_792_949_714_9).abs() < 1e-15);
        assert_eq!(one.im, 0.0);
        let i = erf_complex(Complex64::new(0.0, 1.0)).unwrap();
        assert_eq!(i.re, 0.0);
        assert!((i.im - 1.650_425_758_797_542_9).abs() < 1e-14);
    }

    #[test]
    fn erf_real_axis_tail() {
        // erfc(5) = 1.5374597944280348e-12
        assert!((1.0 - erf_real(5.0) - 1.537_459_794_428_034_8e-12).abs() < 1e-22 + 1e-16);
        assert_eq!(erf_real(30.0), 1.0);
        assert_eq!(erf_real(-30.0), -1.0);
        assert!((erf_real(2.0) - 0.995_322_265_018_952_7).abs() < 1e-15);
    }

    #[test]
    fn overflow_regime_is_an_error() {
        assert!(matches!(
            erf_complex(Complex64::new(0.5, 40.0)),
            Err(Error::ErfOverflow { .. })
        ));
        assert!(erf_complex(Complex64::new(f64::NAN, 0.0)).is_err());
        // the scaled kernel has no such limit
        assert!(scaled_dip_term(0.5, 40.0).is_finite());
        assert!(scaled_dip_term(0.5, 1e6).is_finite());
    }

    #[test]
    fn scaled_kernel_axes() {
        for &x in &[0.1, 0.7, 1.9, 2.0, 3.5, 8.0] {
            assert_eq!(scaled_dip_term(x, 0.0), erf_real(x));
            assert_eq!(scaled_dip_term(-x, 0.0), -erf_real(x));
        }
        for &y in &[0.0, 0.3, 5.0, 50.0, 1e3] {
            assert_eq!(scaled_dip_term(0.0, y), 0.0);
        }
        assert!(scaled_dip_term(f64::INFINITY, 1.0).is_nan());
    }
}
