//! Test-only reference implementations, independent of the library code paths.

#![allow(dead_code)]

use num_complex::Complex64;

/// Double-double number: `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn norm(hi: f64, lo: f64) -> Dd {
        let (h, l) = quick_two_sum(hi, lo);
        Dd { hi: h, lo: l }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::norm(s, e + f)
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::norm(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    pub fn mul_f(self, b: f64) -> Dd {
        self.mul(Dd::from(b))
    }

    pub fn div_f(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let r = self.sub(Dd::from(d).mul_f(q1));
        let q2 = r.hi / d;
        let r = r.sub(Dd::from(d).mul_f(q2));
        let q3 = r.hi / d;
        let (a, b) = quick_two_sum(q1, q2);
        Dd::from(a).add(Dd::from(b + q3))
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CDd {
    pub re: Dd,
    pub im: Dd,
}

impl CDd {
    pub fn from(z: Complex64) -> CDd {
        CDd {
            re: Dd::from(z.re),
            im: Dd::from(z.im),
        }
    }
    pub fn add(self, o: CDd) -> CDd {
        CDd {
            re: self.re.add(o.re),
            im: self.im.add(o.im),
        }
    }
    pub fn mul(self, o: CDd) -> CDd {
        CDd {
            re: self.re.mul(o.re).sub(self.im.mul(o.im)),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }
    pub fn div_f(self, d: f64) -> CDd {
        CDd {
            re: self.re.div_f(d),
            im: self.im.div_f(d),
        }
    }
    pub fn neg(self) -> CDd {
        CDd {
            re: self.re.neg(),
            im: self.im.neg(),
        }
    }
    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
    fn mag(self) -> f64 {
        self.to_c64().norm()
    }
}

/// Maclaurin series `(2/sqrt pi) sum (-1)^n z^(2n+1) / (n! (2n+1))` summed in
/// double-double until the terms stop contributing.
pub fn erf_series_oracle(z: Complex64) -> Complex64 {
    let two_over_sqrt_pi = Dd {
        hi: std::f64::consts::FRAC_2_SQRT_PI,
        lo: 1.533_545_961_316_588e-17,
    };
    let zz = CDd::from(z);
    let minus_z2 = zz.mul(zz).neg();
    let mut power = zz;
    let mut sum = zz;
    for n in 1..2000u32 {
        power = power.mul(minus_z2).div_f(f64::from(n));
        let term = power.div_f(f64::from(2 * n + 1));
        sum = sum.add(term);
        if n as f64 > z.norm_sqr() && term.mag() < 1e-34 * sum.mag().max(1e-300) {
            break;
        }
    }
    CDd {
        re: sum.re.mul(two_over_sqrt_pi),
        im: sum.im.mul(two_over_sqrt_pi),
    }
    .to_c64()
}

/// Adaptive Simpson with Richardson correction, test-side copy.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let d = left + right - whole;
        if depth > 40 || d.abs() <= 15.0 * tol {
            return left + right + d / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth + 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth + 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 0)
}

/// `exp(-y^2) Re erf(x + iy)` from the path integral along `u + iy`:
/// `(2/sqrt pi) int_0^x exp(-u^2) cos(2 u y) du`, split into panels no wider
/// than a quarter of the cosine period.
pub fn scaled_dip_oracle(x: f64, y: f64) -> f64 {
    let f = |u: f64| (-u * u).exp() * (2.0 * u * y).cos();
    let period = if y == 0.0 {
        f64::INFINITY
    } else {
        std::f64::consts::PI / y.abs()
    };
    let n = ((x.abs() / (0.25 * period)).ceil() as usize).max(1);
    let h = x / n as f64;
    let sum: f64 = (0..n)
        .map(|k| adaptive_simpson(&f, h * k as f64, h * (k + 1) as f64, 1e-16))
        .sum();
    std::f64::consts::FRAC_2_SQRT_PI * sum
}

/// Small deterministic generator for reproducible random test inputs.
pub struct XorShift(pub u64);

impl XorShift {
    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
