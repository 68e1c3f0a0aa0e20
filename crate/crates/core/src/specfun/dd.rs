//! Double-double arithmetic (an unevaluated sum hi + lo of two f64).
//!
//! Only what the series engine needs: the four operations, exp, ln and
//! ln Γ for positive arguments. Accuracy is about 2^-100 relative.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

const LN2: Dd = Dd::new(0.693_147_180_559_945_3, 2.319_046_813_846_299_6e-17);
const LN_SQRT_2PI: Dd = Dd::new(0.918_938_533_204_672_8, -3.878_294_158_067_241_4e-17);

/// Relative unit roundoff of double-double arithmetic.
pub(crate) const DD_EPS: f64 = 1.0 / (1u128 << 104) as f64;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const fn new(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }

    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Exact product of two doubles.
    pub fn prod(a: f64, b: f64) -> Self {
        let (p, e) = two_prod(a, b);
        Self::new(p, e)
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Self::new(hi, lo)
    }

    pub fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self::new(hi, lo) + Self::from_f64(q3)
    }

    fn ldexp(self, k: i32) -> Self {
        // two steps so that 2^k itself never overflows
        let half = k / 2;
        let a = 2f64.powi(half);
        let b = 2f64.powi(k - half);
        Self::new(self.hi * a * b, self.lo * a * b)
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.8 {
            return Self::from_f64(f64::INFINITY);
        }
        if self.hi < -745.2 {
            return Self::default();
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2.mul_f64(k);
        // shrink the reduced argument, sum expm1 by Taylor, square back up
        const SQUARINGS: i32 = 9;
        let r = r.ldexp(-SQUARINGS);
        let mut term = r;
        let mut s = r;
        for n in 2..=11 {
            term = (term * r).div(Dd::from_f64(n as f64));
            s = s + term;
        }
        for _ in 0..SQUARINGS {
            s = s.mul_f64(2.0) + s * s;
        }
        (s + Dd::from_f64(1.0)).ldexp(k as i32)
    }

    pub fn ln(self) -> Self {
        debug_assert!(self.hi > 0.0);
        let y = Dd::from_f64(self.hi.ln());
        // one Newton step on exp(y) = x
        y + self * (-y).exp() - Dd::from_f64(1.0)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd::new(hi, lo)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd::new(-self.hi, -self.lo)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd::new(hi, lo)
    }
}

/// B_{2k} / (2k(2k-1)) as exact numerator and denominator.
const STIRLING: [(f64, f64); 15] = [
    (1.0, 12.0),
    (-1.0, 360.0),
    (1.0, 1260.0),
    (-1.0, 1680.0),
    (1.0, 1188.0),
    (-691.0, 360_360.0),
    (1.0, 156.0),
    (-3617.0, 122_400.0),
    (43_867.0, 244_188.0),
    (-174_611.0, 125_400.0),
    (77_683.0, 5_796.0),
    (-236_364_091.0, 1_506_960.0),
    (657_931.0, 300.0),
    (-3_392_780_147.0, 93_960.0),
    (1_723_168_255_201.0, 2_492_028.0),
];

/// Stirling's series is applied once the argument exceeds this.
const STIRLING_MIN: f64 = 25.0;

/// ln Γ(x) for x > 0 in double-double precision.
pub(crate) fn ln_gamma_dd(x: Dd) -> Dd {
    debug_assert!(x.hi > 0.0);
    let one = Dd::from_f64(1.0);
    let mut z = x;
    let mut prod = one;
    while z.hi < STIRLING_MIN {
        prod = prod * z;
        z = z + one;
    }
    let ln_z = z.ln();
    let mut acc = (z - Dd::from_f64(0.5)) * ln_z - z + LN_SQRT_2PI;
    let inv = one.div(z);
    let inv2 = inv * inv;
    let mut pow = inv;
    for (num, den) in STIRLING {
        acc = acc + (pow * Dd::from_f64(num)).div(Dd::from_f64(den));
        pow = pow * inv2;
    }
    if prod == one {
        acc
    } else {
        acc - prod.ln()
    }
}

/// ln|1/Γ(x)| and the sign of 1/Γ(x); double-double for x > 0, plain f64
/// accuracy through reflection otherwise.
pub(crate) fn ln_rgamma_dd(x: Dd) -> Option<(Dd, f64)> {
    if x.hi > 0.0 {
        return Some((-ln_gamma_dd(x), 1.0));
    }
    super::gamma::ln_rgamma_signed(x.to_f64()).map(|(l, s)| (Dd::from_f64(l), s))
}
