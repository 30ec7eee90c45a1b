//! Double-double arithmetic (about 106 bits of significand).
//!
//! The open-loop tails of the stylized experiments reach suboptimality values
//! around 1e-20 while f itself is O(1e-2), which is below what a 64-bit
//! accumulator can resolve. The kernels follow the classic error-free
//! transformations (Dekker, Knuth) with FMA-based products.

use crate::scalar::Scalar;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};
// next 53 bits of ln 2, so k·ln 2 stays exact to ~1e-49 for |k| ≤ 1100
const LN2_TAIL: f64 = 5.707_708_438_416_212e-34;

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
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    /// Builds a normalized value from an unevaluated sum `hi + lo`.
    pub fn new(hi: f64, lo: f64) -> Self {
        let (h, l) = two_sum(hi, lo);
        Dd { hi: h, lo: l }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    fn from_parts(hi: f64, lo: f64) -> Self {
        let (h, l) = quick_two_sum(hi, lo);
        Dd { hi: h, lo: l }
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Self {
        let (s1, s2) = two_sum(self.hi, b);
        Dd::from_parts(s1, s2 + self.lo)
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p1, p2) = two_prod(self.hi, b);
        Dd::from_parts(p1, p2 + self.lo * b)
    }

    pub fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let (p1, p2) = two_prod(q1, b);
        let (s, e) = two_sum(self.hi, -p1);
        let e = e - p2 + self.lo;
        let q2 = (s + e) / b;
        Dd::from_parts(q1, q2)
    }

    #[inline]
    pub fn sqr(self) -> Self {
        let (p1, p2) = two_prod(self.hi, self.hi);
        let p2 = p2 + 2.0 * self.hi * self.lo + self.lo * self.lo;
        Dd::from_parts(p1, p2)
    }

    /// Exact multiplication by a power of two.
    #[inline]
    fn scale_pow2(self, k: i32) -> Self {
        let k1 = k / 2;
        let k2 = k - k1;
        let f1 = 2f64.powi(k1);
        let f2 = 2f64.powi(k2);
        Dd {
            hi: self.hi * f1 * f2,
            lo: self.lo * f1 * f2,
        }
    }

    pub fn is_nan(self) -> bool {
        self.hi.is_nan()
    }

    fn exp_impl(self) -> Self {
        if self.hi.is_nan() {
            return self;
        }
        if self.hi > 709.78 {
            return Dd::from(f64::INFINITY);
        }
        if self.hi < -745.2 {
            return Dd::ZERO;
        }
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ONE;
        }
        let k = (self.hi / LN2.hi + 0.5).floor();
        let r = (self - LN2.mul_f64(k)).add_f64(-k * LN2_TAIL).scale_pow2(-9);
        // expm1(r) by Horner, |r| <= 6.8e-4 so ten terms reach 1e-35
        let mut s = Dd::ONE;
        for i in (2..=11).rev() {
            s = Dd::ONE + (s * r).div_f64(i as f64);
        }
        let mut s = s * r;
        for _ in 0..9 {
            s = s.scale_pow2(1) + s.sqr();
        }
        (s + Dd::ONE).scale_pow2(k as i32)
    }

    fn ln_impl(self) -> Self {
        if self.hi.is_nan() || self.hi < 0.0 {
            return Dd::from(f64::NAN);
        }
        if self.hi == 0.0 {
            return Dd::from(f64::NEG_INFINITY);
        }
        if self.hi.is_infinite() {
            return self;
        }
        let x = Dd::from(self.hi.ln());
        // x + ln(1 + u) with u = v·e^{−x} − 1 tiny; two series terms leave O(u³)
        let u = self * (-x).exp_impl() - Dd::ONE;
        x + u - u.sqr().scale_pow2(-1)
    }

    fn sqrt_impl(self) -> Self {
        if self.hi <= 0.0 {
            if self.hi == 0.0 {
                return Dd::ZERO;
            }
            return Dd::from(f64::NAN);
        }
        if self.hi.is_infinite() {
            return self;
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let (p1, p2) = two_prod(ax, ax);
        let diff = self - Dd { hi: p1, lo: p2 };
        Dd::from(ax).add_f64(diff.hi * (x * 0.5))
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.hi)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Dd::from_parts(s1, s2 + t2)
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        Dd::from_parts(p1, p2)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        Dd::from_parts(q1, q2).add_f64(q3)
    }
}

macro_rules! assign_op {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr for Dd {
            #[inline]
            fn $m(&mut self, b: Dd) {
                *self = *self $op b;
            }
        }
    };
}
assign_op!(AddAssign, add_assign, +);
assign_op!(SubAssign, sub_assign, -);
assign_op!(MulAssign, mul_assign, *);
assign_op!(DivAssign, div_assign, /);

impl Scalar for Dd {
    const NAME: &'static str = "double-double";
    const EPSILON: f64 = 1.0e-32;

    #[inline]
    fn from_f64(v: f64) -> Self {
        Dd::from(v)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
    #[inline]
    fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }
    fn sqrt(self) -> Self {
        self.sqrt_impl()
    }
    fn exp(self) -> Self {
        self.exp_impl()
    }
    fn ln(self) -> Self {
        self.ln_impl()
    }
    fn ln_1p(self) -> Self {
        if self.hi.abs() < 1e-3 {
            // series keeps relative accuracy for tiny arguments
            let mut term = self;
            let mut sum = self;
            for k in 2..40 {
                term = -(term * self);
                let add = term.div_f64(k as f64);
                sum += add;
                if add.hi.abs() < 1e-34 * sum.hi.abs() {
                    break;
                }
            }
            sum
        } else {
            (Dd::ONE + self).ln_impl()
        }
    }
    fn powf(self, e: Self) -> Self {
        if self.hi == 0.0 && self.lo == 0.0 {
            return if e.hi > 0.0 { Dd::ZERO } else { Dd::from(f64::INFINITY) };
        }
        (e * self.ln_impl()).exp_impl()
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }
    #[inline]
    fn mul_f64(self, v: f64) -> Self {
        Dd::mul_f64(self, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Dd, b: Dd) -> f64 {
        ((a - b).to_f64() / b.to_f64()).abs()
    }

    #[test]
    fn sqrt_two_squares_back() {
        let s = Dd::from(2.0).sqrt();
        assert!(rel(s * s, Dd::from(2.0)) < 1e-31);
    }

    #[test]
    fn exp_ln_roundtrip() {
        for &v in &[0.7, 1e-5, 3.0, 123.456, 1e-200, 5e10] {
            let x = Dd::from(v);
            // exp amplifies the absolute error of ln by |ln x|
            let tol = 1e-31 * v.ln().abs().max(1.0);
            assert!(rel(x.ln().exp(), x) < tol, "v = {v}: {}", rel(x.ln().exp(), x));
        }
        // below about -650 the low word goes subnormal
        for &v in &[-600.0, -3.2, 0.125, 2.5, 600.0] {
            let x = Dd::from(v) + Dd::from(v * 1e-17);
            let back = x.exp().ln();
            assert!(((back - x).to_f64()).abs() < 1e-29 * v.abs().max(1.0), "v = {v}");
        }
    }

    #[test]
    fn exp_one_matches_e() {
        // e = 2.718281828459045 + 1.4456468917292502e-16
        let e = Dd::new(std::f64::consts::E, 1.4456468917292502e-16);
        assert!(rel(Dd::ONE.exp(), e) < 1e-31);
    }

    #[test]
    fn division_inverts_multiplication() {
        let a = Dd::from(1.0) / Dd::from(3.0);
        assert!(rel(a * Dd::from(3.0), Dd::ONE) < 1e-31);
        let b = Dd::from(7.0).div_f64(3.0);
        assert!(rel(b, Dd::from(7.0) / Dd::from(3.0)) < 1e-31);
    }

    #[test]
    fn ln_1p_small_argument() {
        let x = Dd::from(1e-20);
        let v = x.ln_1p();
        // ln(1+x) = x - x^2/2 to well beyond 32 digits
        let expect = x - x * x.div_f64(2.0);
        assert!(rel(v, expect) < 1e-30);
    }

    #[test]
    fn powf_consistency() {
        let x = Dd::from(0.3);
        let y = x.powf(Dd::from(3.0));
        assert!(rel(y, x * x * x) < 1e-30);
    }

    #[test]
    fn ordering_uses_low_word() {
        let a = Dd::new(1.0, 1e-20);
        assert!(a > Dd::ONE);
        assert!(Dd::ONE < a);
    }
}
