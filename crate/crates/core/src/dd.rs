//! Double-double (two-f64) arithmetic for the extended-precision
//! trajectory mode. Roughly 106 mantissa bits; error-free transforms per
//! Dekker/Knuth with `f64::mul_add` for the product split.
//!
//! Extended precision here is implementation-defined: it is "two f64s",
//! not IEEE binary128, and only the operations the quadratic gradient
//! descent recurrence needs are provided.

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn mul_f64(self, c: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, c);
        let p2 = p2 + self.lo * c;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }
}

impl std::ops::Add for Dd {
    type Output = Dd;

    #[inline]
    fn add(self, other: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, other.hi);
        let (t1, t2) = two_sum(self.lo, other.lo);
        let (s1, s2b) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2b + t2);
        Dd { hi, lo }
    }
}

impl std::ops::Neg for Dd {
    type Output = Dd;

    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl std::ops::Sub for Dd {
    type Output = Dd;

    #[inline]
    fn sub(self, other: Dd) -> Dd {
        self + (-other)
    }
}

impl std::ops::Mul for Dd {
    type Output = Dd;

    #[inline]
    fn mul(self, other: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, other.hi);
        let p2 = p2 + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

/// dot(a, b) accumulated in double-double.
pub fn dd_dot(a: &[Dd], b: &[Dd]) -> Dd {
    let mut acc = Dd::ZERO;
    for (&x, &y) in a.iter().zip(b) {
        acc = acc + x * y;
    }
    acc
}

/// Euclidean norm of a double-double vector, returned as f64 (the final
/// square root does not need the extra bits).
pub fn dd_norm2(a: &[Dd]) -> f64 {
    let mut acc = Dd::ZERO;
    for &x in a {
        acc = acc + x * x;
    }
    acc.to_f64().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_bits_a_f64_drops() {
        // 1 + 1e-20 - 1 collapses to 0 in f64 but survives in dd
        let x = Dd::from_f64(1.0) + Dd::from_f64(1e-20);
        let y = x - Dd::from_f64(1.0);
        assert_eq!(y.to_f64(), 1e-20);
    }

    #[test]
    fn product_error_term() {
        // (1 + 2^-53)^2 = 1 + 2^-52 + 2^-106; dd holds the middle term
        let e = (2.0f64).powi(-53);
        let x = Dd::from_f64(1.0) + Dd::from_f64(e);
        let sq = x * x;
        let diff = sq - Dd::from_f64(1.0);
        assert!((diff.to_f64() - 2.0 * e).abs() < 1e-30);
    }

    #[test]
    fn dot_and_norm() {
        let v = vec![Dd::from_f64(3.0), Dd::from_f64(4.0)];
        assert_eq!(dd_dot(&v, &v).to_f64(), 25.0);
        assert_eq!(dd_norm2(&v), 5.0);
    }
}
