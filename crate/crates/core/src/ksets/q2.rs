//! Exact arithmetic in ℚ(√2).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `a + b√2` with rational `a`, `b`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Q2Scalar {
    a: BigRational,
    b: BigRational,
}

impl Q2Scalar {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        Q2Scalar { a, b }
    }

    pub fn from_ints(a: i64, b: i64) -> Self {
        Q2Scalar::new(BigRational::from_integer(a.into()), BigRational::from_integer(b.into()))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Q2Scalar::rational(BigRational::new(num.into(), den.into()))
    }

    pub fn rational(a: BigRational) -> Self {
        Q2Scalar::new(a, BigRational::zero())
    }

    pub fn zero() -> Self {
        Q2Scalar::from_ints(0, 0)
    }

    pub fn one() -> Self {
        Q2Scalar::from_ints(1, 0)
    }

    pub fn sqrt2() -> Self {
        Q2Scalar::from_ints(0, 1)
    }

    /// `√2 / 2`, the cosine and sine of a quarter right angle.
    pub fn half_sqrt2() -> Self {
        Q2Scalar::new(BigRational::zero(), BigRational::new(1.into(), 2.into()))
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn sqrt2_part(&self) -> &BigRational {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// Galois conjugate `a − b√2`.
    pub fn conjugate(&self) -> Self {
        Q2Scalar::new(self.a.clone(), -self.b.clone())
    }

    /// Field norm `a² − 2b²`; zero only for zero.
    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - BigRational::from_integer(2.into()) * &self.b * &self.b
    }

    pub fn inverse(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm();
        Some(Q2Scalar::new(&self.a / &n, -&self.b / &n))
    }

    pub fn checked_div(&self, other: &Q2Scalar) -> Option<Self> {
        other.inverse().map(|inv| self * &inv)
    }

    /// Exact sign of the real number `a + b√2`.
    pub fn signum(&self) -> Ordering {
        let sa = sign_of(&self.a);
        let sb = sign_of(&self.b);
        match (sa, sb) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (x, y) if x == y => x,
            // Opposite signs: compare a² with 2b².
            (x, _) => {
                let a2 = &self.a * &self.a;
                let b2 = BigRational::from_integer(2.into()) * &self.b * &self.b;
                match a2.cmp(&b2) {
                    Ordering::Greater => x,
                    Ordering::Less => x.reverse(),
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        let b = self.b.to_f64().unwrap_or(f64::NAN);
        a + b * std::f64::consts::SQRT_2
    }
}

fn sign_of(x: &BigRational) -> Ordering {
    if x.is_positive() {
        Ordering::Greater
    } else if x.is_negative() {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

impl PartialOrd for Q2Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Q2Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl<'a> $tr<&'a Q2Scalar> for &'a Q2Scalar {
            type Output = Q2Scalar;
            fn $method(self, rhs: &'a Q2Scalar) -> Q2Scalar {
                let f: fn(&Q2Scalar, &Q2Scalar) -> Q2Scalar = $body;
                f(self, rhs)
            }
        }
        impl $tr<Q2Scalar> for Q2Scalar {
            type Output = Q2Scalar;
            fn $method(self, rhs: Q2Scalar) -> Q2Scalar {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, |x, y| Q2Scalar::new(&x.a + &y.a, &x.b + &y.b));
forward_binop!(Sub, sub, |x, y| Q2Scalar::new(&x.a - &y.a, &x.b - &y.b));
forward_binop!(Mul, mul, |x, y| {
    let two = BigRational::from_integer(2.into());
    Q2Scalar::new(&x.a * &y.a + two * &x.b * &y.b, &x.a * &y.b + &x.b * &y.a)
});

impl Neg for &Q2Scalar {
    type Output = Q2Scalar;
    fn neg(self) -> Q2Scalar {
        Q2Scalar::new(-self.a.clone(), -self.b.clone())
    }
}

impl Neg for Q2Scalar {
    type Output = Q2Scalar;
    fn neg(self) -> Q2Scalar {
        -&self
    }
}

impl fmt::Debug for Q2Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Formats as `p/q`, `r/s*sqrt2` or `p/q+r/s*sqrt2`; integers drop `/1`.
impl fmt::Display for Q2Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a.is_zero(), self.b.is_zero()) {
            (_, true) => write!(f, "{}", self.a),
            (true, false) => write!(f, "{}*sqrt2", self.b),
            (false, false) => {
                let sep = if self.b.is_negative() { "" } else { "+" };
                write!(f, "{}{}{}*sqrt2", self.a, sep, self.b)
            }
        }
    }
}

fn parse_rational(s: &str) -> Result<BigRational, String> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| format!("bad numerator `{num}`"))?;
    let den: BigInt = den.parse().map_err(|_| format!("bad denominator `{den}`"))?;
    if den.is_zero() {
        return Err("zero denominator".into());
    }
    Ok(BigRational::new(num, den))
}

/// Parses sums of terms `p`, `p/q`, `sqrt2`, `p*sqrt2`, `p/q*sqrt2`, each
/// with an optional sign, e.g. `1/2-3/4*sqrt2`.
impl FromStr for Q2Scalar {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err("empty coordinate".into());
        }
        let mut terms = Vec::new();
        let mut start = 0;
        for (i, ch) in s.char_indices() {
            if (ch == '+' || ch == '-') && i > start {
                terms.push(&s[start..i]);
                start = i;
            }
        }
        terms.push(&s[start..]);

        let mut acc = Q2Scalar::zero();
        for term in terms {
            let (negative, body) = match term.as_bytes().first() {
                Some(b'-') => (true, &term[1..]),
                Some(b'+') => (false, &term[1..]),
                _ => (false, term),
            };
            if body.is_empty() {
                return Err(format!("dangling sign in `{text}`"));
            }
            let value = if let Some(coef) = body.strip_suffix("sqrt2") {
                let coef = match coef {
                    "" => BigRational::one(),
                    c => parse_rational(
                        c.strip_suffix('*')
                            .ok_or_else(|| format!("expected `*sqrt2` in `{text}`"))?,
                    )?,
                };
                Q2Scalar::new(BigRational::zero(), coef)
            } else {
                Q2Scalar::rational(parse_rational(body)?)
            };
            acc = if negative { acc - value } else { acc + value };
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_q2() -> impl Strategy<Value = Q2Scalar> {
        (-50i64..50, 1i64..20, -50i64..50, 1i64..20).prop_map(|(a, b, c, d)| {
            Q2Scalar::new(BigRational::new(a.into(), b.into()), BigRational::new(c.into(), d.into()))
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(x in arb_q2(), y in arb_q2(), z in arb_q2()) {
            prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
            prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
            prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
            prop_assert_eq!(&x * &y, &y * &x);
        }

        #[test]
        fn inverse_and_sign(x in arb_q2()) {
            if let Some(inv) = x.inverse() {
                prop_assert_eq!(&x * &inv, Q2Scalar::one());
            } else {
                prop_assert!(x.is_zero());
            }
            let f = x.to_f64();
            if f.abs() > 1e-9 {
                prop_assert_eq!(x.signum(), f.partial_cmp(&0.0).unwrap());
            }
        }

        #[test]
        fn display_parses_back(x in arb_q2()) {
            prop_assert_eq!(x.to_string().parse::<Q2Scalar>().unwrap(), x);
        }
    }

    #[test]
    fn parse_forms() {
        assert_eq!("3".parse::<Q2Scalar>().unwrap(), Q2Scalar::from_ints(3, 0));
        assert_eq!("-3/6".parse::<Q2Scalar>().unwrap(), Q2Scalar::from_ratio(-1, 2));
        assert_eq!("sqrt2".parse::<Q2Scalar>().unwrap(), Q2Scalar::sqrt2());
        assert_eq!("-sqrt2".parse::<Q2Scalar>().unwrap(), -Q2Scalar::sqrt2());
        assert_eq!("1/2+1/2*sqrt2".parse::<Q2Scalar>().unwrap().to_string(), "1/2+1/2*sqrt2");
        assert_eq!("1/2-3/4*sqrt2".parse::<Q2Scalar>().unwrap().sqrt2_part(), &BigRational::new((-3).into(), 4.into()));
        for bad in ["", "1/0", "x", "2*", "1+", "2sqrt2"] {
            assert!(bad.parse::<Q2Scalar>().is_err(), "{bad}");
        }
    }

    #[test]
    fn sqrt2_squares_to_two() {
        assert_eq!(&Q2Scalar::sqrt2() * &Q2Scalar::sqrt2(), Q2Scalar::from_ints(2, 0));
        assert_eq!(&Q2Scalar::half_sqrt2() * &Q2Scalar::half_sqrt2(), Q2Scalar::from_ratio(1, 2));
        assert_eq!(Q2Scalar::from_ints(-3, 2).signum(), Ordering::Less);
        assert_eq!(Q2Scalar::from_ints(3, -2).signum(), Ordering::Greater);
    }
}
