//! Exact arithmetic in the real quadratic ring `Z[lambda]` with
//! `lambda^2 = lambda + m`.
//!
//! Elements are stored as integer pairs `a + b*lambda`. All ring operations
//! use checked 128-bit arithmetic, and comparison is exact (integer sign
//! tests, never floating point), so point sets can be sorted and difference
//! sets deduplicated without rounding surprises.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum ArithError {
    /// A component of the result does not fit in 128 bits.
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    /// `z / lambda` has no representative in `Z[lambda]`.
    #[error("element is not divisible by lambda")]
    NotDivisible,
}

/// Element `a + b*lambda` of `Z[lambda]`.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
pub struct QuadInt {
    pub a: i128,
    pub b: i128,
}

impl QuadInt {
    pub const ZERO: QuadInt = QuadInt { a: 0, b: 0 };
    pub const ONE: QuadInt = QuadInt { a: 1, b: 0 };
    pub const LAMBDA: QuadInt = QuadInt { a: 0, b: 1 };

    pub fn new(a: i128, b: i128) -> Self {
        QuadInt { a, b }
    }
}

impl fmt::Display for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a, self.b) {
            (a, 0) => write!(f, "{a}"),
            (0, 1) => write!(f, "lambda"),
            (0, -1) => write!(f, "-lambda"),
            (0, b) => write!(f, "{b}*lambda"),
            (a, 1) => write!(f, "{a}+lambda"),
            (a, -1) => write!(f, "{a}-lambda"),
            (a, b) if b > 0 => write!(f, "{a}+{b}*lambda"),
            (a, b) => write!(f, "{a}-{}*lambda", -b),
        }
    }
}

/// Shared parameters of the ring `Z[lambda]`, `lambda = (1 + sqrt(4m+1))/2`.
///
/// When `4m+1` is a perfect square, `lambda` is the integer `l+1` and the
/// ring collapses to `Z`; elements are then kept in the normal form `(a, 0)`
/// so that hashing and equality agree with numerical equality.
#[derive(Copy, Clone, Debug)]
pub struct RingContext {
    m: u32,
    lambda_plus: f64,
    lambda_minus: f64,
    sqrt_disc: f64,
    int_sqrt: Option<i128>,
}

fn exact_isqrt(n: i128) -> Option<i128> {
    debug_assert!(n >= 0);
    let r = n.isqrt();
    (r * r == n).then_some(r)
}

impl RingContext {
    /// `m >= 1` is the family parameter.
    pub fn new(m: u32) -> Self {
        assert!(m >= 1, "family parameter m must be positive");
        let disc = 4 * i128::from(m) + 1;
        let sqrt_disc = (disc as f64).sqrt();
        RingContext {
            m,
            lambda_plus: (1.0 + sqrt_disc) / 2.0,
            lambda_minus: (1.0 - sqrt_disc) / 2.0,
            sqrt_disc,
            int_sqrt: exact_isqrt(disc),
        }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Discriminant `4m + 1`.
    pub fn disc(&self) -> i128 {
        4 * i128::from(self.m) + 1
    }

    pub fn lambda_plus(&self) -> f64 {
        self.lambda_plus
    }

    pub fn lambda_minus(&self) -> f64 {
        self.lambda_minus
    }

    pub fn sqrt_disc(&self) -> f64 {
        self.sqrt_disc
    }

    /// `Some(lambda)` when `4m+1` is a perfect square and `lambda` is an integer.
    pub fn integer_lambda(&self) -> Option<i128> {
        self.int_sqrt.map(|s| (1 + s) / 2)
    }

    pub fn is_integer_lambda(&self) -> bool {
        self.int_sqrt.is_some()
    }

    /// Real embedding `a + b*lambda`.
    pub fn value(&self, x: QuadInt) -> f64 {
        x.a as f64 + x.b as f64 * self.lambda_plus
    }

    /// Canonical representative: identity for irrational `lambda`, collapse
    /// to `(a + b*lambda, 0)` when `lambda` is an integer.
    pub fn normalize(&self, x: QuadInt) -> Result<QuadInt, ArithError> {
        match self.integer_lambda() {
            None => Ok(x),
            Some(l) => {
                let v = x
                    .b
                    .checked_mul(l)
                    .and_then(|bl| x.a.checked_add(bl))
                    .ok_or(ArithError::Overflow("normalize"))?;
                Ok(QuadInt::new(v, 0))
            }
        }
    }

    pub fn add(&self, x: QuadInt, y: QuadInt) -> Result<QuadInt, ArithError> {
        let a = x.a.checked_add(y.a).ok_or(ArithError::Overflow("add"))?;
        let b = x.b.checked_add(y.b).ok_or(ArithError::Overflow("add"))?;
        Ok(QuadInt::new(a, b))
    }

    pub fn sub(&self, x: QuadInt, y: QuadInt) -> Result<QuadInt, ArithError> {
        let a = x.a.checked_sub(y.a).ok_or(ArithError::Overflow("sub"))?;
        let b = x.b.checked_sub(y.b).ok_or(ArithError::Overflow("sub"))?;
        Ok(QuadInt::new(a, b))
    }

    pub fn neg(&self, x: QuadInt) -> Result<QuadInt, ArithError> {
        let a = x.a.checked_neg().ok_or(ArithError::Overflow("neg"))?;
        let b = x.b.checked_neg().ok_or(ArithError::Overflow("neg"))?;
        Ok(QuadInt::new(a, b))
    }

    /// Product via the reduction `lambda^2 = lambda + m`:
    /// `(a1 + b1 l)(a2 + b2 l) = (a1 a2 + m b1 b2) + (a1 b2 + a2 b1 + b1 b2) l`.
    pub fn mul(&self, x: QuadInt, y: QuadInt) -> Result<QuadInt, ArithError> {
        let err = ArithError::Overflow("mul");
        let m = i128::from(self.m);
        let a = x
            .a
            .checked_mul(y.a)
            .and_then(|aa| {
                x.b.checked_mul(y.b)
                    .and_then(|bb| bb.checked_mul(m))
                    .and_then(|mbb| aa.checked_add(mbb))
            })
            .ok_or(err)?;
        let b = x
            .a
            .checked_mul(y.b)
            .and_then(|ab| {
                y.a.checked_mul(x.b).and_then(|ba| ab.checked_add(ba))
            })
            .and_then(|s| x.b.checked_mul(y.b).and_then(|bb| s.checked_add(bb)))
            .ok_or(err)?;
        self.normalize(QuadInt::new(a, b))
    }

    /// Exact division by `lambda`. Since `1/lambda = (lambda - 1)/m`, the
    /// quotient of `a + b*lambda` is `(b - a/m) + (a/m) lambda`, defined iff
    /// `m | a`. `NotDivisible` means the corresponding renormalisation term
    /// has an argument outside `Z[lambda]` and vanishes.
    pub fn div_lambda(&self, z: QuadInt) -> Result<QuadInt, ArithError> {
        if let Some(l) = self.integer_lambda() {
            let z = self.normalize(z)?;
            if z.a % l != 0 {
                return Err(ArithError::NotDivisible);
            }
            return Ok(QuadInt::new(z.a / l, 0));
        }
        let m = i128::from(self.m);
        if z.a % m != 0 {
            return Err(ArithError::NotDivisible);
        }
        let q = z.a / m;
        let a = z.b.checked_sub(q).ok_or(ArithError::Overflow("div_lambda"))?;
        Ok(QuadInt::new(a, q))
    }

    /// Exact order of the real embeddings.
    ///
    /// The sign of `d = da + db*lambda` equals the sign of
    /// `(2 da + db) + db * sqrt(4m+1)`, decided by integer sign cases and,
    /// when the two terms compete, by comparing `(2 da + db)^2` against
    /// `(4m+1) db^2`.
    pub fn cmp(&self, x: QuadInt, y: QuadInt) -> Ordering {
        let (da, db) = match (x.a.checked_sub(y.a), x.b.checked_sub(y.b)) {
            (Some(da), Some(db)) => (da, db),
            _ => return self.cmp_big(x, y),
        };
        let lin = match da.checked_mul(2).and_then(|t| t.checked_add(db)) {
            Some(lin) => lin,
            None => return self.cmp_big(x, y),
        };
        self.sign_lin_comb(lin, db)
    }

    /// Sign of `u + v*sqrt(disc)` as an `Ordering` against zero.
    fn sign_lin_comb(&self, u: i128, v: i128) -> Ordering {
        if let Some(s) = self.int_sqrt {
            return match v.checked_mul(s).and_then(|vs| u.checked_add(vs)) {
                Some(t) => t.cmp(&0),
                None => sign_lin_comb_big(&BigInt::from(u), &BigInt::from(v), self.disc()),
            };
        }
        match (u.signum(), v.signum()) {
            (0, 0) => Ordering::Equal,
            (_, 0) => u.cmp(&0),
            (0, _) => v.cmp(&0),
            (1, 1) => Ordering::Greater,
            (-1, -1) => Ordering::Less,
            _ => {
                // Opposite signs: compare u^2 with disc * v^2.
                let sq = |t: i128| t.checked_mul(t);
                match (sq(u), sq(v).and_then(|v2| v2.checked_mul(self.disc()))) {
                    (Some(u2), Some(dv2)) => {
                        if u > 0 {
                            u2.cmp(&dv2)
                        } else {
                            dv2.cmp(&u2)
                        }
                    }
                    _ => sign_lin_comb_big(&BigInt::from(u), &BigInt::from(v), self.disc()),
                }
            }
        }
    }

    fn cmp_big(&self, x: QuadInt, y: QuadInt) -> Ordering {
        let da = BigInt::from(x.a) - BigInt::from(y.a);
        let db = BigInt::from(x.b) - BigInt::from(y.b);
        let lin = 2 * da + &db;
        sign_lin_comb_big(&lin, &db, self.disc())
    }
}

/// Arbitrary-precision fallback for the sign of `u + v*sqrt(disc)`.
fn sign_lin_comb_big(u: &BigInt, v: &BigInt, disc: i128) -> Ordering {
    use num_bigint::Sign;
    if let Some(s) = exact_isqrt(disc) {
        return sign_to_ordering((u + v * BigInt::from(s)).sign());
    }
    match (u.sign(), v.sign()) {
        (Sign::NoSign, Sign::NoSign) => Ordering::Equal,
        (s, Sign::NoSign) => sign_to_ordering(s),
        (Sign::NoSign, s) => sign_to_ordering(s),
        (Sign::Plus, Sign::Plus) => Ordering::Greater,
        (Sign::Minus, Sign::Minus) => Ordering::Less,
        (us, _) => {
            let u2 = u * u;
            let dv2 = v * v * disc;
            if us == Sign::Plus {
                u2.cmp(&dv2)
            } else {
                dv2.cmp(&u2)
            }
        }
    }
}

fn sign_to_ordering(s: num_bigint::Sign) -> Ordering {
    match s {
        num_bigint::Sign::Minus => Ordering::Less,
        num_bigint::Sign::NoSign => Ordering::Equal,
        num_bigint::Sign::Plus => Ordering::Greater,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx3() -> RingContext {
        RingContext::new(3)
    }

    #[test]
    fn roots_of_characteristic_polynomial() {
        for m in 1..=50u32 {
            let ctx = RingContext::new(m);
            for l in [ctx.lambda_plus(), ctx.lambda_minus()] {
                assert!((l * l - l - f64::from(m)).abs() < 1e-9, "m={m}, root {l}");
            }
            assert!(ctx.lambda_plus() > 1.0);
        }
    }

    #[test]
    fn add_componentwise() {
        let ctx = ctx3();
        let s = ctx.add(QuadInt::new(1, 2), QuadInt::new(3, -1)).unwrap();
        assert_eq!(s, QuadInt::new(4, 1));
        let x = QuadInt::new(-7, 12);
        assert_eq!(ctx.add(x, QuadInt::ZERO).unwrap(), x);
    }

    #[test]
    fn value_of_one_plus_lambda() {
        // 1 + lambda with lambda = (1 + sqrt(13))/2
        let ctx = ctx3();
        let v = ctx.value(QuadInt::new(1, 1));
        let expect = 1.0 + (1.0 + 13f64.sqrt()) / 2.0;
        assert!((v - expect).abs() < 1e-12);
        assert!((v - 3.302_775_637_731_995).abs() < 1e-12);
    }

    #[test]
    fn mul_defining_relation() {
        let ctx = ctx3();
        // lambda * lambda = m + lambda
        assert_eq!(
            ctx.mul(QuadInt::LAMBDA, QuadInt::LAMBDA).unwrap(),
            QuadInt::new(3, 1)
        );
        let x = QuadInt::new(-5, 9);
        assert_eq!(ctx.mul(x, QuadInt::ONE).unwrap(), x);
        // (1 - lambda) * lambda = lambda - lambda^2 = -m
        assert_eq!(
            ctx.mul(QuadInt::new(1, -1), QuadInt::LAMBDA).unwrap(),
            QuadInt::new(-3, 0)
        );
    }

    #[test]
    fn div_lambda_examples() {
        let ctx = ctx3();
        assert_eq!(ctx.div_lambda(QuadInt::LAMBDA).unwrap(), QuadInt::ONE);
        assert_eq!(
            ctx.div_lambda(QuadInt::new(-3, 0)).unwrap(),
            QuadInt::new(1, -1)
        );
        assert_eq!(
            ctx.div_lambda(QuadInt::new(1, 0)),
            Err(ArithError::NotDivisible)
        );
    }

    #[test]
    fn cmp_examples() {
        let ctx = ctx3();
        // 1 - lambda < 0 since lambda > 1
        assert_eq!(
            ctx.cmp(QuadInt::new(1, -1), QuadInt::ZERO),
            Ordering::Less
        );
        let x = QuadInt::new(42, -17);
        assert_eq!(ctx.cmp(x, x), Ordering::Equal);
        // 3 + lambda (~5.30) vs 2 lambda (~4.61)
        assert_eq!(
            ctx.cmp(QuadInt::new(3, 1), QuadInt::new(0, 2)),
            Ordering::Greater
        );
    }

    #[test]
    fn integer_lambda_normalization() {
        // m = 2: disc = 9, lambda = 2, ring collapses to Z.
        let ctx = RingContext::new(2);
        assert_eq!(ctx.integer_lambda(), Some(2));
        assert_eq!(ctx.normalize(QuadInt::new(1, 3)).unwrap(), QuadInt::new(7, 0));
        // lambda * lambda = 4 in normal form
        assert_eq!(
            ctx.mul(QuadInt::LAMBDA, QuadInt::LAMBDA).unwrap(),
            QuadInt::new(4, 0)
        );
        // division uses lambda = 2, not m = 2 (they coincide here)...
        assert_eq!(ctx.div_lambda(QuadInt::new(6, 0)).unwrap(), QuadInt::new(3, 0));
        // ... and m = 6 (lambda = 3) shows the difference: 3/lambda = 1.
        let ctx6 = RingContext::new(6);
        assert_eq!(ctx6.integer_lambda(), Some(3));
        assert_eq!(ctx6.div_lambda(QuadInt::new(3, 0)).unwrap(), QuadInt::new(1, 0));
        assert_eq!(ctx6.div_lambda(QuadInt::new(4, 0)), Err(ArithError::NotDivisible));
    }

    #[test]
    fn serializes_as_component_pair() {
        let q = QuadInt::new(-7, 12);
        assert_eq!(serde_json::to_string(&q).unwrap(), r#"{"a":-7,"b":12}"#);
        let back: QuadInt = serde_json::from_str(r#"{"a":-7,"b":12}"#).unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn overflow_is_reported() {
        let ctx = ctx3();
        let big = QuadInt::new(i128::MAX, 0);
        assert_eq!(ctx.add(big, QuadInt::ONE), Err(ArithError::Overflow("add")));
        assert_eq!(
            ctx.mul(big, QuadInt::new(2, 0)),
            Err(ArithError::Overflow("mul"))
        );
    }

    #[test]
    fn cmp_matches_floats_on_random_pairs() {
        use rand::{rngs::StdRng, Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(0x5eed);
        for &m in &[1u32, 3, 5, 7, 11] {
            let ctx = RingContext::new(m);
            for _ in 0..2000 {
                let x = QuadInt::new(rng.gen_range(-1_000_000..=1_000_000), rng.gen_range(-1_000_000..=1_000_000));
                let y = QuadInt::new(rng.gen_range(-1_000_000..=1_000_000), rng.gen_range(-1_000_000..=1_000_000));
                let exact = ctx.cmp(x, y);
                // f64 comparison is reliable here: distinct values differ by
                // at least ~1e-7 at this coefficient size.
                let vf = ctx.value(x).partial_cmp(&ctx.value(y)).unwrap();
                if x != y {
                    assert_eq!(exact, vf, "m={m} x={x:?} y={y:?}");
                } else {
                    assert_eq!(exact, Ordering::Equal);
                }
            }
        }
    }

    #[test]
    fn cmp_big_fallback_agrees() {
        let ctx = ctx3();
        // components large enough that squaring overflows i128
        let x = QuadInt::new(i128::MAX / 2, -(i128::MAX / 3));
        let y = QuadInt::new(i128::MAX / 2 - 1, -(i128::MAX / 3));
        assert_eq!(ctx.cmp(x, y), Ordering::Greater);
        assert_eq!(ctx.cmp(y, x), Ordering::Less);
        let z = QuadInt::new(i128::MAX / 5, i128::MAX / 7);
        assert_eq!(ctx.cmp(z, z), Ordering::Equal);
    }

    proptest! {
        #[test]
        fn ring_axioms(
            (xa, xb, ya, yb, za, zb) in (
                -1_000_000i128..1_000_000, -1_000_000i128..1_000_000,
                -1_000_000i128..1_000_000, -1_000_000i128..1_000_000,
                -1_000_000i128..1_000_000, -1_000_000i128..1_000_000,
            ),
            m in 1u32..20,
        ) {
            let ctx = RingContext::new(m);
            let x = ctx.normalize(QuadInt::new(xa, xb)).unwrap();
            let y = ctx.normalize(QuadInt::new(ya, yb)).unwrap();
            let z = ctx.normalize(QuadInt::new(za, zb)).unwrap();

            // symbolic checks
            let ab = ctx.mul(x, y).unwrap();
            let ba = ctx.mul(y, x).unwrap();
            prop_assert_eq!(ab, ba);
            let assoc_l = ctx.mul(ctx.mul(x, y).unwrap(), z).unwrap();
            let assoc_r = ctx.mul(x, ctx.mul(y, z).unwrap()).unwrap();
            prop_assert_eq!(assoc_l, assoc_r);
            let dist_l = ctx.mul(x, ctx.add(y, z).unwrap()).unwrap();
            let dist_r = ctx.add(ctx.mul(x, y).unwrap(), ctx.mul(x, z).unwrap()).unwrap();
            prop_assert_eq!(dist_l, dist_r);

            // the real embedding is a ring homomorphism (1e-9 relative)
            let lhs = ctx.value(dist_l);
            let rhs = ctx.value(x) * (ctx.value(y) + ctx.value(z));
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * scale);
        }

        #[test]
        fn div_lambda_inverts_mul_lambda(
            a in -1_000_000i128..1_000_000,
            b in -1_000_000i128..1_000_000,
            m in 1u32..20,
        ) {
            let ctx = RingContext::new(m);
            let z = ctx.normalize(QuadInt::new(a, b)).unwrap();
            let zl = ctx.mul(z, QuadInt::LAMBDA).unwrap();
            prop_assert_eq!(ctx.div_lambda(zl).unwrap(), z);
        }
    }
}
