//! Exact counting expressions: multinomials, directed-rounding brackets for the
//! transcendental factors, and the expected Hamilton cycle count of a binomial
//! random k-graph.
//!
//! Every transcendental quantity is carried as a [`Bracket`] of two rationals
//! that provably enclose it. Comparisons against exact counts always use the
//! conservative end.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::budget::Budget;
use crate::combinat::factorial;
use crate::error::{invalid_query, Result};
use crate::hypergraph::Hypergraph;
use crate::paths::{enumerate_hamilton_ell_cycles, EnumerationMode};

/// Fractional bits kept by brackets unless a caller asks otherwise.
pub const DEFAULT_PRECISION_BITS: u32 = 64;

pub fn big_rational(r: Rational64) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn int(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Serializes big numbers as decimal strings.
pub(crate) fn ser_display<T: std::fmt::Display, S: Serializer>(x: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

/// A closed interval `[lo, hi]` of rationals known to contain some real number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bracket {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Serialize for Bracket {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Bracket", 3)?;
        st.serialize_field("lo", &self.lo.to_string())?;
        st.serialize_field("hi", &self.hi.to_string())?;
        st.serialize_field("approx", &self.approx())?;
        st.end()
    }
}

impl Bracket {
    pub fn exact(x: BigRational) -> Self {
        Bracket { lo: x.clone(), hi: x }
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_bracket(&self, other: &Bracket) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    /// Midpoint as `f64`, for display only.
    pub fn approx(&self) -> f64 {
        let mid = (&self.lo + &self.hi) / int(2);
        mid.to_f64().unwrap_or(f64::NAN)
    }

    pub fn add(&self, other: &Bracket) -> Bracket {
        Bracket {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn neg(&self) -> Bracket {
        Bracket {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    pub fn scale(&self, c: &BigRational) -> Bracket {
        if c.is_negative() {
            Bracket {
                lo: &self.hi * c,
                hi: &self.lo * c,
            }
        } else {
            Bracket {
                lo: &self.lo * c,
                hi: &self.hi * c,
            }
        }
    }

    /// Product of two brackets with non-negative ends.
    pub fn mul_nonneg(&self, other: &Bracket) -> Bracket {
        debug_assert!(!self.lo.is_negative() && !other.lo.is_negative());
        Bracket {
            lo: &self.lo * &other.lo,
            hi: &self.hi * &other.hi,
        }
    }

    /// Rounds `lo` down and `hi` up to `bits` significant bits, keeping the enclosure.
    pub fn round_outward(&self, bits: u32) -> Bracket {
        Bracket {
            lo: round_dyadic(&self.lo, bits, false),
            hi: round_dyadic(&self.hi, bits, true),
        }
    }
}

/// `floor(log2 |x|)` for non-zero `x`.
fn floor_log2(x: &BigRational) -> i64 {
    let num = x.numer().magnitude();
    let den = x.denom().magnitude();
    let mut e = num.bits() as i64 - den.bits() as i64;
    // now 2^(e-1) < |x| < 2^(e+1); settle which side
    if shifted_cmp(num, den, e) == std::cmp::Ordering::Less {
        e -= 1;
    }
    e
}

/// Compares `num / den` with `2^e`.
fn shifted_cmp(num: &BigUint, den: &BigUint, e: i64) -> std::cmp::Ordering {
    if e >= 0 {
        num.cmp(&(den << e as usize))
    } else {
        (num << (-e) as usize).cmp(den)
    }
}

fn round_dyadic(x: &BigRational, bits: u32, up: bool) -> BigRational {
    if x.is_zero() {
        return x.clone();
    }
    let e = floor_log2(x);
    let scale = bits as i64 - e;
    let scaled = if scale >= 0 {
        x * int(BigInt::one() << scale as usize)
    } else {
        x / int(BigInt::one() << (-scale) as usize)
    };
    let rounded = if up { scaled.ceil() } else { scaled.floor() };
    if scale >= 0 {
        rounded / int(BigInt::one() << scale as usize)
    } else {
        rounded * int(BigInt::one() << (-scale) as usize)
    }
}

/// Bracket for `e^n`.
fn exp_bracket(n: u64, bits: u32) -> Bracket {
    let x = int(n);
    let mut sum = BigRational::zero();
    let mut term = BigRational::one();
    let mut j: u64 = 0;
    loop {
        sum += &term;
        j += 1;
        term = term * &x / int(j);
        // once j + 1 > 2n, the tail after `term` is at most 2 * term
        if j + 1 > 2 * n {
            let tol = &sum / int(BigInt::one() << (bits as usize + 4));
            if term <= tol {
                let tail = &term * int(2);
                return Bracket {
                    lo: sum.clone(),
                    hi: sum + tail,
                };
            }
        }
    }
}

/// Bracket for `e^{-n}`.
pub fn exp_neg_bracket(n: u64, bits: u32) -> Bracket {
    let up = exp_bracket(n, bits);
    Bracket {
        lo: up.hi.recip(),
        hi: up.lo.recip(),
    }
    .round_outward(bits + 2)
}

/// Bracket for `2 atanh(z) = ln((1+z)/(1-z))`, `0 <= z <= 1/3`.
fn atanh2_bracket(z: &BigRational, bits: u32) -> Bracket {
    if z.is_zero() {
        return Bracket::exact(BigRational::zero());
    }
    let z2 = z * z;
    let tol = BigRational::new(BigInt::one(), BigInt::one() << (bits as usize + 6));
    let mut sum = BigRational::zero();
    let mut power = z.clone();
    let mut j: u64 = 0;
    loop {
        sum += &power / int(2 * j + 1);
        power = &power * &z2;
        j += 1;
        let next = &power / int(2 * j + 1);
        if next < tol {
            // geometric bound on the remaining positive terms
            let tail = next / (BigRational::one() - &z2);
            return Bracket {
                lo: &sum * int(2),
                hi: (sum + tail) * int(2),
            };
        }
    }
}

/// Bracket for `ln x`, `x > 0`.
pub fn ln_bracket(x: &BigRational, bits: u32) -> Result<Bracket> {
    if !x.is_positive() {
        return Err(invalid_query(format!("ln of non-positive value {x}")));
    }
    let a = floor_log2(x);
    let y = if a >= 0 {
        x / int(BigInt::one() << a as usize)
    } else {
        x * int(BigInt::one() << (-a) as usize)
    };
    // y in [1, 2): ln y = 2 atanh((y-1)/(y+1)), argument below 1/3
    let z = (&y - BigRational::one()) / (&y + BigRational::one());
    let ln_y = atanh2_bracket(&z, bits + 8);
    let ln2 = atanh2_bracket(&BigRational::new(BigInt::one(), BigInt::from(3)), bits + 8);
    Ok(ln2.scale(&int(a)).add(&ln_y).round_outward(bits + 8))
}

pub fn ln_bracket_int(n: &BigUint, bits: u32) -> Result<Bracket> {
    ln_bracket(&int(BigInt::from_biguint(Sign::Plus, n.clone())), bits)
}

/// The multinomial coefficient `n! / (n_1! ... n_r!)`.
pub fn multinomial(n: usize, sizes: &[usize]) -> Result<BigUint> {
    let total: usize = sizes.iter().sum();
    if total != n {
        return Err(invalid_query(format!("sizes sum to {total}, expected {n}")));
    }
    // product of binomials keeps intermediate values small
    let mut acc = BigUint::one();
    let mut used = 0usize;
    for &s in sizes {
        used += s;
        acc *= crate::combinat::binomial_big(used, s);
    }
    Ok(acc)
}

/// A count or count bound: a bracket on its natural logarithm, plus the exact
/// value when it is rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountBound {
    /// `None` means the value is exactly zero (log is −∞).
    pub log: Option<Bracket>,
    pub exact: Option<BigRational>,
}

impl Serialize for CountBound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("CountBound", 2)?;
        st.serialize_field("log", &self.log)?;
        st.serialize_field("exact", &self.exact.as_ref().map(|x| x.to_string()))?;
        st.end()
    }
}

impl CountBound {
    pub fn from_exact(x: BigRational, bits: u32) -> Result<Self> {
        if x.is_negative() {
            return Err(invalid_query("counts are non-negative"));
        }
        let log = if x.is_zero() { None } else { Some(ln_bracket(&x, bits)?) };
        Ok(CountBound { log, exact: Some(x) })
    }

    pub fn from_log(log: Bracket) -> Self {
        CountBound {
            log: Some(log),
            exact: None,
        }
    }

    /// Whether this bound is certainly at most `count` (conservative side).
    pub fn certainly_at_most(&self, count: &BigUint, bits: u32) -> bool {
        if let Some(x) = &self.exact {
            return x <= &int(BigInt::from_biguint(Sign::Plus, count.clone()));
        }
        match &self.log {
            None => true,
            Some(_) if count.is_zero() => false,
            Some(b) => ln_bracket_int(count, bits).is_ok_and(|c| b.hi <= c.lo),
        }
    }

    /// `ln` of the value, midpoint approximation.
    pub fn approx_log(&self) -> f64 {
        self.log.as_ref().map_or(f64::NEG_INFINITY, Bracket::approx)
    }
}

/// `exp((1 - 1/t) n log n - C n)`, or `exp(n log n - C n)` when `t` is absent,
/// as a bracket on its logarithm.
pub fn theorem_bound(n: u64, c: Rational64, t: Option<u64>, bits: u32) -> Result<CountBound> {
    if n == 0 {
        return Err(invalid_query("n must be at least 1"));
    }
    if c < Rational64::from_integer(0) {
        return Err(invalid_query("C must be non-negative"));
    }
    let factor = match t {
        None => BigRational::one(),
        Some(0) => return Err(invalid_query("t must be at least 1")),
        Some(t) => BigRational::one() - BigRational::new(BigInt::one(), BigInt::from(t)),
    };
    let ln_n = ln_bracket(&int(n), bits + 4)?;
    let main = ln_n.scale(&(factor * int(n)));
    let shift = big_rational(c) * int(n);
    let log = Bracket {
        lo: &main.lo - &shift,
        hi: &main.hi - &shift,
    };
    Ok(CountBound::from_log(log.round_outward(bits + 4)))
}

/// `Ψ_{k,ℓ}(n, δ)`: the number of distinct Hamilton ℓ-cycles of `K_n^(k)` (by
/// exact enumeration) times `δ^{n/(k-ℓ)}`, one factor per cycle edge.
pub fn expected_random_count(
    n: usize,
    k: usize,
    ell: usize,
    delta: Rational64,
    budget: &Budget,
    bits: u32,
) -> Result<CountBound> {
    if ell >= k || k < 2 {
        return Err(invalid_query(format!(
            "need k >= 2 and ell <= k-1, got k = {k}, ell = {ell}"
        )));
    }
    if delta < Rational64::from_integer(0) || delta > Rational64::from_integer(1) {
        return Err(invalid_query(format!("delta = {delta} outside [0, 1]")));
    }
    let s = k - ell;
    if !n.is_multiple_of(s) {
        return Err(crate::Error::Divisibility {
            what: "Hamilton ℓ-cycle needs (k-ℓ) | n".into(),
            divisor: s,
            value: n,
        });
    }
    let complete = Hypergraph::complete(n, k)?;
    let cycles = enumerate_hamilton_ell_cycles(&complete, ell, EnumerationMode::Count, budget)?.count();
    let edges_per_cycle = (n / s) as i32;
    let p = num_traits::pow::Pow::pow(big_rational(delta), edges_per_cycle);
    let value = int(BigInt::from_biguint(Sign::Plus, cycles)) * p;
    CountBound::from_exact(value, bits)
}

/// `n!` as a rational, for callers mixing factorials into brackets.
pub fn factorial_rational(n: usize) -> BigRational {
    int(BigInt::from_biguint(Sign::Plus, factorial(n)))
}

/// `a / b` reduced, for tests and reports.
pub fn ratio(a: i64, b: i64) -> BigRational {
    let g = a.gcd(&b);
    BigRational::new(BigInt::from(a / g), BigInt::from(b / g))
}
