use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use super::epoly::{BalancedPoly, EPoly, NotDivisible};
use super::roots::{PowerBasis, RootError};
use crate::{Int, Rat};

/// The reduced positive exponent `e = num/den` of a denominator factor
/// `(uv)^e - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PoleExp {
    num: u64,
    den: u32,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum RatFuncError {
    #[error("denominator exponent must be positive, got {0}")]
    NonPositiveExponent(Rat),
    #[error("denominator exponent {0} does not fit the representation")]
    ExponentTooLarge(Rat),
}

/// Failure to evaluate a rational function at a point.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SpecializeError {
    #[error(transparent)]
    Root(#[from] RootError),
    #[error("a denominator factor vanishes at the substitution point")]
    PoleAtPoint,
}

impl PoleExp {
    /// From a rational exponent, which must be strictly positive.
    pub fn new(e: &Rat) -> Result<Self, RatFuncError> {
        if !e.is_positive() {
            return Err(RatFuncError::NonPositiveExponent(e.clone()));
        }
        let num = u64::try_from(e.numer().clone())
            .map_err(|_| RatFuncError::ExponentTooLarge(e.clone()))?;
        let den = u32::try_from(e.denom().clone())
            .map_err(|_| RatFuncError::ExponentTooLarge(e.clone()))?;
        Ok(PoleExp { num, den })
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u32 {
        self.den
    }

    pub fn to_rat(&self) -> Rat {
        Rat::new(Int::from(self.num), Int::from(self.den))
    }

    /// Expand to the polynomial `(uv)^e - 1`.
    pub fn factor_poly(&self) -> BalancedPoly {
        BalancedPoly::uv_pow_minus_one(self.num, self.den)
    }
}

impl fmt::Display for PoleExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            if self.num == 1 {
                write!(f, "(uv) - 1")
            } else {
                write!(f, "(uv)^{} - 1", self.num)
            }
        } else {
            write!(f, "(uv)^({}/{}) - 1", self.num, self.den)
        }
    }
}

/// Quotient of an [`EPoly`] by a product of factors `(uv)^e - 1`.
///
/// The denominator is kept as an explicit factor multiset and never
/// expanded, so cancellation and equality tests are factor-wise. An empty
/// factor list means the value is a polynomial. Equality is decided by
/// exact cross-multiplication.
#[derive(Clone, Debug)]
pub struct RatFunc {
    numer: EPoly,
    denom: Vec<PoleExp>,
}

/// Verdict of the polynomiality test at a requested granularity `g`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolyStatus {
    /// Every denominator factor divides out and all exponents lie in
    /// `(1/g)Z`: the value is a polynomial in `u^(1/g)`, `v^(1/g)`.
    Polynomial(EPoly),
    /// The value is a polynomial, but only at the finer granularity
    /// `needed` (i.e. some exponent has denominator `needed`, which does
    /// not divide `g`).
    FinerGranularity { poly: EPoly, needed: u32 },
    /// Some denominator factor does not divide the numerator.
    NotPolynomial(NotDivisible),
}

impl RatFunc {
    /// A polynomial viewed as a rational function.
    pub fn from_poly(numer: EPoly) -> Self {
        RatFunc {
            numer,
            denom: Vec::new(),
        }
    }

    pub fn zero() -> Self {
        RatFunc::from_poly(EPoly::zero())
    }

    /// A quotient with the given denominator factor exponents.
    pub fn new(numer: EPoly, mut denom: Vec<PoleExp>) -> Self {
        denom.sort();
        RatFunc { numer, denom }
    }

    pub fn numer(&self) -> &EPoly {
        &self.numer
    }

    pub fn denom(&self) -> &[PoleExp] {
        &self.denom
    }

    pub fn is_zero(&self) -> bool {
        self.numer.is_zero()
    }

    /// Least common multiple of the numerator's exponent denominator and
    /// all factor exponent denominators.
    pub fn common_den(&self) -> u32 {
        self.denom
            .iter()
            .fold(self.numer.den(), |acc, f| num_integer::lcm(acc, f.den))
    }

    fn denom_product(factors: &[PoleExp]) -> EPoly {
        let mut p = EPoly::one();
        for f in factors {
            p = &p * f.factor_poly().poly();
        }
        p
    }

    /// Multiset difference `all - part` where `part` is a sub-multiset.
    fn multiset_minus(all: &[PoleExp], part: &[PoleExp]) -> Vec<PoleExp> {
        let mut rest = all.to_vec();
        for f in part {
            if let Some(pos) = rest.iter().position(|g| g == f) {
                rest.remove(pos);
            }
        }
        rest
    }

    fn multiset_max(a: &[PoleExp], b: &[PoleExp]) -> Vec<PoleExp> {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        out
    }

    pub fn add(&self, other: &RatFunc) -> RatFunc {
        let denom = RatFunc::multiset_max(&self.denom, &other.denom);
        let lift_self = RatFunc::denom_product(&RatFunc::multiset_minus(&denom, &self.denom));
        let lift_other = RatFunc::denom_product(&RatFunc::multiset_minus(&denom, &other.denom));
        let numer = &(&self.numer * &lift_self) + &(&other.numer * &lift_other);
        RatFunc { numer, denom }
    }

    pub fn sub(&self, other: &RatFunc) -> RatFunc {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc {
            numer: -&self.numer,
            denom: self.denom.clone(),
        }
    }

    pub fn mul(&self, other: &RatFunc) -> RatFunc {
        let mut denom = self.denom.clone();
        denom.extend_from_slice(&other.denom);
        denom.sort();
        RatFunc {
            numer: &self.numer * &other.numer,
            denom,
        }
    }

    pub fn mul_poly(&self, p: &EPoly) -> RatFunc {
        RatFunc {
            numer: &self.numer * p,
            denom: self.denom.clone(),
        }
    }

    /// Cancel every denominator factor that divides the numerator exactly.
    pub fn cancelled(&self) -> RatFunc {
        let mut numer = self.numer.clone();
        let mut denom = Vec::new();
        for f in &self.denom {
            match numer.div_exact_balanced(&f.factor_poly()) {
                Ok(q) => numer = q,
                Err(_) => denom.push(*f),
            }
        }
        RatFunc { numer, denom }
    }

    /// Cross-multiplied difference numerator against `other`:
    /// `self.numer * prod(other.denom) - other.numer * prod(self.denom)`.
    pub fn cross_difference(&self, other: &RatFunc) -> EPoly {
        let lhs = &self.numer * &RatFunc::denom_product(&other.denom);
        let rhs = &other.numer * &RatFunc::denom_product(&self.denom);
        &lhs - &rhs
    }

    /// Extensional equality by exact cross-multiplication.
    pub fn eq_cross(&self, other: &RatFunc) -> bool {
        self.cross_difference(other).is_zero()
    }

    /// Test whether the value is a polynomial, and at which granularity.
    ///
    /// `g = 1` tests membership in `Z[u, v]`; larger `g` admits exponents
    /// in `(1/g)Z`.
    pub fn is_polynomial(&self, g: u32) -> PolyStatus {
        assert!(g >= 1);
        let mut numer = self.numer.clone();
        for f in &self.denom {
            match numer.div_exact_balanced(&f.factor_poly()) {
                Ok(q) => numer = q,
                Err(nd) => return PolyStatus::NotPolynomial(nd),
            }
        }
        if g.is_multiple_of(numer.den()) {
            PolyStatus::Polynomial(numer)
        } else {
            let needed = numer.den();
            PolyStatus::FinerGranularity {
                poly: numer,
                needed,
            }
        }
    }

    /// Evaluate with `uv` set to `q`, resolving fractional powers through
    /// the optional exact root `(s, d)` with `s^d = q`.
    pub fn specialize(&self, q: &Rat, root: Option<(Rat, u32)>) -> Result<Rat, SpecializeError> {
        let basis = PowerBasis::from_optional(q.clone(), root)?;
        let mut value = self.numer.eval_uv(&basis)?;
        for f in &self.denom {
            let fv = basis.pow(f.num as i64, f.den)? - Rat::one();
            if fv.is_zero() {
                return Err(SpecializeError::PoleAtPoint);
            }
            value /= fv;
        }
        Ok(value)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom.is_empty() {
            return self.numer.fmt(f);
        }
        write!(f, "({})", self.numer)?;
        write!(f, " / [")?;
        for (i, fac) in self.denom.iter().enumerate() {
            if i > 0 {
                write!(f, "][")?;
            }
            fac.fmt(f)?;
        }
        write!(f, "]")
    }
}
