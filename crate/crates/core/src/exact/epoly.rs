use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_integer::Integer;
use num_traits::{Signed, Zero};
use thiserror::Error;

use super::roots::{PowerBasis, RootError};
use crate::{Int, Rat};

/// Sparse polynomial in `u^(1/den)`, `v^(1/den)` with integer coefficients.
///
/// Exponents are stored as integer numerators over a single denominator
/// `den`, so the term map sends `(i_num, j_num)` to the coefficient of
/// `u^(i_num/den) * v^(j_num/den)`. The representation is canonical: no zero
/// coefficients are stored and `den` is reduced to the smallest denominator
/// that still expresses every exponent. Two values are equal as polynomials
/// exactly when they are structurally equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EPoly {
    den: u32,
    terms: BTreeMap<(u64, u64), Int>,
}

/// Exact division failed: the charge sector `u^(c/den) * P(uv)` of the
/// numerator left a nonzero remainder.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("not divisible in charge sector {charge_num}/{charge_den}: remainder {remainder}")]
pub struct NotDivisible {
    pub charge_num: i64,
    pub charge_den: u32,
    pub remainder: EPoly,
}

/// A term had unequal u- and v-exponents where a polynomial in `uv` was
/// required.
#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("polynomial is not balanced: a term has unequal u- and v-exponents")]
pub struct NotBalanced;

/// An exponent exceeded the degree-`n` box of a duality reflection.
#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("exponent {exp_num}/{den} exceeds the degree-{dim} box")]
pub struct ExponentOverflow {
    pub exp_num: u64,
    pub den: u32,
    pub dim: u32,
}

impl EPoly {
    /// The zero polynomial.
    pub fn zero() -> Self {
        EPoly {
            den: 1,
            terms: BTreeMap::new(),
        }
    }

    /// The constant polynomial 1.
    pub fn one() -> Self {
        EPoly::constant(Int::from(1))
    }

    /// A constant polynomial.
    pub fn constant(c: Int) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((0, 0), c);
        }
        EPoly { den: 1, terms }
    }

    /// The single term `coeff * u^(i_num/den) * v^(j_num/den)`.
    pub fn term(i_num: u64, j_num: u64, den: u32, coeff: Int) -> Self {
        assert!(den >= 1, "denominator must be positive");
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert((i_num, j_num), coeff);
        }
        let mut p = EPoly { den, terms };
        p.reduce_den();
        p
    }

    /// The monomial `(uv)^(num/den)`.
    pub fn uv_pow(num: u64, den: u32) -> Self {
        EPoly::term(num, num, den, Int::from(1))
    }

    /// A polynomial in `w = uv`: the sum of `coeff * (uv)^(num/den)`.
    pub fn balanced_from(den: u32, terms: &[(u64, i64)]) -> Self {
        let mut p = EPoly::zero();
        for &(num, coeff) in terms {
            p = &p + &EPoly::term(num, num, den, Int::from(coeff));
        }
        p
    }

    /// Build from serialized triples `[i_num, j_num, coeff]` over `den`,
    /// summing duplicates.
    pub fn from_triples(den: u32, triples: &[(u64, u64, Int)]) -> Self {
        assert!(den >= 1, "denominator must be positive");
        let mut terms: BTreeMap<(u64, u64), Int> = BTreeMap::new();
        for (i, j, c) in triples {
            let slot = terms.entry((*i, *j)).or_insert_with(Int::zero);
            *slot += c;
        }
        let mut p = EPoly { den, terms };
        p.normalize();
        p
    }

    /// Serialize to triples over `target_den`, which every stored exponent
    /// must divide into; returns `None` when `den` does not divide it.
    pub fn to_triples(&self, target_den: u32) -> Option<Vec<(u64, u64, Int)>> {
        if !target_den.is_multiple_of(self.den) {
            return None;
        }
        let scale = (target_den / self.den) as u64;
        Some(
            self.terms
                .iter()
                .map(|(&(i, j), c)| (i * scale, j * scale, c.clone()))
                .collect(),
        )
    }

    /// The reduced exponent denominator.
    pub fn den(&self) -> u32 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.coeff_at(0, 0, 1) == Int::from(1)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Iterate terms as `((i_num, j_num), coeff)` over the current `den`,
    /// in ascending exponent order.
    pub fn iter_terms(&self) -> impl Iterator<Item = (&(u64, u64), &Int)> {
        self.terms.iter()
    }

    /// Coefficient of `u^(i_num/den) * v^(j_num/den)`.
    pub fn coeff_at(&self, i_num: u64, j_num: u64, den: u32) -> Int {
        // Rescale the query onto the stored denominator.
        let g = num_integer::gcd(self.den as u64, den as u64);
        let scale_self = den as u64 / g;
        let scale_query = self.den as u64 / g;
        if scale_self == 1 {
            self.terms
                .get(&(i_num * scale_query, j_num * scale_query))
                .cloned()
                .unwrap_or_else(Int::zero)
        } else {
            // Query denominator finer than stored: exponent exists only if
            // it scales down integrally.
            if i_num.is_multiple_of(scale_self) && j_num.is_multiple_of(scale_self) {
                self.terms
                    .get(&(
                        i_num / scale_self * scale_query,
                        j_num / scale_self * scale_query,
                    ))
                    .cloned()
                    .unwrap_or_else(Int::zero)
            } else {
                Int::zero()
            }
        }
    }

    /// True when every term has equal u- and v-exponents.
    pub fn is_balanced(&self) -> bool {
        self.terms.keys().all(|&(i, j)| i == j)
    }

    /// Largest exponent numerator appearing in either variable.
    pub fn max_exp_num(&self) -> u64 {
        self.terms.keys().map(|&(i, j)| i.max(j)).max().unwrap_or(0)
    }

    fn normalize(&mut self) {
        self.terms.retain(|_, c| !c.is_zero());
        self.reduce_den();
    }

    fn reduce_den(&mut self) {
        if self.den == 1 {
            return;
        }
        let mut g = self.den as u64;
        for &(i, j) in self.terms.keys() {
            g = num_integer::gcd(g, num_integer::gcd(i, j));
            if g == 1 {
                return;
            }
        }
        if g > 1 {
            self.den /= g as u32;
            self.terms = self
                .terms
                .iter()
                .map(|(&(i, j), c)| ((i / g, j / g), c.clone()))
                .collect();
        }
    }

    /// Rescale exponent numerators onto `new_den`, a multiple of `den`.
    fn lift_terms(&self, new_den: u32) -> BTreeMap<(u64, u64), Int> {
        debug_assert_eq!(new_den % self.den, 0);
        let scale = (new_den / self.den) as u64;
        if scale == 1 {
            self.terms.clone()
        } else {
            self.terms
                .iter()
                .map(|(&(i, j), c)| ((i * scale, j * scale), c.clone()))
                .collect()
        }
    }

    fn combine(&self, other: &EPoly, negate_other: bool) -> EPoly {
        let den = num_integer::lcm(self.den, other.den);
        let mut terms = self.lift_terms(den);
        for (k, c) in other.lift_terms(den) {
            let slot = terms.entry(k).or_insert_with(Int::zero);
            if negate_other {
                *slot -= c;
            } else {
                *slot += c;
            }
        }
        let mut p = EPoly { den, terms };
        p.normalize();
        p
    }

    /// Multiply every coefficient by `c`.
    pub fn scaled(&self, c: &Int) -> EPoly {
        if c.is_zero() {
            return EPoly::zero();
        }
        EPoly {
            den: self.den,
            terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    /// Repeated-squaring power.
    pub fn pow(&self, n: u32) -> EPoly {
        if n == 0 {
            return EPoly::one();
        }
        let mut result = EPoly::one();
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// `(uv)^n * f(1/u, 1/v)`: reflect every exponent pair about `n`.
    ///
    /// An involution on polynomials supported in the degree-`n` box; fails
    /// with [`ExponentOverflow`] when a term lies outside it.
    pub fn poincare_dual(&self, n: u32) -> Result<EPoly, ExponentOverflow> {
        let cap = n as u64 * self.den as u64;
        let mut terms = BTreeMap::new();
        for (&(i, j), c) in &self.terms {
            if i > cap || j > cap {
                return Err(ExponentOverflow {
                    exp_num: i.max(j),
                    den: self.den,
                    dim: n,
                });
            }
            terms.insert((cap - i, cap - j), c.clone());
        }
        let mut p = EPoly {
            den: self.den,
            terms,
        };
        p.normalize();
        Ok(p)
    }

    /// Evaluate with `uv` set to `q`: each term `c * u^(i/den) v^(j/den)`
    /// becomes `c * q^((i+j)/(2 den))`, computed exactly via `basis`.
    pub fn eval_uv(&self, basis: &PowerBasis) -> Result<Rat, RootError> {
        let mut total = Rat::zero();
        for (&(i, j), c) in &self.terms {
            let weight = i + j;
            debug_assert!(weight <= i64::MAX as u64);
            let factor = basis.pow(weight as i64, 2 * self.den)?;
            total += Rat::from(c.clone()) * factor;
        }
        Ok(total)
    }

    /// Decompose into charge sectors `c = i - j` and divide each univariate
    /// sector polynomial by `denom` exactly.
    ///
    /// Returns the quotient iff every sector divides with zero remainder;
    /// otherwise reports the first failing sector (in ascending charge
    /// order) together with its remainder.
    pub fn div_exact_balanced(&self, denom: &BalancedPoly) -> Result<EPoly, NotDivisible> {
        let dpoly = denom.poly();
        assert!(!dpoly.is_zero(), "division by the zero polynomial");
        let den = num_integer::lcm(self.den, dpoly.den);

        // Divisor as a univariate polynomial in t = (uv)^(1/den).
        let dterms = dpoly.lift_terms(den);
        let divisor: BTreeMap<u64, Int> = dterms.into_iter().map(|((i, _), c)| (i, c)).collect();
        let (&dlead, dlc) = divisor.iter().next_back().expect("nonzero divisor");

        // Numerator sectors keyed by charge; each sector is univariate in t.
        let mut sectors: BTreeMap<i64, BTreeMap<u64, Int>> = BTreeMap::new();
        for ((i, j), c) in self.lift_terms(den) {
            let charge = i as i64 - j as i64;
            sectors.entry(charge).or_default().insert(i.min(j), c);
        }

        let mut quotient_terms: BTreeMap<(u64, u64), Int> = BTreeMap::new();
        for (charge, mut rem) in sectors {
            let mut quot: BTreeMap<u64, Int> = BTreeMap::new();
            // Runs until the sector remainder empties (exact division).
            while let Some((&rlead, rlc)) = rem.iter().next_back() {
                let fail = rlead < dlead || !rlc.is_multiple_of(dlc);
                if fail {
                    return Err(NotDivisible {
                        charge_num: charge,
                        charge_den: den,
                        remainder: sector_to_poly(charge, &rem, den),
                    });
                }
                let qc = rlc / dlc;
                let shift = rlead - dlead;
                for (&e, c) in &divisor {
                    let slot = rem.entry(e + shift).or_insert_with(Int::zero);
                    *slot -= &qc * c;
                }
                rem.retain(|_, c| !c.is_zero());
                quot.insert(shift, qc);
            }
            for (e, c) in quot {
                let key = if charge >= 0 {
                    (e + charge as u64, e)
                } else {
                    (e, e + (-charge) as u64)
                };
                quotient_terms.insert(key, c);
            }
        }

        let mut q = EPoly {
            den,
            terms: quotient_terms,
        };
        q.normalize();
        Ok(q)
    }
}

fn sector_to_poly(charge: i64, sector: &BTreeMap<u64, Int>, den: u32) -> EPoly {
    let mut terms = BTreeMap::new();
    for (&e, c) in sector {
        let key = if charge >= 0 {
            (e + charge as u64, e)
        } else {
            (e, e + (-charge) as u64)
        };
        terms.insert(key, c.clone());
    }
    let mut p = EPoly { den, terms };
    p.normalize();
    p
}

impl Add for &EPoly {
    type Output = EPoly;
    fn add(self, rhs: &EPoly) -> EPoly {
        self.combine(rhs, false)
    }
}

impl Sub for &EPoly {
    type Output = EPoly;
    fn sub(self, rhs: &EPoly) -> EPoly {
        self.combine(rhs, true)
    }
}

impl Mul for &EPoly {
    type Output = EPoly;
    fn mul(self, rhs: &EPoly) -> EPoly {
        let den = num_integer::lcm(self.den, rhs.den);
        let a = self.lift_terms(den);
        let b = rhs.lift_terms(den);
        let mut terms: BTreeMap<(u64, u64), Int> = BTreeMap::new();
        for ((i1, j1), c1) in &a {
            for ((i2, j2), c2) in &b {
                let slot = terms.entry((i1 + i2, j1 + j2)).or_insert_with(Int::zero);
                *slot += c1 * c2;
            }
        }
        let mut p = EPoly { den, terms };
        p.normalize();
        p
    }
}

impl Neg for &EPoly {
    type Output = EPoly;
    fn neg(self) -> EPoly {
        EPoly {
            den: self.den,
            terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect(),
        }
    }
}

impl Add for EPoly {
    type Output = EPoly;
    fn add(self, rhs: EPoly) -> EPoly {
        &self + &rhs
    }
}

impl Sub for EPoly {
    type Output = EPoly;
    fn sub(self, rhs: EPoly) -> EPoly {
        &self - &rhs
    }
}

impl Mul for EPoly {
    type Output = EPoly;
    fn mul(self, rhs: EPoly) -> EPoly {
        &self * &rhs
    }
}

impl Neg for EPoly {
    type Output = EPoly;
    fn neg(self) -> EPoly {
        -&self
    }
}

fn write_exp(f: &mut fmt::Formatter<'_>, num: u64, den: u32) -> fmt::Result {
    let g = num_integer::gcd(num, den as u64);
    let (n, d) = (num / g, den as u64 / g);
    if d == 1 {
        if n != 1 {
            write!(f, "^{n}")?;
        }
        Ok(())
    } else {
        write!(f, "^({n}/{d})")
    }
}

impl fmt::Display for EPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (&(i, j), c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            if idx == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = c.abs();
            if i == 0 && j == 0 {
                write!(f, "{mag}")?;
            } else {
                if mag != Int::from(1) {
                    write!(f, "{mag}*")?;
                }
                if i == j {
                    write!(f, "(uv)")?;
                    write_exp(f, i, self.den)?;
                } else {
                    if i > 0 {
                        write!(f, "u")?;
                        write_exp(f, i, self.den)?;
                    }
                    if i > 0 && j > 0 {
                        write!(f, "*")?;
                    }
                    if j > 0 {
                        write!(f, "v")?;
                        write_exp(f, j, self.den)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// An [`EPoly`] all of whose terms satisfy `i = j`: a polynomial in `w = uv`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalancedPoly(EPoly);

impl BalancedPoly {
    pub fn new(p: EPoly) -> Result<Self, NotBalanced> {
        if p.is_balanced() {
            Ok(BalancedPoly(p))
        } else {
            Err(NotBalanced)
        }
    }

    /// The factor `(uv)^(num/den) - 1`.
    pub fn uv_pow_minus_one(num: u64, den: u32) -> Self {
        BalancedPoly(&EPoly::uv_pow(num, den) - &EPoly::one())
    }

    pub fn poly(&self) -> &EPoly {
        &self.0
    }

    pub fn into_poly(self) -> EPoly {
        self.0
    }
}

impl fmt::Display for BalancedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
