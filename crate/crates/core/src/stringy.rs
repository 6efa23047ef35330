//! Stringy E-functions, stringy Hodge numbers, stringy point counts, and
//! the resolution-independence check.
//!
//! The stringy E-function of a resolution with exceptional divisors `D_j`
//! (discrepancies `a_j`) and open strata `D_J°` is
//!
//! ```text
//! E_st = sum over J of  E(D_J°) * prod over j in J of (uv - 1) / ((uv)^(a_j + 1) - 1)
//! ```
//!
//! held as one exact fraction over the factors with `a_j != 0`; crepant
//! divisors (`a_j = 0`) contribute the factor `(uv-1)/(uv-1) = 1`, which is
//! cancelled eagerly. Whether two resolutions give the same value is decided
//! by exact cross-multiplication.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::exact::{EPoly, PoleExp, PolyStatus, RatFunc, RatFuncError, SpecializeError};
use crate::padic::LocalField;
use crate::strata::{ResolutionData, StrataError};
use crate::{Int, Rat};

/// The stringy E-function of a resolution, with its ambient dimension and
/// exponent context.
#[derive(Clone, Debug)]
pub struct StringyE {
    pub value: RatFunc,
    pub dimension: u32,
    pub context_den: u32,
}

/// Stringy Hodge numbers `h^{i,j}_st`, read off a polynomial stringy
/// E-function via `E_st = sum of (-1)^(i+j) h^{i,j}_st u^i v^j`.
///
/// Entries may come out negative; they are surfaced verbatim.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct StringyHodgeTable {
    entries: BTreeMap<(u64, u64), Int>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum StringyError {
    #[error(transparent)]
    Strata(#[from] StrataError),
    #[error(transparent)]
    RatFunc(#[from] RatFuncError),
    #[error("resolutions have different ambient dimensions: {left} vs {right}")]
    DimensionMismatch { left: u32, right: u32 },
    #[error("no point count supplied for nonempty stratum {mask:#b}")]
    MissingCount { mask: u64 },
    #[error(transparent)]
    Specialize(#[from] SpecializeError),
    #[error(transparent)]
    Padic(#[from] crate::padic::PadicError),
}

/// Why a stringy Hodge table could not be extracted.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum HodgeError {
    /// The stringy E-function is a polynomial only at a finer granularity
    /// (fractional exponents remain).
    #[error("stringy E-function is a polynomial only at granularity {granularity}")]
    FractionalExponents { granularity: u32 },
    /// The stringy E-function is not a polynomial at any granularity.
    #[error("stringy E-function is not a polynomial")]
    NotPolynomial,
}

/// Outcome of comparing two stringy E-functions by cross-multiplication.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Agreement {
    pub equal: bool,
    /// First differing monomial of the cross-multiplied difference, when
    /// unequal; `None` certifies the difference numerator vanishes.
    pub first_difference: Option<String>,
}

/// Compute the stringy E-function from validated resolution data.
pub fn stringy_e(r: &ResolutionData) -> Result<StringyE, StringyError> {
    r.validate()?;
    let open = r.with_open_strata()?;
    let context_den = r.context_den();

    // Divisors with nonzero discrepancy contribute denominator factors
    // (uv)^(a_j + 1) - 1; crepant divisors contribute nothing.
    let mut pole_bits: u64 = 0;
    let mut poles: Vec<(usize, PoleExp)> = Vec::new();
    for (j, d) in open.divisors.iter().enumerate() {
        if !d.discrepancy.is_zero() {
            let e = &d.discrepancy + Rat::from(Int::from(1));
            poles.push((j, PoleExp::new(&e)?));
            pole_bits |= 1 << j;
        }
    }

    let uv_minus_one = &EPoly::uv_pow(1, 1) - &EPoly::one();
    let mut numer = EPoly::zero();
    for (&mask, stratum) in open.strata.iter() {
        let weight = (mask & pole_bits).count_ones();
        let mut term = stratum * &uv_minus_one.pow(weight);
        for (j, pole) in &poles {
            if mask & (1 << j) == 0 {
                term = &term * pole.factor_poly().poly();
            }
        }
        numer = &numer + &term;
    }

    let denom = poles.into_iter().map(|(_, p)| p).collect();
    Ok(StringyE {
        value: RatFunc::new(numer, denom),
        dimension: r.dimension,
        context_den,
    })
}

/// Extract stringy Hodge numbers: requires polynomiality at granularity 1.
pub fn stringy_hodge_numbers(e: &StringyE) -> Result<StringyHodgeTable, HodgeError> {
    match e.value.is_polynomial(1) {
        PolyStatus::Polynomial(p) => Ok(StringyHodgeTable::from_polynomial(&p)),
        PolyStatus::FinerGranularity { needed, .. } => Err(HodgeError::FractionalExponents {
            granularity: needed,
        }),
        PolyStatus::NotPolynomial(_) => Err(HodgeError::NotPolynomial),
    }
}

impl StringyHodgeTable {
    fn from_polynomial(p: &EPoly) -> Self {
        debug_assert_eq!(p.den(), 1);
        let mut entries = BTreeMap::new();
        for (&(i, j), c) in p.iter_terms() {
            let h = if (i + j) % 2 == 0 { c.clone() } else { -c };
            entries.insert((i, j), h);
        }
        StringyHodgeTable { entries }
    }

    pub fn get(&self, i: u64, j: u64) -> Int {
        self.entries.get(&(i, j)).cloned().unwrap_or_else(Int::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u64, u64), &Int)> {
        self.entries.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Whether some extracted number is negative; reported, never rejected.
    pub fn has_negative(&self) -> bool {
        self.entries.values().any(|h| h.is_negative())
    }
}

impl fmt::Display for StringyHodgeTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "0");
        }
        for (idx, (&(i, j), h)) in self.entries.iter().enumerate() {
            if idx > 0 {
                writeln!(f)?;
            }
            write!(f, "h^{{{i},{j}}} = {h}")?;
        }
        Ok(())
    }
}

/// The q^n-scaled stringy point count
/// `N_st(q) = sum over J of |D_J°(F_q)| * prod over j in J of
/// (q-1)/(q^(a_j+1)-1)`, exact over the rationals.
///
/// `counts` must cover every nonempty stratum of the (open-flavor) table;
/// fractional discrepancies draw their roots from `field`.
pub fn stringy_point_count(
    r: &ResolutionData,
    counts: &BTreeMap<u64, Int>,
    field: &LocalField,
) -> Result<Rat, StringyError> {
    r.validate()?;
    let open = r.with_open_strata()?;
    for (&mask, _) in open.strata.iter() {
        if !counts.contains_key(&mask) {
            return Err(StringyError::MissingCount { mask });
        }
    }
    let q = Rat::from(Int::from(field.q()));
    let mut total = Rat::zero();
    for (&mask, count) in counts {
        let mut term = Rat::from(count.clone());
        for (j, d) in open.divisors.iter().enumerate() {
            if mask & (1 << j) == 0 || d.discrepancy.is_zero() {
                continue;
            }
            let c = &d.discrepancy + Rat::from(Int::from(1));
            let qc = field.power(&c)?;
            term *= (&q - Rat::from(Int::from(1))) / (qc - Rat::from(Int::from(1)));
        }
        total += term;
    }
    Ok(total)
}

/// Decide whether two resolutions give the same stringy E-function, with a
/// cross-multiplication certificate.
pub fn resolutions_agree(
    r1: &ResolutionData,
    r2: &ResolutionData,
) -> Result<Agreement, StringyError> {
    if r1.dimension != r2.dimension {
        return Err(StringyError::DimensionMismatch {
            left: r1.dimension,
            right: r2.dimension,
        });
    }
    let e1 = stringy_e(r1)?;
    let e2 = stringy_e(r2)?;
    Ok(compare(&e1, &e2))
}

/// Compare two already-computed stringy E-functions.
pub fn compare(e1: &StringyE, e2: &StringyE) -> Agreement {
    let diff = e1.value.cross_difference(&e2.value);
    if diff.is_zero() {
        Agreement {
            equal: true,
            first_difference: None,
        }
    } else {
        let (&(i, j), c) = diff
            .iter_terms()
            .next()
            .expect("nonzero difference has a first term");
        let monomial = EPoly::term(i, j, diff.den(), c.clone()).to_string();
        Agreement {
            equal: false,
            first_difference: Some(monomial),
        }
    }
}
