//! Exact computation of stringy E-functions and stringy Hodge numbers of
//! singular varieties from resolution data, cross-checked by p-adic
//! integration and point counting over finite fields.
//!
//! Everything here is exact: polynomial coefficients are arbitrary-precision
//! integers, evaluation points are arbitrary-precision rationals, and equality
//! of rational functions is decided by cross-multiplication. There is no
//! floating point anywhere in the computation path.
//!
//! The crate is organised around the objects of the computation:
//!
//! * [`exact`] — sparse two-variable polynomials with fractional exponents
//!   ([`EPoly`]) and the rational functions they generate ([`RatFunc`]).
//! * [`strata`] — resolution data: divisors with discrepancies and stratum
//!   tables on the boolean lattice of divisor subsets.
//! * [`stringy`] — stringy E-functions, stringy Hodge numbers, stringy point
//!   counts, and resolution-independence checks.
//! * [`padic`] — exact p-adic integration of monomial pluricanonical forms,
//!   with an independent valuation-profile enumeration oracle.
//! * [`count`] — a catalog of schemes with exact point-count polynomials and
//!   brute-force enumeration oracles over small prime fields.
//! * [`scenario`] / [`report`] — scenario files, batch verification, and
//!   deterministic report emission.

pub mod count;
pub mod exact;
pub mod padic;
pub mod report;
pub mod scenario;
pub mod strata;
pub mod stringy;

pub use exact::{BalancedPoly, EPoly, PolyStatus, RatFunc};
pub use strata::{Divisor, Flavor, ResolutionData, StratumTable};
pub use stringy::StringyE;

/// Arbitrary-precision integer used for all polynomial coefficients.
pub type Int = num_bigint::BigInt;

/// Arbitrary-precision rational used for discrepancies, evaluation points,
/// and every exact evaluation result.
pub type Rat = num_rational::BigRational;

/// Convenience constructor for [`Int`].
pub fn int(n: i64) -> Int {
    Int::from(n)
}

/// Convenience constructor for [`Rat`].
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(Int::from(num), Int::from(den))
}
