//! Exact arithmetic for two-variable polynomials with fractional exponents
//! and for the rational functions in which stringy E-functions live.
//!
//! An [`EPoly`] is a sparse polynomial in `u^(1/d)` and `v^(1/d)` with
//! arbitrary-precision integer coefficients; a [`RatFunc`] is an `EPoly`
//! divided by a product of factors `(uv)^e - 1`. Equality of rational
//! functions is decided by exact cross-multiplication, never by evaluation.

mod epoly;
mod ratfunc;
mod roots;

pub use epoly::{BalancedPoly, EPoly, ExponentOverflow, NotBalanced, NotDivisible};
pub use ratfunc::{PoleExp, PolyStatus, RatFunc, RatFuncError, SpecializeError};
pub use roots::{exact_nth_root, PowerBasis, RootError};
