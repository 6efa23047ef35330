use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::{Int, Rat};

/// Failure to realize a fractional power exactly over the rationals.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum RootError {
    /// A `needed`-th root of the base was required but none was supplied
    /// (and none can be derived from the supplied one).
    #[error("an exact {needed}-th root of the base is required but not available")]
    MissingRoot { needed: u32 },
    /// The supplied root does not satisfy `root^den = base`.
    #[error("supplied root does not satisfy root^{den} = base")]
    RootMismatch { den: u32 },
    /// Fractional powers are only defined here for positive bases.
    #[error("fractional powers require a positive base")]
    NonPositiveBase,
}

/// The exact `n`-th root of `x`, when it exists in the rationals.
///
/// Negative `x` admits odd roots only; `n` must be at least 1.
pub fn exact_nth_root(x: &Rat, n: u32) -> Option<Rat> {
    assert!(n >= 1);
    if n == 1 {
        return Some(x.clone());
    }
    if x.is_zero() {
        return Some(Rat::zero());
    }
    if x.is_negative() && n.is_multiple_of(2) {
        return None;
    }
    let root_num = int_nth_root(&x.numer().abs(), n)?;
    let root_den = int_nth_root(x.denom(), n)?;
    let mut root = Rat::new(root_num, root_den);
    if x.is_negative() {
        root = -root;
    }
    Some(root)
}

fn int_nth_root(x: &Int, n: u32) -> Option<Int> {
    debug_assert!(!x.is_negative());
    let r = x.nth_root(n);
    if num_traits::pow(r.clone(), n as usize) == *x {
        Some(r)
    } else {
        None
    }
}

/// Exact evaluator for powers `base^(num/den)`.
///
/// Integer powers always evaluate. Fractional powers are resolved through a
/// caller-supplied exact `root_den`-th root of the base; powers that would
/// require an irrational value are rejected with [`RootError::MissingRoot`].
#[derive(Clone, Debug)]
pub struct PowerBasis {
    base: Rat,
    root_den: u32,
    root: Rat,
}

impl PowerBasis {
    /// A basis with no root: only integer powers evaluate.
    pub fn new(base: Rat) -> Result<Self, RootError> {
        if !base.is_positive() {
            return Err(RootError::NonPositiveBase);
        }
        Ok(PowerBasis {
            root: base.clone(),
            base,
            root_den: 1,
        })
    }

    /// A basis carrying an exact root `root` with `root^den = base`.
    pub fn with_root(base: Rat, den: u32, root: Rat) -> Result<Self, RootError> {
        if !base.is_positive() || !root.is_positive() {
            return Err(RootError::NonPositiveBase);
        }
        assert!(den >= 1);
        if rat_pow(&root, den as i64) != base {
            return Err(RootError::RootMismatch { den });
        }
        Ok(PowerBasis {
            base,
            root_den: den,
            root,
        })
    }

    /// Construct from an optional `(root, den)` pair.
    pub fn from_optional(base: Rat, root: Option<(Rat, u32)>) -> Result<Self, RootError> {
        match root {
            None => PowerBasis::new(base),
            Some((s, d)) => PowerBasis::with_root(base, d, s),
        }
    }

    pub fn base(&self) -> &Rat {
        &self.base
    }

    /// Denominator of the supplied root (1 when no root was given).
    pub fn root_den(&self) -> u32 {
        self.root_den
    }

    /// The supplied root itself, when one was given.
    pub fn root(&self) -> Option<&Rat> {
        (self.root_den > 1).then_some(&self.root)
    }

    /// `base^(num/den)`, exactly.
    pub fn pow(&self, num: i64, den: u32) -> Result<Rat, RootError> {
        assert!(den >= 1);
        let g = num_integer::gcd(num.unsigned_abs(), den as u64);
        let (num, den) = (num / g as i64, den / g as u32);
        if den == 1 {
            return Ok(rat_pow(&self.base, num));
        }
        if self.root_den == 1 {
            // No root was supplied; fractional powers are unavailable.
            return Err(RootError::MissingRoot { needed: den });
        }
        if self.root_den.is_multiple_of(den) {
            return Ok(rat_pow(&self.root, num * (self.root_den / den) as i64));
        }
        // The supplied root does not reach this power directly; extend it by
        // an exact root when one exists.
        let extra = den / num_integer::gcd(den, self.root_den);
        match exact_nth_root(&self.root, extra) {
            Some(r) => {
                // r^(root_den * extra) = base, and den divides root_den * extra.
                let scale = (self.root_den as u64 * extra as u64 / den as u64) as i64;
                Ok(rat_pow(&r, num * scale))
            }
            None => Err(RootError::MissingRoot { needed: den }),
        }
    }
}

fn rat_pow(x: &Rat, n: i64) -> Rat {
    if n == 0 {
        return Rat::one();
    }
    let p = num_traits::pow(x.clone(), n.unsigned_abs() as usize);
    if n < 0 {
        p.recip()
    } else {
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    #[test]
    fn nth_roots() {
        assert_eq!(exact_nth_root(&rat(9, 1), 2), Some(rat(3, 1)));
        assert_eq!(exact_nth_root(&rat(8, 27), 3), Some(rat(2, 3)));
        assert_eq!(exact_nth_root(&rat(2, 1), 2), None);
        assert_eq!(exact_nth_root(&rat(-8, 1), 3), Some(rat(-2, 1)));
        assert_eq!(exact_nth_root(&rat(-4, 1), 2), None);
    }

    #[test]
    fn integer_powers_need_no_root() {
        let b = PowerBasis::new(rat(3, 1)).unwrap();
        assert_eq!(b.pow(2, 1).unwrap(), rat(9, 1));
        assert_eq!(b.pow(-1, 1).unwrap(), rat(1, 3));
        assert_eq!(b.pow(4, 2).unwrap(), rat(9, 1)); // reduces to 3^2
    }

    #[test]
    fn fractional_powers_resolve_through_root() {
        let b = PowerBasis::with_root(rat(9, 1), 2, rat(3, 1)).unwrap();
        assert_eq!(b.pow(1, 2).unwrap(), rat(3, 1));
        assert_eq!(b.pow(3, 2).unwrap(), rat(27, 1));
        assert_eq!(b.pow(-1, 2).unwrap(), rat(1, 3));
    }

    #[test]
    fn missing_root_is_rejected() {
        let b = PowerBasis::new(rat(9, 1)).unwrap();
        assert_eq!(b.pow(1, 2), Err(RootError::MissingRoot { needed: 2 }));
        let err = PowerBasis::with_root(rat(9, 1), 2, rat(2, 1)).unwrap_err();
        assert_eq!(err, RootError::RootMismatch { den: 2 });
    }

    #[test]
    fn root_extension_only_when_exact() {
        // 64^(1/4) needs sqrt(8), which is irrational.
        let b = PowerBasis::with_root(rat(64, 1), 2, rat(8, 1)).unwrap();
        assert_eq!(b.pow(1, 2).unwrap(), rat(8, 1));
        assert_eq!(b.pow(1, 4), Err(RootError::MissingRoot { needed: 4 }));
        // 81^(1/4) extends the supplied square root exactly.
        let b = PowerBasis::with_root(rat(81, 1), 2, rat(9, 1)).unwrap();
        assert_eq!(b.pow(1, 4).unwrap(), rat(3, 1));
    }
}
