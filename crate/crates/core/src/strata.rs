//! The stratification data model for a simple-normal-crossing exceptional
//! locus, and the inclusion-exclusion calculus on its boolean lattice of
//! divisor subsets.
//!
//! A stratum table maps subsets `J` of the divisor index set (as bitmasks)
//! to E-polynomials: the `closed` flavor stores `E(D_J)` for the closed
//! intersections, the `open` flavor stores `E(D_J°)` for the locally closed
//! strata of points lying on exactly the divisors in `J`. The two flavors
//! are Möbius transforms of each other.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Signed;
use thiserror::Error;

use crate::exact::EPoly;
use crate::{rat, Rat};

/// Maximum number of exceptional divisors: subsets are `u64` bitmasks and
/// two bits of headroom are kept for iteration arithmetic.
pub const MAX_DIVISORS: usize = 62;

/// An exceptional divisor with its discrepancy coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divisor {
    pub label: String,
    pub discrepancy: Rat,
}

impl Divisor {
    pub fn new(label: impl Into<String>, discrepancy: Rat) -> Self {
        Divisor {
            label: label.into(),
            discrepancy,
        }
    }

    /// Log-terminality of this component: discrepancy strictly above -1.
    pub fn is_log_terminal(&self) -> bool {
        self.discrepancy > rat(-1, 1)
    }
}

/// Which family of E-polynomials a stratum table stores.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// Entries are `E(D_J°)` of the locally closed strata.
    Open,
    /// Entries are `E(D_J)` of the closed intersections.
    Closed,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flavor::Open => write!(f, "open"),
            Flavor::Closed => write!(f, "closed"),
        }
    }
}

/// Map from divisor subsets (bitmasks over the index set) to E-polynomials.
///
/// A missing entry denotes an empty stratum (zero E-polynomial).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StratumTable {
    flavor: Flavor,
    width: u32,
    entries: BTreeMap<u64, EPoly>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum StrataError {
    #[error("divisor {index} ({label}) has discrepancy {discrepancy} <= -1: not log-terminal")]
    NotLogTerminal {
        index: usize,
        label: String,
        discrepancy: Rat,
    },
    #[error("{0} divisors exceed the supported maximum of {MAX_DIVISORS}")]
    TooManyDivisors(usize),
    #[error("subset mask {mask:#b} does not fit the divisor count {width}")]
    MaskOutOfRange { mask: u64, width: u32 },
    #[error("stratum table width {width} does not match the divisor count {divisors}")]
    WidthMismatch { width: u32, divisors: usize },
    #[error(
        "inconsistent support: closed stratum {smaller:#b} is empty but superset {larger:#b} is not"
    )]
    InconsistentSupport { smaller: u64, larger: u64 },
    #[error("closed stratum {mask:#b} has exponents beyond its degree-{box_dim} box")]
    DegreeBoxExceeded { mask: u64, box_dim: i64 },
    #[error("expected a {expected} table, found {found}")]
    WrongFlavor { expected: Flavor, found: Flavor },
    #[error("closed table has no entry for the ambient variety (empty subset)")]
    MissingAmbient,
}

impl StratumTable {
    pub fn new(flavor: Flavor, width: u32) -> Self {
        StratumTable {
            flavor,
            width,
            entries: BTreeMap::new(),
        }
    }

    /// Build from explicit entries, dropping zero polynomials.
    pub fn from_entries(
        flavor: Flavor,
        width: u32,
        entries: impl IntoIterator<Item = (u64, EPoly)>,
    ) -> Self {
        let mut t = StratumTable::new(flavor, width);
        for (mask, poly) in entries {
            t.insert(mask, poly);
        }
        t
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn insert(&mut self, mask: u64, poly: EPoly) {
        if poly.is_zero() {
            self.entries.remove(&mask);
        } else {
            self.entries.insert(mask, poly);
        }
    }

    /// The stratum's E-polynomial; zero when the stratum is empty.
    pub fn entry(&self, mask: u64) -> EPoly {
        self.entries.get(&mask).cloned().unwrap_or_else(EPoly::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&u64, &EPoly)> {
        self.entries.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn check_masks(&self) -> Result<(), StrataError> {
        let limit = if self.width >= 64 {
            u64::MAX
        } else {
            (1u64 << self.width) - 1
        };
        for &mask in self.entries.keys() {
            if mask & !limit != 0 {
                return Err(StrataError::MaskOutOfRange {
                    mask,
                    width: self.width,
                });
            }
        }
        Ok(())
    }

    /// Möbius transform: from closed intersections to open strata,
    /// `E(D_J°) = sum over J' ⊇ J of (-1)^|J' \ J| E(D_J')`.
    pub fn open_from_closed(&self) -> Result<StratumTable, StrataError> {
        if self.flavor != Flavor::Closed {
            return Err(StrataError::WrongFlavor {
                expected: Flavor::Closed,
                found: self.flavor,
            });
        }
        Ok(self.transform(Flavor::Open, true))
    }

    /// Inverse transform: from open strata back to closed intersections,
    /// `E(D_J) = sum over J' ⊇ J of E(D_J'°)`.
    pub fn closed_from_open(&self) -> Result<StratumTable, StrataError> {
        if self.flavor != Flavor::Open {
            return Err(StrataError::WrongFlavor {
                expected: Flavor::Open,
                found: self.flavor,
            });
        }
        Ok(self.transform(Flavor::Closed, false))
    }

    /// Normalize to the open flavor, converting when necessary.
    pub fn to_open(&self) -> Result<StratumTable, StrataError> {
        match self.flavor {
            Flavor::Open => Ok(self.clone()),
            Flavor::Closed => self.open_from_closed(),
        }
    }

    /// Scatter every entry to all subsets of its mask. With `signed`, the
    /// contribution of `J'` to `J ⊆ J'` carries the sign `(-1)^|J' \ J|`.
    ///
    /// Iterating entries times subsets keeps the walk proportional to the
    /// populated part of the lattice rather than the full `3^width`.
    fn transform(&self, flavor: Flavor, signed: bool) -> StratumTable {
        let mut out: BTreeMap<u64, EPoly> = BTreeMap::new();
        for (&sup, poly) in &self.entries {
            // Enumerate all subsets of `sup`, including itself and 0.
            let mut sub = sup;
            loop {
                let diff = (sup ^ sub).count_ones();
                let contribution = if signed && diff % 2 == 1 {
                    -poly
                } else {
                    poly.clone()
                };
                out.entry(sub)
                    .and_modify(|acc| *acc = &*acc + &contribution)
                    .or_insert(contribution);
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & sup;
            }
        }
        let mut table = StratumTable::new(flavor, self.width);
        for (mask, poly) in out {
            table.insert(mask, poly);
        }
        table
    }

    /// E-function of the ambient space minus all divisors:
    /// `sum over J of (-1)^|J| E(D_J)`, requiring the closed flavor with an
    /// ambient entry at the empty subset.
    pub fn complement_e(&self) -> Result<EPoly, StrataError> {
        if self.flavor != Flavor::Closed {
            return Err(StrataError::WrongFlavor {
                expected: Flavor::Closed,
                found: self.flavor,
            });
        }
        if !self.entries.contains_key(&0) {
            return Err(StrataError::MissingAmbient);
        }
        let mut total = EPoly::zero();
        for (&mask, poly) in &self.entries {
            if mask.count_ones() % 2 == 0 {
                total = &total + poly;
            } else {
                total = &total - poly;
            }
        }
        Ok(total)
    }
}

/// A resolution of singularities, described by its exceptional divisor list
/// and a stratum table for the intersections.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolutionData {
    pub name: String,
    pub dimension: u32,
    pub divisors: Vec<Divisor>,
    pub strata: StratumTable,
}

impl ResolutionData {
    pub fn new(
        name: impl Into<String>,
        dimension: u32,
        divisors: Vec<Divisor>,
        strata: StratumTable,
    ) -> Self {
        ResolutionData {
            name: name.into(),
            dimension,
            divisors,
            strata,
        }
    }

    /// Check log-terminality, mask widths, and (for closed tables) monotone
    /// support under intersection.
    pub fn validate(&self) -> Result<(), StrataError> {
        if self.divisors.len() > MAX_DIVISORS {
            return Err(StrataError::TooManyDivisors(self.divisors.len()));
        }
        for (index, d) in self.divisors.iter().enumerate() {
            if !d.is_log_terminal() {
                return Err(StrataError::NotLogTerminal {
                    index,
                    label: d.label.clone(),
                    discrepancy: d.discrepancy.clone(),
                });
            }
        }
        if self.strata.width as usize != self.divisors.len() {
            return Err(StrataError::WidthMismatch {
                width: self.strata.width,
                divisors: self.divisors.len(),
            });
        }
        self.strata.check_masks()?;
        if self.strata.flavor == Flavor::Closed {
            for (&mask, poly) in self.strata.iter() {
                // An empty closed intersection forces all deeper
                // intersections to be empty as well.
                for bit in 0..self.strata.width as u64 {
                    let smaller = mask & !(1 << bit);
                    if smaller != mask && self.strata.entry(smaller).is_zero() {
                        return Err(StrataError::InconsistentSupport {
                            smaller,
                            larger: mask,
                        });
                    }
                }
                // A stratum cut by k divisors has dimension n - k, so its
                // E-polynomial lives in the degree-(n - k) box.
                let box_dim = self.dimension as i64 - mask.count_ones() as i64;
                let cap = box_dim * poly.den() as i64;
                if box_dim < 0 || poly.max_exp_num() > cap as u64 {
                    return Err(StrataError::DegreeBoxExceeded { mask, box_dim });
                }
            }
        }
        Ok(())
    }

    /// The least common multiple of the discrepancy denominators: the
    /// context denominator for all fractional exponents of this resolution.
    pub fn context_den(&self) -> u32 {
        self.divisors.iter().fold(1u32, |acc, d| {
            let den = d.discrepancy.denom().abs();
            let den = u32::try_from(den).expect("discrepancy denominator fits u32");
            num_integer::lcm(acc, den)
        })
    }

    /// Same data with the stratum table normalized to the open flavor.
    pub fn with_open_strata(&self) -> Result<ResolutionData, StrataError> {
        Ok(ResolutionData {
            name: self.name.clone(),
            dimension: self.dimension,
            divisors: self.divisors.clone(),
            strata: self.strata.to_open()?,
        })
    }

    /// Render a subset mask as its sorted divisor labels.
    pub fn mask_labels(&self, mask: u64) -> Vec<String> {
        self.divisors
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, d)| d.label.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::EPoly;

    fn w_poly(terms: &[(u64, i64)]) -> EPoly {
        EPoly::balanced_from(1, terms)
    }

    fn resolution(divisors: Vec<Divisor>, strata: StratumTable) -> ResolutionData {
        ResolutionData::new("test", 2, divisors, strata)
    }

    #[test]
    fn log_terminal_boundary() {
        let bad = resolution(
            vec![Divisor::new("E", rat(-1, 1))],
            StratumTable::new(Flavor::Open, 1),
        );
        assert!(matches!(
            bad.validate(),
            Err(StrataError::NotLogTerminal { index: 0, .. })
        ));

        let good = resolution(
            vec![Divisor::new("E", rat(-1, 3))],
            StratumTable::new(Flavor::Open, 1),
        );
        assert!(good.validate().is_ok());
    }

    #[test]
    fn inconsistent_support_detected() {
        // E(D_1) empty but E(D_12) nonempty.
        let strata = StratumTable::from_entries(
            Flavor::Closed,
            2,
            [(0b00, w_poly(&[(0, 1)])), (0b11, w_poly(&[(0, 1)]))],
        );
        let r = resolution(
            vec![Divisor::new("D1", rat(0, 1)), Divisor::new("D2", rat(0, 1))],
            strata,
        );
        assert!(matches!(
            r.validate(),
            Err(StrataError::InconsistentSupport { .. })
        ));
    }

    #[test]
    fn degree_box_enforced_for_closed_tables() {
        // A divisor stratum in a surface lives in the degree-1 box; w^2 is
        // too big.
        let strata = StratumTable::from_entries(
            Flavor::Closed,
            1,
            [(0b0, w_poly(&[(2, 1)])), (0b1, w_poly(&[(2, 1)]))],
        );
        let r = resolution(vec![Divisor::new("E", rat(0, 1))], strata);
        assert!(matches!(
            r.validate(),
            Err(StrataError::DegreeBoxExceeded {
                mask: 0b1,
                box_dim: 1
            })
        ));
    }

    #[test]
    fn open_from_closed_two_lines_in_p2() {
        // P^2 with two lines meeting at a point.
        let strata = StratumTable::from_entries(
            Flavor::Closed,
            2,
            [
                (0b00, w_poly(&[(0, 1), (1, 1), (2, 1)])),
                (0b01, w_poly(&[(0, 1), (1, 1)])),
                (0b10, w_poly(&[(0, 1), (1, 1)])),
                (0b11, w_poly(&[(0, 1)])),
            ],
        );
        let open = strata.open_from_closed().unwrap();
        // (1+w+w^2) - 2(1+w) + 1 = w^2 - w.
        assert_eq!(open.entry(0), w_poly(&[(2, 1), (1, -1)]));
        assert_eq!(open.entry(0b01), w_poly(&[(1, 1)]));
        assert_eq!(open.entry(0b11), w_poly(&[(0, 1)]));
    }

    #[test]
    fn open_from_closed_single_divisor() {
        let strata = StratumTable::from_entries(
            Flavor::Closed,
            1,
            [(0b0, w_poly(&[(1, 1)])), (0b1, w_poly(&[(0, 1)]))],
        );
        let open = strata.open_from_closed().unwrap();
        assert_eq!(open.entry(0), w_poly(&[(1, 1), (0, -1)]));
    }

    #[test]
    fn empty_lattice_is_fixed() {
        let strata = StratumTable::from_entries(Flavor::Closed, 0, [(0, w_poly(&[(2, 1)]))]);
        let open = strata.open_from_closed().unwrap();
        assert_eq!(open.entry(0), w_poly(&[(2, 1)]));
    }

    #[test]
    fn closed_from_open_inverts() {
        let closed = StratumTable::from_entries(
            Flavor::Closed,
            2,
            [
                (0b00, w_poly(&[(0, 1), (1, 1), (2, 1)])),
                (0b01, w_poly(&[(0, 1), (1, 1)])),
                (0b10, w_poly(&[(0, 1), (1, 1)])),
                (0b11, w_poly(&[(0, 1)])),
            ],
        );
        let roundtrip = closed
            .open_from_closed()
            .unwrap()
            .closed_from_open()
            .unwrap();
        assert_eq!(roundtrip, closed);
    }

    #[test]
    fn closed_from_open_single_divisor() {
        let open = StratumTable::from_entries(
            Flavor::Open,
            1,
            [(0b0, w_poly(&[(1, 1), (0, -1)])), (0b1, w_poly(&[(0, 1)]))],
        );
        let closed = open.closed_from_open().unwrap();
        assert_eq!(closed.entry(0), w_poly(&[(1, 1)]));
        assert_eq!(closed.entry(1), w_poly(&[(0, 1)]));
    }

    #[test]
    fn wrong_flavor_rejected() {
        let open = StratumTable::new(Flavor::Open, 1);
        assert!(matches!(
            open.open_from_closed(),
            Err(StrataError::WrongFlavor { .. })
        ));
        let closed = StratumTable::new(Flavor::Closed, 1);
        assert!(matches!(
            closed.closed_from_open(),
            Err(StrataError::WrongFlavor { .. })
        ));
    }

    #[test]
    fn complement_of_two_crossing_lines() {
        let strata = StratumTable::from_entries(
            Flavor::Closed,
            2,
            [
                (0b00, w_poly(&[(0, 1), (1, 1), (2, 1)])),
                (0b01, w_poly(&[(0, 1), (1, 1)])),
                (0b10, w_poly(&[(0, 1), (1, 1)])),
                (0b11, w_poly(&[(0, 1)])),
            ],
        );
        assert_eq!(strata.complement_e().unwrap(), w_poly(&[(2, 1), (1, -1)]));
    }

    #[test]
    fn complement_no_divisors() {
        let strata = StratumTable::from_entries(Flavor::Closed, 0, [(0, w_poly(&[(2, 1)]))]);
        assert_eq!(strata.complement_e().unwrap(), w_poly(&[(2, 1)]));
    }

    #[test]
    fn complement_p1_minus_point() {
        let strata = StratumTable::from_entries(
            Flavor::Closed,
            1,
            [(0b0, w_poly(&[(0, 1), (1, 1)])), (0b1, w_poly(&[(0, 1)]))],
        );
        assert_eq!(strata.complement_e().unwrap(), w_poly(&[(1, 1)]));
    }

    #[test]
    fn complement_requires_ambient() {
        let strata = StratumTable::from_entries(Flavor::Closed, 1, [(0b1, w_poly(&[(0, 1)]))]);
        assert_eq!(strata.complement_e(), Err(StrataError::MissingAmbient));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_poly() -> impl Strategy<Value = EPoly> {
            proptest::collection::vec((0u64..8, -20i64..20), 0..4)
                .prop_map(|terms| EPoly::balanced_from(1, &terms))
        }

        fn arb_table(flavor: Flavor) -> impl Strategy<Value = StratumTable> {
            (0u32..=10).prop_flat_map(move |w| {
                let mask = 0u64..(1u64 << w);
                proptest::collection::btree_map(mask, arb_poly(), 0..12)
                    .prop_map(move |entries| StratumTable::from_entries(flavor, w, entries))
            })
        }

        proptest! {
            #[test]
            fn mobius_roundtrip_closed(t in arb_table(Flavor::Closed)) {
                let back = t.open_from_closed().unwrap().closed_from_open().unwrap();
                prop_assert_eq!(back, t);
            }

            #[test]
            fn mobius_roundtrip_open(t in arb_table(Flavor::Open)) {
                let back = t.closed_from_open().unwrap().open_from_closed().unwrap();
                prop_assert_eq!(back, t);
            }

            #[test]
            fn complement_matches_open_empty_entry(t in arb_table(Flavor::Closed)) {
                let mut t = t;
                t.insert(0, EPoly::one()); // ensure the ambient entry exists
                let complement = t.complement_e().unwrap();
                let open = t.open_from_closed().unwrap();
                prop_assert_eq!(complement, open.entry(0));
            }

            #[test]
            fn total_space_additivity(t in arb_table(Flavor::Open)) {
                // Sum of all open strata equals the closed ambient entry.
                let mut total = EPoly::zero();
                for (_, poly) in t.iter() {
                    total = &total + poly;
                }
                let closed = t.closed_from_open().unwrap();
                prop_assert_eq!(closed.entry(0), total);
            }
        }
    }
}
