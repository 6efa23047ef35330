//! A catalog of schemes with exact point-count polynomials in `q`,
//! Tate-type E-polynomials, brute-force enumeration oracles over small
//! prime fields, and prebuilt blow-up stratification data.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::exact::EPoly;
use crate::strata::{Divisor, Flavor, ResolutionData, StratumTable};
use crate::{rat, Int, Rat};

/// Expression tree over the catalog constructors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SchemeExpr {
    Point,
    Affine(u32),
    Projective(u32),
    Torus(u32),
    Product(Box<SchemeExpr>, Box<SchemeExpr>),
    DisjointUnion(Box<SchemeExpr>, Box<SchemeExpr>),
    Complement(Box<SchemeExpr>, Box<SchemeExpr>),
    BlowupOriginAffine(u32),
}

impl fmt::Display for SchemeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeExpr::Point => write!(f, "point"),
            SchemeExpr::Affine(n) => write!(f, "affine({n})"),
            SchemeExpr::Projective(n) => write!(f, "projective({n})"),
            SchemeExpr::Torus(n) => write!(f, "torus({n})"),
            SchemeExpr::Product(a, b) => write!(f, "product({a}, {b})"),
            SchemeExpr::DisjointUnion(a, b) => write!(f, "disjoint_union({a}, {b})"),
            SchemeExpr::Complement(a, b) => write!(f, "complement({a}, {b})"),
            SchemeExpr::BlowupOriginAffine(n) => write!(f, "blowup_origin_affine({n})"),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CountError {
    #[error("complement produced a negative point count at q = 2")]
    NegativeCount,
    #[error("brute-force enumeration supports prime fields up to 13, got {0}")]
    FieldTooLarge(u64),
    #[error("brute-force enumeration requires a prime field, got {0}")]
    NotPrime(u64),
    #[error("scheme has no Tate-type E-polynomial")]
    NotTate,
    #[error("failed to parse scheme expression: {0}")]
    Parse(String),
}

/// Univariate integer polynomial in `q`, little-endian coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct QPoly(Vec<Int>);

impl QPoly {
    pub fn zero() -> Self {
        QPoly(Vec::new())
    }

    pub fn constant(c: Int) -> Self {
        QPoly(vec![c]).trimmed()
    }

    pub fn from_coeffs(coeffs: Vec<Int>) -> Self {
        QPoly(coeffs).trimmed()
    }

    /// `q^n`.
    pub fn power(n: u32) -> Self {
        let mut c = vec![Int::zero(); n as usize + 1];
        c[n as usize] = Int::one();
        QPoly(c)
    }

    /// `1 + q + ... + q^n`.
    pub fn geometric(n: u32) -> Self {
        QPoly(vec![Int::one(); n as usize + 1])
    }

    fn trimmed(mut self) -> Self {
        while self.0.last().is_some_and(Zero::is_zero) {
            self.0.pop();
        }
        self
    }

    pub fn coeffs(&self) -> &[Int] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, other: &QPoly) -> QPoly {
        let mut out = vec![Int::zero(); self.0.len().max(other.0.len())];
        for (i, c) in self.0.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.0.iter().enumerate() {
            out[i] += c;
        }
        QPoly(out).trimmed()
    }

    pub fn sub(&self, other: &QPoly) -> QPoly {
        let mut out = vec![Int::zero(); self.0.len().max(other.0.len())];
        for (i, c) in self.0.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.0.iter().enumerate() {
            out[i] -= c;
        }
        QPoly(out).trimmed()
    }

    pub fn mul(&self, other: &QPoly) -> QPoly {
        if self.is_zero() || other.is_zero() {
            return QPoly::zero();
        }
        let mut out = vec![Int::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        QPoly(out).trimmed()
    }

    pub fn pow(&self, n: u32) -> QPoly {
        let mut out = QPoly::constant(Int::one());
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Evaluate at an integer point by Horner's rule.
    pub fn eval(&self, q: &Int) -> Int {
        let mut acc = Int::zero();
        for c in self.0.iter().rev() {
            acc = acc * q + c;
        }
        acc
    }

    pub fn eval_rat(&self, q: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.0.iter().rev() {
            acc = acc * q + Rat::from(c.clone());
        }
        acc
    }

    /// The balanced E-polynomial with `q` replaced by `uv`.
    pub fn to_epoly(&self) -> EPoly {
        let triples: Vec<_> = self
            .0
            .iter()
            .enumerate()
            .map(|(k, c)| (k as u64, k as u64, c.clone()))
            .collect();
        EPoly::from_triples(1, &triples)
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            use num_traits::Signed;
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = c.abs();
            match k {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}*")?;
                    }
                    if k == 1 {
                        write!(f, "q")?;
                    } else {
                        write!(f, "q^{k}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// A catalog scheme: an expression tree with its exact point-count
/// polynomial and Tate-type E-polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountScheme {
    expr: SchemeExpr,
    count: QPoly,
    tate_e: Option<EPoly>,
}

/// Compute the point-count polynomial of an expression compositionally.
pub fn build_scheme(expr: SchemeExpr) -> Result<CountScheme, CountError> {
    let count = count_poly(&expr)?;
    let tate_e = Some(count.to_epoly());
    Ok(CountScheme {
        expr,
        count,
        tate_e,
    })
}

fn count_poly(expr: &SchemeExpr) -> Result<QPoly, CountError> {
    let n = match expr {
        SchemeExpr::Point => QPoly::constant(Int::one()),
        SchemeExpr::Affine(n) => QPoly::power(*n),
        SchemeExpr::Projective(n) => QPoly::geometric(*n),
        SchemeExpr::Torus(n) => QPoly::from_coeffs(vec![Int::from(-1), Int::from(1)]).pow(*n),
        SchemeExpr::Product(a, b) => count_poly(a)?.mul(&count_poly(b)?),
        SchemeExpr::DisjointUnion(a, b) => count_poly(a)?.add(&count_poly(b)?),
        SchemeExpr::Complement(ambient, closed) => {
            let diff = count_poly(ambient)?.sub(&count_poly(closed)?);
            // Sanity guard against complements that cannot be counts.
            if diff.eval(&Int::from(2)) < Int::zero() {
                return Err(CountError::NegativeCount);
            }
            diff
        }
        SchemeExpr::BlowupOriginAffine(n) => {
            // q^n - 1 points off the center plus an exceptional P^(n-1).
            QPoly::power(*n)
                .sub(&QPoly::constant(Int::one()))
                .add(&QPoly::geometric(n.saturating_sub(1)))
        }
    };
    Ok(n)
}

impl CountScheme {
    pub fn expr(&self) -> &SchemeExpr {
        &self.expr
    }

    /// The cached count polynomial `N(q)`.
    pub fn count_polynomial(&self) -> &QPoly {
        &self.count
    }

    /// `N` evaluated at `q`.
    pub fn count_points(&self, q: u64) -> Int {
        assert!(
            q >= 2,
            "point counts are over fields with at least 2 elements"
        );
        self.count.eval(&Int::from(q))
    }

    /// The Tate-type E-polynomial: `N(q)` with `q` replaced by `uv`.
    pub fn e_polynomial(&self) -> Result<&EPoly, CountError> {
        self.tate_e.as_ref().ok_or(CountError::NotTate)
    }
}

const MAX_BRUTE_FIELD: u64 = 13;

fn is_prime(q: u64) -> bool {
    q >= 2 && (2..q).all(|d| !q.is_multiple_of(d))
}

/// Exhaustively enumerate the points of `expr` over the prime field `F_q`.
///
/// Independent of the count polynomial: affine/torus/projective points are
/// walked coordinate by coordinate, and blow-ups are counted as incidence
/// pairs (line through the origin, point on it).
pub fn brute_force_count(expr: &SchemeExpr, q: u64) -> Result<u64, CountError> {
    if q > MAX_BRUTE_FIELD {
        return Err(CountError::FieldTooLarge(q));
    }
    if !is_prime(q) {
        return Err(CountError::NotPrime(q));
    }
    Ok(brute(expr, q))
}

fn brute(expr: &SchemeExpr, q: u64) -> u64 {
    match expr {
        SchemeExpr::Point => 1,
        SchemeExpr::Affine(n) => tuples(q, *n).count() as u64,
        SchemeExpr::Torus(n) => tuples(q, *n).filter(|t| t.iter().all(|&x| x != 0)).count() as u64,
        SchemeExpr::Projective(n) => {
            // Canonical representatives: first nonzero coordinate equal 1.
            tuples(q, *n + 1)
                .filter(|t| {
                    t.iter()
                        .position(|&x| x != 0)
                        .is_some_and(|first| t[first] == 1)
                })
                .count() as u64
        }
        SchemeExpr::Product(a, b) => brute(a, q) * brute(b, q),
        SchemeExpr::DisjointUnion(a, b) => brute(a, q) + brute(b, q),
        SchemeExpr::Complement(ambient, closed) => brute(ambient, q) - brute(closed, q),
        SchemeExpr::BlowupOriginAffine(n) => {
            // Incidence pairs (x, L) with L a line through the origin and
            // x a point on L. Lines are canonical direction vectors with
            // first nonzero coordinate 1; the points of L are its q scalar
            // multiples, each giving one pair.
            let mut count = 0;
            for dir in tuples(q, *n) {
                let Some(first) = dir.iter().position(|&x| x != 0) else {
                    continue;
                };
                if dir[first] != 1 {
                    continue;
                }
                count += (0..q).count() as u64;
            }
            count
        }
    }
}

/// Iterate all `n`-tuples over `{0, ..., q-1}`.
fn tuples(q: u64, n: u32) -> impl Iterator<Item = Vec<u64>> {
    let total = q.pow(n);
    (0..total).map(move |mut idx| {
        let mut t = Vec::with_capacity(n as usize);
        for _ in 0..n {
            t.push(idx % q);
            idx /= q;
        }
        t
    })
}

/// Resolution data and stratum counts for the blow-up of affine `n`-space
/// at the origin: one exceptional divisor with discrepancy `n - 1`.
pub fn blowup_strata(n: u32) -> (ResolutionData, BTreeMap<u64, QPoly>) {
    assert!(n >= 2, "blow-up strata need dimension at least 2");
    let divisor = Divisor::new("E", rat(n as i64 - 1, 1));
    let complement = &EPoly::uv_pow(n as u64, 1) - &EPoly::one();
    let exceptional = QPoly::geometric(n - 1).to_epoly();
    let strata =
        StratumTable::from_entries(Flavor::Open, 1, [(0b0, complement), (0b1, exceptional)]);
    let resolution = ResolutionData::new(format!("blowup_origin_a{n}"), n, vec![divisor], strata);
    let mut counts = BTreeMap::new();
    counts.insert(0b0, QPoly::power(n).sub(&QPoly::constant(Int::one())));
    counts.insert(0b1, QPoly::geometric(n - 1));
    (resolution, counts)
}

/// Parse a scheme expression like `product(affine(1), torus(2))`.
pub fn parse_scheme(input: &str) -> Result<SchemeExpr, CountError> {
    let mut parser = Parser { input, pos: 0 };
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.input.len() {
        return Err(CountError::Parse(format!(
            "trailing input at byte {}",
            parser.pos
        )));
    }
    Ok(expr)
}

struct Parser<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.input[self.pos..].starts_with(|c: char| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> Result<&'a str, CountError> {
        self.skip_ws();
        let start = self.pos;
        while self.input[self.pos..].starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(CountError::Parse(format!(
                "expected a constructor name at byte {start}"
            )));
        }
        Ok(&self.input[start..self.pos])
    }

    fn expect(&mut self, c: char) -> Result<(), CountError> {
        self.skip_ws();
        if self.input[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(CountError::Parse(format!(
                "expected '{c}' at byte {}",
                self.pos
            )))
        }
    }

    fn number(&mut self) -> Result<u32, CountError> {
        self.skip_ws();
        let start = self.pos;
        while self.input[self.pos..].starts_with(|c: char| c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.input[start..self.pos]
            .parse()
            .map_err(|_| CountError::Parse(format!("expected a number at byte {start}")))
    }

    fn expr(&mut self) -> Result<SchemeExpr, CountError> {
        let name = self.ident()?;
        match name {
            "point" => Ok(SchemeExpr::Point),
            "affine" | "projective" | "torus" | "blowup_origin_affine" => {
                self.expect('(')?;
                let n = self.number()?;
                self.expect(')')?;
                Ok(match name {
                    "affine" => SchemeExpr::Affine(n),
                    "projective" => SchemeExpr::Projective(n),
                    "torus" => SchemeExpr::Torus(n),
                    _ => SchemeExpr::BlowupOriginAffine(n),
                })
            }
            "product" | "disjoint_union" | "complement" => {
                self.expect('(')?;
                let a = self.expr()?;
                self.expect(',')?;
                let b = self.expr()?;
                self.expect(')')?;
                Ok(match name {
                    "product" => SchemeExpr::Product(Box::new(a), Box::new(b)),
                    "disjoint_union" => SchemeExpr::DisjointUnion(Box::new(a), Box::new(b)),
                    _ => SchemeExpr::Complement(Box::new(a), Box::new(b)),
                })
            }
            other => Err(CountError::Parse(format!("unknown constructor '{other}'"))),
        }
    }
}

/// The fixed desk-scale catalog exercised by the verification suites.
pub fn catalog() -> Vec<CountScheme> {
    let mut exprs = vec![SchemeExpr::Point];
    for n in 1..=3 {
        exprs.push(SchemeExpr::Affine(n));
        exprs.push(SchemeExpr::Projective(n));
        exprs.push(SchemeExpr::Torus(n));
    }
    for n in 2..=4 {
        exprs.push(SchemeExpr::BlowupOriginAffine(n));
    }
    exprs.push(SchemeExpr::Product(
        Box::new(SchemeExpr::Affine(1)),
        Box::new(SchemeExpr::Torus(1)),
    ));
    exprs.push(SchemeExpr::Product(
        Box::new(SchemeExpr::Projective(1)),
        Box::new(SchemeExpr::Projective(1)),
    ));
    exprs.push(SchemeExpr::DisjointUnion(
        Box::new(SchemeExpr::Torus(2)),
        Box::new(SchemeExpr::Point),
    ));
    exprs.push(SchemeExpr::Complement(
        Box::new(SchemeExpr::Affine(2)),
        Box::new(SchemeExpr::Point),
    ));
    exprs.push(SchemeExpr::Complement(
        Box::new(SchemeExpr::Projective(2)),
        Box::new(SchemeExpr::Projective(1)),
    ));
    exprs
        .into_iter()
        .map(|e| build_scheme(e).expect("catalog schemes are well-formed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::int;

    #[test]
    fn projective_plane_counts() {
        let s = build_scheme(SchemeExpr::Projective(2)).unwrap();
        assert_eq!(s.count_polynomial(), &QPoly::geometric(2));
        assert_eq!(s.count_points(2), int(7));
        assert_eq!(s.count_points(3), int(13));
    }

    #[test]
    fn torus_counts() {
        let s = build_scheme(SchemeExpr::Torus(2)).unwrap();
        assert_eq!(s.count_points(5), int(16));
    }

    #[test]
    fn blowup_count_polynomial() {
        let s = build_scheme(SchemeExpr::BlowupOriginAffine(2)).unwrap();
        // q^2 + q
        assert_eq!(
            s.count_polynomial(),
            &QPoly::from_coeffs(vec![int(0), int(1), int(1)])
        );
        assert_eq!(s.count_points(3), int(12));
    }

    #[test]
    fn negative_complement_rejected() {
        let err = build_scheme(SchemeExpr::Complement(
            Box::new(SchemeExpr::Point),
            Box::new(SchemeExpr::Affine(2)),
        ))
        .unwrap_err();
        assert_eq!(err, CountError::NegativeCount);
    }

    #[test]
    fn count_points_examples() {
        assert_eq!(
            build_scheme(SchemeExpr::Projective(1))
                .unwrap()
                .count_points(2),
            int(3)
        );
        assert_eq!(
            build_scheme(SchemeExpr::Point).unwrap().count_points(7),
            int(1)
        );
        let prod = build_scheme(SchemeExpr::Product(
            Box::new(SchemeExpr::Affine(1)),
            Box::new(SchemeExpr::Torus(1)),
        ))
        .unwrap();
        assert_eq!(prod.count_points(3), int(6));
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(
            brute_force_count(&SchemeExpr::Projective(2), 3).unwrap(),
            13
        );
        assert_eq!(
            brute_force_count(&SchemeExpr::BlowupOriginAffine(2), 2).unwrap(),
            6
        );
        assert_eq!(brute_force_count(&SchemeExpr::Torus(1), 5).unwrap(), 4);
    }

    #[test]
    fn brute_force_guards() {
        assert_eq!(
            brute_force_count(&SchemeExpr::Point, 17),
            Err(CountError::FieldTooLarge(17))
        );
        assert_eq!(
            brute_force_count(&SchemeExpr::Point, 9),
            Err(CountError::NotPrime(9))
        );
    }

    #[test]
    fn blowup_strata_shape() {
        let (r, counts) = blowup_strata(2);
        assert_eq!(r.divisors.len(), 1);
        assert_eq!(r.divisors[0].discrepancy, rat(1, 1));
        assert_eq!(r.strata.entry(0), &EPoly::uv_pow(2, 1) - &EPoly::one());
        assert_eq!(
            r.strata.entry(1),
            EPoly::balanced_from(1, &[(0, 1), (1, 1)])
        );
        assert_eq!(counts[&0].eval(&int(3)), int(8));
        assert_eq!(counts[&1].eval(&int(3)), int(4));

        let (r3, counts3) = blowup_strata(3);
        assert_eq!(r3.divisors[0].discrepancy, rat(2, 1));
        assert_eq!(counts3[&1], QPoly::geometric(2));
    }

    #[test]
    fn e_polynomial_examples() {
        let p2 = build_scheme(SchemeExpr::Projective(2)).unwrap();
        assert_eq!(
            p2.e_polynomial().unwrap(),
            &EPoly::balanced_from(1, &[(0, 1), (1, 1), (2, 1)])
        );
        // Self-dual under the degree-2 reflection.
        let e = p2.e_polynomial().unwrap();
        assert_eq!(&e.poincare_dual(2).unwrap(), e);

        let t2 = build_scheme(SchemeExpr::Torus(2)).unwrap();
        let uv_minus_1 = &EPoly::uv_pow(1, 1) - &EPoly::one();
        assert_eq!(t2.e_polynomial().unwrap(), &(&uv_minus_1 * &uv_minus_1));

        let pt = build_scheme(SchemeExpr::Point).unwrap();
        assert_eq!(pt.e_polynomial().unwrap(), &EPoly::one());
    }

    #[test]
    fn parser_roundtrip() {
        for s in [
            "point",
            "affine(3)",
            "projective(2)",
            "torus(1)",
            "blowup_origin_affine(4)",
            "product(affine(1), torus(1))",
            "disjoint_union(point, torus(2))",
            "complement(projective(2), projective(1))",
        ] {
            let e = parse_scheme(s).unwrap();
            assert_eq!(e.to_string(), s);
        }
        assert!(parse_scheme("mystery(1)").is_err());
        assert!(parse_scheme("affine(1) junk").is_err());
    }

    #[test]
    fn catalog_brute_force_matches_polynomials() {
        for scheme in catalog() {
            for q in [2u64, 3, 5, 7] {
                let brute = brute_force_count(scheme.expr(), q).unwrap();
                assert_eq!(
                    Int::from(brute),
                    scheme.count_points(q),
                    "mismatch for {} at q = {q}",
                    scheme.expr()
                );
            }
        }
    }

    #[test]
    fn blowup_counts_partition_the_space() {
        for n in 2..=6 {
            let (_, counts) = blowup_strata(n);
            let total = counts.values().fold(QPoly::zero(), |acc, c| acc.add(c));
            let whole = build_scheme(SchemeExpr::BlowupOriginAffine(n)).unwrap();
            assert_eq!(&total, whole.count_polynomial());
        }
    }

    #[test]
    fn torus_e_polynomial_matches_complement_computation() {
        // The 2-torus sits in P^1 x P^1 as the complement of the four
        // coordinate curves; inclusion-exclusion over the closed table must
        // reproduce the catalog E-polynomial (uv - 1)^2.
        let p1 = EPoly::balanced_from(1, &[(0, 1), (1, 1)]);
        let ambient = &p1 * &p1;
        let curves = EPoly::balanced_from(1, &[(0, 2), (1, 2)]); // two disjoint P^1s
        let points = EPoly::balanced_from(1, &[(0, 4)]);
        let strata = StratumTable::from_entries(
            Flavor::Closed,
            2,
            [
                (0b00, ambient),
                (0b01, curves.clone()),
                (0b10, curves),
                (0b11, points),
            ],
        );
        let complement = strata.complement_e().unwrap();
        let t2 = build_scheme(SchemeExpr::Torus(2)).unwrap();
        assert_eq!(&complement, t2.e_polynomial().unwrap());
    }

    #[test]
    fn product_e_polynomial_is_multiplicative() {
        let a = build_scheme(SchemeExpr::Projective(1)).unwrap();
        let b = build_scheme(SchemeExpr::Torus(2)).unwrap();
        let prod = build_scheme(SchemeExpr::Product(
            Box::new(SchemeExpr::Projective(1)),
            Box::new(SchemeExpr::Torus(2)),
        ))
        .unwrap();
        assert_eq!(
            prod.e_polynomial().unwrap(),
            &(a.e_polynomial().unwrap() * b.e_polynomial().unwrap())
        );
    }
}
