//! Scenario files: ingestion, validation, normalization, and round-trip
//! serialization.
//!
//! A scenario is UTF-8 JSON naming one variety, its ambient dimension, and
//! one or more resolutions with divisors, discrepancies (exact rationals as
//! strings), and stratum tables. Optional per-resolution point counts
//! (polynomials in `q` or per-`q` integers) and catalog bindings drive the
//! arithmetic cross-checks. On load, strata are normalized to the open
//! flavor and the exponent denominator is derived when absent.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::count::{parse_scheme, CountError, QPoly, SchemeExpr};
use crate::exact::EPoly;
use crate::strata::{Divisor, Flavor, ResolutionData, StrataError, StratumTable};
use crate::{Int, Rat};

/// A validated, normalized scenario.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub dimension: u32,
    /// Common denominator of all discrepancies (explicit or derived).
    pub denominator: u32,
    /// Resolutions with strata normalized to the open flavor.
    pub resolutions: Vec<ResolutionData>,
    /// Point counts per resolution name and stratum mask.
    pub counts: BTreeMap<String, BTreeMap<u64, CountSpec>>,
    /// Catalog bindings per resolution name.
    pub catalog: BTreeMap<String, CatalogBinding>,
}

/// A stratum point count: a polynomial in `q` or explicit per-`q` values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CountSpec {
    Poly(QPoly),
    PerQ(BTreeMap<u64, Int>),
}

impl CountSpec {
    /// The count at a concrete `q`, when this specification provides one.
    pub fn at(&self, q: u64) -> Option<Int> {
        match self {
            CountSpec::Poly(p) => Some(p.eval(&Int::from(q))),
            CountSpec::PerQ(map) => map.get(&q).cloned(),
        }
    }
}

/// Catalog bindings: schemes whose exact count polynomials source or
/// cross-check a resolution's stratum counts.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CatalogBinding {
    /// The base (downstairs) scheme whose gauge-form integral the
    /// resolution's stringy integral must reproduce.
    pub base: Option<SchemeExpr>,
    /// Per-stratum schemes from which counts can be derived.
    pub strata: BTreeMap<u64, SchemeExpr>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Schema(String),
    #[error(transparent)]
    Validation(#[from] StrataError),
    #[error(transparent)]
    Count(#[from] CountError),
}

// ---------------------------------------------------------------------------
// Raw JSON model

#[derive(Serialize, Deserialize)]
struct RawScenario {
    name: String,
    dimension: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    denominator: Option<u32>,
    resolutions: Vec<RawResolution>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    counts: Vec<RawCounts>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    catalog: Vec<RawCatalog>,
}

#[derive(Serialize, Deserialize)]
struct RawResolution {
    name: String,
    divisors: Vec<RawDivisor>,
    strata: RawStrata,
}

#[derive(Serialize, Deserialize)]
struct RawDivisor {
    label: String,
    discrepancy: String,
}

#[derive(Serialize, Deserialize)]
struct RawStrata {
    flavor: String,
    entries: Vec<RawStratum>,
}

#[derive(Serialize, Deserialize)]
struct RawStratum {
    subset: Vec<String>,
    #[serde(rename = "E")]
    e: Vec<(u64, u64, IntSpec)>,
}

#[derive(Serialize, Deserialize)]
struct RawCounts {
    resolution: String,
    entries: Vec<RawCountEntry>,
}

#[derive(Serialize, Deserialize)]
struct RawCountEntry {
    subset: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    poly: Option<Vec<IntSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    at: Option<BTreeMap<String, IntSpec>>,
}

#[derive(Serialize, Deserialize)]
struct RawCatalog {
    resolution: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    base: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    strata: Vec<RawCatalogStratum>,
}

#[derive(Serialize, Deserialize)]
struct RawCatalogStratum {
    subset: Vec<String>,
    scheme: String,
}

/// Integers travel as JSON numbers when small and as strings when not.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IntSpec {
    Small(i64),
    Big(String),
}

impl IntSpec {
    fn to_int(&self) -> Result<Int, ScenarioError> {
        match self {
            IntSpec::Small(n) => Ok(Int::from(*n)),
            IntSpec::Big(s) => Int::from_str(s)
                .map_err(|e| ScenarioError::Schema(format!("bad integer '{s}': {e}"))),
        }
    }

    fn from_int(n: &Int) -> IntSpec {
        match i64::try_from(n.clone()) {
            Ok(v) => IntSpec::Small(v),
            Err(_) => IntSpec::Big(n.to_string()),
        }
    }
}

// ---------------------------------------------------------------------------
// Loading

/// Load and normalize a scenario from a file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

/// Parse and normalize a scenario from JSON text.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    normalize(raw)
}

fn parse_rat(s: &str) -> Result<Rat, ScenarioError> {
    Rat::from_str(s.trim()).map_err(|e| ScenarioError::Schema(format!("bad rational '{s}': {e}")))
}

fn subset_mask(labels: &[String], divisors: &[Divisor]) -> Result<u64, ScenarioError> {
    let mut mask = 0u64;
    for label in labels {
        let idx = divisors
            .iter()
            .position(|d| &d.label == label)
            .ok_or_else(|| ScenarioError::Schema(format!("unknown divisor label '{label}'")))?;
        let bit = 1u64 << idx;
        if mask & bit != 0 {
            return Err(ScenarioError::Schema(format!(
                "duplicate divisor label '{label}' in subset"
            )));
        }
        mask |= bit;
    }
    Ok(mask)
}

fn normalize(raw: RawScenario) -> Result<Scenario, ScenarioError> {
    if raw.resolutions.is_empty() {
        return Err(ScenarioError::Parse {
            line: 0,
            column: 0,
            message: "scenario has an empty resolutions array".into(),
        });
    }

    // Context denominator: lcm of all discrepancy denominators, which an
    // explicit denominator must be a multiple of.
    let mut derived_den: u32 = 1;
    let mut parsed: Vec<(String, Vec<Divisor>, RawStrata)> = Vec::new();
    for r in raw.resolutions {
        let mut divisors = Vec::new();
        let mut seen = BTreeSet::new();
        for d in r.divisors {
            if !seen.insert(d.label.clone()) {
                return Err(ScenarioError::Schema(format!(
                    "duplicate divisor label '{}' in resolution '{}'",
                    d.label, r.name
                )));
            }
            let a = parse_rat(&d.discrepancy)?;
            let den = u32::try_from(a.denom().abs())
                .map_err(|_| ScenarioError::Schema("discrepancy denominator too large".into()))?;
            derived_den = num_integer::lcm(derived_den, den);
            divisors.push(Divisor::new(d.label, a));
        }
        parsed.push((r.name, divisors, r.strata));
    }
    let denominator = match raw.denominator {
        Some(d) if d % derived_den == 0 && d > 0 => d,
        Some(d) => {
            return Err(ScenarioError::Schema(format!(
                "declared denominator {d} is not a multiple of the discrepancy lcm {derived_den}"
            )))
        }
        None => derived_den,
    };

    let mut resolutions = Vec::new();
    for (name, divisors, strata) in parsed {
        let flavor = match strata.flavor.as_str() {
            "open" => Flavor::Open,
            "closed" => Flavor::Closed,
            other => {
                return Err(ScenarioError::Schema(format!(
                    "unknown stratum flavor '{other}' (expected 'open' or 'closed')"
                )))
            }
        };
        let mut table = StratumTable::new(flavor, divisors.len() as u32);
        for entry in strata.entries {
            let mask = subset_mask(&entry.subset, &divisors)?;
            let mut triples = Vec::with_capacity(entry.e.len());
            for (i, j, c) in &entry.e {
                triples.push((*i, *j, c.to_int()?));
            }
            table.insert(mask, EPoly::from_triples(denominator, &triples));
        }
        let resolution = ResolutionData::new(name, raw.dimension, divisors, table);
        resolution.validate()?;
        resolutions.push(resolution.with_open_strata()?);
    }

    let find = |name: &str| -> Result<usize, ScenarioError> {
        resolutions
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| ScenarioError::Schema(format!("unknown resolution '{name}'")))
    };

    let mut counts: BTreeMap<String, BTreeMap<u64, CountSpec>> = BTreeMap::new();
    for c in raw.counts {
        let idx = find(&c.resolution)?;
        let divisors = &resolutions[idx].divisors;
        let slot = counts.entry(c.resolution.clone()).or_default();
        for entry in c.entries {
            let mask = subset_mask(&entry.subset, divisors)?;
            let spec = match (entry.poly, entry.at) {
                (Some(coeffs), None) => {
                    let ints: Result<Vec<Int>, _> = coeffs.iter().map(IntSpec::to_int).collect();
                    CountSpec::Poly(QPoly::from_coeffs(ints?))
                }
                (None, Some(at)) => {
                    let mut map = BTreeMap::new();
                    for (qs, v) in &at {
                        let q: u64 = qs.parse().map_err(|_| {
                            ScenarioError::Schema(format!("bad q value '{qs}' in counts"))
                        })?;
                        map.insert(q, v.to_int()?);
                    }
                    CountSpec::PerQ(map)
                }
                _ => {
                    return Err(ScenarioError::Schema(
                        "count entry needs exactly one of 'poly' or 'at'".into(),
                    ))
                }
            };
            slot.insert(mask, spec);
        }
    }

    let mut catalog: BTreeMap<String, CatalogBinding> = BTreeMap::new();
    for c in raw.catalog {
        let idx = find(&c.resolution)?;
        let divisors = &resolutions[idx].divisors;
        let mut binding = CatalogBinding::default();
        if let Some(base) = &c.base {
            binding.base = Some(parse_scheme(base)?);
        }
        for s in c.strata {
            let mask = subset_mask(&s.subset, divisors)?;
            binding.strata.insert(mask, parse_scheme(&s.scheme)?);
        }
        catalog.insert(c.resolution, binding);
    }

    Ok(Scenario {
        name: raw.name,
        dimension: raw.dimension,
        denominator,
        resolutions,
        counts,
        catalog,
    })
}

// ---------------------------------------------------------------------------
// Saving

/// Serialize the normalized form back to pretty JSON.
pub fn save_scenario(s: &Scenario) -> String {
    let raw = RawScenario {
        name: s.name.clone(),
        dimension: s.dimension,
        denominator: Some(s.denominator),
        resolutions: s
            .resolutions
            .iter()
            .map(|r| RawResolution {
                name: r.name.clone(),
                divisors: r
                    .divisors
                    .iter()
                    .map(|d| RawDivisor {
                        label: d.label.clone(),
                        discrepancy: d.discrepancy.to_string(),
                    })
                    .collect(),
                strata: RawStrata {
                    flavor: r.strata.flavor().to_string(),
                    entries: r
                        .strata
                        .iter()
                        .map(|(&mask, poly)| RawStratum {
                            subset: r.mask_labels(mask),
                            e: poly
                                .to_triples(s.denominator)
                                .expect("entry denominators divide the context denominator")
                                .iter()
                                .map(|(i, j, c)| (*i, *j, IntSpec::from_int(c)))
                                .collect(),
                        })
                        .collect(),
                },
            })
            .collect(),
        counts: s
            .counts
            .iter()
            .map(|(name, entries)| {
                let r = s
                    .resolutions
                    .iter()
                    .find(|r| &r.name == name)
                    .expect("count resolutions validated on load");
                RawCounts {
                    resolution: name.clone(),
                    entries: entries
                        .iter()
                        .map(|(&mask, spec)| {
                            let (poly, at) = match spec {
                                CountSpec::Poly(p) => (
                                    Some(p.coeffs().iter().map(IntSpec::from_int).collect()),
                                    None,
                                ),
                                CountSpec::PerQ(map) => (
                                    None,
                                    Some(
                                        map.iter()
                                            .map(|(q, v)| (q.to_string(), IntSpec::from_int(v)))
                                            .collect(),
                                    ),
                                ),
                            };
                            RawCountEntry {
                                subset: r.mask_labels(mask),
                                poly,
                                at,
                            }
                        })
                        .collect(),
                }
            })
            .collect(),
        catalog: s
            .catalog
            .iter()
            .map(|(name, binding)| {
                let r = s
                    .resolutions
                    .iter()
                    .find(|r| &r.name == name)
                    .expect("catalog resolutions validated on load");
                RawCatalog {
                    resolution: name.clone(),
                    base: binding.base.as_ref().map(|b| b.to_string()),
                    strata: binding
                        .strata
                        .iter()
                        .map(|(&mask, scheme)| RawCatalogStratum {
                            subset: r.mask_labels(mask),
                            scheme: scheme.to_string(),
                        })
                        .collect(),
                }
            })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("scenario serialization cannot fail")
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (dimension {}, denominator {}, {} resolutions)",
            self.name,
            self.dimension,
            self.denominator,
            self.resolutions.len()
        )
    }
}
