//! Batch verification runs over a scenario and deterministic report
//! emission.
//!
//! A report carries, per resolution: the stringy E-function in canonical
//! string form, the polynomiality verdict, the stringy Hodge table when one
//! exists, and (in verify mode) the stringy point count at each requested
//! `q` together with the p-adic cross-checks. Pairwise agreement verdicts
//! come with cross-multiplication certificates. Reports embed a content
//! hash of the input so every verdict is reproducible from the scenario
//! file alone; the timestamp is the only non-deterministic field.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::count::{build_scheme, CountError};
use crate::exact::PolyStatus;
use crate::padic::{self, LocalField, MonomialForm, PadicError};
use crate::scenario::Scenario;
use crate::strata::ResolutionData;
use crate::stringy::{self, HodgeError, StringyError};
use crate::{Int, Rat};

/// One evaluation point for `verify`: a prime power and, when the scenario
/// denominator `d` exceeds 1, the exact root `s` with `s^d = q`.
#[derive(Clone, Debug)]
pub struct QPoint {
    pub q: u64,
    pub root: Option<Rat>,
}

impl QPoint {
    pub fn plain(q: u64) -> Self {
        QPoint { q, root: None }
    }

    pub fn with_root(q: u64, root: Rat) -> Self {
        QPoint {
            q,
            root: Some(root),
        }
    }
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("scenario denominator is {den} but no root was supplied for q = {q}")]
    MissingRoot { q: u64, den: u32 },
    #[error("resolution '{resolution}' has no count for q = {q}")]
    MissingCountAtQ { resolution: String, q: u64 },
    #[error(transparent)]
    Stringy(#[from] StringyError),
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Count(#[from] CountError),
}

/// A full verification or computation report.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Report {
    pub scenario: String,
    pub mode: String,
    /// SHA-256 of the input scenario bytes; verdicts are reproducible from
    /// the input alone.
    pub input_hash: String,
    /// Seconds since the Unix epoch; the one field excluded from
    /// determinism comparisons.
    pub timestamp: String,
    pub dimension: u32,
    pub denominator: u32,
    pub resolutions: Vec<ResolutionReport>,
    pub agreements: Vec<AgreementReport>,
    /// True when every pairwise agreement and every cross-check passed.
    pub all_agree: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ResolutionReport {
    pub name: String,
    pub stringy_e: String,
    /// "polynomial", "polynomial at granularity d only", or
    /// "not a polynomial".
    pub polynomiality: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hodge: Option<Vec<HodgeEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hodge_nonnegative: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub point_counts: Vec<PointCountRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct HodgeEntry {
    pub i: u64,
    pub j: u64,
    pub h: String,
}

/// Stringy point count and arithmetic cross-checks at one `q`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PointCountRow {
    pub q: u64,
    /// `N_st(q)`, the q^n-scaled count.
    pub n_st: String,
    /// `N_st(q) / q^n`, the raw integral scale.
    pub integral: String,
    /// Whether specializing the stringy E-function at `uv = q` reproduces
    /// `N_st(q)`; absent when the specialization needs an unavailable root.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub specialize_matches: Option<bool>,
    /// Whether the p-adic stratified integral reproduces `N_st(q) / q^n`.
    pub padic_matches: bool,
    /// Whether explicit counts agree with catalog-derived counts, when
    /// both sources are present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count_sources_agree: Option<bool>,
    /// The base scheme's gauge value `|X(F_q)| / q^n`, when a catalog base
    /// is bound, and whether the integral matches it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_gauge: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_matches: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct AgreementReport {
    pub left: String,
    pub right: String,
    pub equal: bool,
    /// First differing monomial when unequal.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<String>,
}

/// SHA-256 hex digest of the scenario input bytes.
pub fn input_hash(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn now_timestamp() -> String {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_else(|_| "0".into())
}

fn polynomiality_verdict(status: &PolyStatus) -> String {
    match status {
        PolyStatus::Polynomial(_) => "polynomial".into(),
        PolyStatus::FinerGranularity { needed, .. } => {
            format!("polynomial at granularity {needed} only")
        }
        PolyStatus::NotPolynomial(_) => "not a polynomial".into(),
    }
}

fn base_resolution_report(r: &ResolutionData) -> Result<ResolutionReport, StringyError> {
    let st = stringy::stringy_e(r)?;
    let status = st.value.is_polynomial(1);
    let (hodge, hodge_nonnegative) = match stringy::stringy_hodge_numbers(&st) {
        Ok(table) => {
            let entries = table
                .iter()
                .map(|(&(i, j), h)| HodgeEntry {
                    i,
                    j,
                    h: h.to_string(),
                })
                .collect();
            (Some(entries), Some(!table.has_negative()))
        }
        Err(HodgeError::FractionalExponents { .. }) | Err(HodgeError::NotPolynomial) => {
            (None, None)
        }
    };
    Ok(ResolutionReport {
        name: r.name.clone(),
        stringy_e: st.value.cancelled().to_string(),
        polynomiality: polynomiality_verdict(&status),
        hodge,
        hodge_nonnegative,
        point_counts: Vec::new(),
    })
}

fn agreements(resolutions: &[ResolutionData]) -> Result<Vec<AgreementReport>, StringyError> {
    let mut out = Vec::new();
    for i in 0..resolutions.len() {
        for j in (i + 1)..resolutions.len() {
            let a = stringy::resolutions_agree(&resolutions[i], &resolutions[j])?;
            out.push(AgreementReport {
                left: resolutions[i].name.clone(),
                right: resolutions[j].name.clone(),
                equal: a.equal,
                certificate: a.first_difference,
            });
        }
    }
    Ok(out)
}

/// Compute stringy E-functions, polynomiality verdicts, and Hodge tables;
/// no `q` evaluation.
pub fn run_compute(scenario: &Scenario, hash: String) -> Result<Report, StringyError> {
    let resolutions = scenario
        .resolutions
        .iter()
        .map(base_resolution_report)
        .collect::<Result<Vec<_>, _>>()?;
    let agreements = agreements(&scenario.resolutions)?;
    let all_agree = agreements.iter().all(|a| a.equal);
    Ok(Report {
        scenario: scenario.name.clone(),
        mode: "compute".into(),
        input_hash: hash,
        timestamp: now_timestamp(),
        dimension: scenario.dimension,
        denominator: scenario.denominator,
        resolutions,
        agreements,
        all_agree,
    })
}

/// Stratum counts for one resolution at one `q`, paired with whether the
/// explicit and catalog-derived sources agree (when both exist).
type StratumCounts = (BTreeMap<u64, Int>, Option<bool>);

fn counts_at(
    scenario: &Scenario,
    r: &ResolutionData,
    q: u64,
) -> Result<Option<StratumCounts>, VerifyError> {
    let explicit = scenario.counts.get(&r.name);
    let bound = scenario
        .catalog
        .get(&r.name)
        .filter(|b| !b.strata.is_empty());

    let from_catalog = |masks: &BTreeMap<u64, crate::count::SchemeExpr>| {
        let mut out = BTreeMap::new();
        for (&mask, expr) in masks {
            let scheme = build_scheme(expr.clone())?;
            out.insert(mask, scheme.count_points(q));
        }
        Ok::<_, VerifyError>(out)
    };

    match (explicit, bound) {
        (None, None) => Ok(None),
        (None, Some(binding)) => Ok(Some((from_catalog(&binding.strata)?, None))),
        (Some(specs), bound) => {
            let mut out = BTreeMap::new();
            for (&mask, spec) in specs {
                let count = spec.at(q).ok_or_else(|| VerifyError::MissingCountAtQ {
                    resolution: r.name.clone(),
                    q,
                })?;
                out.insert(mask, count);
            }
            let sources_agree = match bound {
                Some(binding) => Some(from_catalog(&binding.strata)? == out),
                None => None,
            };
            Ok(Some((out, sources_agree)))
        }
    }
}

/// The p-adic route to the stratified integral: local fiber formulas
/// assembled per stratum. Kept separate from the stringy-module route so
/// the two are compared in the report.
fn padic_route(
    r: &ResolutionData,
    counts: &BTreeMap<u64, Int>,
    field: &LocalField,
) -> Result<Rat, VerifyError> {
    let dim = r.dimension;
    if r.divisors.len() <= dim as usize {
        let exponents: Vec<Rat> = r.divisors.iter().map(|d| d.discrepancy.clone()).collect();
        let form = MonomialForm::new(1, exponents, dim)?;
        return Ok(padic::global_integral(&form, field, counts)?);
    }
    // More divisors than the ambient dimension: assemble from per-stratum
    // local models (at most dim divisors meet any residue disc).
    let mut total = Rat::from(Int::from(0));
    for (&mask, count) in counts {
        let incident: Vec<Rat> = r
            .divisors
            .iter()
            .enumerate()
            .filter(|(j, _)| mask & (1 << j) != 0)
            .map(|(_, d)| d.discrepancy.clone())
            .collect();
        let local_mask = if incident.is_empty() {
            0
        } else {
            (1u64 << incident.len()) - 1
        };
        let form = MonomialForm::new(1, incident, dim)?;
        let fiber = padic::local_fiber_integral(&form, field, local_mask)?;
        total += Rat::from(count.clone()) * fiber;
    }
    Ok(total)
}

/// Full verification: everything `run_compute` produces, plus stringy
/// point counts and p-adic cross-checks at each requested `q`.
pub fn run_verify(
    scenario: &Scenario,
    points: &[QPoint],
    hash: String,
) -> Result<Report, VerifyError> {
    let mut report = run_compute(scenario, hash)?;
    report.mode = "verify".into();

    let den = scenario.denominator;
    let mut fields = Vec::new();
    for p in points {
        let field = match (&p.root, den) {
            (_, 1) => LocalField::new(p.q)?,
            (Some(s), d) => LocalField::with_root(p.q, d, s.clone())?,
            (None, d) => return Err(VerifyError::MissingRoot { q: p.q, den: d }),
        };
        fields.push(field);
    }

    for (idx, r) in scenario.resolutions.iter().enumerate() {
        let st = stringy::stringy_e(r)?;
        let binding = scenario.catalog.get(&r.name);
        let mut rows = Vec::new();
        for (point, field) in points.iter().zip(&fields) {
            let Some((counts, count_sources_agree)) = counts_at(scenario, r, point.q)? else {
                continue;
            };
            let n_st = stringy::stringy_point_count(r, &counts, field)?;
            let qn = Rat::from(Int::from(point.q)).pow(r.dimension as i32);
            let integral = &n_st / &qn;

            let via_padic = padic_route(r, &counts, field)?;
            let padic_matches = via_padic == integral;

            let root_pair = point.root.clone().map(|s| (s, den));
            let specialize_matches = st
                .value
                .specialize(&Rat::from(Int::from(point.q)), root_pair)
                .ok()
                .map(|v| v == n_st);

            let (base_gauge, base_matches) = match binding.and_then(|b| b.base.as_ref()) {
                Some(base_expr) => {
                    let base = build_scheme(base_expr.clone())?;
                    let gauge =
                        padic::gauge_integral(field, &base.count_points(point.q), r.dimension);
                    let matches = gauge == integral;
                    (Some(gauge.to_string()), Some(matches))
                }
                None => (None, None),
            };

            rows.push(PointCountRow {
                q: point.q,
                n_st: n_st.to_string(),
                integral: integral.to_string(),
                specialize_matches,
                padic_matches,
                count_sources_agree,
                base_gauge,
                base_matches,
            });
        }
        report.resolutions[idx].point_counts = rows;
    }

    report.all_agree = report.agreements.iter().all(|a| a.equal)
        && report.resolutions.iter().all(|r| {
            r.point_counts.iter().all(|row| {
                row.padic_matches
                    && row.specialize_matches != Some(false)
                    && row.count_sources_agree != Some(false)
                    && row.base_matches != Some(false)
            })
        });
    Ok(report)
}

impl Report {
    /// JSON rendering; stable field order, deterministic modulo timestamp.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// The report with the timestamp blanked, for determinism comparisons.
    pub fn normalized_for_comparison(&self) -> Report {
        let mut r = self.clone();
        r.timestamp = String::new();
        r
    }

    /// Human-readable table rendering.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let push = |out: &mut String, line: String| {
            out.push_str(&line);
            out.push('\n');
        };
        push(&mut out, format!("scenario: {}", self.scenario));
        push(&mut out, format!("mode: {}", self.mode));
        push(&mut out, format!("input sha256: {}", self.input_hash));
        push(
            &mut out,
            format!(
                "dimension: {}   denominator: {}",
                self.dimension, self.denominator
            ),
        );
        for r in &self.resolutions {
            push(&mut out, String::new());
            push(&mut out, format!("resolution: {}", r.name));
            push(&mut out, format!("  E_st = {}", r.stringy_e));
            push(&mut out, format!("  polynomiality: {}", r.polynomiality));
            if let Some(hodge) = &r.hodge {
                let body = hodge
                    .iter()
                    .map(|e| format!("h^{{{},{}}}={}", e.i, e.j, e.h))
                    .collect::<Vec<_>>()
                    .join("  ");
                push(&mut out, format!("  stringy Hodge numbers: {body}"));
                if r.hodge_nonnegative == Some(false) {
                    push(&mut out, "  warning: negative stringy Hodge numbers".into());
                }
            }
            for row in &r.point_counts {
                let mut line = format!(
                    "  q={}: N_st={}  integral={}  padic={}",
                    row.q,
                    row.n_st,
                    row.integral,
                    if row.padic_matches { "ok" } else { "MISMATCH" }
                );
                if let Some(m) = row.specialize_matches {
                    line.push_str(if m {
                        "  E_st(q)=ok"
                    } else {
                        "  E_st(q)=MISMATCH"
                    });
                }
                if let Some(m) = row.base_matches {
                    line.push_str(if m { "  base=ok" } else { "  base=MISMATCH" });
                }
                push(&mut out, line);
            }
        }
        if !self.agreements.is_empty() {
            push(&mut out, String::new());
            for a in &self.agreements {
                let verdict = if a.equal { "agree" } else { "DISAGREE" };
                let mut line = format!("{} vs {}: {verdict}", a.left, a.right);
                if let Some(c) = &a.certificate {
                    line.push_str(&format!("  (first difference: {c})"));
                }
                push(&mut out, line);
            }
        }
        push(
            &mut out,
            format!(
                "\noverall: {}",
                if self.all_agree { "AGREE" } else { "DISAGREE" }
            ),
        );
        out
    }
}
