//! `stringy`: compute and verify stringy invariants from scenario files.
//!
//! Exit codes: 0 on full agreement, 1 on any disagreement, 2 on input
//! error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use stringy_core::count::{brute_force_count, build_scheme, parse_scheme};
use stringy_core::padic::{
    enumeration_oracle, monomial_integral_cell, Domain, LocalField, MonomialForm,
};
use stringy_core::report::{input_hash, run_compute, run_verify, QPoint, Report};
use stringy_core::scenario::{load_scenario, Scenario};
use stringy_core::{Int, Rat};

#[derive(Parser)]
#[command(
    name = "stringy",
    version,
    about = "Exact stringy E-functions, stringy Hodge numbers, and p-adic integrals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Compute stringy E-functions, polynomiality verdicts, and Hodge
    /// tables for every resolution in a scenario.
    Compute {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Verify resolution independence and the arithmetic identities at the
    /// given residue cardinalities.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated prime powers, e.g. `--q 2,3,5,7`.
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<u64>,
        /// Exact d-th roots aligned with `--q` when the scenario
        /// denominator d exceeds 1, e.g. `--q 8,27 --root 2,3`.
        #[arg(long, value_delimiter = ',')]
        root: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Exact p-adic integral of a monomial pluricanonical form over a
    /// polydisc.
    Integrate {
        /// Comma-separated pole exponents, e.g. `--exp -1/2,1`.
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_hyphen_values = true
        )]
        exp: Vec<String>,
        /// Pluricanonical index.
        #[arg(long, default_value_t = 1)]
        r: u32,
        #[arg(long)]
        q: u64,
        /// Exact root of q for fractional exponents.
        #[arg(long)]
        root: Option<String>,
        /// Integration domain per coordinate: the maximal ideal `m` or the
        /// ring of integers `R`.
        #[arg(long, default_value = "m")]
        domain: String,
        /// Ambient dimension; defaults to the number of exponents.
        #[arg(long)]
        dim: Option<u32>,
        /// Also run the valuation-profile enumeration oracle and print the
        /// bracket (default cutoff 64).
        #[arg(long, num_args = 0..=1, default_missing_value = "64")]
        oracle_cutoff: Option<u32>,
    },
    /// Evaluate a catalog scheme's point count at q.
    Count {
        /// Scheme expression, e.g. `blowup_origin_affine(2)`.
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        q: u64,
        /// Cross-check by exhaustive enumeration (prime q up to 13).
        #[arg(long)]
        brute: bool,
    },
    /// Print stringy Hodge tables (or the polynomiality obstruction) for
    /// every resolution in a scenario.
    Hodge {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Compute { scenario, format } => {
            let (s, hash) = load(&scenario)?;
            let report = run_compute(&s, hash)?;
            emit(&report, format);
            Ok(exit_for(&report))
        }
        Command::Verify {
            scenario,
            q,
            root,
            format,
        } => {
            let (s, hash) = load(&scenario)?;
            let points = q_points(&q, &root)?;
            let report = run_verify(&s, &points, hash)?;
            emit(&report, format);
            Ok(exit_for(&report))
        }
        Command::Integrate {
            exp,
            r,
            q,
            root,
            domain,
            dim,
            oracle_cutoff,
        } => {
            let exponents: Vec<Rat> = exp
                .iter()
                .map(|s| parse_rat(s))
                .collect::<anyhow::Result<_>>()?;
            let dim = dim.unwrap_or(exponents.len() as u32);
            let form = MonomialForm::new(r, exponents, dim)?;
            let domain = match domain.as_str() {
                "m" => Domain::MaximalIdeal,
                "R" => Domain::RingOfIntegers,
                other => bail!("unknown domain '{other}' (expected 'm' or 'R')"),
            };
            let field = field_for(&form, q, root.as_deref())?;
            let value = monomial_integral_cell(&form, &field, domain)?;
            println!("{value}");
            if let Some(cutoff) = oracle_cutoff {
                let bracket = enumeration_oracle(&form, &field, cutoff, domain)?;
                println!("oracle partial: {}", bracket.partial);
                println!("oracle tail bound: {}", bracket.tail_bound);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Count { scheme, q, brute } => {
            let expr = parse_scheme(&scheme)?;
            let built = build_scheme(expr.clone())?;
            let n = built.count_points(q);
            println!("N({q}) = {n}  [N(q) = {}]", built.count_polynomial());
            if brute {
                let enumerated = brute_force_count(&expr, q)?;
                println!("brute force: {enumerated}");
                if Int::from(enumerated) != n {
                    println!("MISMATCH between polynomial and enumeration");
                    return Ok(ExitCode::from(1));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Hodge { scenario, format } => {
            let (s, hash) = load(&scenario)?;
            let report = run_compute(&s, hash)?;
            match format {
                Format::Json => emit(&report, format),
                Format::Table => {
                    for r in &report.resolutions {
                        println!("resolution: {}", r.name);
                        println!("  polynomiality: {}", r.polynomiality);
                        match &r.hodge {
                            Some(entries) => {
                                for e in entries {
                                    println!("  h^{{{},{}}} = {}", e.i, e.j, e.h);
                                }
                            }
                            None => println!("  no stringy Hodge numbers"),
                        }
                    }
                }
            }
            Ok(exit_for(&report))
        }
    }
}

fn load(path: &PathBuf) -> anyhow::Result<(Scenario, String)> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("cannot read scenario file {}", path.display()))?;
    let scenario = load_scenario(path)?;
    Ok((scenario, input_hash(&bytes)))
}

fn parse_rat(s: &str) -> anyhow::Result<Rat> {
    Rat::from_str(s.trim()).map_err(|e| anyhow::anyhow!("bad rational '{s}': {e}"))
}

fn q_points(qs: &[u64], roots: &[String]) -> anyhow::Result<Vec<QPoint>> {
    if !roots.is_empty() && roots.len() != qs.len() {
        bail!(
            "--root takes one value per q ({} given for {} q values)",
            roots.len(),
            qs.len()
        );
    }
    let mut points = Vec::with_capacity(qs.len());
    for (i, &q) in qs.iter().enumerate() {
        let root = match roots.get(i) {
            Some(s) => Some(parse_rat(s)?),
            None => None,
        };
        points.push(QPoint { q, root });
    }
    Ok(points)
}

/// Local field for the integrate subcommand: the root denominator is the
/// lcm of the normalized exponent denominators.
fn field_for(form: &MonomialForm, q: u64, root: Option<&str>) -> anyhow::Result<LocalField> {
    let mut den: u32 = 1;
    for i in 0..form.exponents().len() {
        let e = form.ratio(i);
        let d =
            u32::try_from(e.denom().clone()).map_err(|_| anyhow::anyhow!("exponent too large"))?;
        den = num_integer::lcm(den, d);
    }
    match root {
        Some(s) if den > 1 => Ok(LocalField::with_root(q, den, parse_rat(s)?)?),
        Some(s) => {
            // A root with integer exponents: accepted and checked trivially.
            let _ = parse_rat(s)?;
            Ok(LocalField::new(q)?)
        }
        None => Ok(LocalField::new(q)?),
    }
}

fn emit(report: &Report, format: Format) {
    match format {
        Format::Table => print!("{}", report.to_table()),
        Format::Json => println!("{}", report.to_json()),
    }
}

fn exit_for(report: &Report) -> ExitCode {
    if report.all_agree {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
