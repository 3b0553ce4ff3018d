//! The `snmono` command line: argument parsing, input loading, report output
//! and the exit-code contract (0 pass, 1 verdict failure, 2 usage or parse
//! error).

mod demo;

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::{json, Value};

use crate::alignment::quasidense_via_alignment;
use crate::error::{Error, Result};
use crate::fitzpatrick::{phi, theta};
use crate::grid::Grid;
use crate::linrel::{brezis_browder_check, LinearRelation};
use crate::optim::Budget;
use crate::parallel::par_map;
use crate::report::{Record, Report, Verdict};
use crate::sets::{certify_quasidense, density_gap, GapVerdict, LPositiveSet, SetRepr};
use crate::space::{Point, SnSpace};

pub use demo::DemoName;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Phi,
    Theta,
    Gap,
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "snmono", version, about = "Verification reports for SN spaces, L-positive sets and monotone multifunctions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Space definition (JSON)
    #[arg(long, global = true)]
    pub space: Option<PathBuf>,

    /// Set definition (JSON)
    #[arg(long, global = true)]
    pub set: Option<PathBuf>,

    /// Probe grid, "x0:x1:step,..." (one triple per axis, or one for all)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid: Option<String>,

    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output path (stdout when absent)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Omit the timestamp so that reports are byte-identical across runs
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Check the SN axioms of a space and L-positivity of a set
    Validate,
    /// Certify quasidensity of a set and cross-check every available criterion
    Quasidense,
    /// Run a canned reproduction
    Demo {
        #[arg(value_enum)]
        name: DemoName,
    },
    /// Tabulate Φ_A, Θ_A or the density gap over a 2-D grid
    Sweep {
        #[arg(long, value_enum, default_value_t = Field::Phi)]
        field: Field,
    },
}

impl Cli {
    fn budget(&self) -> Budget {
        Budget::default().with_seed(self.seed).with_tol(self.tol)
    }

    fn config(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Parse and input errors map to exit code 2.
fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Json(_)
            | Error::Io(_)
            | Error::InvalidArgument(_)
            | Error::DimensionMismatch { .. }
            | Error::EmptyGrid
            | Error::InvalidNorm(_)
            | Error::NotProductSpace
    )
}

fn read_json(path: &PathBuf) -> Result<Value> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn load_space(cli: &Cli) -> Result<Option<SnSpace>> {
    cli.space.as_ref().map(|p| Ok(serde_json::from_value(read_json(p)?)?)).transpose()
}

fn load_set(cli: &Cli, space: Option<&SnSpace>) -> Result<Option<LPositiveSet>> {
    cli.set
        .as_ref()
        .map(|p| LPositiveSet::from_json(read_json(p)?, space.cloned().map(Arc::new)))
        .transpose()
}

fn probes(cli: &Cli, set: &LPositiveSet) -> Result<Vec<Point>> {
    let dim = set.space().dim();
    if let Some(spec) = &cli.grid {
        let g = Grid::parse(spec)?.broadcast(dim)?;
        if g.is_empty() {
            return Err(Error::EmptyGrid);
        }
        return Ok(g.points());
    }
    if let SetRepr::SequenceOperator { n, .. } = set.repr() {
        // (0, e*), the probe where the tail operator fails
        let mut p = vec![0.0; *n];
        p.extend(vec![1.0; n + 1]);
        return Ok(vec![DVector::from_vec(p)]);
    }
    Ok(Grid::default_probes(dim).points())
}

fn validate(cli: &Cli, report: &mut Report) -> Result<()> {
    let space = load_space(cli)?;
    let set = load_set(cli, space.as_ref())?;
    if space.is_none() && set.is_none() {
        return Err(Error::InvalidArgument("validate needs --space or --set".into()));
    }
    let budget = cli.budget();
    if let Some(s) = &space {
        let r = s.validate_sn();
        report.push(Record::new("sn axioms", "sn-space-axioms", Verdict::from_bool(r.ok), Some(r.operator_norm), json!(r)));
    }
    if let Some(a) = &set {
        if space.is_none() {
            let r = a.space().validate_sn();
            report.push(Record::new("sn axioms", "sn-space-axioms", Verdict::from_bool(r.ok), Some(r.operator_norm), json!(r)));
        }
        let r = a.is_l_positive(256, &budget)?;
        report.push(Record::new("l-positivity", "l-positive-set", Verdict::from_bool(r.ok), Some(r.min_value), json!(r)));
    }
    Ok(())
}

/// The relation spanned by a linear set in a euclidean product space.
fn as_relation(set: &LPositiveSet) -> Option<LinearRelation> {
    let space = set.space();
    if !space.is_block_swap() || !space.norm_kind().is_euclidean() || space.dim() % 2 != 0 {
        return None;
    }
    let (p0, p) = set.affine_rep()?;
    if p0.amax() > 0.0 {
        return None;
    }
    LinearRelation::new(space.dim() / 2, p).ok()
}

fn quasidense(cli: &Cli, report: &mut Report) -> Result<()> {
    let space = load_space(cli)?;
    let set = load_set(cli, space.as_ref())?.ok_or_else(|| Error::InvalidArgument("quasidense needs --set".into()))?;
    let budget = cli.budget();
    let probes = probes(cli, &set)?;
    let cert = certify_quasidense(&set, &probes, &budget)?;
    let verdict = match &cert.verdict {
        GapVerdict::QuasidenseOnGrid => Verdict::Pass,
        GapVerdict::Refuted { .. } => Verdict::Fail,
        GapVerdict::NoGapFoundWithinBudget { .. } => Verdict::Inconclusive,
    };
    let quasidense = cert.is_quasidense();
    report.push(Record::new(
        "density gap on grid",
        "quasidensity-gap",
        verdict,
        Some(cert.max_gap()),
        json!({ "probes": probes.len(), "verdict": cert.verdict }),
    ));
    if let Some(rel) = as_relation(&set) {
        match rel.sup_s_on_polar() {
            Ok(p) => {
                report.push(Record::new(
                    "sup of s_L on the polar",
                    "polar-sup-criterion",
                    Verdict::from_bool(p.quasidense),
                    Some(p.max_form),
                    json!(p),
                ));
                report.push(Record::new(
                    "polar test agrees with density gaps",
                    "polar-sup-criterion",
                    Verdict::from_bool(p.quasidense == quasidense),
                    None,
                    json!({ "polar": p.quasidense, "gap": quasidense }),
                ));
                let (v, d) = match brezis_browder_check(&rel) {
                    Ok(r) => (Verdict::from_bool(r.polar_test == quasidense), json!(r)),
                    Err(e) => (Verdict::Fail, json!({ "error": e.to_string() })),
                };
                report.push(Record::new("adjoint characterizations agree", "adjoint-criterion", v, None, d));
            }
            Err(e) => report.push(Record::new(
                "sup of s_L on the polar",
                "polar-sup-criterion",
                Verdict::Inconclusive,
                None,
                json!({ "error": e.to_string() }),
            )),
        }
    }
    let al = quasidense_via_alignment(&set, &probes, &budget)?;
    report.push(Record::new(
        "alignment criterion agrees with density gaps",
        "alignment-criterion",
        Verdict::from_bool(al.agree),
        Some(al.records.iter().map(|r| r.residual).fold(0.0, f64::max)),
        json!({ "aligned_everywhere": al.consistent_with_quasidense, "quasidense_on_grid": quasidense }),
    ));
    Ok(())
}

fn sweep(cli: &Cli, field: Field) -> Result<String> {
    let space = load_space(cli)?;
    let set = load_set(cli, space.as_ref())?.unwrap_or_else(|| LPositiveSet::identity_graph(1));
    let spec = cli.grid.as_ref().ok_or_else(|| Error::InvalidArgument("sweep needs --grid".into()))?;
    let grid = Grid::parse(spec)?.broadcast(2)?;
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if set.space().dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: set.space().dim() });
    }
    let budget = cli.budget();
    let pts = grid.points();
    let vals = par_map(&pts, |p| -> Result<f64> {
        Ok(match field {
            Field::Phi => phi(&set, p, &budget)?.as_f64(),
            Field::Theta => theta(&set, p, &budget)?.as_f64(),
            Field::Gap => density_gap(&set, p, &budget)?.gap,
        })
    });
    let rows: Vec<(f64, f64, f64)> = pts
        .iter()
        .zip(vals)
        .map(|(p, v)| v.map(|v| (p[0], p[1], v)))
        .collect::<Result<_>>()?;
    Ok(match cli.format {
        Format::Csv => {
            let mut s = String::from("x,y,value\n");
            for (x, y, v) in rows {
                s.push_str(&format!("{x},{y},{v}\n"));
            }
            s
        }
        Format::Json => {
            let pts: Vec<Value> = rows
                .iter()
                .map(|(x, y, v)| json!({ "x": x, "y": y, "value": if v.is_finite() { json!(v) } else { json!("inf") } }))
                .collect();
            let mut s = serde_json::to_string_pretty(&json!({ "field": field, "points": pts })).expect("serializes");
            s.push('\n');
            s
        }
    })
}

/// Runs one parsed invocation, returning the rendered output and exit code.
pub fn execute(cli: &Cli) -> std::result::Result<(String, i32), Error> {
    if !(cli.tol > 0.0) {
        return Err(Error::InvalidArgument("--tol must be positive".into()));
    }
    if let Command::Sweep { field } = &cli.command {
        return Ok((sweep(cli, *field)?, 0));
    }
    let name = match &cli.command {
        Command::Validate => "validate",
        Command::Quasidense => "quasidense",
        Command::Demo { .. } => "demo",
        Command::Sweep { .. } => unreachable!(),
    };
    let mut report = Report::new(name, cli.config());
    match &cli.command {
        Command::Validate => validate(cli, &mut report)?,
        Command::Quasidense => quasidense(cli, &mut report)?,
        Command::Demo { name } => demo::run(*name, &cli.budget(), &mut report)?,
        Command::Sweep { .. } => unreachable!(),
    }
    if !cli.no_timestamp {
        report.stamp();
    }
    let text = match cli.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    Ok((text, if report.passed() { 0 } else { 1 }))
}

/// Entry point shared by the binary and the tests.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok((text, code)) => {
            let written = match &cli.out {
                Some(p) => fs::write(p, text.as_bytes()),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            match written {
                Ok(()) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    2
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if is_usage_error(&e) {
                2
            } else {
                1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("snmono").chain(args.iter().copied())).unwrap()
    }

    fn tmp(name: &str, body: &str) -> PathBuf {
        let p = std::env::temp_dir().join(format!("snmono-cli-{}-{name}", std::process::id()));
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn validate_exit_codes() {
        let good = tmp("good.json", r#"{"dim":4,"norm":{"product":["euclidean","euclidean"]},"L":[[0,0,1,0],[0,0,0,1],[1,0,0,0],[0,1,0,0]]}"#);
        let (_, code) = execute(&parse(&["validate", "--space", good.to_str().unwrap()])).unwrap();
        assert_eq!(code, 0);
        let bad = tmp("bad.json", r#"{"dim":2,"norm":"euclidean","L":[2,0,0,2]}"#);
        let (text, code) = execute(&parse(&["validate", "--space", bad.to_str().unwrap(), "--no-timestamp"])).unwrap();
        assert_eq!(code, 1);
        assert!(text.contains("nonexpansive"));
        let broken = tmp("broken.json", "{ not json");
        assert_eq!(run(["snmono", "validate", "--space", broken.to_str().unwrap()]), 2);
        assert_eq!(run(["snmono", "frobnicate"]), 2);
    }

    #[test]
    fn quasidense_routes() {
        let id = tmp("id.json", r#"{"space":{"dim":2,"norm":{"product":["euclidean","euclidean"]},"L":[0,1,1,0]},"kind":"linear_subspace","vectors":[[1,1]]}"#);
        let (text, code) = execute(&parse(&["quasidense", "--set", id.to_str().unwrap(), "--no-timestamp"])).unwrap();
        assert_eq!(code, 0, "{text}");
        let r: Report = serde_json::from_str(&text).unwrap();
        assert!(r.records.iter().any(|x| x.anchor == "polar-sup-criterion"));
        let zero = tmp("zero.json", r#"{"space":{"dim":2,"norm":{"product":["euclidean","euclidean"]},"L":[0,1,1,0]},"kind":"linear_subspace","vectors":[]}"#);
        let (text, code) = execute(&parse(&["quasidense", "--set", zero.to_str().unwrap(), "--no-timestamp"])).unwrap();
        assert_eq!(code, 1);
        let r: Report = serde_json::from_str(&text).unwrap();
        let polar = r.records.iter().find(|x| x.name == "sup of s_L on the polar").unwrap();
        assert_eq!(polar.verdict, Verdict::Fail);
        assert!(r.records.iter().filter(|x| x.name.contains("agree")).all(|x| x.verdict == Verdict::Pass));
    }

    #[test]
    fn sweep_identity_phi() {
        let (text, code) = execute(&parse(&["sweep", "--grid", "-2:2:0.5", "--format", "csv"])).unwrap();
        assert_eq!(code, 0);
        let mut rows = 0;
        for line in text.lines().skip(1) {
            let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            assert!((v[2] - (v[0] + v[1]).powi(2) / 4.0).abs() < 1e-8);
            rows += 1;
        }
        assert_eq!(rows, 81);
        let (text, _) = execute(&parse(&["sweep", "--grid", "-2:2:0.5", "--format", "csv", "--field", "gap"])).unwrap();
        let min = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).fold(f64::INFINITY, f64::min);
        assert!(min.abs() < 1e-12);
        assert!(matches!(execute(&parse(&["sweep", "--grid", "1:0:0.5"])), Err(Error::EmptyGrid)));
    }

    #[test]
    fn csv_report() {
        let (text, _) = execute(&parse(&["demo", "heads-and-tails", "--format", "csv"])).unwrap();
        assert!(text.starts_with("name,anchor,verdict,value\n"));
    }
}
