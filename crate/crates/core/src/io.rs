//! CSV and JSON files for point sets and rules.
//!
//! Numbers are written with `{:.16e}` (17 significant digits), which parses
//! back to the identical `f64`. Lines starting with `#` are metadata and are
//! skipped on reading.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, WeightFunction};
use crate::lscf::{Attempt, CubatureRule, RuleKind, Termination};
use crate::points::{GeneratorSpec, PointSet, Provenance};
use crate::spaces::BasisSpec;

/// `# key: value` lines written before the CSV header.
pub fn write_header(out: &mut impl Write, meta: &[(String, String)]) -> Result<()> {
    for (k, v) in meta {
        writeln!(out, "# {k}: {v}")?;
    }
    Ok(())
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn coord_header(prefix: &str, dim: usize, suffix: &[&str]) -> String {
    let mut cols = vec![prefix.to_string()];
    cols.extend((1..=dim).map(|i| format!("x{i}")));
    cols.extend(suffix.iter().map(|s| s.to_string()));
    cols.join(",")
}

pub fn write_points_csv(out: &mut impl Write, pts: &PointSet, meta: &[(String, String)]) -> Result<()> {
    write_header(out, meta)?;
    writeln!(out, "{}", coord_header("index", pts.dim(), &[]))?;
    for (i, x) in pts.iter().enumerate() {
        let row: Vec<String> = x.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(out, "{},{}", i, row.join(","))?;
    }
    Ok(())
}

pub fn write_rule_csv(out: &mut impl Write, rule: &CubatureRule, meta: &[(String, String)]) -> Result<()> {
    write_header(out, meta)?;
    writeln!(out, "{}", coord_header("n", rule.points.dim(), &["w"]))?;
    for (i, (x, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let row: Vec<String> = x.iter().chain(std::iter::once(w)).map(|&v| fmt_f64(v)).collect();
        writeln!(out, "{},{}", i, row.join(","))?;
    }
    Ok(())
}

/// Header names and numeric rows of a metadata-prefixed CSV; the first
/// column (an index) is dropped.
fn read_table(input: impl BufRead) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let Some(h) = &header else {
            header = Some(fields.iter().map(|s| s.trim().to_string()).collect());
            continue;
        };
        if fields.len() != h.len() {
            return Err(Error::Parse(format!("line {}: expected {} fields, found {}", lineno + 1, h.len(), fields.len())));
        }
        let vals = fields[1..]
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: '{s}': {e}", lineno + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(vals);
    }
    let header = header.ok_or_else(|| Error::Parse("missing CSV header".into()))?;
    Ok((header, rows))
}

pub fn read_points_csv(input: impl BufRead) -> Result<PointSet> {
    let (header, rows) = read_table(input)?;
    let dim = header.len().saturating_sub(1);
    if header.first().map(String::as_str) != Some("index") || dim == 0 {
        return Err(Error::Parse("point CSV header must be index,x1,...,xd".into()));
    }
    PointSet::new(dim, rows.concat(), Provenance::default())
}

/// Points and weights of a rule CSV.
pub fn read_rule_csv(input: impl BufRead) -> Result<(PointSet, Vec<f64>)> {
    let (header, rows) = read_table(input)?;
    if header.len() < 3 || header[0] != "n" || header[header.len() - 1] != "w" {
        return Err(Error::Parse("rule CSV header must be n,x1,...,xd,w".into()));
    }
    let dim = header.len() - 2;
    let mut coords = Vec::with_capacity(rows.len() * dim);
    let mut weights = Vec::with_capacity(rows.len());
    for r in rows {
        coords.extend_from_slice(&r[..dim]);
        weights.push(r[dim]);
    }
    Ok((PointSet::new(dim, coords, Provenance::default())?, weights))
}

/// JSON description written next to a rule CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleSidecar {
    pub kind: RuleKind,
    pub basis: Option<BasisSpec>,
    pub domain: Domain,
    pub weight: WeightFunction,
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub residual: Option<f64>,
    pub min_weight: f64,
    pub positive: bool,
    pub exact_tol: f64,
    #[serde(default)]
    pub attempts: Vec<Attempt>,
    #[serde(default)]
    pub terminated: Option<Termination>,
}

impl RuleSidecar {
    pub fn describe(rule: &CubatureRule, domain: &Domain, weight: &WeightFunction, k: Option<usize>, exact_tol: f64) -> Self {
        RuleSidecar {
            kind: rule.kind,
            basis: rule.basis.clone(),
            domain: domain.clone(),
            weight: weight.clone(),
            generator: rule.points.provenance.generator.clone(),
            n: rule.len(),
            k,
            residual: rule.residual,
            min_weight: rule.min_weight(),
            positive: rule.positive,
            exact_tol,
            attempts: Vec::new(),
            terminated: None,
        }
    }

    /// Reassembles a rule from its CSV contents; `positive` is recomputed
    /// from the weights, so a tampered file shows up as a flag mismatch.
    pub fn to_rule(&self, points: PointSet, weights: Vec<f64>) -> CubatureRule {
        let mut points = points;
        points.provenance.generator = self.generator.clone();
        CubatureRule::new(points, weights, self.basis.clone(), self.residual, self.kind)
    }
}

/// Exact textual round-trip check helper: parse what [`fmt_f64`] wrote.
pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|e| Error::Parse(format!("'{s}': {e}")))
}
