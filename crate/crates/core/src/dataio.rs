//! Schema-driven CSV ingestion, table export, exposure-curve reports, and
//! the simulation config document.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::composition::{best_bound, BoundCertificate};
use crate::distribution::empirical_distribution;
use crate::error::{invalid, Error, Result};
use crate::exposure::ExposureCurve;
use crate::protocol::{
    blood_type_demo, PolicyMode, ProtocolConfig, ReleasePolicy, RowDistribution, Setting, Target,
    UtilityOrder,
};
use crate::rational::Rational;
use crate::table::{CategoricalTable, Cell, Column};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphabetSpec {
    /// Sorted distinct observed values.
    #[default]
    Infer,
    Declared(Vec<String>),
}

/// Maps a numeric source column to two labels: `above` when the value
/// exceeds `cutoff`, `below` otherwise. Cells already equal to either label
/// (after dropping a trailing `.`) are kept as they are.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub cutoff: f64,
    pub above: String,
    pub below: String,
}

impl ThresholdRule {
    fn apply(&self, raw: &str) -> std::result::Result<String, String> {
        let s = raw.strip_suffix('.').unwrap_or(raw);
        if s == self.above || s == self.below {
            return Ok(s.to_string());
        }
        let x: f64 = raw
            .parse()
            .map_err(|_| format!("{raw:?} is neither a number nor a known label"))?;
        Ok(if x > self.cutoff { self.above.clone() } else { self.below.clone() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    /// Header name in the file; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, deserialize_with = "alphabet_or_infer")]
    pub alphabet: AlphabetSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdRule>,
}

fn alphabet_or_infer<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<AlphabetSpec, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Word(String),
        List(Vec<String>),
    }
    match Raw::deserialize(d)? {
        Raw::Word(w) if w == "infer" => Ok(AlphabetSpec::Infer),
        Raw::Word(w) => Err(serde::de::Error::custom(format!(
            "alphabet must be \"infer\" or a list, got {w:?}"
        ))),
        Raw::List(v) => Ok(AlphabetSpec::Declared(v)),
    }
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableSchema {
    /// Whether the first record is a header.
    #[serde(default = "yes")]
    pub has_header: bool,
    /// Field names for files without a header row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header: Option<Vec<String>>,
    /// Cell contents read as ⊥ besides the empty string.
    #[serde(default)]
    pub missing: Vec<String>,
    /// Strip surrounding whitespace from every field.
    #[serde(default)]
    pub trim: bool,
    pub columns: Vec<ColumnSpec>,
}

impl TableSchema {
    /// Every named column, alphabet inferred.
    pub fn infer<S: AsRef<str>>(names: &[S]) -> Self {
        TableSchema {
            has_header: true,
            header: None,
            missing: Vec::new(),
            trim: false,
            columns: names
                .iter()
                .map(|n| ColumnSpec {
                    name: n.as_ref().to_string(),
                    source: None,
                    alphabet: AlphabetSpec::Infer,
                    threshold: None,
                })
                .collect(),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let schema: TableSchema = serde_json::from_reader(File::open(path)?)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::Schema("no columns".into()));
        }
        let mut names = BTreeSet::new();
        for c in &self.columns {
            if !names.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column {:?}", c.name)));
            }
        }
        if !self.has_header && self.header.is_none() {
            return Err(Error::Schema("a file without a header row needs `header`".into()));
        }
        Ok(())
    }

    /// Keeps only the named columns, in the given order.
    pub fn restrict<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        let columns = names
            .iter()
            .map(|n| {
                self.columns
                    .iter()
                    .find(|c| c.name == n.as_ref())
                    .cloned()
                    .ok_or_else(|| Error::UnknownColumn(n.as_ref().to_string()))
            })
            .collect::<Result<_>>()?;
        Ok(TableSchema {
            columns,
            ..self.clone()
        })
    }
}

/// Reads a CSV file through `schema`.
pub fn load_csv(path: &Path, schema: &TableSchema) -> Result<CategoricalTable> {
    let file = File::open(path)?;
    read_csv(file, schema)
}

/// Reads a CSV file with a header, keeping every column and inferring
/// alphabets.
pub fn load_csv_inferred(path: &Path) -> Result<CategoricalTable> {
    let mut reader = csv::Reader::from_path(path)?;
    let names: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    load_csv(path, &TableSchema::infer(&names))
}

pub fn read_csv<R: Read>(input: R, schema: &TableSchema) -> Result<CategoricalTable> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .flexible(true)
        .trim(if schema.trim { csv::Trim::All } else { csv::Trim::None })
        .from_reader(input);
    let header: Vec<String> = match &schema.header {
        Some(h) => h.clone(),
        None => reader.headers()?.iter().map(str::to_string).collect(),
    };
    let sources: Vec<usize> = schema
        .columns
        .iter()
        .map(|c| {
            let src = c.source.as_deref().unwrap_or(&c.name);
            header
                .iter()
                .position(|h| h == src)
                .ok_or_else(|| Error::Schema(format!("header has no column {src:?}")))
        })
        .collect::<Result<_>>()?;

    let mut raw: Vec<Vec<Option<String>>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != header.len() {
            return Err(Error::Data {
                line,
                reason: format!("{} fields, expected {}", record.len(), header.len()),
            });
        }
        let row = schema
            .columns
            .iter()
            .zip(&sources)
            .map(|(spec, &src)| {
                let cell = &record[src];
                if cell.is_empty() || schema.missing.iter().any(|m| m == cell) {
                    return Ok(None);
                }
                match &spec.threshold {
                    Some(rule) => rule
                        .apply(cell)
                        .map(Some)
                        .map_err(|reason| Error::Data { line, reason }),
                    None => Ok(Some(cell.to_string())),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        raw.push(row);
    }
    if raw.is_empty() {
        return Err(Error::EmptyTable);
    }

    let columns: Vec<Column> = schema
        .columns
        .iter()
        .enumerate()
        .map(|(j, spec)| match &spec.alphabet {
            AlphabetSpec::Declared(a) => Column::new(&spec.name, a.clone()),
            AlphabetSpec::Infer => {
                let seen: BTreeSet<&str> = raw.iter().filter_map(|r| r[j].as_deref()).collect();
                Column::new(&spec.name, seen.into_iter().map(str::to_string).collect())
            }
        })
        .collect();
    let rows = raw
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .zip(&columns)
                .map(|(v, c)| match v {
                    None => Ok(None),
                    Some(v) => c.code_of(v).map(Some).ok_or_else(|| Error::Data {
                        line: i as u64 + 1 + u64::from(schema.has_header),
                        reason: format!("{v:?} is not in the alphabet of {}", c.name),
                    }),
                })
                .collect::<Result<Vec<Cell>>>()
        })
        .collect::<Result<_>>()?;
    CategoricalTable::new(columns, rows)
}

/// Writes the table with a header row; ⊥ is written as an empty field.
pub fn write_csv<W: Write>(table: &CategoricalTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if table.n_cols() == 0 {
        // one empty field per row keeps the row count visible
        w.write_record([""])?;
        for _ in 0..table.n_rows() {
            w.write_record([""])?;
        }
    } else {
        w.write_record(table.columns().iter().map(|c| c.name.as_str()))?;
        for i in 0..table.n_rows() {
            w.write_record((0..table.n_cols()).map(|j| table.cell_str(i, j).unwrap_or("")))?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub exposure: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub threshold: f64,
    /// Clamped to 1.
    pub bound: f64,
    pub certificate: BoundCertificate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveExport {
    pub n_rows: usize,
    pub curves: Vec<CurveSeries>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bound: Vec<BoundPoint>,
}

impl CurveExport {
    /// Long format: `label, threshold, value, rule`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["label", "threshold", "value", "rule"])?;
        for c in &self.curves {
            for p in &c.points {
                w.write_record([c.label.clone(), p.threshold.to_string(), p.exposure.to_string(), String::new()])?;
            }
        }
        for p in &self.bound {
            let rule = serde_json::to_value(&p.certificate.rule)?
                .get("name")
                .and_then(|v| v.as_str())
                .unwrap_or_default()
                .to_string();
            w.write_record(["bound".to_string(), p.threshold.to_string(), p.bound.to_string(), rule])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// Grid points where the bound falls below the joint curve.
    pub fn bound_violations(&self) -> Vec<f64> {
        let Some(joint) = self.curves.iter().find(|c| c.label == JOINT_LABEL) else {
            return Vec::new();
        };
        joint
            .points
            .iter()
            .zip(&self.bound)
            .filter(|(j, b)| b.bound < j.exposure)
            .map(|(j, _)| j.threshold)
            .collect()
    }

    /// Every embedded certificate recomputes to its recorded bound.
    pub fn certificates_verify(&self) -> bool {
        self.bound.iter().all(|p| p.certificate.verify())
    }
}

pub const JOINT_LABEL: &str = "joint";
pub const DEFAULT_LOG_GRID_POINTS: usize = 200;

/// Every breakpoint of `joint` plus `points` log-spaced thresholds on
/// `[1/n, 1]`, ascending and distinct.
pub fn default_threshold_grid(joint: &ExposureCurve, n: usize, points: usize) -> Result<Vec<Rational>> {
    let mut grid: BTreeSet<Rational> = joint.exact_breakpoints().into_iter().collect();
    let lo = (1.0 / n.max(1) as f64).ln();
    for i in 0..points {
        let frac = if points == 1 { 1.0 } else { i as f64 / (points - 1) as f64 };
        let t = (lo * (1.0 - frac)).exp().min(1.0);
        grid.insert(Rational::from_f64(t)?);
    }
    grid.insert(Rational::one());
    Ok(grid.into_iter().filter(|t| !t.is_zero()).collect())
}

/// Per-column and joint exposure curves over `grid`, plus the best
/// composed bound on the joint curve at each grid point.
pub fn exposure_report(table: &CategoricalTable, cols: &[usize], grid: &[Rational]) -> Result<CurveExport> {
    if cols.is_empty() {
        return Err(Error::EmptyColumnSet);
    }
    if let Some(t) = grid.iter().find(|t| t.is_zero() || !t.is_probability()) {
        return Err(invalid("t", format!("{t} is outside (0, 1]")));
    }
    let marginals: Vec<ExposureCurve> = cols
        .iter()
        .map(|&j| empirical_distribution(table, &[j]).map(|d| ExposureCurve::new(&d)))
        .collect::<Result<_>>()?;
    let joint = ExposureCurve::new(&empirical_distribution(table, cols)?);
    let series = |label: String, curve: &ExposureCurve| CurveSeries {
        label,
        points: grid
            .iter()
            .map(|t| CurvePoint {
                threshold: t.to_f64(),
                exposure: curve.eval(t),
            })
            .collect(),
    };
    let mut curves: Vec<CurveSeries> = cols
        .iter()
        .zip(&marginals)
        .map(|(&j, c)| series(table.column(j).name.clone(), c))
        .collect();
    curves.push(series(JOINT_LABEL.to_string(), &joint));

    let refs: Vec<&ExposureCurve> = marginals.iter().collect();
    let names: Vec<String> = cols.iter().map(|&j| table.column(j).name.clone()).collect();
    let bound = grid
        .iter()
        .map(|t| {
            let cert = best_bound(&refs, t)?.with_columns(names.clone());
            Ok(BoundPoint {
                threshold: t.to_f64(),
                bound: cert.reported_bound(),
                certificate: cert,
            })
        })
        .collect::<Result<_>>()?;
    Ok(CurveExport {
        n_rows: table.n_rows(),
        curves,
        bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettingName {
    Fixed,
    Statistical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UtilitySpec {
    Named(String),
    Explicit(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_k: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_t: Option<Rational>,
    pub budget: f64,
    /// Defaults to the setting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<SettingName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<UtilitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSource {
    /// Built-in table name (`blood_types`) instead of a file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demo: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationColumn {
    pub name: String,
    pub alphabet: Vec<String>,
    pub probabilities: Vec<f64>,
}

/// Population with independent columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub columns: Vec<PopulationColumn>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSpec {
    pub round_one: usize,
    pub round_two: usize,
}

/// JSON document describing a protocol run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub setting: SettingName,
    pub seed: u64,
    pub policy: PolicySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<PopulationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohorts: Option<CohortSpec>,
    /// Statistical setting: number of consecutive seeds to run as a batch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl SimulationConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(File::open(path)?)?)
    }

    fn policy(&self) -> Result<ReleasePolicy> {
        let p = &self.policy;
        let target = match (&p.target_k, &p.target_t) {
            (Some(k), None) => Target::K(*k),
            (None, Some(t)) => Target::T(t.clone()),
            _ => return Err(Error::Schema("policy needs exactly one of target_k, target_t".into())),
        };
        let mode = match p.mode.as_ref().unwrap_or(&self.setting) {
            SettingName::Fixed => PolicyMode::Fixed,
            SettingName::Statistical => PolicyMode::Statistical,
        };
        let utility = match &p.utility {
            None => UtilityOrder::Entropy,
            Some(UtilitySpec::Named(s)) if s == "entropy" => UtilityOrder::Entropy,
            Some(UtilitySpec::Named(s)) if s == "given" => UtilityOrder::Given,
            Some(UtilitySpec::Named(s)) => {
                return Err(Error::Schema(format!("unknown utility order {s:?}")))
            }
            Some(UtilitySpec::Explicit(v)) => UtilityOrder::Explicit(v.clone()),
        };
        Ok(ReleasePolicy {
            target,
            budget: p.budget,
            mode,
            utility,
            delta: p.delta.unwrap_or(0.05),
        })
    }

    /// Builds the run configuration; relative paths are resolved against
    /// `base_dir`.
    pub fn to_protocol_config(&self, base_dir: &Path) -> Result<ProtocolConfig> {
        let setting = match self.setting {
            SettingName::Fixed => {
                let src = self
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::Schema("fixed setting needs `table`".into()))?;
                let table = match (&src.demo, &src.path) {
                    (Some(d), None) if d == "blood_types" => blood_type_demo().1,
                    (Some(d), None) => return Err(Error::Schema(format!("unknown demo table {d:?}"))),
                    (None, Some(p)) => {
                        let p = resolve(base_dir, p);
                        match &src.schema {
                            Some(s) => load_csv(&p, &TableSchema::from_json_file(&resolve(base_dir, s))?)?,
                            None => load_csv_inferred(&p)?,
                        }
                    }
                    _ => return Err(Error::Schema("table needs exactly one of demo, path".into())),
                };
                Setting::Fixed { table }
            }
            SettingName::Statistical => {
                let pop = self
                    .population
                    .as_ref()
                    .ok_or_else(|| Error::Schema("statistical setting needs `population`".into()))?;
                let cohorts = self
                    .cohorts
                    .as_ref()
                    .ok_or_else(|| Error::Schema("statistical setting needs `cohorts`".into()))?;
                let columns = pop
                    .columns
                    .iter()
                    .map(|c| Column::new(&c.name, c.alphabet.clone()))
                    .collect();
                let marginals = pop.columns.iter().map(|c| c.probabilities.clone()).collect();
                Setting::Statistical {
                    population: RowDistribution::independent(columns, marginals)?,
                    round_one: cohorts.round_one,
                    round_two: cohorts.round_two,
                }
            }
        };
        Ok(ProtocolConfig {
            setting,
            policy: self.policy()?,
            seed: self.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::middle_user_example;

    fn schema(json: &str) -> TableSchema {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn binary_column() {
        let s = schema(r#"{"columns": [{"name": "x"}]}"#);
        let t = read_csv("x\n1\n0\n1\n".as_bytes(), &s).unwrap();
        assert_eq!(t.n_rows(), 3);
        assert_eq!(t.column(0).alphabet, vec!["0", "1"]);
    }

    #[test]
    fn empty_and_missing_cells_are_redacted() {
        let s = schema(r#"{"missing": ["?"], "trim": true, "columns": [{"name": "w"}, {"name": "v"}]}"#);
        let t = read_csv("w,v\n a ,1\n,2\n ?,3\n".as_bytes(), &s).unwrap();
        assert_eq!(t.cell_str(0, 0), Some("a"));
        assert_eq!(t.cell(1, 0), None);
        assert_eq!(t.cell(2, 0), None);
        let d = empirical_distribution(&t, &[0]).unwrap();
        assert_eq!(d.counts().unwrap(), &[2, 1]);
    }

    #[test]
    fn threshold_rule_accepts_numbers_and_labels() {
        let s = schema(
            r#"{"columns": [{"name": "wage", "source": "income",
                 "threshold": {"cutoff": 50000, "above": ">50K", "below": "<=50K"}}]}"#,
        );
        let t = read_csv("income\n60000\n>50K.\n<=50K\n50000\n".as_bytes(), &s).unwrap();
        let v: Vec<_> = (0..4).map(|i| t.cell_str(i, 0).unwrap()).collect();
        assert_eq!(v, vec![">50K", ">50K", "<=50K", "<=50K"]);
        assert!(matches!(
            read_csv("income\nlots\n".as_bytes(), &s),
            Err(Error::Data { line: 2, .. })
        ));
    }

    #[test]
    fn header_errors() {
        let s = schema(r#"{"columns": [{"name": "y"}]}"#);
        assert!(matches!(read_csv("x\n1\n".as_bytes(), &s), Err(Error::Schema(_))));
        let s = schema(r#"{"has_header": false, "header": ["a", "b"], "columns": [{"name": "b"}]}"#);
        let t = read_csv("1,2\n3,4\n".as_bytes(), &s).unwrap();
        assert_eq!(t.cell_str(1, 0), Some("4"));
        assert!(read_csv("1,2\n3\n".as_bytes(), &s).is_err());
    }

    #[test]
    fn declared_alphabet_rejects_other_values() {
        let s = schema(r#"{"columns": [{"name": "x", "alphabet": ["a", "b"]}]}"#);
        assert!(read_csv("x\na\nc\n".as_bytes(), &s).is_err());
        let t = read_csv("x\na\n".as_bytes(), &s).unwrap();
        assert_eq!(t.column(0).alphabet.len(), 2);
    }

    #[test]
    fn round_trip() {
        let t = middle_user_example(6).unwrap();
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &TableSchema::infer(&["col1", "col2"])).unwrap();
        for i in 0..t.n_rows() {
            assert_eq!(t.row_strings(i), back.row_strings(i));
        }
    }

    #[test]
    fn single_column_bound_equals_curve() {
        let t = middle_user_example(10).unwrap();
        let joint = ExposureCurve::new(&empirical_distribution(&t, &[0]).unwrap());
        let grid = default_threshold_grid(&joint, t.n_rows(), 20).unwrap();
        let report = exposure_report(&t, &[0], &grid).unwrap();
        for (p, b) in report.curves[1].points.iter().zip(&report.bound) {
            assert_eq!(p.exposure, b.bound);
        }
        assert!(report.certificates_verify());
    }

    #[test]
    fn grid_is_sorted_and_contains_breakpoints() {
        let t = middle_user_example(10).unwrap();
        let joint = ExposureCurve::new(&empirical_distribution(&t, &[0, 1]).unwrap());
        let grid = default_threshold_grid(&joint, 11, 200).unwrap();
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        for b in joint.exact_breakpoints() {
            assert!(grid.contains(&b));
        }
        assert_eq!(grid.last(), Some(&Rational::one()));
    }

    #[test]
    fn config_document() {
        let cfg: SimulationConfig = serde_json::from_str(
            r#"{"setting": "fixed", "seed": 3, "table": {"demo": "blood_types"},
                "policy": {"target_k": 2, "budget": 0.5}}"#,
        )
        .unwrap();
        let pc = cfg.to_protocol_config(Path::new(".")).unwrap();
        assert_eq!(pc.policy.mode, PolicyMode::Fixed);
        let bad: std::result::Result<SimulationConfig, _> =
            serde_json::from_str(r#"{"setting": "fixed", "seed": 3, "bogus": 1, "policy": {"budget": 1}}"#);
        assert!(bad.is_err());
    }
}
