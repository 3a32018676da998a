//! File formats.
//!
//! | kind     | format                                                         |
//! |----------|----------------------------------------------------------------|
//! | model    | JSON, probabilities as decimal strings, `format_version` 1     |
//! | layout   | JSON `{catch_all, regions: [{name, x, y, w, h}, ...]}`          |
//! | trace    | CSV with header `t_ms,x,y`                                     |
//! | sequence | whitespace-separated symbol names, `# key: value` metadata     |
//! | report   | JSON `{scores, winner, margin, tie}`, infinities as strings    |
//!
//! Probabilities are kept as decimal strings in model files so published
//! digits survive exactly; they are parsed to `f64` on load and written back
//! with the shortest representation that round-trips.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::aoi::{AoiLayout, CursorSample, CursorTrace, Region, DEFAULT_CATCH_ALL};
use crate::classifier::TaskScoreReport;
use crate::error::{Error, Result};
use crate::hmm::{HmmModel, SequenceMeta, SymbolSequence, ROW_SUM_TOLERANCE};

mod fixtures;

pub use fixtures::{load_table2, FixtureSet, Table2, Table2Row, FIXTURE_FILES};

pub const MODEL_FORMAT_VERSION: u32 = 1;

pub(crate) fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn malformed(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Malformed {
        what,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPayload {
    pub n_states: usize,
    pub n_symbols: usize,
    pub symbol_names: Vec<String>,
    #[serde(default)]
    pub state_names: Option<Vec<String>>,
    pub pi: Vec<String>,
    pub a: Vec<Vec<String>>,
    pub b: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub provenance: Option<String>,
    /// Base of every logarithm this toolkit reports.
    #[serde(default = "natural_log")]
    pub log_base: String,
}

fn natural_log() -> String {
    "e".into()
}

impl Default for ModelMetadata {
    fn default() -> Self {
        Self {
            description: None,
            provenance: None,
            log_base: natural_log(),
        }
    }
}

/// On-disk form of an [`HmmModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub model: ModelPayload,
    /// Rescale rows whose printed digits miss a unit sum by more than the
    /// validation tolerance. The decimal strings stay as written.
    #[serde(default)]
    pub renormalize_on_load: bool,
    #[serde(default)]
    pub metadata: ModelMetadata,
}

fn decimal(x: f64) -> String {
    format!("{x}")
}

fn parse_decimal(what: &'static str, location: impl FnOnce() -> String, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| malformed(what, format!("{}: '{s}' is not a number", location())))
}

fn renormalize(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    if sum > 0.0 && (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        for p in row.iter_mut() {
            *p /= sum;
        }
    }
}

impl ModelFile {
    pub fn from_model(model: &HmmModel) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            model: ModelPayload {
                n_states: model.n_states(),
                n_symbols: model.n_symbols(),
                symbol_names: model.symbol_names().to_vec(),
                state_names: model.state_names().map(<[String]>::to_vec),
                pi: model.pi().iter().copied().map(decimal).collect(),
                a: model
                    .transition_matrix()
                    .into_iter()
                    .map(|r| r.into_iter().map(decimal).collect())
                    .collect(),
                b: model
                    .emission_matrix()
                    .into_iter()
                    .map(|r| r.into_iter().map(decimal).collect())
                    .collect(),
            },
            renormalize_on_load: false,
            metadata: ModelMetadata::default(),
        }
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.metadata.description = Some(description.into());
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| malformed("model file", e.to_string()))?;
        let version = value
            .get("format_version")
            .ok_or_else(|| malformed("model file", "missing format_version"))?
            .as_u64()
            .ok_or_else(|| malformed("model file", "format_version must be an integer"))?;
        if version != u64::from(MODEL_FORMAT_VERSION) {
            return Err(Error::UnsupportedVersion {
                found: u32::try_from(version).unwrap_or(u32::MAX),
                expected: MODEL_FORMAT_VERSION,
            });
        }
        serde_json::from_value(value).map_err(|e| malformed("model file", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes") + "\n"
    }

    /// Parses the decimals and builds a validated model.
    pub fn to_model(&self) -> Result<HmmModel> {
        let p = &self.model;
        let mut pi = p
            .pi
            .iter()
            .enumerate()
            .map(|(i, s)| parse_decimal("model file", || format!("pi[{i}]"), s))
            .collect::<Result<Vec<_>>>()?;
        let parse_matrix = |name: &'static str, m: &[Vec<String>]| {
            m.iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, s)| parse_decimal("model file", || format!("{name}[{i}][{j}]"), s))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        };
        let mut a = parse_matrix("a", &p.a)?;
        let mut b = parse_matrix("b", &p.b)?;

        if pi.len() != p.n_states {
            return Err(Error::Shape(format!(
                "n_states is {} but pi has {} entries",
                p.n_states,
                pi.len()
            )));
        }
        if b.first().map_or(0, Vec::len) != p.n_symbols {
            return Err(Error::Shape(format!(
                "n_symbols is {} but b rows have {} entries",
                p.n_symbols,
                b.first().map_or(0, Vec::len)
            )));
        }
        if self.renormalize_on_load {
            renormalize(&mut pi);
            a.iter_mut().for_each(|r| renormalize(r));
            b.iter_mut().for_each(|r| renormalize(r));
        }
        HmmModel::from_parts_unchecked(pi, a, b, p.symbol_names.clone(), p.state_names.clone())?
            .into_validated()
    }
}

pub fn parse_model(text: &str) -> Result<HmmModel> {
    ModelFile::from_json(text)?.to_model()
}

pub fn load_model(path: &Path) -> Result<HmmModel> {
    parse_model(&read(path)?)
}

pub fn save_model(model: &HmmModel, path: &Path) -> Result<()> {
    write(path, &ModelFile::from_model(model).to_json())
}

// ---------------------------------------------------------------------------
// Layouts
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct LayoutFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    #[serde(default = "default_catch_all")]
    catch_all: String,
    regions: Vec<Region>,
}

fn default_catch_all() -> String {
    DEFAULT_CATCH_ALL.into()
}

pub fn parse_layout(text: &str) -> Result<AoiLayout> {
    let file: LayoutFile =
        serde_json::from_str(text).map_err(|e| malformed("layout file", e.to_string()))?;
    AoiLayout::new(file.regions, file.catch_all)
}

pub fn layout_to_json(layout: &AoiLayout) -> String {
    let file = LayoutFile {
        description: None,
        catch_all: layout.catch_all().to_string(),
        regions: layout.regions().to_vec(),
    };
    serde_json::to_string_pretty(&file).expect("layout serializes") + "\n"
}

pub fn load_layout(path: &Path) -> Result<AoiLayout> {
    parse_layout(&read(path)?)
}

pub fn save_layout(layout: &AoiLayout, path: &Path) -> Result<()> {
    write(path, &layout_to_json(layout))
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

pub const TRACE_HEADER: &str = "t_ms,x,y";

/// Parses a `t_ms,x,y` CSV. Blank lines are skipped.
pub fn parse_trace(text: &str) -> Result<CursorTrace> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| malformed("trace file", "file is empty"))?;
    let header: Vec<&str> = header.split(',').map(str::trim).collect();
    if header != ["t_ms", "x", "y"] {
        return Err(malformed(
            "trace file",
            format!("expected header '{TRACE_HEADER}'"),
        ));
    }
    let mut samples = Vec::new();
    for (n, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(malformed(
                "trace file",
                format!("line {}: expected 3 fields, found {}", n + 1, fields.len()),
            ));
        }
        let num = |k: usize| {
            fields[k].parse::<f64>().map_err(|_| {
                malformed(
                    "trace file",
                    format!("line {}: '{}' is not a number", n + 1, fields[k]),
                )
            })
        };
        samples.push(CursorSample {
            t_ms: num(0)?,
            x: num(1)?,
            y: num(2)?,
        });
    }
    CursorTrace::new(samples)
}

pub fn trace_to_csv(trace: &CursorTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for s in trace.samples() {
        let _ = writeln!(out, "{},{},{}", s.t_ms, s.x, s.y);
    }
    out
}

pub fn load_trace(path: &Path) -> Result<CursorTrace> {
    parse_trace(&read(path)?)
}

pub fn save_trace(trace: &CursorTrace, path: &Path) -> Result<()> {
    write(path, &trace_to_csv(trace))
}

// ---------------------------------------------------------------------------
// Sequences
// ---------------------------------------------------------------------------

const SYMBOLS_PER_LINE: usize = 40;

/// Parses whitespace-separated symbol names against `alphabet`.
/// Lines starting with `#` are comments; `# source: ..`, `# ds_ms: ..` and
/// `# seed: ..` populate the sequence metadata.
pub fn parse_sequence(text: &str, alphabet: &[String]) -> Result<SymbolSequence> {
    let mut meta = SequenceMeta::default();
    let mut symbols = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once(':') {
                let value = value.trim();
                match key.trim() {
                    "source" => meta.source = Some(value.to_string()),
                    "ds_ms" => {
                        meta.ds_ms = Some(value.parse().map_err(|_| {
                            malformed("sequence file", format!("bad ds_ms '{value}'"))
                        })?)
                    }
                    "seed" => {
                        meta.seed = Some(value.parse().map_err(|_| {
                            malformed("sequence file", format!("bad seed '{value}'"))
                        })?)
                    }
                    _ => {}
                }
            }
            continue;
        }
        for token in line.split_whitespace() {
            let index = alphabet
                .iter()
                .position(|s| s == token)
                .ok_or_else(|| Error::UnknownSymbol {
                    name: token.to_string(),
                    position: symbols.len(),
                })?;
            symbols.push(index);
        }
    }
    Ok(SymbolSequence::new(symbols)?.with_meta(meta))
}

pub fn sequence_to_text(seq: &SymbolSequence, alphabet: &[String]) -> Result<String> {
    let mut out = String::new();
    if let Some(source) = &seq.meta.source {
        let _ = writeln!(out, "# source: {source}");
    }
    if let Some(ds) = seq.meta.ds_ms {
        let _ = writeln!(out, "# ds_ms: {ds}");
    }
    if let Some(seed) = seq.meta.seed {
        let _ = writeln!(out, "# seed: {seed}");
    }
    let names = seq
        .symbols()
        .iter()
        .enumerate()
        .map(|(position, &s)| {
            alphabet.get(s).map(String::as_str).ok_or(Error::AlphabetMismatch {
                position,
                symbol: s,
                n_symbols: alphabet.len(),
            })
        })
        .collect::<Result<Vec<&str>>>()?;
    for line in names.chunks(SYMBOLS_PER_LINE) {
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn load_sequence(path: &Path, alphabet: &[String]) -> Result<SymbolSequence> {
    parse_sequence(&read(path)?, alphabet)
}

pub fn save_sequence(seq: &SymbolSequence, alphabet: &[String], path: &Path) -> Result<()> {
    write(path, &sequence_to_text(seq, alphabet)?)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Finite values as JSON numbers, infinities as `"inf"` / `"-inf"`.
pub fn float_to_json(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x == f64::INFINITY {
        json!("inf")
    } else if x == f64::NEG_INFINITY {
        json!("-inf")
    } else {
        json!("nan")
    }
}

pub fn float_from_json(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| malformed("report", format!("{n} is not a float"))),
        Value::String(s) => match s.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            other => Err(malformed("report", format!("unexpected value '{other}'"))),
        },
        other => Err(malformed("report", format!("unexpected value {other}"))),
    }
}

/// Report as a JSON object with sorted keys.
pub fn report_to_json(report: &TaskScoreReport) -> Value {
    let scores: Map<String, Value> = report
        .scores
        .iter()
        .map(|(k, &v)| (k.clone(), float_to_json(v)))
        .collect();
    let mut obj = Map::new();
    obj.insert("scores".into(), Value::Object(scores));
    obj.insert("winner".into(), json!(report.winner));
    obj.insert("margin".into(), float_to_json(report.margin));
    obj.insert("tie".into(), json!(report.tie));
    if let Some(t) = report.margin_threshold {
        obj.insert("margin_threshold".into(), float_to_json(t));
        obj.insert("below_threshold".into(), json!(report.margin < t));
    }
    Value::Object(obj)
}

pub fn report_from_json(value: &Value) -> Result<TaskScoreReport> {
    let obj = value
        .as_object()
        .ok_or_else(|| malformed("report", "expected a JSON object"))?;
    let field = |k: &str| {
        obj.get(k)
            .ok_or_else(|| malformed("report", format!("missing '{k}'")))
    };
    let scores = field("scores")?
        .as_object()
        .ok_or_else(|| malformed("report", "scores must be an object"))?
        .iter()
        .map(|(k, v)| Ok((k.clone(), float_from_json(v)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let winner = field("winner")?
        .as_str()
        .ok_or_else(|| malformed("report", "winner must be a string"))?
        .to_string();
    let tie = field("tie")?
        .as_bool()
        .ok_or_else(|| malformed("report", "tie must be a boolean"))?;
    let margin_threshold = obj.get("margin_threshold").map(float_from_json).transpose()?;
    Ok(TaskScoreReport {
        scores,
        winner,
        margin: float_from_json(field("margin")?)?,
        tie,
        margin_threshold,
    })
}

pub fn load_report(path: &Path) -> Result<TaskScoreReport> {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    report_from_json(&value)
}

pub fn save_report(report: &TaskScoreReport, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&report_to_json(report)).expect("report serializes");
    write(path, &(text + "\n"))
}
