//! Published parameters and results bundled with the crate.
//!
//! * `initial_model.json` - the Baum-Welch starting model used for both tasks.
//! * `lambda1.json`, `lambda2.json` - the trained REP and INT models. Their
//!   printed emission matrices are identical; `lambda2.json` carries a
//!   provenance warning and is shipped as printed.
//! * `table2.json` - per-experiment fixation percentages, both models'
//!   log-likelihoods and the printed decision.
//! * `layout_illustrative.json` - an invented AOI geometry for demos.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{malformed, parse_layout, read, ModelFile};
use crate::aoi::AoiLayout;
use crate::error::{Error, Result};
use crate::hmm::HmmModel;

pub const FIXTURE_FILES: [(&str, &str); 5] = [
    (
        "initial_model.json",
        include_str!("../../fixtures/initial_model.json"),
    ),
    ("lambda1.json", include_str!("../../fixtures/lambda1.json")),
    ("lambda2.json", include_str!("../../fixtures/lambda2.json")),
    ("table2.json", include_str!("../../fixtures/table2.json")),
    (
        "layout_illustrative.json",
        include_str!("../../fixtures/layout_illustrative.json"),
    ),
];

fn bundled_text(name: &str) -> &'static str {
    FIXTURE_FILES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .expect("known fixture name")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub task_id: String,
    pub task_time: String,
    pub declared_type: String,
    /// Percentages per AOI in `Table2::aoi_order`, as printed.
    pub fixation: Vec<String>,
    pub hmm1: String,
    pub hmm2: String,
    pub decision: String,
}

impl Table2Row {
    pub fn hmm1_score(&self) -> f64 {
        self.hmm1.parse().expect("validated on load")
    }

    pub fn hmm2_score(&self) -> f64 {
        self.hmm2.parse().expect("validated on load")
    }

    pub fn fixation_percentages(&self) -> Vec<f64> {
        self.fixation
            .iter()
            .map(|s| s.parse().expect("validated on load"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2 {
    pub format_version: u32,
    #[serde(default)]
    pub description: String,
    pub aoi_order: Vec<String>,
    pub hmm1_task: String,
    pub hmm2_task: String,
    #[serde(default)]
    pub notes: Vec<String>,
    pub rows: Vec<Table2Row>,
}

impl Table2 {
    pub fn parse(text: &str) -> Result<Self> {
        let table: Table2 =
            serde_json::from_str(text).map_err(|e| malformed("table file", e.to_string()))?;
        if table.format_version != 1 {
            return Err(Error::UnsupportedVersion {
                found: table.format_version,
                expected: 1,
            });
        }
        for row in &table.rows {
            let numbers = row
                .fixation
                .iter()
                .chain([&row.hmm1, &row.hmm2])
                .chain(std::iter::once(&row.task_time));
            for s in numbers {
                s.parse::<f64>().map_err(|_| {
                    malformed("table file", format!("{}: '{s}' is not a number", row.task_id))
                })?;
            }
            if row.fixation.len() != table.aoi_order.len() {
                return Err(malformed(
                    "table file",
                    format!(
                        "{}: {} fixation values for {} AOIs",
                        row.task_id,
                        row.fixation.len(),
                        table.aoi_order.len()
                    ),
                ));
            }
        }
        Ok(table)
    }

    pub fn bundled() -> Self {
        Self::parse(bundled_text("table2.json")).expect("bundled table parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read(path)?)
    }

    /// Task-name keyed scores for one row, ready for `classifier::decide`.
    pub fn scores(&self, row: &Table2Row) -> BTreeMap<String, f64> {
        BTreeMap::from([
            (self.hmm1_task.clone(), row.hmm1_score()),
            (self.hmm2_task.clone(), row.hmm2_score()),
        ])
    }

    pub fn row(&self, task_id: &str) -> Option<&Table2Row> {
        self.rows.iter().find(|r| r.task_id == task_id)
    }
}

/// The bundled table of published results.
pub fn load_table2() -> Vec<Table2Row> {
    Table2::bundled().rows
}

#[derive(Debug, Clone)]
pub struct FixtureSet {
    pub initial_model: HmmModel,
    pub lambda1: HmmModel,
    pub lambda2: HmmModel,
    pub initial_model_file: ModelFile,
    pub lambda1_file: ModelFile,
    pub lambda2_file: ModelFile,
    pub table2: Table2,
    pub layout: AoiLayout,
}

impl FixtureSet {
    fn from_texts(get: impl Fn(&str) -> Result<String>) -> Result<Self> {
        let initial_model_file = ModelFile::from_json(&get("initial_model.json")?)?;
        let lambda1_file = ModelFile::from_json(&get("lambda1.json")?)?;
        let lambda2_file = ModelFile::from_json(&get("lambda2.json")?)?;
        Ok(Self {
            initial_model: initial_model_file.to_model()?,
            lambda1: lambda1_file.to_model()?,
            lambda2: lambda2_file.to_model()?,
            initial_model_file,
            lambda1_file,
            lambda2_file,
            table2: Table2::parse(&get("table2.json")?)?,
            layout: parse_layout(&get("layout_illustrative.json")?)?,
        })
    }

    pub fn bundled() -> Result<Self> {
        Self::from_texts(|name| Ok(bundled_text(name).to_string()))
    }

    /// Loads every fixture file from `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        Self::from_texts(|name| read(&dir.join(name)))
    }

    /// The provenance note attached to the INT model.
    pub fn lambda2_provenance(&self) -> Option<&str> {
        self.lambda2_file.metadata.provenance.as_deref()
    }
}
