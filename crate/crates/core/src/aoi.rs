//! Cursor traces to area-of-interest symbol sequences.
//!
//! Coordinates are screen pixels with the origin at the top-left and `y`
//! growing downward. Regions are half-open rectangles `[x, x+w) × [y, y+h)`;
//! when regions overlap the one declared first wins. The alphabet is the
//! region names in declaration order followed by the catch-all symbol.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::{SequenceMeta, SymbolSequence};

/// Sampling interval used when none is given.
pub const DEFAULT_DS_MS: f64 = 10.0;

pub const DEFAULT_CATCH_ALL: &str = "R";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub x: f64,
    pub y: f64,
    #[serde(rename = "w")]
    pub width: f64,
    #[serde(rename = "h")]
    pub height: f64,
}

impl Region {
    pub fn new(name: impl Into<String>, x: f64, y: f64, width: f64, height: f64) -> Self {
        Self {
            name: name.into(),
            x,
            y,
            width,
            height,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoiLayout {
    regions: Vec<Region>,
    catch_all: String,
}

impl AoiLayout {
    pub fn new(regions: Vec<Region>, catch_all: impl Into<String>) -> Result<Self> {
        let catch_all = catch_all.into();
        let mut names = HashSet::new();
        for r in &regions {
            if r.name == catch_all {
                return Err(Error::InvalidLayout(format!(
                    "region '{}' clashes with the catch-all name",
                    r.name
                )));
            }
            if !names.insert(r.name.as_str()) {
                return Err(Error::InvalidLayout(format!(
                    "duplicate region name '{}'",
                    r.name
                )));
            }
            if !(r.width > 0.0 && r.height > 0.0) {
                return Err(Error::InvalidLayout(format!(
                    "region '{}' must have positive width and height",
                    r.name
                )));
            }
            if !(r.x.is_finite() && r.y.is_finite()) {
                return Err(Error::InvalidLayout(format!(
                    "region '{}' has a non-finite origin",
                    r.name
                )));
            }
        }
        Ok(Self { regions, catch_all })
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn catch_all(&self) -> &str {
        &self.catch_all
    }

    pub fn catch_all_index(&self) -> usize {
        self.regions.len()
    }

    /// Alphabet size M, regions plus the catch-all.
    pub fn n_symbols(&self) -> usize {
        self.regions.len() + 1
    }

    pub fn alphabet(&self) -> Vec<String> {
        self.regions
            .iter()
            .map(|r| r.name.clone())
            .chain(std::iter::once(self.catch_all.clone()))
            .collect()
    }

    pub fn symbol_index(&self, name: &str) -> Option<usize> {
        if name == self.catch_all {
            return Some(self.catch_all_index());
        }
        self.regions.iter().position(|r| r.name == name)
    }

    /// Symbol of the first region containing the point, else the catch-all.
    pub fn locate(&self, x: f64, y: f64) -> usize {
        self.regions
            .iter()
            .position(|r| r.contains(x, y))
            .unwrap_or(self.catch_all_index())
    }

    /// The same layout shifted by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            regions: self
                .regions
                .iter()
                .map(|r| Region {
                    x: r.x + dx,
                    y: r.y + dy,
                    ..r.clone()
                })
                .collect(),
            catch_all: self.catch_all.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CursorSample {
    pub t_ms: f64,
    pub x: f64,
    pub y: f64,
}

/// Timestamped cursor positions with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct CursorTrace {
    samples: Vec<CursorSample>,
}

impl CursorTrace {
    pub fn new(samples: Vec<CursorSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidTrace("trace has no samples".into()));
        }
        if let Some(s) = samples
            .iter()
            .find(|s| !(s.t_ms.is_finite() && s.x.is_finite() && s.y.is_finite()))
        {
            return Err(Error::InvalidTrace(format!(
                "non-finite sample at t = {}",
                s.t_ms
            )));
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].t_ms <= w[0].t_ms) {
            return Err(Error::InvalidTrace(format!(
                "timestamps must strictly increase ({} then {})",
                w[0].t_ms, w[1].t_ms
            )));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[CursorSample] {
        &self.samples
    }

    pub fn duration_ms(&self) -> f64 {
        self.samples[self.samples.len() - 1].t_ms - self.samples[0].t_ms
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|s| CursorSample {
                    x: s.x + dx,
                    y: s.y + dy,
                    ..*s
                })
                .collect(),
        }
    }
}

/// Number of symbols [`vectorize`] emits for `trace` at interval `ds_ms`.
pub fn tick_count(trace: &CursorTrace, ds_ms: f64) -> usize {
    (trace.duration_ms() / ds_ms).floor() as usize + 1
}

/// Resamples the trace every `ds_ms` starting at its first timestamp and maps
/// each tick to an AOI symbol. The position at a tick is the latest sample
/// at or before it.
pub fn vectorize(trace: &CursorTrace, layout: &AoiLayout, ds_ms: f64) -> Result<SymbolSequence> {
    if !(ds_ms > 0.0 && ds_ms.is_finite()) {
        return Err(Error::Parameter(format!(
            "ds must be a positive number of milliseconds, got {ds_ms}"
        )));
    }
    let samples = trace.samples();
    let start = samples[0].t_ms;
    let ticks = tick_count(trace, ds_ms);
    let mut symbols = Vec::with_capacity(ticks);
    let mut current = 0;
    for k in 0..ticks {
        let tick = start + k as f64 * ds_ms;
        while current + 1 < samples.len() && samples[current + 1].t_ms <= tick {
            current += 1;
        }
        let s = samples[current];
        symbols.push(layout.locate(s.x, s.y));
    }
    Ok(SymbolSequence::new(symbols)?.with_meta(SequenceMeta {
        ds_ms: Some(ds_ms),
        ..SequenceMeta::default()
    }))
}

/// Percentage of the sequence spent on each symbol of `layout`'s alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct FixationReport {
    pub symbols: Vec<String>,
    pub counts: Vec<usize>,
    pub percentages: Vec<f64>,
}

impl FixationReport {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Element-wise mean of several reports over the same alphabet.
    pub fn mean(reports: &[FixationReport]) -> Result<FixationReport> {
        let first = reports
            .first()
            .ok_or_else(|| Error::Parameter("no reports to average".into()))?;
        if reports.iter().any(|r| r.symbols != first.symbols) {
            return Err(Error::Parameter(
                "reports use different alphabets".into(),
            ));
        }
        let m = first.symbols.len();
        let mut counts = vec![0; m];
        let mut percentages = vec![0.0; m];
        for r in reports {
            for k in 0..m {
                counts[k] += r.counts[k];
                percentages[k] += r.percentages[k];
            }
        }
        for p in &mut percentages {
            *p /= reports.len() as f64;
        }
        Ok(FixationReport {
            symbols: first.symbols.clone(),
            counts,
            percentages,
        })
    }
}

pub fn fixation_report(seq: &SymbolSequence, layout: &AoiLayout) -> Result<FixationReport> {
    let m = layout.n_symbols();
    let mut counts = vec![0usize; m];
    for (position, &s) in seq.symbols().iter().enumerate() {
        if s >= m {
            return Err(Error::AlphabetMismatch {
                position,
                symbol: s,
                n_symbols: m,
            });
        }
        counts[s] += 1;
    }
    let total = seq.len() as f64;
    let percentages = counts.iter().map(|&c| 100.0 * c as f64 / total).collect();
    Ok(FixationReport {
        symbols: layout.alphabet(),
        counts,
        percentages,
    })
}
