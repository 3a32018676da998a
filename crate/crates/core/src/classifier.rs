//! Maximum-likelihood task inference over a registry of per-task HMMs.
//!
//! Each task has its own model over a shared alphabet. A sequence is scored
//! under every model and the task with the highest log-likelihood wins; the
//! gap to the runner-up is reported as the margin.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hmm::{log_likelihood, HmmModel, SymbolSequence};

#[derive(Debug, Clone)]
pub struct TaskModelRegistry {
    entries: BTreeMap<String, HmmModel>,
}

impl TaskModelRegistry {
    pub fn new(entries: impl IntoIterator<Item = (String, HmmModel)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (name, model) in entries {
            if map.contains_key(&name) {
                return Err(Error::Parameter(format!("duplicate task name '{name}'")));
            }
            map.insert(name, model);
        }
        let mut iter = map.iter();
        let (ref_name, reference) = iter.next().ok_or(Error::EmptyRegistry)?;
        for (name, model) in iter {
            if model.symbol_names() != reference.symbol_names() {
                return Err(Error::RegistryAlphabetMismatch {
                    task: name.clone(),
                    reference: ref_name.clone(),
                });
            }
        }
        Ok(Self { entries: map })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, task: &str) -> Option<&HmmModel> {
        self.entries.get(task)
    }

    pub fn tasks(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &HmmModel)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// The alphabet all models share.
    pub fn symbol_names(&self) -> &[String] {
        self.entries
            .values()
            .next()
            .expect("registry is never empty")
            .symbol_names()
    }
}

/// Natural-log likelihood of `seq` under every task model. `-inf` entries
/// are kept.
pub fn score_all(
    registry: &TaskModelRegistry,
    seq: &SymbolSequence,
) -> Result<BTreeMap<String, f64>> {
    let entries: Vec<(&String, &HmmModel)> = registry.entries.iter().collect();
    entries
        .par_iter()
        .map(|(name, model)| Ok(((*name).clone(), log_likelihood(model, seq)?)))
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub winner: String,
    /// Winner's score minus the runner-up's; 0 for a single task or a tie,
    /// `+inf` when only the winner is finite.
    pub margin: f64,
    pub tie: bool,
}

/// Picks the highest score. Exact ties go to the lexicographically smallest
/// task name and set the tie flag.
pub fn decide(scores: &BTreeMap<String, f64>) -> Result<Decision> {
    if scores.is_empty() {
        return Err(Error::EmptyRegistry);
    }
    if scores.values().any(|s| s.is_nan()) {
        return Err(Error::Parameter("scores must not be NaN".into()));
    }
    // BTreeMap iterates in name order, so a strict comparison keeps the
    // smallest name among equal scores.
    let mut best: Option<(&String, f64)> = None;
    for (name, &score) in scores {
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((name, score));
        }
    }
    let (winner, top) = best.expect("non-empty");
    if top == f64::NEG_INFINITY {
        return Err(Error::NoDecision);
    }
    let runner_up = scores
        .iter()
        .filter(|(name, _)| *name != winner)
        .map(|(_, &s)| s)
        .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))));
    let (margin, tie) = match runner_up {
        None => (0.0, false),
        Some(second) if second == top => (0.0, true),
        Some(second) => (top - second, false),
    };
    Ok(Decision {
        winner: winner.clone(),
        margin,
        tie,
    })
}

/// Scores, decision, and the optional margin threshold check for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskScoreReport {
    pub scores: BTreeMap<String, f64>,
    pub winner: String,
    pub margin: f64,
    pub tie: bool,
    pub margin_threshold: Option<f64>,
}

impl TaskScoreReport {
    /// `Some(true)` when a threshold was supplied and the margin falls short of it.
    pub fn below_threshold(&self) -> Option<bool> {
        self.margin_threshold.map(|t| self.margin < t)
    }
}

pub fn classify(registry: &TaskModelRegistry, seq: &SymbolSequence) -> Result<TaskScoreReport> {
    let scores = score_all(registry, seq)?;
    let Decision {
        winner,
        margin,
        tie,
    } = decide(&scores)?;
    Ok(TaskScoreReport {
        scores,
        winner,
        margin,
        tie,
        margin_threshold: None,
    })
}

pub fn classify_with_threshold(
    registry: &TaskModelRegistry,
    seq: &SymbolSequence,
    margin_threshold: f64,
) -> Result<TaskScoreReport> {
    let mut report = classify(registry, seq)?;
    report.margin_threshold = Some(margin_threshold);
    Ok(report)
}
