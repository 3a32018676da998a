//! Discrete hidden Markov models.
//!
//! A model is the triple (Π, A, B) over `N` hidden states and an alphabet of
//! `M` named symbols. Scoring uses per-step scaled forward-backward
//! recursions with natural-log accumulation of the scale factors; decoding
//! runs entirely in log space. All logarithms in this crate are natural logs.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

mod forward_backward;
mod sample;
mod viterbi;

pub use forward_backward::{
    backward, backward_with_forward, forward, log_likelihood, posteriors, Backward, Forward,
    Posteriors,
};
pub use sample::sample;
pub use viterbi::viterbi;

/// Tolerance for the stochastic row-sum constraints.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Which parameter block of a model a [`Violation`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Initial,
    Transition,
    Emission,
}

impl Param {
    fn symbol(self) -> &'static str {
        match self {
            Param::Initial => "pi",
            Param::Transition => "a",
            Param::Emission => "b",
        }
    }
}

/// A single broken model invariant, with its location.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// An entry outside `[0, 1]` (or NaN). `row` is `None` for `pi`.
    OutOfRange {
        param: Param,
        row: Option<usize>,
        col: usize,
        value: f64,
    },
    /// A probability row whose sum differs from 1 by more than [`ROW_SUM_TOLERANCE`].
    RowSum {
        param: Param,
        row: Option<usize>,
        sum: f64,
    },
    DuplicateSymbol {
        name: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfRange {
                param,
                row: Some(row),
                col,
                value,
            } => write!(
                f,
                "{}[{row}][{col}] = {value} is outside [0, 1]",
                param.symbol()
            ),
            Violation::OutOfRange {
                param,
                row: None,
                col,
                value,
            } => write!(f, "{}[{col}] = {value} is outside [0, 1]", param.symbol()),
            Violation::RowSum {
                param,
                row: Some(row),
                sum,
            } => write!(f, "row {row} of {} sums to {sum}", param.symbol()),
            Violation::RowSum {
                param,
                row: None,
                sum,
            } => write!(f, "{} sums to {sum}", param.symbol()),
            Violation::DuplicateSymbol { name } => write!(f, "duplicate symbol name '{name}'"),
        }
    }
}

/// A discrete HMM λ = (Π, A, B).
///
/// `a[i][j]` is P(q_t = j | q_{t-1} = i) and `b[j][k]` is P(symbol k | state j).
/// Matrices are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    n_states: usize,
    n_symbols: usize,
    pi: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    symbol_names: Vec<String>,
    state_names: Option<Vec<String>>,
}

impl HmmModel {
    /// Builds a validated model with symbols named `"0"`, `"1"`, ...
    pub fn new(pi: Vec<f64>, a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> Result<Self> {
        let n_symbols = b.first().map_or(0, Vec::len);
        let names = (0..n_symbols).map(|k| k.to_string()).collect();
        Self::from_parts_unchecked(pi, a, b, names, None)?.into_validated()
    }

    /// Builds a model checking only its shape. The stochastic constraints
    /// are left to [`HmmModel::validate`].
    pub fn from_parts_unchecked(
        pi: Vec<f64>,
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        symbol_names: Vec<String>,
        state_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let n_states = pi.len();
        if n_states == 0 {
            return Err(Error::Shape("model needs at least one state".into()));
        }
        if a.len() != n_states || b.len() != n_states {
            return Err(Error::Shape(format!(
                "pi has {n_states} states but a has {} rows and b has {}",
                a.len(),
                b.len()
            )));
        }
        if let Some(i) = a.iter().position(|row| row.len() != n_states) {
            return Err(Error::Shape(format!(
                "row {i} of a has {} entries, expected {n_states}",
                a[i].len()
            )));
        }
        let n_symbols = b[0].len();
        if n_symbols == 0 {
            return Err(Error::Shape("alphabet must have at least one symbol".into()));
        }
        if let Some(j) = b.iter().position(|row| row.len() != n_symbols) {
            return Err(Error::Shape(format!(
                "row {j} of b has {} entries, expected {n_symbols}",
                b[j].len()
            )));
        }
        if symbol_names.len() != n_symbols {
            return Err(Error::Shape(format!(
                "{} symbol names for an alphabet of {n_symbols}",
                symbol_names.len()
            )));
        }
        if let Some(names) = &state_names {
            if names.len() != n_states {
                return Err(Error::Shape(format!(
                    "{} state names for {n_states} states",
                    names.len()
                )));
            }
        }
        Ok(Self {
            n_states,
            n_symbols,
            pi,
            a: a.into_iter().flatten().collect(),
            b: b.into_iter().flatten().collect(),
            symbol_names,
            state_names,
        })
    }

    /// Returns `self` if [`HmmModel::validate`] finds nothing, the violations otherwise.
    pub fn into_validated(self) -> Result<Self> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidModel(violations))
        }
    }

    pub fn with_symbol_names<S: Into<String>>(
        mut self,
        names: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() != self.n_symbols {
            return Err(Error::Shape(format!(
                "{} symbol names for an alphabet of {}",
                names.len(),
                self.n_symbols
            )));
        }
        self.symbol_names = names;
        let duplicates = self.duplicate_symbols();
        if duplicates.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidModel(duplicates))
        }
    }

    pub fn with_state_names<S: Into<String>>(
        mut self,
        names: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() != self.n_states {
            return Err(Error::Shape(format!(
                "{} state names for {} states",
                names.len(),
                self.n_states
            )));
        }
        self.state_names = Some(names);
        Ok(self)
    }

    /// Lists every broken invariant; an empty list means the model is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        check_row(&mut out, Param::Initial, None, &self.pi);
        for i in 0..self.n_states {
            check_row(&mut out, Param::Transition, Some(i), self.transition_row(i));
        }
        for j in 0..self.n_states {
            check_row(&mut out, Param::Emission, Some(j), self.emission_row(j));
        }
        out.extend(self.duplicate_symbols());
        out
    }

    fn duplicate_symbols(&self) -> Vec<Violation> {
        let mut seen = HashSet::new();
        let mut reported = HashSet::new();
        let mut out = Vec::new();
        for name in &self.symbol_names {
            if !seen.insert(name.as_str()) && reported.insert(name.as_str()) {
                out.push(Violation::DuplicateSymbol { name: name.clone() });
            }
        }
        out
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    #[inline]
    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.a[from * self.n_states + to]
    }

    #[inline]
    pub fn emission(&self, state: usize, symbol: usize) -> f64 {
        self.b[state * self.n_symbols + symbol]
    }

    pub fn transition_row(&self, from: usize) -> &[f64] {
        &self.a[from * self.n_states..(from + 1) * self.n_states]
    }

    pub fn emission_row(&self, state: usize) -> &[f64] {
        &self.b[state * self.n_symbols..(state + 1) * self.n_symbols]
    }

    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        self.a.chunks(self.n_states).map(<[f64]>::to_vec).collect()
    }

    pub fn emission_matrix(&self) -> Vec<Vec<f64>> {
        self.b.chunks(self.n_symbols).map(<[f64]>::to_vec).collect()
    }

    pub fn symbol_names(&self) -> &[String] {
        &self.symbol_names
    }

    pub fn state_names(&self) -> Option<&[String]> {
        self.state_names.as_deref()
    }

    pub fn symbol_index(&self, name: &str) -> Option<usize> {
        self.symbol_names.iter().position(|s| s == name)
    }

    /// Checks that every symbol of `seq` indexes into this model's alphabet.
    pub fn check_sequence(&self, seq: &SymbolSequence) -> Result<()> {
        match seq
            .symbols()
            .iter()
            .enumerate()
            .find(|&(_, &s)| s >= self.n_symbols)
        {
            Some((position, &symbol)) => Err(Error::AlphabetMismatch {
                position,
                symbol,
                n_symbols: self.n_symbols,
            }),
            None => Ok(()),
        }
    }

    /// Relabels states so that new state `k` is old state `perm[k]`.
    ///
    /// Panics if `perm` is not a permutation of `0..n_states`.
    pub fn permute_states(&self, perm: &[usize]) -> Self {
        let n = self.n_states;
        let mut check = perm.to_vec();
        check.sort_unstable();
        assert!(
            check.iter().copied().eq(0..n),
            "not a permutation of 0..{n}"
        );
        let pi = perm.iter().map(|&p| self.pi[p]).collect();
        let a = perm
            .iter()
            .map(|&pi_| perm.iter().map(|&pj| self.transition(pi_, pj)).collect())
            .collect();
        let b = perm.iter().map(|&p| self.emission_row(p).to_vec()).collect();
        let state_names = self
            .state_names
            .as_ref()
            .map(|names| perm.iter().map(|&p| names[p].clone()).collect());
        Self::from_parts_unchecked(pi, a, b, self.symbol_names.clone(), state_names)
            .expect("permutation preserves shape")
    }
}

fn check_row(out: &mut Vec<Violation>, param: Param, row: Option<usize>, values: &[f64]) {
    let mut in_range = true;
    for (col, &value) in values.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            in_range = false;
            out.push(Violation::OutOfRange {
                param,
                row,
                col,
                value,
            });
        }
    }
    // A row with a bad entry already has a located diagnostic.
    if in_range {
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            out.push(Violation::RowSum { param, row, sum });
        }
    }
}

/// Where a symbol sequence came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequenceMeta {
    pub source: Option<String>,
    pub ds_ms: Option<f64>,
    pub seed: Option<u64>,
}

/// An observation sequence O = (O_1 .. O_T) of alphabet indices, T ≥ 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSequence {
    symbols: Vec<usize>,
    pub meta: SequenceMeta,
}

impl SymbolSequence {
    pub fn new(symbols: Vec<usize>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(Self {
            symbols,
            meta: SequenceMeta::default(),
        })
    }

    pub fn with_meta(mut self, meta: SequenceMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// A hidden state path with the natural-log joint probability P(path, O | λ).
#[derive(Debug, Clone, PartialEq)]
pub struct StatePath {
    pub states: Vec<usize>,
    pub log_prob: f64,
}

/// Joint natural-log probability of a given state path and observation sequence.
pub fn path_log_prob(model: &HmmModel, states: &[usize], seq: &SymbolSequence) -> Result<f64> {
    model.check_sequence(seq)?;
    if states.len() != seq.len() {
        return Err(Error::Shape(format!(
            "path of length {} for a sequence of length {}",
            states.len(),
            seq.len()
        )));
    }
    let obs = seq.symbols();
    let mut lp = model.pi()[states[0]].ln() + model.emission(states[0], obs[0]).ln();
    for t in 1..obs.len() {
        lp += model.transition(states[t - 1], states[t]).ln()
            + model.emission(states[t], obs[t]).ln();
    }
    Ok(lp)
}
