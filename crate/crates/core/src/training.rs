//! Multi-sequence Baum-Welch re-estimation.
//!
//! Expected counts from every training sequence are pooled before
//! normalizing (ratio of summed numerators to summed denominators), which is
//! the maximum-likelihood update for independent sequences. Per-sequence
//! E-steps run in parallel; their counts are always added in sequence order,
//! so results do not depend on scheduling.
//!
//! When `prob_floor > 0` each re-estimated row is the maximizer of the
//! expected complete-data log-likelihood subject to every entry being at
//! least the floor. That keeps unseen symbols finitely scored and, because
//! the constrained update still maximizes the EM auxiliary function over a
//! set containing the previous parameters, the likelihood stays monotone.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hmm::{backward_with_forward, forward, log_likelihood, HmmModel, SymbolSequence};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub max_iters: usize,
    /// Stop once `(ll_new - ll_old) / |ll_old|` drops below this.
    pub ll_tolerance: f64,
    /// Lower bound on every re-estimated probability; 0 disables smoothing.
    pub prob_floor: f64,
    /// Keep Π from the starting model instead of re-estimating it.
    pub freeze_pi: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            ll_tolerance: 1e-6,
            prob_floor: 1e-6,
            freeze_pi: false,
        }
    }
}

impl TrainingConfig {
    pub fn validate_for(&self, model: &HmmModel) -> Result<()> {
        if !(self.ll_tolerance >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "ll_tolerance must be >= 0, got {}",
                self.ll_tolerance
            )));
        }
        let widest = model.n_states().max(model.n_symbols()) as f64;
        if !(self.prob_floor >= 0.0 && self.prob_floor < 1.0 / widest) {
            return Err(Error::InvalidConfig(format!(
                "prob_floor must lie in [0, 1/{widest}), got {}",
                self.prob_floor
            )));
        }
        Ok(())
    }
}

/// Per-iteration record of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    /// Pooled log-likelihood of the training set; entry 0 is the starting
    /// model, entry `k` the model after `k` iterations.
    pub log_likelihoods: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
}

impl TrainingTrace {
    pub fn initial(&self) -> f64 {
        self.log_likelihoods[0]
    }

    pub fn last(&self) -> f64 {
        *self.log_likelihoods.last().expect("trace is never empty")
    }
}

/// Expected counts for one or more sequences.
#[derive(Debug, Clone)]
struct Counts {
    n_states: usize,
    n_symbols: usize,
    initial: Vec<f64>,
    transitions: Vec<f64>,
    emissions: Vec<f64>,
    log_likelihood: f64,
}

impl Counts {
    fn zeros(n_states: usize, n_symbols: usize) -> Self {
        Self {
            n_states,
            n_symbols,
            initial: vec![0.0; n_states],
            transitions: vec![0.0; n_states * n_states],
            emissions: vec![0.0; n_states * n_symbols],
            log_likelihood: 0.0,
        }
    }

    fn add(&mut self, other: &Counts) {
        for (a, b) in self.initial.iter_mut().zip(&other.initial) {
            *a += b;
        }
        for (a, b) in self.transitions.iter_mut().zip(&other.transitions) {
            *a += b;
        }
        for (a, b) in self.emissions.iter_mut().zip(&other.emissions) {
            *a += b;
        }
        self.log_likelihood += other.log_likelihood;
    }
}

fn sequence_counts(model: &HmmModel, seq: &SymbolSequence) -> Result<Counts> {
    let n = model.n_states();
    let m = model.n_symbols();
    let fwd = forward(model, seq)?;
    let bwd = backward_with_forward(model, seq, &fwd)?;
    let obs = seq.symbols();
    let mut counts = Counts::zeros(n, m);
    counts.log_likelihood = fwd.log_likelihood();

    for (t, &o) in obs.iter().enumerate() {
        let alpha = fwd.alpha(t);
        let beta = bwd.beta(t);
        for i in 0..n {
            let gamma = alpha[i] * beta[i];
            if t == 0 {
                counts.initial[i] += gamma;
            }
            counts.emissions[i * m + o] += gamma;
        }
        if t + 1 < obs.len() {
            let next_o = obs[t + 1];
            let beta_next = bwd.beta(t + 1);
            let scale = fwd.scales()[t + 1];
            for i in 0..n {
                for j in 0..n {
                    counts.transitions[i * n + j] += alpha[i]
                        * model.transition(i, j)
                        * model.emission(j, next_o)
                        * beta_next[j]
                        / scale;
                }
            }
        }
    }
    Ok(counts)
}

fn pooled_counts(model: &HmmModel, sequences: &[SymbolSequence]) -> Result<Counts> {
    let per_sequence: Vec<Result<Counts>> = sequences
        .par_iter()
        .enumerate()
        .map(|(index, seq)| {
            sequence_counts(model, seq).map_err(|e| match e {
                Error::ImpossibleSequence => Error::TrainingDegenerate { index },
                other => other,
            })
        })
        .collect();
    let mut total = Counts::zeros(model.n_states(), model.n_symbols());
    for counts in per_sequence {
        total.add(&counts?);
    }
    Ok(total)
}

/// Normalizes `counts` into a probability row with every entry at least
/// `floor`: `p_k = max(floor, c_k / λ)` with `λ` chosen so the row sums to 1.
/// A row with no expected mass keeps `previous`.
pub(crate) fn floored_normalize(counts: &[f64], floor: f64, previous: &[f64]) -> Vec<f64> {
    let total: f64 = counts.iter().sum();
    if !(total > 0.0) {
        return previous.to_vec();
    }
    if floor == 0.0 {
        return counts.iter().map(|c| c / total).collect();
    }
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&x, &y| counts[x].total_cmp(&counts[y]));

    // Pin the `pinned` smallest entries at the floor until the rest clear it.
    let mut rest = total;
    let mut pinned = 0;
    let lambda = loop {
        let lambda = rest / (1.0 - pinned as f64 * floor);
        let smallest = counts[order[pinned]];
        if smallest / lambda >= floor || pinned + 1 == counts.len() {
            break lambda;
        }
        rest -= smallest;
        pinned += 1;
    };
    let mut row: Vec<f64> = counts.iter().map(|&c| (c / lambda).max(floor)).collect();
    for &k in &order[..pinned] {
        row[k] = floor;
    }
    row
}

fn m_step(model: &HmmModel, counts: &Counts, config: &TrainingConfig) -> Result<HmmModel> {
    let n = counts.n_states;
    let m = counts.n_symbols;
    let pi = if config.freeze_pi {
        model.pi().to_vec()
    } else {
        floored_normalize(&counts.initial, config.prob_floor, model.pi())
    };
    let a = (0..n)
        .map(|i| {
            floored_normalize(
                &counts.transitions[i * n..(i + 1) * n],
                config.prob_floor,
                model.transition_row(i),
            )
        })
        .collect();
    let b = (0..n)
        .map(|j| {
            floored_normalize(
                &counts.emissions[j * m..(j + 1) * m],
                config.prob_floor,
                model.emission_row(j),
            )
        })
        .collect();
    HmmModel::from_parts_unchecked(
        pi,
        a,
        b,
        model.symbol_names().to_vec(),
        model.state_names().map(<[String]>::to_vec),
    )
}

/// Re-estimates `model0` on `sequences` until the pooled log-likelihood
/// stops improving by more than `config.ll_tolerance` (relative) or
/// `config.max_iters` iterations have run.
///
/// A sequence with zero probability under `model0` is a
/// [`Error::TrainingDegenerate`] error when `prob_floor` is 0. With a
/// positive floor the starting model's rows are floored first so that every
/// sequence becomes scoreable.
pub fn baum_welch(
    model0: &HmmModel,
    sequences: &[SymbolSequence],
    config: &TrainingConfig,
) -> Result<(HmmModel, TrainingTrace)> {
    let violations = model0.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidModel(violations));
    }
    if sequences.is_empty() {
        return Err(Error::NoTrainingData);
    }
    config.validate_for(model0)?;
    for seq in sequences {
        model0.check_sequence(seq)?;
    }

    let mut model = model0.clone();
    if config.max_iters > 0 && config.prob_floor > 0.0 {
        let impossible = sequences
            .iter()
            .map(|s| log_likelihood(model0, s))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .any(|ll| ll == f64::NEG_INFINITY);
        if impossible {
            model = floor_rows(model0, config)?;
        }
    }

    let mut counts = match pooled_counts(&model, sequences) {
        Ok(c) => c,
        // With max_iters = 0 the starting model is returned untouched even
        // if it cannot score the data.
        Err(Error::TrainingDegenerate { .. }) if config.max_iters == 0 => {
            let ll = f64::NEG_INFINITY;
            return Ok((
                model,
                TrainingTrace {
                    log_likelihoods: vec![ll],
                    iterations_run: 0,
                    converged: false,
                },
            ));
        }
        Err(e) => return Err(e),
    };
    let mut trace = TrainingTrace {
        log_likelihoods: vec![counts.log_likelihood],
        iterations_run: 0,
        converged: false,
    };

    for _ in 0..config.max_iters {
        let previous_ll = counts.log_likelihood;
        let next = m_step(&model, &counts, config)?;
        counts = pooled_counts(&next, sequences)?;
        model = next;
        trace.iterations_run += 1;
        trace.log_likelihoods.push(counts.log_likelihood);

        let improvement = counts.log_likelihood - previous_ll;
        let relative = if previous_ll == 0.0 {
            improvement
        } else {
            improvement / previous_ll.abs()
        };
        if relative < config.ll_tolerance {
            trace.converged = true;
            break;
        }
    }
    Ok((model, trace))
}

fn floor_rows(model: &HmmModel, config: &TrainingConfig) -> Result<HmmModel> {
    let counts = Counts {
        n_states: model.n_states(),
        n_symbols: model.n_symbols(),
        initial: model.pi().to_vec(),
        transitions: (0..model.n_states())
            .flat_map(|i| model.transition_row(i).to_vec())
            .collect(),
        emissions: (0..model.n_states())
            .flat_map(|j| model.emission_row(j).to_vec())
            .collect(),
        log_likelihood: 0.0,
    };
    m_step(model, &counts, config)
}
