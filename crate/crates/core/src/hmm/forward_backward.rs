//! Scaled forward-backward recursions.
//!
//! `alpha_hat[t]` is the forward vector normalized to sum to one and
//! `scale[t]` is the normalizer, so that `P(O | λ) = ∏ scale[t]`. The backward
//! vectors reuse the same scale factors, which makes
//! `∑_i alpha_hat[t][i] * beta_hat[t][i] = 1` for every `t`.

use super::{HmmModel, SymbolSequence};
use crate::error::{Error, Result};

/// Output of the scaled forward pass. Matrices are time-major, `T × N`.
#[derive(Debug, Clone)]
pub struct Forward {
    n_states: usize,
    alpha: Vec<f64>,
    scales: Vec<f64>,
    log_likelihood: f64,
}

impl Forward {
    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    /// Normalized forward vector at step `t`. All zeros at and after the
    /// first step where the sequence became impossible.
    pub fn alpha(&self, t: usize) -> &[f64] {
        &self.alpha[t * self.n_states..(t + 1) * self.n_states]
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Natural log of P(O | λ), `-inf` for an impossible sequence.
    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    pub fn is_possible(&self) -> bool {
        self.log_likelihood > f64::NEG_INFINITY
    }
}

/// Runs the scaled recursion, handing each normalized row to `sink`.
/// Returns the summed log scale factors.
fn forward_pass(
    model: &HmmModel,
    obs: &[usize],
    mut sink: impl FnMut(&[f64], f64),
) -> f64 {
    let n = model.n_states();
    let mut prev = vec![0.0; n];
    let mut cur = vec![0.0; n];
    let mut log_likelihood = 0.0;

    for (t, &o) in obs.iter().enumerate() {
        if t == 0 {
            for (i, c) in cur.iter_mut().enumerate() {
                *c = model.pi()[i] * model.emission(i, o);
            }
        } else {
            for (j, c) in cur.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (i, &p) in prev.iter().enumerate() {
                    acc += p * model.transition(i, j);
                }
                *c = acc * model.emission(j, o);
            }
        }
        let scale: f64 = cur.iter().sum();
        if scale > 0.0 {
            for c in cur.iter_mut() {
                *c /= scale;
            }
            log_likelihood += scale.ln();
        } else {
            cur.fill(0.0);
            log_likelihood = f64::NEG_INFINITY;
        }
        sink(&cur, scale);
        if scale <= 0.0 {
            // Every later step is impossible too.
            for _ in t + 1..obs.len() {
                sink(&cur, 0.0);
            }
            break;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    log_likelihood
}

pub fn forward(model: &HmmModel, seq: &SymbolSequence) -> Result<Forward> {
    model.check_sequence(seq)?;
    let n = model.n_states();
    let mut alpha = Vec::with_capacity(seq.len() * n);
    let mut scales = Vec::with_capacity(seq.len());
    let log_likelihood = forward_pass(model, seq.symbols(), |row, scale| {
        alpha.extend_from_slice(row);
        scales.push(scale);
    });
    Ok(Forward {
        n_states: n,
        alpha,
        scales,
        log_likelihood,
    })
}

/// Natural-log P(O | λ); `-inf` when the sequence is impossible.
///
/// Same arithmetic as [`forward`] without keeping the alpha matrix.
pub fn log_likelihood(model: &HmmModel, seq: &SymbolSequence) -> Result<f64> {
    model.check_sequence(seq)?;
    Ok(forward_pass(model, seq.symbols(), |_, _| {}))
}

/// Scaled backward vectors, time-major `T × N`.
#[derive(Debug, Clone)]
pub struct Backward {
    n_states: usize,
    beta: Vec<f64>,
}

impl Backward {
    pub fn beta(&self, t: usize) -> &[f64] {
        &self.beta[t * self.n_states..(t + 1) * self.n_states]
    }

    pub fn len(&self) -> usize {
        self.beta.len() / self.n_states
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }
}

/// Backward pass scaled by a fresh forward pass's factors.
///
/// Fails with [`Error::ImpossibleSequence`] when P(O | λ) = 0, since the
/// scale factors are then undefined.
pub fn backward(model: &HmmModel, seq: &SymbolSequence) -> Result<Backward> {
    let fwd = forward(model, seq)?;
    backward_with_forward(model, seq, &fwd)
}

/// Backward pass reusing the scale factors of an existing forward pass.
pub fn backward_with_forward(
    model: &HmmModel,
    seq: &SymbolSequence,
    fwd: &Forward,
) -> Result<Backward> {
    model.check_sequence(seq)?;
    if fwd.len() != seq.len() || fwd.n_states != model.n_states() {
        return Err(Error::Shape(
            "forward pass does not match this model and sequence".into(),
        ));
    }
    if !fwd.is_possible() {
        return Err(Error::ImpossibleSequence);
    }
    let n = model.n_states();
    let obs = seq.symbols();
    let len = obs.len();
    let mut beta = vec![0.0; len * n];
    beta[(len - 1) * n..].fill(1.0);
    let mut weighted = vec![0.0; n];
    for t in (0..len - 1).rev() {
        let o = obs[t + 1];
        let scale = fwd.scales[t + 1];
        let next = t + 1;
        for (j, w) in weighted.iter_mut().enumerate() {
            *w = model.emission(j, o) * beta[next * n + j];
        }
        for i in 0..n {
            let row = model.transition_row(i);
            let acc: f64 = row.iter().zip(&weighted).map(|(a, w)| a * w).sum();
            beta[t * n + i] = acc / scale;
        }
    }
    Ok(Backward { n_states: n, beta })
}

/// State posteriors `gamma[t][i] = P(q_t = i | O)` and pairwise posteriors
/// `xi[t][i][j] = P(q_t = i, q_{t+1} = j | O)`.
#[derive(Debug, Clone)]
pub struct Posteriors {
    n_states: usize,
    gamma: Vec<f64>,
    xi: Vec<f64>,
    log_likelihood: f64,
}

impl Posteriors {
    pub fn len(&self) -> usize {
        self.gamma.len() / self.n_states
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn gamma(&self, t: usize) -> &[f64] {
        &self.gamma[t * self.n_states..(t + 1) * self.n_states]
    }

    /// Row-major `N × N` slice for the transition between `t` and `t + 1`.
    pub fn xi(&self, t: usize) -> &[f64] {
        let nn = self.n_states * self.n_states;
        &self.xi[t * nn..(t + 1) * nn]
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }
}

pub fn posteriors(model: &HmmModel, seq: &SymbolSequence) -> Result<Posteriors> {
    let fwd = forward(model, seq)?;
    let bwd = backward_with_forward(model, seq, &fwd)?;
    let n = model.n_states();
    let obs = seq.symbols();
    let len = obs.len();

    let mut gamma = Vec::with_capacity(len * n);
    for t in 0..len {
        gamma.extend(fwd.alpha(t).iter().zip(bwd.beta(t)).map(|(a, b)| a * b));
    }

    let mut xi = Vec::with_capacity(len.saturating_sub(1) * n * n);
    for t in 0..len.saturating_sub(1) {
        let alpha = fwd.alpha(t);
        let beta_next = bwd.beta(t + 1);
        let scale = fwd.scales()[t + 1];
        let o = obs[t + 1];
        for (i, &a_i) in alpha.iter().enumerate() {
            for (j, &b_j) in beta_next.iter().enumerate() {
                xi.push(a_i * model.transition(i, j) * model.emission(j, o) * b_j / scale);
            }
        }
    }

    Ok(Posteriors {
        n_states: n,
        gamma,
        xi,
        log_likelihood: fwd.log_likelihood(),
    })
}
