use super::{HmmModel, StatePath, SymbolSequence};
use crate::error::{Error, Result};

/// Most probable state path, computed in log space.
///
/// Ties go to the lowest state index, both when choosing a predecessor and
/// when choosing the final state. Fails with [`Error::ImpossibleSequence`]
/// when every path has zero probability.
pub fn viterbi(model: &HmmModel, seq: &SymbolSequence) -> Result<StatePath> {
    model.check_sequence(seq)?;
    let n = model.n_states();
    let obs = seq.symbols();
    let len = obs.len();

    let log_pi: Vec<f64> = model.pi().iter().map(|p| p.ln()).collect();
    let log_a: Vec<f64> = (0..n)
        .flat_map(|i| model.transition_row(i).iter().map(|p| p.ln()))
        .collect();
    let log_b: Vec<f64> = (0..n)
        .flat_map(|j| model.emission_row(j).iter().map(|p| p.ln()))
        .collect();
    let m = model.n_symbols();

    let mut delta: Vec<f64> = (0..n).map(|i| log_pi[i] + log_b[i * m + obs[0]]).collect();
    let mut next = vec![0.0; n];
    let mut back = vec![0usize; len * n];

    for t in 1..len {
        let o = obs[t];
        for j in 0..n {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for (i, &d) in delta.iter().enumerate() {
                let cand = d + log_a[i * n + j];
                if cand > best {
                    best = cand;
                    arg = i;
                }
            }
            next[j] = best + log_b[j * m + o];
            back[t * n + j] = arg;
        }
        std::mem::swap(&mut delta, &mut next);
    }

    let mut last = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &d) in delta.iter().enumerate() {
        if d > best {
            best = d;
            last = i;
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::ImpossibleSequence);
    }

    let mut states = vec![0; len];
    states[len - 1] = last;
    for t in (1..len).rev() {
        states[t - 1] = back[t * n + states[t]];
    }
    Ok(StatePath {
        states,
        log_prob: best,
    })
}
