use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HmmModel, SequenceMeta, StatePath, SymbolSequence};
use crate::error::{Error, Result};

/// Draws a hidden path and its observations: the first state from Π, the
/// rest from A, each symbol from B. Output depends only on `seed`.
pub fn sample(model: &HmmModel, length: usize, seed: u64) -> Result<(StatePath, SymbolSequence)> {
    if length == 0 {
        return Err(Error::Parameter("sample length must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(length);
    let mut symbols = Vec::with_capacity(length);

    let mut state = draw(&mut rng, model.pi());
    let mut symbol = draw(&mut rng, model.emission_row(state));
    let mut log_prob = model.pi()[state].ln() + model.emission(state, symbol).ln();
    states.push(state);
    symbols.push(symbol);
    for _ in 1..length {
        let next = draw(&mut rng, model.transition_row(state));
        symbol = draw(&mut rng, model.emission_row(next));
        log_prob += model.transition(state, next).ln() + model.emission(next, symbol).ln();
        state = next;
        states.push(state);
        symbols.push(symbol);
    }

    let seq = SymbolSequence::new(symbols)?.with_meta(SequenceMeta {
        seed: Some(seed),
        ..SequenceMeta::default()
    });
    Ok((StatePath { states, log_prob }, seq))
}

/// Inverse-CDF draw from a probability row. Rounding slack at the top end
/// falls back to the last index with nonzero mass.
fn draw(rng: &mut impl Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_model_gives_forced_sequence() {
        let m = HmmModel::new(
            vec![0.0, 1.0],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]],
        )
        .unwrap();
        for seed in [0, 1, 99, u64::MAX] {
            let (path, seq) = sample(&m, 5, seed).unwrap();
            assert_eq!(path.states, vec![1, 0, 1, 0, 1]);
            assert_eq!(seq.symbols(), &[0, 2, 0, 2, 0]);
            assert_eq!(path.log_prob, 0.0);
        }
    }

    #[test]
    fn same_seed_same_output() {
        let m = HmmModel::new(
            vec![0.5, 0.5],
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![vec![0.7, 0.3], vec![0.1, 0.9]],
        )
        .unwrap();
        assert_eq!(sample(&m, 200, 42).unwrap(), sample(&m, 200, 42).unwrap());
        assert_ne!(
            sample(&m, 200, 42).unwrap().1,
            sample(&m, 200, 43).unwrap().1
        );
    }

    #[test]
    fn zero_length_is_rejected() {
        let m = HmmModel::new(vec![1.0], vec![vec![1.0]], vec![vec![1.0]]).unwrap();
        assert!(sample(&m, 0, 0).is_err());
    }
}
