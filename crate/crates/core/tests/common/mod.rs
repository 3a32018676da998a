//! Independent reference computations for the integration tests.
//!
//! Everything here works in plain probability space by enumerating all N^T
//! hidden paths, so it shares no code with the scaled recursions under test.
#![allow(dead_code)]

use cursor_hmm::{HmmModel, SymbolSequence};
use rand::Rng;

/// Random valid model with every entry bounded away from zero.
pub fn random_model(rng: &mut impl Rng, n: usize, m: usize) -> HmmModel {
    let mut row = |k: usize| -> Vec<f64> {
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / s).collect()
    };
    let pi = row(n);
    let a = (0..n).map(|_| row(n)).collect();
    let b = (0..n).map(|_| row(m)).collect();
    HmmModel::new(pi, a, b).expect("rows are normalized")
}

pub fn random_sequence(rng: &mut impl Rng, m: usize, len: usize) -> SymbolSequence {
    SymbolSequence::new((0..len).map(|_| rng.random_range(0..m)).collect()).unwrap()
}

/// Every state path of length `len` over `n` states, in lexicographic order.
pub fn all_paths(n: usize, len: usize) -> Vec<Vec<usize>> {
    let total = n.pow(len as u32);
    (0..total)
        .map(|mut code| {
            let mut path = vec![0; len];
            for slot in path.iter_mut().rev() {
                *slot = code % n;
                code /= n;
            }
            path
        })
        .collect()
}

/// P(path, O | λ) as a plain product.
pub fn joint_prob(model: &HmmModel, path: &[usize], obs: &[usize]) -> f64 {
    let mut p = model.pi()[path[0]] * model.emission(path[0], obs[0]);
    for t in 1..obs.len() {
        p *= model.transition(path[t - 1], path[t]) * model.emission(path[t], obs[t]);
    }
    p
}

/// P(O | λ) by summing over all paths.
pub fn brute_likelihood(model: &HmmModel, obs: &[usize]) -> f64 {
    all_paths(model.n_states(), obs.len())
        .iter()
        .map(|path| joint_prob(model, path, obs))
        .sum()
}

/// Largest joint probability over all paths.
pub fn brute_best(model: &HmmModel, obs: &[usize]) -> f64 {
    all_paths(model.n_states(), obs.len())
        .iter()
        .map(|path| joint_prob(model, path, obs))
        .fold(0.0, f64::max)
}

/// P(q_t = i | O) for every t, i.
pub fn brute_gamma(model: &HmmModel, obs: &[usize]) -> Vec<Vec<f64>> {
    let n = model.n_states();
    let total = brute_likelihood(model, obs);
    let mut gamma = vec![vec![0.0; n]; obs.len()];
    for path in all_paths(n, obs.len()) {
        let p = joint_prob(model, &path, obs);
        for (t, &s) in path.iter().enumerate() {
            gamma[t][s] += p;
        }
    }
    for row in &mut gamma {
        for g in row.iter_mut() {
            *g /= total;
        }
    }
    gamma
}

/// P(q_t = i, q_{t+1} = j | O) for t < T - 1.
pub fn brute_xi(model: &HmmModel, obs: &[usize]) -> Vec<Vec<Vec<f64>>> {
    let n = model.n_states();
    let total = brute_likelihood(model, obs);
    let mut xi = vec![vec![vec![0.0; n]; n]; obs.len().saturating_sub(1)];
    for path in all_paths(n, obs.len()) {
        let p = joint_prob(model, &path, obs);
        for t in 0..obs.len().saturating_sub(1) {
            xi[t][path[t]][path[t + 1]] += p / total;
        }
    }
    xi
}

/// Stationary distribution of a transition matrix by power iteration.
pub fn stationary(model: &HmmModel) -> Vec<f64> {
    let n = model.n_states();
    let mut dist = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let next: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| dist[i] * model.transition(i, j)).sum())
            .collect();
        let delta: f64 = next.iter().zip(&dist).map(|(a, b)| (a - b).abs()).sum();
        dist = next;
        if delta < 1e-15 {
            break;
        }
    }
    dist
}

/// Long-run symbol frequencies: stationary state weights mixed over B's rows.
pub fn stationary_symbol_mix(model: &HmmModel) -> Vec<f64> {
    let dist = stationary(model);
    (0..model.n_symbols())
        .map(|k| (0..model.n_states()).map(|j| dist[j] * model.emission(j, k)).sum())
        .collect()
}

pub fn relative_error(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}
