//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so the summary is always
//! printed: `cargo test -p cursor-hmm --test acceptance`.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use cursor_hmm::aoi::{
    fixation_report, vectorize, AoiLayout, CursorSample, CursorTrace, Region,
};
use cursor_hmm::classifier::{classify, decide, TaskModelRegistry};
use cursor_hmm::hmm::{forward, log_likelihood, path_log_prob, posteriors, sample, viterbi};
use cursor_hmm::model_io::{load_table2, FixtureSet, Table2};
use cursor_hmm::training::{baum_welch, TrainingConfig};
use cursor_hmm::{HmmModel, SymbolSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Criterion {
    id: &'static str,
    title: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// The shared random instance set: N ≤ 3, M ≤ 4, T ≤ 8.
fn instance_set() -> Vec<(HmmModel, SymbolSequence)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x00AC_CE97);
    (0..240)
        .map(|_| {
            let n = rng.random_range(1..=3);
            let m = rng.random_range(1..=4);
            let len = rng.random_range(1..=8);
            let model = random_model(&mut rng, n, m);
            let seq = random_sequence(&mut rng, m, len);
            (model, seq)
        })
        .collect()
}

fn table2_decisions() -> Outcome {
    let table = Table2::bundled();
    let mut matched = 0;
    for row in &table.rows {
        let d = decide(&table.scores(row)).map_err(|e| e.to_string())?;
        ensure(d.winner == row.decision, || {
            format!("{}: decided {} but printed {}", row.task_id, d.winner, row.decision)
        })?;
        matched += 1;
    }
    ensure(load_table2().len() == 10, || "expected 10 rows".into())?;
    let t3 = table.row("T3").ok_or("row T3 missing")?;
    let margin = decide(&table.scores(t3)).map_err(|e| e.to_string())?.margin;
    ensure((margin - 7007.9).abs() <= 0.05, || {
        format!("T3 margin {margin} differs from 7007.9")
    })?;
    Ok(format!("{matched}/10 decisions reproduced, T3 margin {margin:.4}"))
}

fn forward_oracle() -> Outcome {
    let instances = instance_set();
    let mut worst = 0.0f64;
    for (k, (model, seq)) in instances.iter().enumerate() {
        let ll = log_likelihood(model, seq).map_err(|e| e.to_string())?;
        let err = relative_error(ll.exp(), brute_likelihood(model, seq.symbols()));
        ensure(err <= 1e-9, || format!("instance {k}: relative error {err:e}"))?;
        worst = worst.max(err);
    }
    Ok(format!(
        "{} instances, worst relative error {worst:.2e}",
        instances.len()
    ))
}

fn viterbi_oracle() -> Outcome {
    let instances = instance_set();
    let mut worst = 0.0f64;
    for (k, (model, seq)) in instances.iter().enumerate() {
        let best = brute_best(model, seq.symbols()).ln();
        let path = viterbi(model, seq).map_err(|e| e.to_string())?;
        let attained = path_log_prob(model, &path.states, seq).map_err(|e| e.to_string())?;
        let err = (path.log_prob - best).abs().max((attained - best).abs());
        ensure(err <= 1e-9, || format!("instance {k}: error {err:e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("{} instances, worst error {worst:.2e}", instances.len()))
}

fn em_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE3);
    let problems = 60;
    let mut iterations = 0;
    let config = TrainingConfig {
        max_iters: 50,
        ll_tolerance: 0.0,
        ..TrainingConfig::default()
    };
    for p in 0..problems {
        let n = rng.random_range(1..=3);
        let m = rng.random_range(2..=6);
        let model0 = random_model(&mut rng, n, m);
        let data: Vec<_> = (0..5)
            .map(|_| {
                let len = rng.random_range(10..=60);
                random_sequence(&mut rng, m, len)
            })
            .collect();
        let (trained, trace) = baum_welch(&model0, &data, &config).map_err(|e| e.to_string())?;
        for (it, w) in trace.log_likelihoods.windows(2).enumerate() {
            ensure(w[1] >= w[0] - 1e-8, || {
                format!("problem {p}, iteration {}: {} -> {}", it + 1, w[0], w[1])
            })?;
        }
        let rows = std::iter::once(trained.pi())
            .chain((0..n).map(|i| trained.transition_row(i)))
            .chain((0..n).map(|j| trained.emission_row(j)));
        for row in rows {
            let sum: f64 = row.iter().sum();
            ensure((sum - 1.0).abs() <= 1e-9, || {
                format!("problem {p}: row sums to {sum}")
            })?;
        }
        iterations += trace.iterations_run;
    }
    Ok(format!("{problems} problems, {iterations} iterations, all monotone"))
}

fn one_state_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = 7;
    let data: Vec<_> = (0..3).map(|_| random_sequence(&mut rng, m, 200)).collect();
    let mut counts = vec![0usize; m];
    let mut total = 0;
    for s in &data {
        for &o in s.symbols() {
            counts[o] += 1;
            total += 1;
        }
    }
    let model0 = HmmModel::new(vec![1.0], vec![vec![1.0]], vec![vec![1.0 / m as f64; m]])
        .map_err(|e| e.to_string())?;
    let config = TrainingConfig {
        prob_floor: 0.0,
        ..TrainingConfig::default()
    };
    let (trained, _) = baum_welch(&model0, &data, &config).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for k in 0..m {
        let want = counts[k] as f64 / total as f64;
        worst = worst.max((trained.emission(0, k) - want).abs());
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation from empirical frequencies {worst:.2e}"))
}

fn posterior_identities() -> Outcome {
    let mut worst = 0.0f64;
    let instances = instance_set();
    for (k, (model, seq)) in instances.iter().enumerate() {
        let n = model.n_states();
        let post = posteriors(model, seq).map_err(|e| e.to_string())?;
        for t in 0..seq.len() {
            worst = worst.max((post.gamma(t).iter().sum::<f64>() - 1.0).abs());
        }
        for t in 0..seq.len().saturating_sub(1) {
            let xi = post.xi(t);
            worst = worst.max((xi.iter().sum::<f64>() - 1.0).abs());
            for i in 0..n {
                let marginal: f64 = xi[i * n..(i + 1) * n].iter().sum();
                worst = worst.max((marginal - post.gamma(t)[i]).abs());
            }
        }
        ensure(worst <= 1e-9, || format!("instance {k}: deviation {worst:e}"))?;
    }
    Ok(format!(
        "{} instances, worst deviation {worst:.2e}",
        instances.len()
    ))
}

fn long_sequence_stability() -> Outcome {
    let lambda1 = FixtureSet::bundled().map_err(|e| e.to_string())?.lambda1;
    let (_, seq) = sample(&lambda1, 1_000_000, 42).map_err(|e| e.to_string())?;
    let fwd = forward(&lambda1, &seq).map_err(|e| e.to_string())?;
    ensure(fwd.log_likelihood().is_finite(), || {
        format!("log-likelihood {}", fwd.log_likelihood())
    })?;
    let min_scale = fwd.scales().iter().cloned().fold(f64::INFINITY, f64::min);
    ensure(
        fwd.scales().iter().all(|c| c.is_finite() && *c > 0.0),
        || "a scale factor under- or overflowed".into(),
    )?;
    ensure(
        (0..fwd.len()).all(|t| fwd.alpha(t).iter().all(|a| a.is_finite())),
        || "a scaled forward value is not finite".into(),
    )?;
    let ll = log_likelihood(&lambda1, &seq).map_err(|e| e.to_string())?;
    ensure(ll == fwd.log_likelihood(), || "scorers disagree".into())?;
    Ok(format!(
        "T = 1e6, log-likelihood {ll:.4}, smallest scale factor {min_scale:.3e}"
    ))
}

fn dominant_model(dominant: [usize; 2]) -> HmmModel {
    let row = |k: usize| {
        let mut r = vec![0.2 / 6.0; 7];
        r[k] = 0.8;
        r
    };
    HmmModel::new(
        vec![0.5, 0.5],
        vec![vec![0.9, 0.1], vec![0.1, 0.9]],
        vec![row(dominant[0]), row(dominant[1])],
    )
    .expect("valid")
}

fn classification_round_trip() -> Outcome {
    let registry = TaskModelRegistry::new([
        ("REP".to_string(), dominant_model([0, 1])),
        ("INT".to_string(), dominant_model([4, 5])),
    ])
    .map_err(|e| e.to_string())?;
    let mut correct: BTreeMap<&str, usize> = BTreeMap::new();
    for task in ["REP", "INT"] {
        let model = registry.get(task).ok_or("missing model")?;
        for seed in 0..500 {
            let (_, seq) = sample(model, 500, seed).map_err(|e| e.to_string())?;
            let report = classify(&registry, &seq).map_err(|e| e.to_string())?;
            if report.winner == task {
                *correct.entry(task).or_default() += 1;
            }
        }
    }
    let total: usize = correct.values().sum();
    let rate = total as f64 / 1000.0;
    ensure(rate >= 0.99, || format!("recovery rate {rate}"))?;
    Ok(format!("recovered {total}/1000 ({:.1}%)", 100.0 * rate))
}

fn golden_layout() -> AoiLayout {
    AoiLayout::new(
        vec![
            Region::new("A", 0.0, 0.0, 100.0, 100.0),
            Region::new("B", 100.0, 0.0, 100.0, 100.0),
            Region::new("C", 0.0, 100.0, 100.0, 100.0),
            Region::new("D", 100.0, 100.0, 100.0, 100.0),
            Region::new("E", 200.0, 0.0, 300.0, 200.0),
            Region::new("F", 0.0, 200.0, 500.0, 50.0),
        ],
        "R",
    )
    .expect("valid")
}

fn trace(points: &[(f64, f64, f64)]) -> CursorTrace {
    CursorTrace::new(
        points
            .iter()
            .map(|&(t_ms, x, y)| CursorSample { t_ms, x, y })
            .collect(),
    )
    .expect("valid")
}

fn vectorization_golden() -> Outcome {
    let layout = golden_layout();
    let names = |s: &SymbolSequence| -> Vec<String> {
        s.symbols().iter().map(|&k| layout.alphabet()[k].clone()).collect()
    };
    let cases: [(&str, CursorTrace, &[&str]); 3] = [
        (
            "four samples",
            trace(&[
                (0.0, 300.0, 50.0),
                (10.0, 450.0, 150.0),
                (20.0, 10.0, 10.0),
                (30.0, 900.0, 900.0),
            ]),
            &["E", "E", "A", "R"],
        ),
        ("single sample", trace(&[(0.0, 250.0, 100.0)]), &["E"]),
        (
            "jittered",
            trace(&[(0.0, 50.0, 50.0), (9.0, 150.0, 50.0), (21.0, 50.0, 150.0)]),
            &["A", "B", "B"],
        ),
    ];
    for (label, t, want) in &cases {
        let seq = vectorize(t, &layout, 10.0).map_err(|e| e.to_string())?;
        let got = names(&seq);
        ensure(got == *want, || format!("{label}: got {got:?}, want {want:?}"))?;
        let report = fixation_report(&seq, &layout).map_err(|e| e.to_string())?;
        let sum: f64 = report.percentages.iter().sum();
        ensure((sum - 100.0).abs() <= 1e-9, || format!("{label}: sums to {sum}"))?;
    }
    let eeer = SymbolSequence::new(vec![4, 4, 4, 6]).map_err(|e| e.to_string())?;
    let report = fixation_report(&eeer, &layout).map_err(|e| e.to_string())?;
    ensure(
        report.percentages == [0.0, 0.0, 0.0, 0.0, 75.0, 0.0, 25.0],
        || format!("E E E R gives {:?}", report.percentages),
    )?;
    Ok("3 golden traces match; E E E R -> E 75 / R 25".into())
}

fn fixture_fidelity() -> Outcome {
    let f = FixtureSet::bundled().map_err(|e| e.to_string())?;
    let a1 = f.lambda1.transition_matrix();
    ensure(a1 == vec![vec![0.9535, 0.0465], vec![0.0604, 0.9396]], || {
        format!("A1 loaded as {a1:?}")
    })?;
    ensure(
        f.lambda1_file.model.a == [["0.9535", "0.0465"], ["0.0604", "0.9396"]],
        || "A1 digits differ from print".into(),
    )?;
    let note = f.lambda2_provenance().unwrap_or_default();
    ensure(note.contains("WARNING") && note.contains("duplication"), || {
        "lambda2 provenance warning missing".into()
    })?;
    Ok("A1 exact, lambda2 provenance warning present".into())
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: "AC-01",
            title: "published decisions reproduced",
            budget: Some(Duration::from_secs(1)),
            run: table2_decisions,
        },
        Criterion {
            id: "AC-02",
            title: "forward equals path enumeration",
            budget: Some(Duration::from_secs(10)),
            run: forward_oracle,
        },
        Criterion {
            id: "AC-03",
            title: "viterbi equals path maximum",
            budget: Some(Duration::from_secs(10)),
            run: viterbi_oracle,
        },
        Criterion {
            id: "AC-04",
            title: "Baum-Welch is monotone",
            budget: Some(Duration::from_secs(30)),
            run: em_monotonicity,
        },
        Criterion {
            id: "AC-05",
            title: "one-state training gives frequencies",
            budget: None,
            run: one_state_closed_form,
        },
        Criterion {
            id: "AC-06",
            title: "posterior identities",
            budget: None,
            run: posterior_identities,
        },
        Criterion {
            id: "AC-07",
            title: "T = 1e6 scoring is stable",
            budget: Some(Duration::from_secs(10)),
            run: long_sequence_stability,
        },
        Criterion {
            id: "AC-08",
            title: "classification recovers the generator",
            budget: Some(Duration::from_secs(30)),
            run: classification_round_trip,
        },
        Criterion {
            id: "AC-09",
            title: "vectorization golden tests",
            budget: None,
            run: vectorization_golden,
        },
        Criterion {
            id: "AC-10",
            title: "fixture fidelity",
            budget: None,
            run: fixture_fidelity,
        },
    ];

    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let mut outcome = (c.run)();
        let elapsed = start.elapsed();
        if let (Ok(detail), Some(budget)) = (&outcome, c.budget) {
            if elapsed > budget {
                outcome = Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("[PASS] {} {}: {detail} ({elapsed:.2?})", c.id, c.title),
            Err(detail) => {
                failures += 1;
                println!("[FAIL] {} {}: {detail} ({elapsed:.2?})", c.id, c.title);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
