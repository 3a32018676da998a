use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cursor_hmm::aoi::{fixation_report, vectorize as vectorize_trace, FixationReport};
use cursor_hmm::classifier::{classify as classify_seq, classify_with_threshold, decide, TaskModelRegistry};
use cursor_hmm::hmm::sample as sample_model;
use cursor_hmm::model_io::{
    float_to_json, load_layout, load_model, load_sequence, parse_trace, report_to_json,
    save_model, save_sequence, Table2,
};
use cursor_hmm::training::{baum_welch, TrainingConfig, TrainingTrace};
use serde_json::{json, Map, Value};

use crate::FIXTURES_ENV;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(cursor_hmm::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Domain(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Domain(e) => write!(f, "{e}"),
        }
    }
}

impl From<cursor_hmm::Error> for CliError {
    fn from(e: cursor_hmm::Error) -> Self {
        CliError::Domain(e)
    }
}

type CmdResult = Result<ExitCode, CliError>;

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Domain(cursor_hmm::Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn fmt4(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.4}")
    } else {
        x.to_string()
    }
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json values serialize"));
}

/// Regular, non-hidden files of `dir`, sorted by name.
fn files_in(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| io_error(dir, e))? {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'));
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn vectorize(trace: &Path, layout: &Path, ds: f64, out: &Path) -> CmdResult {
    let text = fs::read_to_string(trace).map_err(|e| io_error(trace, e))?;
    if text.trim().is_empty() {
        return Err(CliError::Usage(format!("{}: trace file is empty", trace.display())));
    }
    let trace = parse_trace(&text)?;
    let layout = load_layout(layout)?;
    let seq = vectorize_trace(&trace, &layout, ds)?;
    let alphabet = layout.alphabet();
    save_sequence(&seq, &alphabet, out)?;
    let report = fixation_report(&seq, &layout)?;
    println!("T = {}", seq.len());
    for (name, count) in alphabet.iter().zip(&report.counts) {
        println!("{name}\t{count}");
    }
    Ok(ExitCode::SUCCESS)
}

fn trace_json(trace: &TrainingTrace, n_sequences: usize) -> Value {
    json!({
        "converged": trace.converged,
        "iterations_run": trace.iterations_run,
        "log_base": "e",
        "log_likelihoods": trace.log_likelihoods.iter().map(|&x| float_to_json(x)).collect::<Vec<_>>(),
        "n_sequences": n_sequences,
    })
}

/// Where `train` writes the per-iteration log-likelihoods for `out`.
pub fn trace_sidecar(out: &Path) -> PathBuf {
    out.with_extension("trace.json")
}

pub fn train(init: &Path, data: &Path, out: &Path, config: TrainingConfig) -> CmdResult {
    let model0 = load_model(init)?;
    let alphabet = model0.symbol_names().to_vec();
    let files = files_in(data)?;
    let sequences = files
        .iter()
        .map(|f| load_sequence(f, &alphabet))
        .collect::<Result<Vec<_>, _>>()?;
    let (model, trace) = baum_welch(&model0, &sequences, &config)?;
    save_model(&model, out)?;
    let sidecar = trace_sidecar(out);
    let body = serde_json::to_string_pretty(&trace_json(&trace, sequences.len()))
        .expect("json values serialize");
    fs::write(&sidecar, body + "\n").map_err(|e| io_error(&sidecar, e))?;

    println!("# log-likelihoods are natural logarithms");
    println!("sequences\t{}", sequences.len());
    for (k, ll) in trace.log_likelihoods.iter().enumerate() {
        println!("iter {k}\t{}", fmt4(*ll));
    }
    println!(
        "{} after {} iterations",
        if trace.converged { "converged" } else { "stopped" },
        trace.iterations_run
    );
    Ok(ExitCode::SUCCESS)
}

pub fn classify(models: &Path, seq: &Path, json: bool, threshold: Option<f64>) -> CmdResult {
    let mut entries = Vec::new();
    for path in files_in(models)? {
        if path.extension().is_some_and(|e| e == "json") {
            entries.push((stem(&path), load_model(&path)?));
        }
    }
    let registry = TaskModelRegistry::new(entries)?;
    let seq = load_sequence(seq, registry.symbol_names())?;
    let report = match threshold {
        Some(t) => classify_with_threshold(&registry, &seq, t)?,
        None => classify_seq(&registry, &seq)?,
    };
    if json {
        print_json(&report_to_json(&report));
        return Ok(ExitCode::SUCCESS);
    }
    println!("# log-likelihoods are natural logarithms");
    for (task, score) in &report.scores {
        println!("{task}\t{}", fmt4(*score));
    }
    println!("winner\t{}", report.winner);
    println!("margin\t{}", fmt4(report.margin));
    if report.tie {
        println!("tie\ttrue");
    }
    if report.below_threshold() == Some(true) {
        eprintln!(
            "warning: margin {} is below the threshold {}",
            fmt4(report.margin),
            fmt4(threshold.unwrap_or_default())
        );
    }
    Ok(ExitCode::SUCCESS)
}

pub fn sample(model: &Path, length: usize, seed: u64, out: &Path) -> CmdResult {
    let model = load_model(model)?;
    let (path, seq) = sample_model(&model, length, seed)?;
    save_sequence(&seq, model.symbol_names(), out)?;
    println!("T = {}", seq.len());
    println!("seed\t{seed}");
    println!("path log-probability\t{}", fmt4(path.log_prob));
    Ok(ExitCode::SUCCESS)
}

fn report_json(report: &FixationReport) -> Value {
    let mut map = Map::new();
    for ((name, count), pct) in report.symbols.iter().zip(&report.counts).zip(&report.percentages) {
        map.insert(name.clone(), json!({ "count": count, "percent": pct }));
    }
    Value::Object(map)
}

fn print_report(report: &FixationReport) {
    for ((name, count), pct) in report.symbols.iter().zip(&report.counts).zip(&report.percentages) {
        println!("{name}\t{count}\t{}", fmt4(*pct));
    }
}

pub fn report(seq: &Path, layout: &Path, json: bool) -> CmdResult {
    let layout = load_layout(layout)?;
    let seq = load_sequence(seq, &layout.alphabet())?;
    let report = fixation_report(&seq, &layout)?;
    if json {
        print_json(&json!({ "total": report.total(), "symbols": report_json(&report) }));
    } else {
        println!("aoi\tcount\tpercent");
        print_report(&report);
    }
    Ok(ExitCode::SUCCESS)
}

/// Sub-directories of `dir` are tasks; files directly inside `dir` form a task named after `dir`.
pub fn report_aggregate(dir: &Path, layout: &Path, json: bool) -> CmdResult {
    let layout = load_layout(layout)?;
    let alphabet = layout.alphabet();
    let mut groups: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    let loose = files_in(dir)?;
    if !loose.is_empty() {
        let name = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "all".into());
        groups.insert(name, loose);
    }
    for entry in fs::read_dir(dir).map_err(|e| io_error(dir, e))? {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        if path.is_dir() {
            let files = files_in(&path)?;
            if !files.is_empty() {
                groups.entry(stem(&path)).or_default().extend(files);
            }
        }
    }
    if groups.is_empty() {
        return Err(cursor_hmm::Error::Parameter(format!(
            "{}: no sequence files found",
            dir.display()
        ))
        .into());
    }

    let mut means = BTreeMap::new();
    for (task, files) in &groups {
        let reports = files
            .iter()
            .map(|f| fixation_report(&load_sequence(f, &alphabet)?, &layout))
            .collect::<Result<Vec<_>, _>>()?;
        means.insert(task.clone(), (files.len(), FixationReport::mean(&reports)?));
    }

    if json {
        let mut map = Map::new();
        for (task, (n, mean)) in &means {
            map.insert(
                task.clone(),
                json!({ "n_sequences": n, "mean_percent": report_json(mean) }),
            );
        }
        print_json(&Value::Object(map));
        return Ok(ExitCode::SUCCESS);
    }
    print!("task\tn");
    for name in &alphabet {
        print!("\t{name}");
    }
    println!();
    for (task, (n, mean)) in &means {
        print!("{task}\t{n}");
        for pct in &mean.percentages {
            print!("\t{}", fmt4(*pct));
        }
        println!();
    }
    Ok(ExitCode::SUCCESS)
}

pub fn verify_table2() -> CmdResult {
    let table = match std::env::var_os(FIXTURES_ENV) {
        Some(dir) => {
            let path = Path::new(&dir).join("table2.json");
            eprintln!("using {}", path.display());
            Table2::load(&path)?
        }
        None => Table2::bundled(),
    };
    println!("# log-likelihoods are natural logarithms");
    println!(
        "task\t{}\t{}\tmargin\tprinted\tdecided\tresult",
        table.hmm1_task, table.hmm2_task
    );
    let mut mismatched = Vec::new();
    for row in &table.rows {
        let decision = decide(&table.scores(row))?;
        let ok = decision.winner == row.decision;
        if !ok {
            mismatched.push(row.task_id.clone());
        }
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            row.task_id,
            fmt4(row.hmm1_score()),
            fmt4(row.hmm2_score()),
            fmt4(decision.margin),
            row.decision,
            decision.winner,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    let matched = table.rows.len() - mismatched.len();
    println!("{matched}/{} decisions reproduced", table.rows.len());
    if mismatched.is_empty() && table.rows.len() == 10 {
        Ok(ExitCode::SUCCESS)
    } else {
        if !mismatched.is_empty() {
            eprintln!("mismatched rows: {}", mismatched.join(", "));
        }
        if table.rows.len() != 10 {
            eprintln!("expected 10 rows, found {}", table.rows.len());
        }
        Ok(ExitCode::from(1))
    }
}
