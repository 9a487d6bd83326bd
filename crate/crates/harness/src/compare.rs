//! Cross-problem comparison tables: per-problem losses, averages and ranks.

use serde::{Deserialize, Serialize};

use crate::config::CompareConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::{run_seeds, RunSpec, RunSummary};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemRow {
    pub problem: String,
    /// Mean final loss per candidate, in candidate order.
    pub losses: Vec<f64>,
    pub ranks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub candidates: Vec<String>,
    pub rows: Vec<ProblemRow>,
    pub arithmetic_average: Vec<f64>,
    pub log_average: Vec<f64>,
    /// Candidates whose log average fell back to the arithmetic mean because
    /// a loss was not positive.
    pub log_average_fallback: Vec<bool>,
    pub average_rank: Vec<f64>,
}

impl ComparisonTable {
    pub fn average_rank_of(&self, candidate: &str) -> Option<f64> {
        let i = self.candidates.iter().position(|c| c == candidate)?;
        Some(self.average_rank[i])
    }
}

/// 1-based ranks, smallest value first, ties sharing the mean of their ranks.
/// NaN sorts last.
pub fn rank_with_ties(values: &[f64]) -> Vec<f64> {
    let key = |x: f64| if x.is_nan() { f64::INFINITY } else { x };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| key(values[a]).total_cmp(&key(values[b])));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && key(values[order[end]]) == key(values[order[start]]) {
            end += 1;
        }
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    ranks
}

/// Geometric mean `exp(mean(ln x))`; `None` if any value is not positive.
pub fn log_average(values: &[f64]) -> Option<f64> {
    if values.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    Some((values.iter().map(|x| x.ln()).sum::<f64>() / values.len() as f64).exp())
}

/// Tabulates summaries. Every candidate must appear exactly once per problem.
pub fn compare(summaries: &[RunSummary]) -> Result<ComparisonTable> {
    let mut candidates: Vec<String> = Vec::new();
    let mut problems: Vec<String> = Vec::new();
    for s in summaries {
        if !candidates.contains(&s.optimizer) {
            candidates.push(s.optimizer.clone());
        }
        if !problems.contains(&s.problem) {
            problems.push(s.problem.clone());
        }
    }
    if summaries.len() != candidates.len() * problems.len() {
        return Err(HarnessError::Config(
            "compare needs exactly one summary per (optimizer, problem) pair".into(),
        ));
    }

    let mut rows = Vec::with_capacity(problems.len());
    for problem in &problems {
        let losses = candidates
            .iter()
            .map(|c| {
                summaries
                    .iter()
                    .find(|s| &s.problem == problem && &s.optimizer == c)
                    .map(|s| s.mean_final_loss)
                    .ok_or_else(|| HarnessError::Config(format!("{c} has no result on {problem}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let ranks = rank_with_ties(&losses);
        rows.push(ProblemRow {
            problem: problem.clone(),
            losses,
            ranks,
        });
    }

    let column = |i: usize, f: fn(&ProblemRow) -> &Vec<f64>| rows.iter().map(|r| f(r)[i]).collect::<Vec<f64>>();
    let mut table = ComparisonTable {
        candidates: candidates.clone(),
        rows: Vec::new(),
        arithmetic_average: Vec::new(),
        log_average: Vec::new(),
        log_average_fallback: Vec::new(),
        average_rank: Vec::new(),
    };
    for (i, name) in candidates.iter().enumerate() {
        let losses = column(i, |r| &r.losses);
        let arithmetic = stats::mean(&losses);
        let (log_avg, fallback) = match log_average(&losses) {
            Some(v) => (v, false),
            None => {
                log::warn!("{name}: non-positive loss, log average falls back to arithmetic mean");
                (arithmetic, true)
            }
        };
        table.arithmetic_average.push(arithmetic);
        table.log_average.push(log_avg);
        table.log_average_fallback.push(fallback);
        table.average_rank.push(stats::mean(&column(i, |r| &r.ranks)));
    }
    table.rows = rows;
    Ok(table)
}

/// Runs every optimizer on every problem and tabulates the results.
pub fn run_comparison(cfg: &CompareConfig) -> Result<(Vec<RunSummary>, ComparisonTable)> {
    if cfg.seeds.is_empty() || cfg.problems.is_empty() || cfg.optimizers.is_empty() {
        return Err(HarnessError::Config(
            "compare needs seeds, problems and optimizers".into(),
        ));
    }
    let snapshot = serde_json::to_value(cfg).expect("config serialises");
    let mut summaries = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for spec in &cfg.problems {
        let problem = spec.build()?;
        let mut batch_size = cfg.batch_size;
        if problem.dataset_size() == 1 && batch_size > 1 {
            log::warn!("{} is deterministic; using batch size 1", problem.name());
            batch_size = 1;
        }
        if batch_size == 0 || batch_size > problem.dataset_size() {
            return Err(HarnessError::Config(format!(
                "batch_size must lie in [1, {}] for {}",
                problem.dataset_size(),
                problem.name()
            )));
        }
        let mut label = problem.name().to_string();
        if labels.contains(&label) {
            label = format!("{label}_{}", labels.len());
        }
        labels.push(label.clone());
        for (i, opt) in cfg.optimizers.iter().enumerate() {
            let mut name = opt.label();
            if cfg.optimizers[..i].iter().any(|o| o.label() == name) {
                name = format!("{name}#{i}");
            }
            let run = RunSpec {
                optimizer: opt,
                epochs: cfg.epochs,
                batch_size,
                frequency_controller: cfg.frequency_controller,
            };
            let runs = run_seeds(problem.as_ref(), run, &cfg.seeds, &snapshot)?;
            let mut summary = RunSummary::from_runs(&runs);
            summary.problem = label.clone();
            summary.optimizer = name;
            summaries.push(summary);
        }
    }
    let table = compare(&summaries)?;
    for s in &mut summaries {
        s.mean_rank = table.average_rank_of(&s.optimizer);
    }
    Ok((summaries, table))
}
