//! Per-step records and their CSV / JSON serialization.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CSV header for [`TrainingTrace::write_csv`].
pub const CSV_HEADER: &str = "k,eta,loss,grad_norm_sq,searched,backtracks,batch_seed";

/// Acceptance rule that was tested during a line search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Criterion {
    /// `loss_trial <= loss0 - c * eta * gnorm_term`.
    Armijo { c: f64, gnorm_term: f64 },
    /// `beta3 * h_prev + (1 - beta3) * (loss0 - loss_trial) >= c * eta * s`,
    /// with `h_prev = None` on the seeding step.
    Salsa {
        c: f64,
        beta3: f64,
        h_prev: Option<f64>,
        s: f64,
    },
}

/// Quantities needed to re-check a searched step against its criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionCheck {
    pub criterion: Criterion,
    /// Loss on the step's batch at the returned step size.
    pub loss_trial: f64,
    /// False when the backtracking budget ran out before the criterion held.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: u64,
    pub eta: f64,
    pub loss: f64,
    pub grad_norm_sq: f64,
    pub searched: bool,
    pub backtracks: u32,
    pub batch_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CriterionCheck>,
}

impl StepRecord {
    pub fn unsearched(k: u64, eta: f64, loss: f64, grad_norm_sq: f64, batch_seed: u64) -> Self {
        Self {
            k,
            eta,
            loss,
            grad_norm_sq,
            searched: false,
            backtracks: 0,
            batch_seed,
            check: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub optimizer: String,
    pub problem: String,
    pub seed: u64,
    #[serde(default)]
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub metadata: TraceMetadata,
    pub records: Vec<StepRecord>,
}

impl TrainingTrace {
    pub fn new(metadata: TraceMetadata) -> Self {
        Self {
            metadata,
            records: Vec::new(),
        }
    }

    /// Appends a record; `k` must strictly increase.
    pub fn push(&mut self, record: StepRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.k <= last.k {
                return Err(Error::InvalidConfig(format!(
                    "trace records must have increasing k ({} after {})",
                    record.k, last.k
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn searched_fraction(&self) -> f64 {
        let steps = self.records.iter().filter(|r| r.k > 0).count();
        if steps == 0 {
            return 0.0;
        }
        let searched = self.records.iter().filter(|r| r.searched).count();
        searched as f64 / steps as f64
    }

    /// Exponential moving average of the per-step training loss, seeded with
    /// the first step. Falls back to the initial evaluation for empty runs.
    pub fn smoothed_final_loss(&self, beta: f64) -> f64 {
        let mut steps = self.records.iter().filter(|r| r.k > 0).map(|r| r.loss);
        let Some(first) = steps.next() else {
            return self.records.first().map_or(f64::NAN, |r| r.loss);
        };
        steps.fold(first, |avg, x| beta * avg + (1.0 - beta) * x)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        let io = |e: csv::Error| Error::Dataset(e.to_string());
        writer.write_record(CSV_HEADER.split(',')).map_err(io)?;
        for r in &self.records {
            writer
                .write_record([
                    r.k.to_string(),
                    format_f64(r.eta),
                    format_f64(r.loss),
                    format_f64(r.grad_norm_sq),
                    r.searched.to_string(),
                    r.backtracks.to_string(),
                    r.batch_seed.to_string(),
                ])
                .map_err(io)?;
        }
        writer.flush().map_err(|e| Error::Dataset(e.to_string()))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace is always serializable")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Dataset(e.to_string()))
    }
}

/// Shortest representation that parses back to the same bits.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        x.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TrainingTrace {
        let mut t = TrainingTrace::new(TraceMetadata {
            optimizer: "sgd_salsa".into(),
            problem: "quadratic".into(),
            seed: 3,
            config: serde_json::json!({ "c": 0.3 }),
        });
        t.push(StepRecord::unsearched(0, 1.0, 2.5, 4.0, 0)).unwrap();
        t.push(StepRecord {
            k: 1,
            eta: 0.9,
            loss: 1.25,
            grad_norm_sq: 1.0e-3,
            searched: true,
            backtracks: 1,
            batch_seed: 17,
            check: Some(CriterionCheck {
                criterion: Criterion::Salsa {
                    c: 0.3,
                    beta3: 0.99,
                    h_prev: None,
                    s: 4.0,
                },
                loss_trial: 0.1,
                accepted: true,
            }),
        })
        .unwrap();
        t.push(StepRecord::unsearched(2, 0.9, 0.1, 0.0, 17)).unwrap();
        t
    }

    #[test]
    fn empty_trace_is_header_only() {
        let t = TrainingTrace::default();
        assert_eq!(t.to_csv_string(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_golden() {
        let expected = "k,eta,loss,grad_norm_sq,searched,backtracks,batch_seed\n\
                        0,1.0,2.5,4.0,false,0,0\n\
                        1,0.9,1.25,0.001,true,1,17\n\
                        2,0.9,0.1,0.0,false,0,17\n";
        assert_eq!(sample().to_csv_string(), expected);
    }

    #[test]
    fn json_round_trip() {
        let t = sample();
        let back = TrainingTrace::from_json_str(&t.to_json_string()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn push_rejects_non_increasing_k() {
        let mut t = sample();
        assert!(t.push(StepRecord::unsearched(2, 1.0, 0.0, 0.0, 0)).is_err());
    }

    #[test]
    fn smoothed_loss_seeds_with_first_step() {
        let t = sample();
        let expected = 0.99 * 1.25 + 0.01 * 0.1;
        assert!((t.smoothed_final_loss(0.99) - expected).abs() < 1e-15);
        assert!((t.searched_fraction() - 0.5).abs() < 1e-15);
    }
}
