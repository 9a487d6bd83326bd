//! Writing traces and reports as CSV or JSON.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use salsa_core::trace::format_f64;
use salsa_core::TrainingTrace;
use serde::Serialize;

use crate::ablation::AblationReport;
use crate::compare::ComparisonTable;
use crate::error::{HarnessError, Result};
use crate::scaling::ScalingReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(HarnessError::Config(format!(
                "unknown format `{other}` (expected csv or json)"
            ))),
        }
    }
}

/// Anything the CLI can write out.
pub trait Emit: Serialize {
    fn write_csv(&self, out: &mut Vec<u8>) -> Result<()>;
}

/// Renders `item` in memory; identical input gives identical bytes.
pub fn render(item: &impl Emit, format: Format) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => item.write_csv(&mut buf)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, item).expect("in-memory JSON cannot fail");
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

pub fn emit(item: &impl Emit, format: Format, path: &Path) -> Result<()> {
    let bytes = render(item, format)?;
    std::fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

impl Emit for TrainingTrace {
    fn write_csv(&self, out: &mut Vec<u8>) -> Result<()> {
        Ok(TrainingTrace::write_csv(self, out)?)
    }
}

fn line(out: &mut Vec<u8>, label: &str, values: impl IntoIterator<Item = String>) {
    let mut row = label.to_string();
    for v in values {
        row.push(',');
        row.push_str(&v);
    }
    row.push('\n');
    out.extend_from_slice(row.as_bytes());
}

fn floats(xs: &[f64]) -> impl Iterator<Item = String> + '_ {
    xs.iter().map(|&x| format_f64(x))
}

impl Emit for ComparisonTable {
    fn write_csv(&self, out: &mut Vec<u8>) -> Result<()> {
        line(out, "problem", self.candidates.iter().cloned());
        for row in &self.rows {
            line(out, &row.problem, floats(&row.losses));
        }
        line(out, "arithmetic_average", floats(&self.arithmetic_average));
        line(out, "log_average", floats(&self.log_average));
        line(out, "average_rank", floats(&self.average_rank));
        Ok(())
    }
}

impl Emit for ScalingReport {
    /// Ratio table only; the `h`/`s` series are in the JSON form.
    fn write_csv(&self, out: &mut Vec<u8>) -> Result<()> {
        line(
            out,
            "batch_size",
            ["mean_mid_eta".to_string(), "ratio_to_previous".to_string()],
        );
        for (i, row) in self.rows.iter().enumerate() {
            let ratio = if i == 0 {
                String::new()
            } else {
                format_f64(self.ratios[i - 1].ratio)
            };
            line(out, &row.batch_size.to_string(), [format_f64(row.mean_mid_eta), ratio]);
        }
        Ok(())
    }
}

impl Emit for AblationReport {
    fn write_csv(&self, out: &mut Vec<u8>) -> Result<()> {
        line(
            out,
            "frequency_controller",
            ["mean_final_loss".to_string(), "searched_fraction".to_string()],
        );
        for arm in [&self.with_controller, &self.without_controller] {
            line(
                out,
                if arm.frequency_controller { "on" } else { "off" },
                [format_f64(arm.mean_final_loss), format_f64(arm.searched_fraction)],
            );
        }
        line(out, "delta", [format_f64(self.final_loss_delta), String::new()]);
        line(
            out,
            "pooled_standard_error",
            [format_f64(self.pooled_standard_error), String::new()],
        );
        Ok(())
    }
}

#[derive(Serialize)]
#[serde(transparent)]
pub struct TraceSet(pub Vec<TrainingTrace>);

impl Emit for TraceSet {
    /// CSV holds a single trace; several seeds go to separate files.
    fn write_csv(&self, out: &mut Vec<u8>) -> Result<()> {
        match self.0.as_slice() {
            [trace] => Emit::write_csv(trace, out),
            _ => Err(HarnessError::Config(
                "CSV output holds one trace; use one file per seed".into(),
            )),
        }
    }
}

/// Flushes rendered bytes to stdout.
pub fn to_stdout(bytes: &[u8]) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(bytes)
        .and_then(|_| stdout.flush())
        .map_err(|e| HarnessError::io("<stdout>", e))
}
