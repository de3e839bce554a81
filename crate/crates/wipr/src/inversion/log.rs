//! Per-iteration inversion records and their CSV form.
//!
//! The file starts with a `# seed=N` comment, then a fixed header. Floats
//! print through the shortest round-trip formatter, so rerunning the same
//! experiment reproduces the file byte for byte; timing is recorded as 0
//! unless explicitly enabled, keeping byte-identical reruns possible.

use std::fs;
use std::path::Path;

use super::Mode;
use crate::{Result, WiprError};

pub const CSV_HEADER: &str =
    "iter,freq_batch,mode,data_residual,source_residual,model_error,lambda,seconds";

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub freq_batch: usize,
    pub mode: Mode,
    pub data_residual: f64,
    pub source_residual: f64,
    pub model_error: Option<f64>,
    pub lambda: f64,
    pub seconds: f64,
}

pub fn write_csv(path: &Path, seed: u64, records: &[IterationRecord]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# seed={seed}\n"));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let me = match r.model_error {
            Some(v) => format!("{v}"),
            None => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.iter, r.freq_batch, r.mode, r.data_residual, r.source_residual, me, r.lambda, r.seconds
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<(u64, Vec<IterationRecord>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let seed_line = lines
        .next()
        .ok_or_else(|| WiprError::FileFormat("empty log file".into()))?;
    let seed = seed_line
        .strip_prefix("# seed=")
        .and_then(|s| s.trim().parse::<u64>().ok())
        .ok_or_else(|| WiprError::FileFormat(format!("expected '# seed=N', got '{seed_line}'")))?;
    let header = lines
        .next()
        .ok_or_else(|| WiprError::FileFormat("missing header line".into()))?;
    if header != CSV_HEADER {
        return Err(WiprError::FileFormat(format!("unexpected header '{header}'")));
    }
    let mut records = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(WiprError::FileFormat(format!(
                "row {}: expected 8 fields, got {}",
                ln + 3,
                fields.len()
            )));
        }
        let bad = |what: &str| WiprError::FileFormat(format!("row {}: bad {what}", ln + 3));
        let mode = match fields[2] {
            "irwri" => Mode::Irwri,
            "wipr" => Mode::Wipr,
            other => {
                return Err(WiprError::FileFormat(format!("row {}: unknown mode '{other}'", ln + 3)))
            }
        };
        records.push(IterationRecord {
            iter: fields[0].parse().map_err(|_| bad("iter"))?,
            freq_batch: fields[1].parse().map_err(|_| bad("freq_batch"))?,
            mode,
            data_residual: fields[3].parse().map_err(|_| bad("data_residual"))?,
            source_residual: fields[4].parse().map_err(|_| bad("source_residual"))?,
            model_error: if fields[5].is_empty() {
                None
            } else {
                Some(fields[5].parse().map_err(|_| bad("model_error"))?)
            },
            lambda: fields[6].parse().map_err(|_| bad("lambda"))?,
            seconds: fields[7].parse().map_err(|_| bad("seconds"))?,
        });
    }
    Ok((seed, records))
}
