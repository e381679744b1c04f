//! Monte Carlo trials and parameter sweeps.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{Experiment, ExperimentConfig};
use super::metrics::{metrics_row, MetricsRow};
use crate::error::{Error, Result};
use crate::protocol::{ProtocolKind, ProtocolTranscript, Session};
use crate::rng;

/// Seed of trial `index`; every stream of the trial derives from it.
pub fn trial_seed(master_seed: u64, index: usize) -> u64 {
    let bytes = rng::derive_seed("compact-coding/trial", &[master_seed, index as u64]);
    u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"))
}

fn random_bits(tag: &str, seed: u64, n: usize) -> Vec<bool> {
    let mut r = rng::stream(tag, &[seed]);
    (0..n).map(|_| r.random()).collect()
}

/// Runs one trial: IV preamble (if any), then the data symbols.
pub fn run_trial(exp: &Experiment, index: usize) -> Result<(MetricsRow, ProtocolTranscript)> {
    let cfg = &exp.config;
    let seed = trial_seed(cfg.master_seed, index);
    let width = exp.protocol.codec.bits_per_symbol();
    let iv = random_bits("compact-coding/iv", seed, cfg.protocol.iv_length * width);
    let data = random_bits("compact-coding/message", seed, cfg.symbols_per_trial * width);
    let mut r = rng::stream("compact-coding/channel", &[seed]);

    let mut session = match exp.kind {
        ProtocolKind::ThreeStage => Session::three_stage(&exp.protocol)?,
        ProtocolKind::SingleStage => Session::single_stage(&exp.protocol, &exp.single_stage)?,
    };
    if cfg.protocol.iv_length > 0 {
        session.send_with_iv(&iv, &data, exp.abort_threshold, cfg.protocol.stop_on_abort, &mut r)?;
    } else {
        session.send(&data, &mut r)?;
    }
    let transcript = session.finish();
    let row = metrics_row(index, seed, &transcript, width, exp.protocol.eve.model.label());
    Ok((row, transcript))
}

/// All trials, ordered by trial index whether or not they ran in parallel.
pub fn run_trials(exp: &Experiment) -> Result<Vec<MetricsRow>> {
    let one = |i| run_trial(exp, i).map(|(row, _)| row);
    if exp.config.parallel {
        (0..exp.config.trials).into_par_iter().map(one).collect()
    } else {
        (0..exp.config.trials).map(one).collect()
    }
}

/// Rows of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepBlock {
    pub param: String,
    pub value: f64,
    pub rows: Vec<MetricsRow>,
}

/// Returns `config` with the numeric field at dotted `path` set to `value`.
pub fn with_param(config: &ExperimentConfig, path: &str, value: f64) -> Result<ExperimentConfig> {
    let mut doc = serde_json::to_value(config).map_err(|e| Error::Serialization(e.to_string()))?;
    let mut slot = &mut doc;
    for key in path.split('.') {
        slot = slot
            .as_object_mut()
            .and_then(|m| m.get_mut(key))
            .ok_or_else(|| Error::Config(format!("unknown parameter path `{path}`")))?;
    }
    let replacement = match slot {
        Value::Number(n) if n.is_u64() || n.is_i64() => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(Error::Config(format!("`{path}` takes a non-negative integer, got {value}")));
            }
            Value::from(value as u64)
        }
        // An absent optional field may be an integer or a float.
        Value::Null if value.fract() == 0.0 && value >= 0.0 => Value::from(value as u64),
        Value::Number(_) | Value::Null => serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| Error::Config(format!("`{path}`: {value} is not a finite number")))?,
        _ => return Err(Error::Config(format!("`{path}` is not a numeric field"))),
    };
    *slot = replacement;
    serde_json::from_value(doc).map_err(|e| Error::Config(format!("`{path}` = {value}: {e}")))
}

/// One block of trials per value, in the order given.
pub fn sweep(config: &ExperimentConfig, path: &str, values: &[f64]) -> Result<Vec<SweepBlock>> {
    values
        .iter()
        .map(|&value| {
            let exp = with_param(config, path, value)?.validate()?;
            Ok(SweepBlock { param: path.to_string(), value, rows: run_trials(&exp)? })
        })
        .collect()
}
