//! Line-oriented PMF text format.
//!
//! ```text
//! # comment lines and blank lines are ignored
//! N=10 M-independent
//! 0,1 0.055
//! 0,2 0.025
//! ```
//!
//! The first non-comment line is the header `N=<sensors> M-independent`.
//! Every further line is one support entry: strictly increasing
//! comma-separated sensor indices, whitespace, then a positive decimal
//! probability. Sets may not repeat. The probabilities must sum to 1 within
//! [`SUM_TOLERANCE`] unless [`ParseOptions::renormalize`] is set.
//!
//! Probabilities are written with the shortest decimal form that parses back
//! to the same `f64`, so a written file reloads bit-identically.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{ActivationPmf, ActiveSet, PROBABILITY_TOLERANCE};

/// Largest accepted deviation of the file total from 1.
pub const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Accept any positive total and rescale to unit mass.
    pub renormalize: bool,
}

pub fn to_pmf_string(pmf: &ActivationPmf) -> String {
    let mut out = format!("N={} M-independent\n", pmf.n_sensors());
    for (set, p) in pmf.support() {
        let members: Vec<String> = set.members().iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "{} {p:?}", members.join(","));
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_header(line_no: usize, line: &str) -> Result<usize> {
    let mut tokens = line.split_whitespace();
    let n = tokens
        .next()
        .and_then(|t| t.strip_prefix("N="))
        .ok_or_else(|| parse_err(line_no, "expected header `N=<int> M-independent`"))?;
    let n: usize = n
        .parse()
        .map_err(|_| parse_err(line_no, format!("invalid sensor count {n:?}")))?;
    if tokens.next() != Some("M-independent") || tokens.next().is_some() {
        return Err(parse_err(
            line_no,
            "expected header `N=<int> M-independent`",
        ));
    }
    Ok(n)
}

fn parse_entry(line_no: usize, line: &str, n_sensors: usize) -> Result<(ActiveSet, f64)> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let [indices, prob] = tokens[..] else {
        return Err(parse_err(line_no, "expected `<indices> <probability>`"));
    };
    let members = indices
        .split(',')
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| parse_err(line_no, format!("invalid sensor index {t:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if members.windows(2).any(|w| w[0] >= w[1]) {
        return Err(parse_err(
            line_no,
            "sensor indices must be strictly increasing",
        ));
    }
    if let Some(&s) = members.iter().find(|&&s| s >= n_sensors) {
        return Err(parse_err(
            line_no,
            format!("sensor {s} out of range for N={n_sensors}"),
        ));
    }
    let p: f64 = prob
        .parse()
        .map_err(|_| parse_err(line_no, format!("invalid probability {prob:?}")))?;
    if !(p.is_finite() && p > 0.0) {
        return Err(parse_err(
            line_no,
            format!("probability must be positive, got {p}"),
        ));
    }
    Ok((ActiveSet::new(members)?, p))
}

pub fn parse_pmf(text: &str, opts: ParseOptions) -> Result<ActivationPmf> {
    let mut n_sensors = None;
    let mut entries: Vec<(ActiveSet, f64)> = Vec::new();
    let mut seen = std::collections::HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match n_sensors {
            None => n_sensors = Some(parse_header(line_no, line)?),
            Some(n) => {
                let (set, p) = parse_entry(line_no, line, n)?;
                if let Some(prev) = seen.insert(set.clone(), line_no) {
                    return Err(parse_err(
                        line_no,
                        format!("duplicate active set {set} (first on line {prev})"),
                    ));
                }
                entries.push((set, p));
            }
        }
    }
    let n_sensors = n_sensors.ok_or_else(|| parse_err(0, "missing header"))?;
    if entries.is_empty() {
        return Err(parse_err(0, "no support entries"));
    }
    let total: f64 = entries.iter().map(|(_, p)| p).sum();
    if opts.renormalize || (total - 1.0).abs() > PROBABILITY_TOLERANCE {
        if !opts.renormalize && (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(parse_err(
                0,
                format!("probabilities sum to {total}, expected 1 within {SUM_TOLERANCE}"),
            ));
        }
        return ActivationPmf::normalized(n_sensors, entries);
    }
    ActivationPmf::new(n_sensors, entries)
}
