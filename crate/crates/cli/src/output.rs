//! JSON results and CSV traces.

use std::fmt::Write as _;

use globcert::linalg::C64;
use globcert::solver::{RestartRecord, SolveResult, Status, TraceRecord, Trigger};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Point {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartJson {
    pub gamma_before: f64,
    pub gamma_after: f64,
    pub trigger: &'static str,
    pub points_used: Vec<Point>,
    pub mid_round: bool,
    pub terminal: bool,
}

/// Stable output schema. Infinite values serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultJson {
    pub quantity: Option<f64>,
    pub gamma_final: Option<f64>,
    pub minimizer: Option<Point>,
    pub status: &'static str,
    pub restarts: Vec<RestartJson>,
    pub samples_per_round: Vec<usize>,
    pub notes: Vec<String>,
    pub wall_time_s: f64,
}

pub fn status_name(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::UnstableInfinite => "unstable-infinite",
        Status::TrivialNormal => "trivial-normal",
        Status::MaxRestarts => "max-restarts",
    }
}

fn trigger_name(t: Trigger) -> &'static str {
    match t {
        Trigger::Probe => "probe",
        Trigger::FinalMinCheck => "final-min",
        Trigger::RootMidpointCheck => "root-midpoint",
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn restart_json(r: &RestartRecord) -> RestartJson {
    RestartJson {
        gamma_before: r.gamma_before,
        gamma_after: r.gamma_after,
        trigger: trigger_name(r.trigger),
        points_used: r.points_used.iter().map(|&z| z.into()).collect(),
        mid_round: r.mid_round,
        terminal: r.terminal,
    }
}

pub fn result_json(res: &SolveResult, wall_time_s: f64) -> ResultJson {
    ResultJson {
        quantity: finite(res.quantity),
        gamma_final: finite(res.gamma_final),
        minimizer: res.minimizer.map(Into::into),
        status: status_name(res.status),
        restarts: res.restarts.iter().map(restart_json).collect(),
        samples_per_round: res.certificate_samples.clone(),
        notes: res.notes.clone(),
        wall_time_s,
    }
}

pub const TRACE_HEADER: &str = "round,gamma,theta,value,n_candidates,stage";

/// One row per certificate evaluation, in evaluation order.
pub fn trace_csv(records: &[TraceRecord]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{},{:.16e},{:.16e},{:.16e},{},{}", r.round, r.gamma, r.theta, r.value, r.n_candidates, r.stage.name());
    }
    out
}

/// Parses `re`, `imi`, `re+imi` or `re-imi`; `i` alone means a unit.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse '{s}' as a complex number (expected re, imi or re±imi)");
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad());
    };
    // Split at the last sign that does not belong to an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => v.parse::<f64>().map_err(|_| bad())?,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    Ok(C64::new(re, im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let c = |re, im| C64::new(re, im);
        assert_eq!(parse_complex("1+1i").unwrap(), c(1.0, 1.0));
        assert_eq!(parse_complex("0.5").unwrap(), c(0.5, 0.0));
        assert_eq!(parse_complex("-1-2i").unwrap(), c(-1.0, -2.0));
        assert_eq!(parse_complex("2i").unwrap(), c(0.0, 2.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("3-i").unwrap(), c(3.0, -1.0));
        assert_eq!(parse_complex("1e-3+2.5E+1i").unwrap(), c(1e-3, 25.0));
        assert_eq!(parse_complex("-1e-3i").unwrap(), c(0.0, -1e-3));
        assert!(parse_complex("1+").is_err());
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("").is_err());
    }
}
