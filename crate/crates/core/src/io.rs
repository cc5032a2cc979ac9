//! Text formats: stream matrices, per-day traces, game transcripts, refill
//! logs, audit tables and instance sidecars.
//!
//! Matrix file: a header line `n T`, then one line per day holding the `n`
//! expert bits, a space, and the outcome bit.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adversary::{BiasDetectInstance, GameTranscript, Label};
use crate::error::{Error, Result};
use crate::pool::RefillEvent;
use crate::privacy::AuditReport;
use crate::robust::PrivacyLedger;
use crate::stream::{ExpertMatrix, RunReport};

pub const TRACE_HEADER: &str =
    "run_id,day,algorithm,prediction,outcome,cum_mistakes_alg,cum_mistakes_best,avg_regret,memory_slots";
pub const TRANSCRIPT_HEADER: &str = "day,predictions,outcome,alg_prediction";
pub const AUDIT_HEADER: &str = "outcome,freq_D,freq_Dprime,log_ratio,slack";
pub const PRIVACY_HEADER: &str = "day,epsilon_per_call,calls,composed_epsilon,composed_delta";

/// Nine significant digits, plain notation for moderate magnitudes and
/// exponent notation otherwise. Trailing zeros are dropped.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn bit(b: bool) -> char {
    if b {
        '1'
    } else {
        '0'
    }
}

fn bitstring(bits: &[bool]) -> String {
    bits.iter().map(|&b| bit(b)).collect()
}

fn parse_bit(c: char, line: usize) -> Result<bool> {
    match c {
        '0' => Ok(false),
        '1' => Ok(true),
        other => Err(Error::Parse { line, msg: format!("expected 0 or 1, found {other:?}") }),
    }
}

pub fn matrix_to_string(m: &ExpertMatrix) -> String {
    let mut out = String::with_capacity((m.experts() + 3) * (m.horizon() + 1));
    let _ = writeln!(out, "{} {}", m.experts(), m.horizon());
    for t in 0..m.horizon() {
        out.push_str(&bitstring(m.row(t)));
        out.push(' ');
        out.push(bit(m.outcome(t)));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<ExpertMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty matrix file".into() })?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let parse_dim = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse { line: 1, msg: format!("bad dimension {s:?}") });
    if dims.len() != 2 {
        return Err(Error::Parse { line: 1, msg: "header must be `n T`".into() });
    }
    let (n, horizon) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    let mut bits = Vec::with_capacity(n * horizon);
    let mut outcomes = Vec::with_capacity(horizon);
    for (i, line) in lines {
        let lineno = i + 1;
        let (row, outcome) = line
            .trim()
            .split_once(' ')
            .ok_or(Error::Parse { line: lineno, msg: "expected `bits outcome`".into() })?;
        if row.len() != n {
            return Err(Error::Parse { line: lineno, msg: format!("expected {n} expert bits, found {}", row.len()) });
        }
        for c in row.chars() {
            bits.push(parse_bit(c, lineno)?);
        }
        let outcome = outcome.trim();
        if outcome.len() != 1 {
            return Err(Error::Parse { line: lineno, msg: "outcome must be one bit".into() });
        }
        outcomes.push(parse_bit(outcome.chars().next().unwrap_or('?'), lineno)?);
    }
    if outcomes.len() != horizon {
        return Err(Error::Parse { line: 1, msg: format!("header says {horizon} days, found {}", outcomes.len()) });
    }
    ExpertMatrix::from_flat(n, bits, outcomes)
}

pub fn read_matrix(path: &Path) -> Result<ExpertMatrix> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

pub fn write_matrix(path: &Path, m: &ExpertMatrix) -> Result<()> {
    Ok(std::fs::write(path, matrix_to_string(m))?)
}

/// Trace rows of one run, without the header.
pub fn trace_rows(run_id: &str, report: &RunReport, out: &mut String) {
    for r in &report.trace {
        let _ = writeln!(
            out,
            "{run_id},{},{},{},{},{},{},{},{}",
            r.day,
            report.algorithm,
            u8::from(r.prediction),
            u8::from(r.outcome),
            r.cum_mistakes_alg,
            r.cum_mistakes_best,
            fmt_sig(r.avg_regret),
            r.memory_slots
        );
    }
}

pub fn trace_csv(run_id: &str, report: &RunReport) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    trace_rows(run_id, report, &mut out);
    out
}

pub fn transcript_csv(t: &GameTranscript) -> String {
    let mut out = format!("{TRANSCRIPT_HEADER}\n");
    for (i, d) in t.days.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            i + 1,
            bitstring(&d.record.predictions),
            u8::from(d.record.outcome),
            u8::from(d.prediction)
        );
    }
    out
}

/// One `day index members` line per pool installation.
pub fn refill_dump(events: &[RefillEvent]) -> String {
    let mut out = String::new();
    for e in events {
        let _ = writeln!(out, "{e}");
    }
    out
}

pub fn audit_csv(report: &AuditReport) -> String {
    let mut out = format!("{AUDIT_HEADER}\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.outcome,
            fmt_sig(r.freq_d),
            fmt_sig(r.freq_d_prime),
            fmt_sig(r.log_ratio),
            fmt_sig(r.slack)
        );
    }
    out
}

/// One row per day: the per-call epsilon and the composition so far.
pub fn privacy_csv(ledger: &PrivacyLedger) -> String {
    let mut out = format!("{PRIVACY_HEADER}\n");
    let budget = crate::privacy::PrivacyBudget {
        epsilon_per_call: ledger.epsilon_per_call,
        delta_per_call: 0.0,
        calls: 0,
        delta_prime: ledger.delta_prime,
    };
    for day in 1..=ledger.calls {
        let c = budget.composed_after(day);
        let _ = writeln!(
            out,
            "{day},{},{day},{},{}",
            fmt_sig(ledger.epsilon_per_call),
            fmt_sig(c.epsilon),
            fmt_sig(c.delta)
        );
    }
    out
}

/// One-line JSON description of a BiasDetect instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSidecar {
    pub label: String,
    #[serde(rename = "L")]
    pub planted: Option<usize>,
    #[serde(rename = "epsilonBias")]
    pub epsilon_bias: f64,
    pub seed: u64,
}

impl InstanceSidecar {
    pub fn of(instance: &BiasDetectInstance) -> Self {
        InstanceSidecar {
            label: instance.label.to_string(),
            planted: instance.planted,
            epsilon_bias: instance.epsilon_bias,
            seed: instance.seed,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("sidecar serializes")
    }

    pub fn parse(line: &str) -> Result<Self> {
        serde_json::from_str(line.trim()).map_err(|e| Error::Parse { line: 1, msg: e.to_string() })
    }

    /// Rebuild the instance from its matrix.
    pub fn attach(&self, matrix: ExpertMatrix) -> Result<BiasDetectInstance> {
        let label: Label = self.label.parse()?;
        Ok(BiasDetectInstance { matrix, label, planted: self.planted, epsilon_bias: self.epsilon_bias, seed: self.seed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{gen_no, gen_yes};
    use crate::rng::Seed;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(0.05), "0.05");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig(-2.0 / 3.0), "-0.666666667");
        assert_eq!(fmt_sig(123456.789012), "123456.789");
        assert_eq!(fmt_sig(7.8125e-4), "0.00078125");
        assert_eq!(fmt_sig(1.5e-9), "1.5e-9");
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
    }

    #[test]
    fn matrix_round_trip() {
        let m = gen_yes(7, 33, 4, None, Seed(2)).unwrap().matrix;
        let text = matrix_to_string(&m);
        assert_eq!(parse_matrix(&text).unwrap(), m);
        assert_eq!(matrix_to_string(&parse_matrix(&text).unwrap()), text);
    }

    #[test]
    fn matrix_parse_errors() {
        assert!(matches!(parse_matrix(""), Err(Error::Parse { .. })));
        assert!(matches!(parse_matrix("2 1\n10 2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_matrix("2 2\n10 1\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_matrix("3 1\n10 1\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn sidecar_round_trip() {
        let inst = gen_yes(4, 10, 2, Some(1), Seed(5)).unwrap();
        let line = InstanceSidecar::of(&inst).to_line();
        assert!(line.contains("\"L\":1") && line.contains("\"label\":\"YES\""), "{line}");
        let back = InstanceSidecar::parse(&line).unwrap().attach(inst.matrix.clone()).unwrap();
        assert_eq!(back, inst);
        let no = gen_no(3, 4, Seed(1)).unwrap();
        assert!(InstanceSidecar::of(&no).to_line().contains("\"L\":null"));
    }
}
