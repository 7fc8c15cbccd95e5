use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::experiment::{Report, RunRecord};

pub const CSV_HEADER: &str = "instance,algorithm,memory_states,horizon,run,seed,value,evaluations,wall_ms,reached_optimal";

/// `%.{digits}g`-style rendering: `digits` significant digits, trailing
/// zeros dropped, exponent form only for very large or small magnitudes.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per record, in the order given.
pub fn emit_csv(records: &[RunRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::Config("no records to write".into()));
    }
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let reached = match r.reached_optimal {
            Some(true) => "1",
            Some(false) => "0",
            None => "NA",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.instance),
            csv_field(&r.algorithm),
            r.memory_states,
            r.horizon,
            r.run,
            r.seed,
            format_significant(r.value, 12),
            r.evaluations,
            format_significant(r.wall_ms, 12),
            reached
        );
    }
    Ok(out)
}

/// Gnuplot-friendly blocks, one per algorithm:
///
/// ```text
/// # local
/// 1 1 5.5
/// 2 0.42 31.2
///
/// # anneal
/// ...
/// ```
///
/// Columns are `k success_fraction mean_evaluations`; an unknown success
/// fraction is written as `NaN`.
pub fn emit_plot_data(report: &Report) -> Result<String> {
    if report.cells.is_empty() {
        return Err(Error::Config("report has no cells".into()));
    }
    let mut out = String::new();
    let mut current: Option<&str> = None;
    for cell in &report.cells {
        if current != Some(cell.algorithm.as_str()) {
            if current.is_some() {
                out.push('\n');
            }
            let _ = writeln!(out, "# {}", cell.algorithm);
            current = Some(&cell.algorithm);
        }
        let fraction = cell.success_fraction.map_or("NaN".to_string(), |f| format_significant(f, 12));
        let _ = writeln!(
            out,
            "{} {} {}",
            cell.memory_states,
            fraction,
            format_significant(cell.mean_evaluations, 12)
        );
    }
    Ok(out)
}
