//! CSV emission and parsing for diagnostic series and decay fits.

use std::fmt::Write as _;

use crate::diagnostics::{default_window, fit_decay_exponent, window, DecayFit, DiagnosticRecord, FitMode};
use crate::error::{Error, Result};

pub const SERIES_HEADER: &str =
    "time,mass,l1,l2,linf,weighted_l2_2,profile_err_l1,profile_err_l2,u_max,low_shell_frac";
pub const FIT_HEADER: &str = "field,quantity,exponent,intercept,r_squared,t_min,t_max,status";

/// Norm columns that receive a decay fit.
pub const FITTED: [&str; 6] = ["l1", "l2", "linf", "weighted_l2_2", "profile_err_l1", "profile_err_l2"];

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn opt(v: Option<f64>) -> String {
    num(v.unwrap_or(f64::NAN))
}

/// One CSV row; rows violating `‖f‖₂² ≤ ‖f‖₁‖f‖_∞` are refused.
pub fn series_row(r: &DiagnosticRecord) -> Result<String> {
    if !r.holder_consistent() {
        return Err(Error::Inconsistent(format!("record at t={} fails the Hölder check", r.time)));
    }
    Ok([
        num(r.time),
        num(r.mass),
        num(r.l1),
        num(r.l2),
        num(r.linf),
        num(r.weighted_l2_2),
        opt(r.profile_err_l1),
        opt(r.profile_err_l2),
        opt(r.u_max),
        opt(r.low_shell_frac),
    ]
    .join(","))
}

pub fn series_csv(records: &[DiagnosticRecord]) -> Result<String> {
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&series_row(r)?);
        out.push('\n');
    }
    Ok(out)
}

fn parse_value(s: &str, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Config { line, message: format!("cannot parse `{s}` as a number") })
}

fn present(v: f64) -> Option<f64> {
    (!v.is_nan()).then_some(v)
}

/// Parses a series written by [`series_csv`].
pub fn parse_series_csv(text: &str) -> Result<Vec<DiagnosticRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SERIES_HEADER => {}
        _ => return Err(Error::Config { line: 1, message: format!("expected header `{SERIES_HEADER}`") }),
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 10 {
            return Err(Error::Config { line: idx + 1, message: format!("expected 10 columns, found {}", cols.len()) });
        }
        let v: Vec<f64> = cols.iter().map(|c| parse_value(c, idx + 1)).collect::<Result<_>>()?;
        out.push(DiagnosticRecord {
            time: v[0],
            mass: v[1],
            l1: v[2],
            l2: v[3],
            linf: v[4],
            weighted_l2_2: v[5],
            profile_err_l1: present(v[6]),
            profile_err_l2: present(v[7]),
            u_max: present(v[8]),
            low_shell_frac: present(v[9]),
        });
    }
    Ok(out)
}

/// `(time, value)` pairs of one named column; `None` entries are dropped.
pub fn column(records: &[DiagnosticRecord], name: &str) -> Result<Vec<(f64, f64)>> {
    let get = |r: &DiagnosticRecord| -> Option<f64> {
        match name {
            "mass" => Some(r.mass),
            "l1" => Some(r.l1),
            "l2" => Some(r.l2),
            "linf" => Some(r.linf),
            "weighted_l2_2" => Some(r.weighted_l2_2),
            "profile_err_l1" => r.profile_err_l1,
            "profile_err_l2" => r.profile_err_l2,
            "u_max" => r.u_max,
            "low_shell_frac" => r.low_shell_frac,
            _ => None,
        }
    };
    if !SERIES_HEADER.split(',').any(|c| c == name) || name == "time" {
        return Err(Error::InvalidParameter(format!("unknown series column `{name}`")));
    }
    Ok(records.iter().filter_map(|r| get(r).map(|v| (r.time, v))).collect())
}

/// A fit row: the regression or the reason it was rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub field: String,
    pub quantity: String,
    pub fit: std::result::Result<DecayFit, String>,
}

/// Fits every tracked norm of `records` over `fit_window` (or the default window).
pub fn fit_series(
    field: &str,
    records: &[DiagnosticRecord],
    mode: FitMode,
    fit_window: Option<(f64, f64)>,
) -> Vec<FitRow> {
    FITTED
        .iter()
        .map(|&q| {
            let series = column(records, q).expect("known column");
            let fit = if series.is_empty() {
                Err("no data".to_string())
            } else {
                let sample = match fit_window {
                    Some((a, b)) => window(&series, a, b),
                    None => default_window(&series),
                };
                fit_decay_exponent(&sample, mode).map_err(|e| e.to_string())
            };
            FitRow { field: field.to_string(), quantity: q.to_string(), fit }
        })
        .collect()
}

pub fn fit_csv(rows: &[FitRow]) -> String {
    let mut out = String::from(FIT_HEADER);
    out.push('\n');
    for r in rows {
        let _ = match &r.fit {
            Ok(f) => writeln!(
                out,
                "{},{},{},{},{},{},{},ok",
                r.field,
                r.quantity,
                num(f.exponent),
                num(f.intercept),
                num(f.r_squared),
                num(f.window.0),
                num(f.window.1)
            ),
            Err(msg) => writeln!(
                out,
                "{},{},nan,nan,nan,nan,nan,{}",
                r.field,
                r.quantity,
                msg.replace([',', '\n'], ";")
            ),
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t: f64) -> DiagnosticRecord {
        DiagnosticRecord {
            time: t,
            mass: 2.0,
            l1: 2.0,
            l2: (1.0 + t).powf(-0.75),
            linf: 0.5,
            weighted_l2_2: 3.0 * (1.0 + t).powf(-0.5),
            profile_err_l1: None,
            profile_err_l2: Some(0.1 / (1.0 + t)),
            u_max: Some(1.0 / 3.0),
            low_shell_frac: None,
        }
    }

    #[test]
    fn rows_use_seventeen_digits_and_nan() {
        let row = series_row(&record(1.0)).unwrap();
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 10);
        assert_eq!(cols[8], "3.3333333333333331e-1");
        assert_eq!(cols[6], "nan");
        assert_eq!(cols[9], "nan");
        assert_eq!(cols[8].parse::<f64>().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn series_round_trip() {
        let recs: Vec<_> = (0..8).map(|i| record(i as f64 * 0.7)).collect();
        let text = series_csv(&recs).unwrap();
        assert!(text.starts_with(SERIES_HEADER));
        assert_eq!(parse_series_csv(&text).unwrap(), recs);
        assert!(parse_series_csv("time,mass\n").is_err());
        assert!(parse_series_csv(&format!("{SERIES_HEADER}\n1,2\n")).is_err());
    }

    #[test]
    fn holder_violation_is_refused() {
        let mut r = record(0.0);
        r.l2 = 10.0;
        assert!(series_row(&r).is_err());
    }

    #[test]
    fn fits_report_status() {
        let recs: Vec<_> = (0..30).map(|i| record(1.0 + i as f64)).collect();
        let rows = fit_series("z", &recs, FitMode::Log1pT, None);
        let l2 = rows.iter().find(|r| r.quantity == "l2").unwrap();
        assert!((l2.fit.as_ref().unwrap().exponent + 0.75).abs() < 1e-12);
        let pe1 = rows.iter().find(|r| r.quantity == "profile_err_l1").unwrap();
        assert_eq!(pe1.fit, Err("no data".to_string()));
        let text = fit_csv(&rows);
        assert!(text.starts_with(FIT_HEADER));
        assert!(text.lines().any(|l| l.starts_with("z,profile_err_l1,nan") && l.ends_with("no data")));

        let mut zero = record(1.0);
        zero.l2 = 0.0;
        zero.l1 = 0.0;
        let zeros: Vec<_> = (0..10).map(|i| DiagnosticRecord { time: 1.0 + i as f64, ..zero.clone() }).collect();
        let rows = fit_series("z", &zeros, FitMode::Log1pT, Some((0.0, 20.0)));
        let text = fit_csv(&rows);
        assert!(text.lines().any(|l| l.starts_with("z,l2,") && l.contains("nonpositive values")));
    }

    #[test]
    fn column_lookup() {
        let recs = vec![record(0.0), record(1.0)];
        assert_eq!(column(&recs, "u_max").unwrap().len(), 2);
        assert!(column(&recs, "low_shell_frac").unwrap().is_empty());
        assert!(column(&recs, "speed").is_err());
    }
}
