//! CSV and JSON result files.

use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::config::OutputFormat;
use crate::harness::experiment::ResultRow;

pub const CSV_HEADER: [&str; 7] = [
    "algorithm",
    "snr_db",
    "mean_sum_rate",
    "rate_stderr",
    "mean_iterations",
    "mean_info_units",
    "trials",
];

/// Six significant digits in the style of C's `%g`.
pub fn format_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
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

fn non_empty(rows: &[ResultRow]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Invalid("no result rows to emit".into()));
    }
    Ok(())
}

pub fn to_csv(rows: &[ResultRow]) -> Result<String> {
    non_empty(rows)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.algorithm.clone(),
            format_g6(r.snr_db),
            format_g6(r.mean_sum_rate),
            format_g6(r.rate_stderr),
            format_g6(r.mean_iterations),
            format_g6(r.mean_info_units),
            r.trials.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Invalid(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn to_json(rows: &[ResultRow]) -> Result<String> {
    non_empty(rows)?;
    let mut s =
        serde_json::to_string_pretty(rows).map_err(|e| Error::Invalid(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn render(rows: &[ResultRow], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => to_csv(rows),
        OutputFormat::Json => to_json(rows),
    }
}

pub fn emit_results(rows: &[ResultRow], format: OutputFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render(rows, format)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ResultRow {
        ResultRow {
            algorithm: "sbf".into(),
            snr_db: 10.0,
            mean_sum_rate: 12.3456789,
            rate_stderr: 0.000012345678,
            mean_iterations: 17.5,
            mean_info_units: 1234567.0,
            trials: 50,
        }
    }

    #[test]
    fn g6_formatting() {
        assert_eq!(format_g6(0.0), "0");
        assert_eq!(format_g6(10.0), "10");
        assert_eq!(format_g6(-2.5), "-2.5");
        assert_eq!(format_g6(12.3456789), "12.3457");
        assert_eq!(format_g6(0.000012345678), "1.23457e-05");
        assert_eq!(format_g6(1234567.0), "1.23457e+06");
        assert_eq!(format_g6(999999.5), "1e+06");
        assert_eq!(format_g6(0.0001), "0.0001");
        assert_eq!(format_g6(123456.0), "123456");
    }

    #[test]
    fn csv_layout() {
        assert!(to_csv(&[]).is_err());
        let text = to_csv(&[row()]).unwrap();
        assert_eq!(
            text,
            "algorithm,snr_db,mean_sum_rate,rate_stderr,mean_iterations,mean_info_units,trials\n\
             sbf,10,12.3457,1.23457e-05,17.5,1.23457e+06,50\n"
        );
        assert!(!text.contains('\r'));
    }

    #[test]
    fn json_layout() {
        assert!(to_json(&[]).is_err());
        let v: serde_json::Value = serde_json::from_str(&to_json(&[row()]).unwrap()).unwrap();
        let obj = v.as_array().unwrap()[0].as_object().unwrap();
        let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        let mut expect = CSV_HEADER.to_vec();
        expect.sort();
        let mut got = keys.clone();
        got.sort();
        assert_eq!(got, expect);
        assert_eq!(obj["trials"], 50);
    }

    #[test]
    fn writes_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        emit_results(&[row()], OutputFormat::Csv, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
    }
}
