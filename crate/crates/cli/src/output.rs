use std::io::Write;

use serde::Serialize;

use crate::config::Format;
use crate::CliError;

pub const BOUNDS_HEADER: [&str; 14] = [
    "scenario",
    "param1",
    "param2",
    "tau",
    "theta",
    "fs_length",
    "avg_dH",
    "ml_bound",
    "mt_bound",
    "bd_bound",
    "ml_ratio",
    "mt_ratio",
    "bd_ratio",
    "closure_defect",
];

pub const SIMULATE_HEADER: [&str; 8] = [
    "scenario",
    "param1",
    "param2",
    "tau",
    "theta",
    "fs_length",
    "avg_dH",
    "closure_defect",
];

/// Trajectory summary written by `simulate`.
#[derive(Debug, Clone, Serialize)]
pub struct SimulateRecord {
    pub scenario: String,
    pub param1: f64,
    pub param2: f64,
    pub tau: f64,
    pub theta: f64,
    pub fs_length: f64,
    #[serde(rename = "avg_dH")]
    pub avg_dh: f64,
    pub closure_defect: f64,
}

/// Bound report written by `bounds`. For time-dependent schedules the ML
/// columns carry the time-averaged expression, flagged by `not_a_bound`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsRecord {
    pub scenario: String,
    pub param1: f64,
    pub param2: f64,
    pub tau: f64,
    pub theta: f64,
    pub fs_length: f64,
    #[serde(rename = "avg_dH")]
    pub avg_dh: f64,
    pub ml_bound: f64,
    pub mt_bound: f64,
    pub bd_bound: f64,
    pub ml_ratio: f64,
    pub mt_ratio: f64,
    pub bd_ratio: f64,
    pub closure_defect: f64,
    pub ml_time_averaged: Option<f64>,
    pub not_a_bound: bool,
}

/// C-style `%.12g`.
pub fn fmt_g12(x: f64) -> String {
    const P: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds to 12 significant digits for JSON output; non-finite values have
/// no JSON representation and become `null`.
fn round12(x: f64) -> Option<f64> {
    x.is_finite().then(|| format!("{x:.11e}").parse().expect("round trip"))
}

fn json_number(x: f64) -> serde_json::Value {
    round12(x).map_or(serde_json::Value::Null, serde_json::Value::from)
}

fn round_json(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => json_number(n.as_f64().expect("f64")),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn csv_fields_simulate(r: &SimulateRecord) -> Vec<String> {
    let mut f = vec![r.scenario.clone()];
    f.extend(
        [
            r.param1,
            r.param2,
            r.tau,
            r.theta,
            r.fs_length,
            r.avg_dh,
            r.closure_defect,
        ]
        .into_iter()
        .map(fmt_g12),
    );
    f
}

fn csv_fields_bounds(r: &BoundsRecord) -> Vec<String> {
    let mut f = vec![r.scenario.clone()];
    f.extend(
        [
            r.param1,
            r.param2,
            r.tau,
            r.theta,
            r.fs_length,
            r.avg_dh,
            r.ml_bound,
            r.mt_bound,
            r.bd_bound,
            r.ml_ratio,
            r.mt_ratio,
            r.bd_ratio,
            r.closure_defect,
        ]
        .into_iter()
        .map(fmt_g12),
    );
    f
}

fn write_csv<W: Write>(sink: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

fn write_json<W: Write, T: Serialize>(mut sink: W, rows: &[T]) -> Result<(), CliError> {
    let value = round_json(serde_json::to_value(rows).map_err(|e| CliError::Io(e.to_string()))?);
    serde_json::to_writer_pretty(&mut sink, &value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(sink).map_err(|e| CliError::Io(e.to_string()))
}

pub fn write_simulate<W: Write>(sink: W, format: Format, rows: &[SimulateRecord]) -> Result<(), CliError> {
    match format {
        Format::Csv => write_csv(sink, &SIMULATE_HEADER, rows.iter().map(csv_fields_simulate)),
        Format::Json => write_json(sink, rows),
    }
}

pub fn write_bounds<W: Write>(sink: W, format: Format, rows: &[BoundsRecord]) -> Result<(), CliError> {
    match format {
        Format::Csv => write_csv(sink, &BOUNDS_HEADER, rows.iter().map(csv_fields_bounds)),
        Format::Json => write_json(sink, rows),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::approx_constant)]
    fn g12_matches_printf() {
        // Reference strings from C printf("%.12g").
        let cases = [
            (std::f64::consts::PI, "3.14159265359"),
            (1.0, "1"),
            (0.5, "0.5"),
            (1e-5, "1e-05"),
            (1.234e-4, "0.0001234"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (-2.5e20, "-2.5e+20"),
            (0.0, "0"),
            (1.8137993642342178, "1.81379936423"),
            (999999999999.5, "1e+12"),
        ];
        for (x, s) in cases {
            assert_eq!(fmt_g12(x), s, "{x}");
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn json_rounds_to_twelve_digits() {
        assert_eq!(round12(std::f64::consts::PI), Some(3.14159265359));
        assert_eq!(round12(f64::NAN), None);
        let v = round_json(serde_json::json!({"a": [1.0 / 3.0], "b": 2}));
        assert_eq!(v.to_string(), r#"{"a":[0.333333333333],"b":2}"#);
    }
}
