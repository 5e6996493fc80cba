//! Result tables: CSV with a `#`-prefixed metadata line, or a JSON document.

use std::io::{self, Write};

use serde::Serialize;

use crate::harness::{RejectionReport, ReportRow};

pub const CSV_COLUMNS: [&str; 12] = [
    "experiment_id",
    "method",
    "alpha",
    "m",
    "r",
    "p",
    "n",
    "copula_family",
    "theta",
    "M",
    "rate",
    "se",
];

/// Provenance echoed at the top of every results file.
#[derive(Debug, Clone, Serialize)]
pub struct TableHeader {
    pub experiment: String,
    pub target: Option<String>,
    pub protocol: String,
}

impl TableHeader {
    fn comment(&self) -> String {
        let mut line = format!(
            "# experiment: {}; protocol: {}",
            self.experiment, self.protocol
        );
        if let Some(t) = &self.target {
            line.push_str(&format!("; target: {t}"));
        }
        line
    }
}

pub fn write_csv<W: Write>(
    mut out: W,
    header: &TableHeader,
    reports: &[RejectionReport],
) -> io::Result<()> {
    writeln!(out, "{}", header.comment())?;
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    writer.write_record(CSV_COLUMNS)?;
    for report in reports {
        for row in report.rows() {
            writer.serialize(row)?;
        }
    }
    writer.flush()
}

#[derive(Serialize)]
struct JsonTable<'a> {
    #[serde(flatten)]
    header: &'a TableHeader,
    rows: Vec<ReportRow<'a>>,
}

pub fn write_json<W: Write>(
    out: W,
    header: &TableHeader,
    reports: &[RejectionReport],
) -> io::Result<()> {
    let table = JsonTable {
        header,
        rows: reports.iter().flat_map(RejectionReport::rows).collect(),
    };
    serde_json::to_writer_pretty(out, &table)?;
    Ok(())
}

/// Formats `x` with `digits` significant digits, trimming trailing zeros
/// (the `%g` convention).
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let exponent = x.abs().log10().floor() as i32;
    if exponent < -5 || exponent >= digits as i32 {
        let s = format!("{:.*e}", digits - 1, x);
        let (mantissa, exp) = s.split_once('e').expect("scientific format");
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combiners::Method;
    use crate::copulas::CopulaFamily;
    use crate::harness::{Protocol, RejectionRate};

    fn report() -> RejectionReport {
        RejectionReport {
            experiment_id: "demo/m10-r30-theta3-n30".into(),
            protocol: Protocol::Type1,
            m: 10,
            r: 30,
            p: 0.5,
            n: 30,
            copula_family: CopulaFamily::GumbelHougaard,
            theta: Some(3.0),
            replications: 10_000,
            rates: vec![RejectionRate::new(Method::Fisher, 0.05, 2014, 10_000)],
        }
    }

    #[test]
    fn csv_layout() {
        let header = TableHeader {
            experiment: "demo".into(),
            target: Some("Gumbel type-1 table".into()),
            protocol: "type1".into(),
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &header, &[report()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "# experiment: demo; protocol: type1; target: Gumbel type-1 table"
        );
        assert_eq!(lines[1], CSV_COLUMNS.join(","));
        let se = (0.2014f64 * 0.7986 / 10_000.0).sqrt();
        assert_eq!(
            lines[2],
            format!(
                "demo/m10-r30-theta3-n30,Fisher,0.05,10,30,0.5,30,gumbel,3.0,10000,0.2014,{se}"
            )
        );
    }

    #[test]
    fn json_layout() {
        let header = TableHeader {
            experiment: "demo".into(),
            target: None,
            protocol: "type1".into(),
        };
        let mut buf = Vec::new();
        write_json(&mut buf, &header, &[report()]).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["experiment"], "demo");
        assert_eq!(v["rows"][0]["M"], 10_000);
        assert_eq!(v["rows"][0]["method"], "Fisher");
        assert_eq!(v["rows"][0]["theta"], 3.0);
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(0.5, 6), "0.5");
        assert_eq!(format_significant(0.488, 6), "0.488");
        assert_eq!(format_significant(0.596_573_590_279_972_7, 6), "0.596574");
        assert_eq!(format_significant(14.371_416_208, 6), "14.3714");
        assert_eq!(format_significant(0.022_113_175_5, 6), "0.0221132");
        assert_eq!(format_significant(1.234_567e-9, 6), "1.23457e-9");
        assert_eq!(format_significant(-3.2e14, 6), "-3.2e14");
        assert_eq!(format_significant(0.0, 6), "0");
    }
}
