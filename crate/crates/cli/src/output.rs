use std::io::Write;

use serde::{Deserialize, Serialize};
use typebound::BoundResult;

use crate::CliError;

pub const CSV_HEADER: [&str; 10] = [
    "n",
    "R",
    "Gamma",
    "variant",
    "value",
    "raw",
    "gamma_star",
    "type_star",
    "penalty_log2",
    "wall_time_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: u32,
    #[serde(rename = "R")]
    pub rate: f64,
    /// `None` is an unbounded budget.
    #[serde(rename = "Gamma")]
    pub budget: Option<f64>,
    pub variant: String,
    pub value: f64,
    pub raw: f64,
    pub gamma_star: f64,
    pub type_star: String,
    pub penalty_log2: f64,
    pub wall_time_ms: f64,
}

impl ResultRow {
    pub fn new(r: &BoundResult, wall_time_ms: f64) -> Self {
        Self {
            n: r.n,
            rate: r.rate,
            budget: r.budget,
            variant: r.variant.name().to_string(),
            value: r.value,
            raw: r.raw,
            gamma_star: r.gamma_star,
            type_star: r.type_star.to_string(),
            penalty_log2: r.penalty_log2,
            wall_time_ms,
        }
    }

    fn csv_record(&self) -> [String; 10] {
        [
            self.n.to_string(),
            self.rate.to_string(),
            self.budget.map_or_else(|| "inf".to_string(), |g| g.to_string()),
            self.variant.clone(),
            self.value.to_string(),
            self.raw.to_string(),
            self.gamma_star.to_string(),
            self.type_star.clone(),
            self.penalty_log2.to_string(),
            self.wall_time_ms.to_string(),
        ]
    }

    /// Inverse of the CSV encoding.
    #[cfg(test)]
    pub fn from_csv_record(rec: &csv::StringRecord) -> Result<Self, String> {
        let field = |i: usize| rec.get(i).ok_or_else(|| format!("missing column {}", CSV_HEADER[i]));
        let num = |i: usize| -> Result<f64, String> {
            field(i)?.parse::<f64>().map_err(|e| format!("{}: {e}", CSV_HEADER[i]))
        };
        let budget = num(2)?;
        Ok(Self {
            n: field(0)?.parse().map_err(|e| format!("n: {e}"))?,
            rate: num(1)?,
            budget: budget.is_finite().then_some(budget),
            variant: field(3)?.to_string(),
            value: num(4)?,
            raw: num(5)?,
            gamma_star: num(6)?,
            type_star: field(7)?.to_string(),
            penalty_log2: num(8)?,
            wall_time_ms: num(9)?,
        })
    }
}

pub struct RowWriter<W: Write> {
    format: Format,
    csv: Option<csv::Writer<W>>,
    json: Option<W>,
}

impl<W: Write> RowWriter<W> {
    pub fn new(out: W, format: Format) -> Result<Self, CliError> {
        Ok(match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(CSV_HEADER).map_err(io_error)?;
                Self {
                    format,
                    csv: Some(w),
                    json: None,
                }
            }
            Format::Jsonl => Self {
                format,
                csv: None,
                json: Some(out),
            },
        })
    }

    pub fn write(&mut self, row: &ResultRow) -> Result<(), CliError> {
        match self.format {
            Format::Csv => {
                let w = self.csv.as_mut().expect("csv writer");
                w.write_record(row.csv_record()).map_err(io_error)?;
                w.flush().map_err(|e| CliError::Internal(e.to_string()))
            }
            Format::Jsonl => write_json_line(self.json.as_mut().expect("json writer"), row),
        }
    }
}

pub fn write_json_line<T: Serialize>(out: &mut impl Write, value: &T) -> Result<(), CliError> {
    let line = serde_json::to_string(value).map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(out, "{line}").map_err(|e| CliError::Internal(e.to_string()))?;
    out.flush().map_err(|e| CliError::Internal(e.to_string()))
}

fn io_error(e: csv::Error) -> CliError {
    CliError::Internal(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(budget: Option<f64>) -> ResultRow {
        ResultRow {
            n: 100,
            rate: 1.1,
            budget,
            variant: "converse_underline".into(),
            value: 0.9013671875,
            raw: 0.9013671875,
            gamma_star: 0.10000000000000009,
            type_star: "50,50".into(),
            penalty_log2: -3.3604,
            wall_time_ms: 0.25,
        }
    }

    #[test]
    fn csv_round_trip() {
        for b in [None, Some(0.2)] {
            let mut buf = Vec::new();
            {
                let mut w = RowWriter::new(&mut buf, Format::Csv).unwrap();
                w.write(&row(b)).unwrap();
            }
            let text = String::from_utf8(buf).unwrap();
            assert!(text.starts_with("n,R,Gamma,variant,value,raw,gamma_star,type_star,penalty_log2,wall_time_ms\n"));
            let mut rdr = csv::Reader::from_reader(text.as_bytes());
            let rec = rdr.records().next().unwrap().unwrap();
            assert_eq!(ResultRow::from_csv_record(&rec).unwrap(), row(b));
        }
    }

    #[test]
    fn json_keys() {
        let mut buf = Vec::new();
        write_json_line(&mut buf, &row(None)).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        for k in CSV_HEADER {
            assert!(keys.contains(&k), "{k}");
        }
        assert!(v["Gamma"].is_null());
    }
}
