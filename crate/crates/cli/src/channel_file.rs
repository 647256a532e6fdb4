use std::path::Path;

use serde::Deserialize;
use typebound::{Channel, ChannelError};

use crate::CliError;

/// Rows whose sum is off by less than this are rescaled; larger deviations
/// are rejected.
const RENORMALIZE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub input_alphabet: Vec<String>,
    pub output_alphabet: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub cost: Option<Vec<f64>>,
}

impl ChannelFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("malformed channel file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_channel(&self) -> Result<Channel, CliError> {
        let (a, b) = (self.input_alphabet.len(), self.output_alphabet.len());
        if a == 0 || b == 0 {
            return Err(ChannelError::EmptyAlphabet.into());
        }
        if self.matrix.len() != a {
            return Err(CliError::Input(format!(
                "matrix has {} rows but the input alphabet has {a} symbols",
                self.matrix.len()
            )));
        }
        let mut matrix = self.matrix.clone();
        for (x, row) in matrix.iter_mut().enumerate() {
            if row.len() != b {
                return Err(CliError::Input(format!(
                    "row {x} has {} entries but the output alphabet has {b} symbols",
                    row.len()
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() < RENORMALIZE_TOL && row.iter().all(|&v| v >= 0.0) {
                row.iter_mut().for_each(|v| *v /= sum);
            }
        }
        let cost = self.cost.clone().unwrap_or_else(|| vec![0.0; a]);
        Ok(Channel::new(matrix, cost)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_renormalizes() {
        let f = ChannelFile::parse(
            r#"
input_alphabet = ["0", "1"]
output_alphabet = ["0", "1"]
matrix = [[0.9, 0.1000000000001], [0.1, 0.9]]
"#,
        )
        .unwrap();
        let w = f.to_channel().unwrap();
        assert!((w.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w.cost(), &[0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_rows_and_shapes() {
        let bad_sum = ChannelFile::parse(
            "input_alphabet=[\"a\"]\noutput_alphabet=[\"x\",\"y\"]\nmatrix=[[0.5,0.6]]\n",
        )
        .unwrap();
        assert!(bad_sum.to_channel().unwrap_err().to_string().contains("row 0 sums to"));
        let bad_shape = ChannelFile::parse(
            "input_alphabet=[\"a\",\"b\"]\noutput_alphabet=[\"x\"]\nmatrix=[[1.0]]\n",
        )
        .unwrap();
        assert!(bad_shape.to_channel().is_err());
        assert!(ChannelFile::parse("matrix = 3").is_err());
    }

    #[test]
    fn reads_cost() {
        let f = ChannelFile::parse(
            "input_alphabet=[\"a\",\"b\"]\noutput_alphabet=[\"x\"]\nmatrix=[[1.0],[1.0]]\ncost=[0.0, 2.5]\n",
        )
        .unwrap();
        assert_eq!(f.to_channel().unwrap().cost(), &[0.0, 2.5]);
    }
}
