use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{FeatureKind, TabularDataset};

/// Pairwise Pearson coefficients over all features. Categorical features
/// enter through their integer codes (sorted-category order); those columns
/// are listed in `encoded_categorical`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub feature_names: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Zero-variance columns; their off-diagonal entries are 0 by convention.
    pub constant_features: Vec<String>,
    pub encoded_categorical: Vec<String>,
}

pub fn pearson_correlation(ds: &TabularDataset) -> CorrelationMatrix {
    let d = ds.n_features();
    let n = ds.n_instances();
    let names = ds.schema().names();

    let centred: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mean = if n == 0 {
                0.0
            } else {
                ds.rows().iter().map(|r| r[j]).sum::<f64>() / n as f64
            };
            ds.rows().iter().map(|r| r[j] - mean).collect()
        })
        .collect();
    let ss: Vec<f64> = centred.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let constant: Vec<bool> = ss.iter().map(|&s| s <= 0.0).collect();

    let mut values = vec![vec![0.0; d]; d];
    for a in 0..d {
        values[a][a] = 1.0;
        for b in a + 1..d {
            let r = if constant[a] || constant[b] {
                0.0
            } else {
                let cov: f64 = centred[a].iter().zip(&centred[b]).map(|(x, y)| x * y).sum();
                (cov / (ss[a] * ss[b]).sqrt()).clamp(-1.0, 1.0)
            };
            values[a][b] = r;
            values[b][a] = r;
        }
    }

    CorrelationMatrix {
        constant_features: (0..d).filter(|&j| constant[j]).map(|j| names[j].clone()).collect(),
        encoded_categorical: ds
            .schema()
            .features
            .iter()
            .filter(|f| f.kind == FeatureKind::Categorical)
            .map(|f| f.name.clone())
            .collect(),
        feature_names: names,
        values,
    }
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.feature_names.iter().position(|n| n == a)?;
        let j = self.feature_names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }

    /// Square CSV with a header row and a leading name column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature");
        for n in &self.feature_names {
            out.push(',');
            out.push_str(&csv_field(n));
        }
        out.push('\n');
        for (name, row) in self.feature_names.iter().zip(&self.values) {
            out.push_str(&csv_field(name));
            for v in row {
                let _ = write!(out, ",{v:.6}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
