//! Seeded synthetic stand-in for the German credit data. It follows the
//! builtin `german` schema (same names, kinds and category tokens) and plants
//! a moderate label dependence on the sensitive columns `statussex`,
//! `telephone` and `foreignworker`, so fairness assessment has something to
//! find without the real file. `telephone` is drawn conditionally on `job`,
//! which carries part of the same signal.

use rand::Rng;

use super::{builtin_schema, FeatureKind, TabularDataset};
use crate::rng::rng_from_seed;

struct Column {
    tokens: &'static [&'static str],
    weights: &'static [f64],
    effect: &'static [f64],
}

fn column(name: &str) -> Option<Column> {
    let c = match name {
        "existingchecking" => Column {
            tokens: &["A11", "A12", "A13", "A14"],
            weights: &[0.27, 0.27, 0.06, 0.40],
            effect: &[-0.8, -0.3, 0.3, 1.0],
        },
        "credithistory" => Column {
            tokens: &["A30", "A31", "A32", "A33", "A34"],
            weights: &[0.04, 0.05, 0.53, 0.09, 0.29],
            effect: &[-1.0, -0.7, 0.0, 0.2, 0.8],
        },
        "purpose" => Column {
            tokens: &["A40", "A41", "A410", "A42", "A43", "A44", "A45", "A46", "A48", "A49"],
            weights: &[0.23, 0.10, 0.01, 0.18, 0.28, 0.01, 0.02, 0.05, 0.01, 0.11],
            effect: &[-0.2, 0.3, 0.0, 0.0, 0.1, 0.0, 0.0, -0.2, 0.0, 0.0],
        },
        "savings" => Column {
            tokens: &["A61", "A62", "A63", "A64", "A65"],
            weights: &[0.60, 0.10, 0.06, 0.05, 0.19],
            effect: &[-0.3, -0.1, 0.1, 0.4, 0.4],
        },
        "employmentsince" => Column {
            tokens: &["A71", "A72", "A73", "A74", "A75"],
            weights: &[0.06, 0.17, 0.34, 0.17, 0.26],
            effect: &[-0.2, -0.2, 0.0, 0.2, 0.2],
        },
        "statussex" => Column {
            tokens: &["A91", "A92", "A93", "A94"],
            weights: &[0.05, 0.31, 0.55, 0.09],
            effect: &[-0.5, -0.5, 0.5, 0.1],
        },
        "otherdebtors" => Column {
            tokens: &["A101", "A102", "A103"],
            weights: &[0.91, 0.04, 0.05],
            effect: &[0.0, -0.1, 0.2],
        },
        "property" => Column {
            tokens: &["A121", "A122", "A123", "A124"],
            weights: &[0.28, 0.23, 0.33, 0.16],
            effect: &[0.3, 0.0, 0.0, -0.3],
        },
        "otherinstallmentplans" => Column {
            tokens: &["A141", "A142", "A143"],
            weights: &[0.14, 0.05, 0.81],
            effect: &[-0.2, -0.1, 0.1],
        },
        "housing" => Column {
            tokens: &["A151", "A152", "A153"],
            weights: &[0.18, 0.71, 0.11],
            effect: &[-0.2, 0.1, -0.1],
        },
        "job" => Column {
            tokens: &["A171", "A172", "A173", "A174"],
            weights: &[0.02, 0.20, 0.63, 0.15],
            effect: &[-0.3, -0.2, 0.0, 0.4],
        },
        "telephone" => Column {
            tokens: &["A191", "A192"],
            weights: &[0.60, 0.40],
            effect: &[-0.4, 0.4],
        },
        "foreignworker" => Column {
            tokens: &["A201", "A202"],
            weights: &[0.96, 0.04],
            effect: &[0.0, 0.3],
        },
        _ => return None,
    };
    Some(c)
}

fn pick(rng: &mut impl Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// `n` rows drawn with `seed`; label 1 ("good credit") with probability
/// sigmoid of an additive score.
pub fn german_surrogate(n: usize, seed: u64) -> TabularDataset {
    let schema = builtin_schema("german").expect("builtin german schema");
    let mut rng = rng_from_seed(seed);
    let mut categories: Vec<Vec<String>> = Vec::with_capacity(schema.len());
    // code of token position t in the column's sorted list
    let mut sorted_code: Vec<Vec<usize>> = Vec::with_capacity(schema.len());
    for spec in &schema.features {
        if let Some(c) = column(&spec.name) {
            let mut sorted: Vec<String> = c.tokens.iter().map(|t| t.to_string()).collect();
            sorted.sort();
            sorted_code.push(
                c.tokens
                    .iter()
                    .map(|t| sorted.iter().position(|s| s == t).unwrap())
                    .collect(),
            );
            categories.push(sorted);
        } else {
            categories.push(Vec::new());
            sorted_code.push(Vec::new());
        }
    }

    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = Vec::with_capacity(schema.len());
        let mut score = 0.35;
        let mut job = 0;
        for (j, spec) in schema.features.iter().enumerate() {
            match spec.kind {
                FeatureKind::Categorical => {
                    let c = column(&spec.name).unwrap();
                    let t = match spec.name.as_str() {
                        // phone ownership rises with job skill level
                        "telephone" => pick(&mut rng, &[[0.9, 0.1], [0.8, 0.2], [0.6, 0.4], [0.2, 0.8]][job]),
                        _ => pick(&mut rng, c.weights),
                    };
                    if spec.name == "job" {
                        job = t;
                    }
                    score += c.effect[t];
                    row.push(sorted_code[j][t] as f64);
                }
                FeatureKind::Numeric => {
                    let v = match spec.name.as_str() {
                        "duration" => (4.0 + 68.0 * rng.random::<f64>().powi(2)).round(),
                        "creditamount" => (250.0 + 18000.0 * rng.random::<f64>().powi(3)).round(),
                        "installmentrate" | "residencesince" => rng.random_range(1..=4) as f64,
                        "age" => (19.0 + 56.0 * rng.random::<f64>().powf(1.5)).round(),
                        "existingcredits" => (1 + pick(&mut rng, &[0.63, 0.33, 0.03, 0.01])) as f64,
                        "peopleliable" => (1 + pick(&mut rng, &[0.85, 0.15])) as f64,
                        _ => unreachable!("numeric german column {}", spec.name),
                    };
                    score += match spec.name.as_str() {
                        "duration" => -0.03 * (v - 20.0),
                        "creditamount" => -0.00005 * (v - 3000.0),
                        "installmentrate" => -0.15 * (v - 2.5),
                        "age" => 0.01 * (v - 35.0),
                        _ => 0.0,
                    };
                    row.push(v);
                }
            }
        }
        let p = 1.0 / (1.0 + (-score).exp());
        labels.push(usize::from(rng.random::<f64>() < p));
        rows.push(row);
    }
    TabularDataset::from_parts(schema, categories, rows, labels).expect("generator produces valid rows")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let a = german_surrogate(1000, 1);
        assert_eq!(a.n_instances(), 1000);
        assert_eq!(a.n_features(), 20);
        assert_eq!(a, german_surrogate(1000, 1));
        let [neg, pos] = a.class_counts();
        assert!(neg > 150 && pos > 150, "{neg}/{pos}");
    }
}
