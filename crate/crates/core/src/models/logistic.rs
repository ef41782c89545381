//! L2-regularized logistic regression fitted with L-BFGS, plus the column
//! encoder that turns mixed-type tabular rows into a numeric design.

use serde::{Deserialize, Serialize};

use super::matrix::{DesignMatrix, Row};
use crate::dataset::{FeatureKind, TabularDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnEncoding {
    /// Standardized with the training mean and standard deviation.
    Numeric { mean: f64, scale: f64 },
    /// One indicator column per category code.
    Categorical { levels: usize },
}

/// Maps tabular rows to sparse encoded rows. Every source feature owns a
/// contiguous block of encoded columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    columns: Vec<ColumnEncoding>,
    offsets: Vec<usize>,
    width: usize,
}

impl Encoder {
    pub fn fit(ds: &TabularDataset) -> Self {
        let n = ds.n_instances().max(1) as f64;
        let mut columns = Vec::with_capacity(ds.n_features());
        for (j, spec) in ds.schema().features.iter().enumerate() {
            columns.push(match spec.kind {
                FeatureKind::Numeric => {
                    let mean = ds.rows().iter().map(|r| r[j]).sum::<f64>() / n;
                    let var = ds.rows().iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
                    let sd = var.sqrt();
                    ColumnEncoding::Numeric {
                        mean,
                        scale: if sd > 1e-12 { sd } else { 1.0 },
                    }
                }
                FeatureKind::Categorical => ColumnEncoding::Categorical {
                    levels: ds.categories(j).len(),
                },
            });
        }
        Self::from_columns(columns)
    }

    pub fn from_columns(columns: Vec<ColumnEncoding>) -> Self {
        let mut offsets = Vec::with_capacity(columns.len());
        let mut width = 0;
        for c in &columns {
            offsets.push(width);
            width += match c {
                ColumnEncoding::Numeric { .. } => 1,
                ColumnEncoding::Categorical { levels } => *levels,
            };
        }
        Encoder {
            columns,
            offsets,
            width,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_sources(&self) -> usize {
        self.columns.len()
    }

    /// Source feature of an encoded column.
    pub fn source_of(&self, column: usize) -> usize {
        self.offsets.partition_point(|&o| o <= column) - 1
    }

    /// Unknown category codes encode to an all-zero block.
    pub fn encode(&self, row: Row<'_>) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(self.columns.len());
        for (j, c) in self.columns.iter().enumerate() {
            let v = row.get(j);
            match c {
                ColumnEncoding::Numeric { mean, scale } => {
                    let z = (v - mean) / scale;
                    if z != 0.0 {
                        out.push((self.offsets[j], z));
                    }
                }
                ColumnEncoding::Categorical { levels } => {
                    if v >= 0.0 && (v as usize) < *levels {
                        out.push((self.offsets[j] + v as usize, 1.0));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    /// Strength of the `0.5 * l2 * |w|^2` penalty; the bias is not penalized.
    pub l2: f64,
    pub max_iter: usize,
    pub tolerance: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            l2: 1.0,
            max_iter: 1000,
            tolerance: 1e-6,
        }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticRegression {
    pub fn fit(x: &DesignMatrix, y: &[usize], params: LogisticParams) -> Self {
        let d = x.n_cols();
        let objective = |theta: &[f64], grad: &mut [f64]| -> f64 {
            let (w, b) = theta.split_at(d);
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut loss = 0.0;
            for (i, &label) in y.iter().enumerate() {
                let (cols, vals) = x.row_entries(i);
                let z = b[0] + cols.iter().zip(vals).map(|(&c, &v)| w[c] * v).sum::<f64>();
                loss += softplus(z) - label as f64 * z;
                let r = sigmoid(z) - label as f64;
                for (&c, &v) in cols.iter().zip(vals) {
                    grad[c] += r * v;
                }
                grad[d] += r;
            }
            for j in 0..d {
                loss += 0.5 * params.l2 * w[j] * w[j];
                grad[j] += params.l2 * w[j];
            }
            loss
        };
        let theta = lbfgs(objective, vec![0.0; d + 1], params.max_iter, params.tolerance);
        LogisticRegression {
            weights: theta[..d].to_vec(),
            bias: theta[d],
        }
    }

    pub fn decision(&self, x: Row<'_>) -> f64 {
        let mut z = self.bias;
        x.for_each_nonzero(|j, v| z += self.weights[j] * v);
        z
    }

    pub fn decision_entries(&self, entries: &[(usize, f64)]) -> f64 {
        self.bias + entries.iter().map(|&(j, v)| self.weights[j] * v).sum::<f64>()
    }
}

/// Limited-memory BFGS with a backtracking Armijo line search. Stops when
/// the gradient norm drops to `tolerance`, after `max_iter` iterations, or
/// when the line search can no longer decrease the objective.
pub(crate) fn lbfgs(
    f: impl Fn(&[f64], &mut [f64]) -> f64,
    mut x: Vec<f64>,
    max_iter: usize,
    tolerance: f64,
) -> Vec<f64> {
    const MEMORY: usize = 10;
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();

    for _ in 0..max_iter {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm <= tolerance {
            break;
        }
        // two-loop recursion
        let mut dir: Vec<f64> = g.iter().map(|v| -v).collect();
        let m = s_hist.len();
        let mut alphas = vec![0.0; m];
        for k in (0..m).rev() {
            let rho = 1.0 / dot(&y_hist[k], &s_hist[k]);
            alphas[k] = rho * dot(&s_hist[k], &dir);
            for (d, yv) in dir.iter_mut().zip(&y_hist[k]) {
                *d -= alphas[k] * yv;
            }
        }
        if m > 0 {
            let gamma = dot(&s_hist[m - 1], &y_hist[m - 1]) / dot(&y_hist[m - 1], &y_hist[m - 1]);
            dir.iter_mut().for_each(|d| *d *= gamma);
        } else {
            dir.iter_mut().for_each(|d| *d /= gnorm.max(1.0));
        }
        for k in 0..m {
            let rho = 1.0 / dot(&y_hist[k], &s_hist[k]);
            let beta = rho * dot(&y_hist[k], &dir);
            for (d, sv) in dir.iter_mut().zip(&s_hist[k]) {
                *d += (alphas[k] - beta) * sv;
            }
        }
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            dir = g.iter().map(|v| -v / gnorm.max(1.0)).collect();
            slope = dot(&g, &dir);
        }

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] + t * dir[i];
            }
            let f_new = f(&x_new, &mut g_new);
            if f_new <= fx + 1e-4 * t * slope {
                let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
                let yv: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
                if dot(&s, &yv) > 1e-12 * dot(&yv, &yv).max(f64::MIN_POSITIVE) {
                    if s_hist.len() == MEMORY {
                        s_hist.remove(0);
                        y_hist.remove(0);
                    }
                    s_hist.push(s);
                    y_hist.push(yv);
                }
                accepted = f_new < fx || dot(&g_new, &g_new) < gnorm * gnorm;
                std::mem::swap(&mut x, &mut x_new);
                std::mem::swap(&mut g, &mut g_new);
                fx = f_new;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lbfgs_minimizes_quadratic() {
        // f(x) = (x0 - 3)^2 + 10 (x1 + 1)^2
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 3.0);
            g[1] = 20.0 * (x[1] + 1.0);
            (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2)
        };
        let x = lbfgs(f, vec![0.0, 0.0], 100, 1e-10);
        assert!((x[0] - 3.0).abs() < 1e-8 && (x[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn gradient_vanishes_at_solution() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0], vec![3.0, 0.5], vec![0.5, 0.5]];
        let y = vec![0, 0, 1, 1, 0];
        let x = DesignMatrix::from_dense(&rows, 2);
        let m = LogisticRegression::fit(&x, &y, LogisticParams::default());
        let mut grad = [m.weights[0], m.weights[1], 0.0];
        for (r, &label) in rows.iter().zip(&y) {
            let p = sigmoid(m.decision(Row::Dense(r)));
            grad[0] += (p - label as f64) * r[0];
            grad[1] += (p - label as f64) * r[1];
            grad[2] += p - label as f64;
        }
        assert!(grad.iter().map(|g| g * g).sum::<f64>().sqrt() < 1e-6);
    }

    #[test]
    fn encoder_blocks() {
        let enc = Encoder::from_columns(vec![
            ColumnEncoding::Numeric { mean: 1.0, scale: 2.0 },
            ColumnEncoding::Categorical { levels: 3 },
            ColumnEncoding::Numeric { mean: 0.0, scale: 1.0 },
        ]);
        assert_eq!(enc.width(), 5);
        assert_eq!(enc.encode(Row::Dense(&[3.0, 2.0, -1.0])), vec![(0, 1.0), (3, 1.0), (4, -1.0)]);
        assert_eq!((0..5).map(|c| enc.source_of(c)).collect::<Vec<_>>(), vec![0, 1, 1, 1, 2]);
        assert_eq!(enc.encode(Row::Dense(&[1.0, 7.0, 0.0])), vec![]);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }
}
