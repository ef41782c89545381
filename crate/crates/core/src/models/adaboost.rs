use serde::{Deserialize, Serialize};

use super::logistic::sigmoid;
use super::matrix::{DesignMatrix, Row};
use super::tree::{DecisionTree, TreeParams};
use crate::rng::rng_from_seed;

/// Discrete AdaBoost (SAMME, two classes) over depth-1 trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    stumps: Vec<DecisionTree>,
    alphas: Vec<f64>,
}

fn vote(tree: &DecisionTree, x: Row<'_>) -> f64 {
    if tree.predict(x) > 0.5 {
        1.0
    } else {
        -1.0
    }
}

impl AdaBoost {
    /// Boosting stops early when a stump is perfect on the weighted sample
    /// or no better than chance.
    pub fn fit(x: &DesignMatrix, y: &[usize], rounds: usize, learning_rate: f64, seed: u64) -> Self {
        let n = x.n_rows();
        let mut w = vec![1.0 / n as f64; n];
        let mut rng = rng_from_seed(seed);
        let params = TreeParams {
            max_depth: Some(1),
            ..Default::default()
        };
        let (mut stumps, mut alphas) = (Vec::new(), Vec::new());
        for _ in 0..rounds {
            let stump = DecisionTree::fit(x, y, &w, params, &mut rng);
            let wrong: Vec<bool> = (0..n)
                .map(|i| (stump.predict_index(x, i) > 0.5) != (y[i] == 1))
                .collect();
            let total: f64 = w.iter().sum();
            let err = wrong.iter().zip(&w).filter(|p| *p.0).map(|p| p.1).sum::<f64>() / total;
            if err <= 0.0 {
                stumps.push(stump);
                alphas.push(1.0);
                break;
            }
            if err >= 0.5 {
                if stumps.is_empty() {
                    stumps.push(stump);
                    alphas.push(1.0);
                }
                break;
            }
            let alpha = learning_rate * ((1.0 - err) / err).ln();
            for i in 0..n {
                if wrong[i] {
                    w[i] *= alpha.exp();
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
            stumps.push(stump);
            alphas.push(alpha);
        }
        AdaBoost { stumps, alphas }
    }

    pub fn rounds(&self) -> usize {
        self.stumps.len()
    }

    /// Normalized weighted vote in [-1, 1] using the first `rounds` stumps.
    pub fn margin(&self, x: Row<'_>, rounds: usize) -> f64 {
        let r = rounds.min(self.stumps.len());
        let total: f64 = self.alphas[..r].iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        self.stumps[..r]
            .iter()
            .zip(&self.alphas)
            .map(|(s, a)| a * vote(s, x))
            .sum::<f64>()
            / total
    }

    /// Softmax over the class margins `(-m, m)`.
    pub fn p1(&self, x: Row<'_>) -> f64 {
        sigmoid(2.0 * self.margin(x, self.stumps.len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn staged(model: &AdaBoost, rows: &[Vec<f64>], y: &[usize]) -> (Vec<usize>, Vec<f64>) {
        (1..=model.rounds())
            .map(|r| {
                let unnormalized: f64 = model.alphas[..r].iter().sum();
                let mut errors = 0;
                let mut exp_loss = 0.0;
                for (row, &label) in rows.iter().zip(y) {
                    let m = model.margin(Row::Dense(row), r);
                    errors += usize::from((m > 0.0) != (label == 1));
                    let sign = if label == 1 { 1.0 } else { -1.0 };
                    exp_loss += (-0.5 * sign * m * unnormalized).exp();
                }
                (errors, exp_loss)
            })
            .unzip()
    }

    // The staged 0/1 error of discrete boosting can rise by a few points
    // between rounds (12, 13, 0 on an interval target). What decreases every
    // round is the exponential loss bounding it.
    #[test]
    fn training_error_bound_decreases_on_separable_data() {
        let interval: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64]).collect();
        let interval_y: Vec<usize> = (0..40).map(|i| usize::from((12..25).contains(&i))).collect();
        let grid: Vec<Vec<f64>> = (0..100).map(|i| vec![(i % 10) as f64, (i / 10) as f64]).collect();
        let box_y: Vec<usize> = grid
            .iter()
            .map(|r| usize::from((3.0..=6.0).contains(&r[0]) && (2.0..=7.0).contains(&r[1])))
            .collect();
        for (rows, y) in [(interval, interval_y), (grid, box_y)] {
            let d = rows[0].len();
            let model = AdaBoost::fit(&DesignMatrix::from_dense(&rows, d), &y, 50, 1.0, 0);
            assert!(model.rounds() > 1);
            let (errors, losses) = staged(&model, &rows, &y);
            assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
            for (e, l) in errors.iter().zip(&losses) {
                assert!(*e as f64 <= *l + 1e-9);
            }
            assert_eq!(*errors.last().unwrap(), 0);
        }
    }

    #[test]
    fn perfect_stump_stops_boosting() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let y = vec![0, 0, 0, 1, 1, 1];
        let m = AdaBoost::fit(&DesignMatrix::from_dense(&rows, 1), &y, 50, 1.0, 0);
        assert_eq!(m.rounds(), 1);
        assert!((m.p1(Row::Dense(&[5.0])) - sigmoid(2.0)).abs() < 1e-15);
    }
}
