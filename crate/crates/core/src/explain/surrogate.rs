//! Weighted least-squares fitting of linear surrogates.

use crate::error::{Error, Result};

/// Ridge term added to the normal equations when they are not positive definite.
pub const RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Weighted coefficient of determination on the fitted rows.
    pub fidelity: f64,
    /// Set when the ridge fallback was needed.
    pub degraded: bool,
}

/// In-place Cholesky solve of the `n x n` row-major system `a x = b`.
/// Returns `None` when a pivot is not safely positive.
fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 1e-12 * scale {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i * n + i];
    }
    Some(x)
}

/// Solves a symmetric positive semi-definite system, adding a growing
/// ridge to the diagonal when plain Cholesky fails. The flag reports
/// whether the ridge was used.
pub(crate) fn solve_normal(a: &[f64], b: &[f64], n: usize) -> (Vec<f64>, bool) {
    if n == 0 {
        return (Vec::new(), false);
    }
    if let Some(x) = cholesky_solve(a, b, n) {
        return (x, false);
    }
    let mut ridge = RIDGE;
    loop {
        let mut m = a.to_vec();
        for i in 0..n {
            m[i * n + i] += ridge;
        }
        if let Some(x) = cholesky_solve(&m, b, n) {
            return (x, true);
        }
        ridge *= 10.0;
    }
}

/// Weighted sufficient statistics of a centred design.
struct Centred {
    d: usize,
    gram: Vec<f64>,
    cross: Vec<f64>,
    x_mean: Vec<f64>,
    y_mean: f64,
}

impl Centred {
    fn new(design: &[Vec<f64>], targets: &[f64], weights: &[f64], d: usize) -> Self {
        let sw: f64 = weights.iter().sum();
        let mut x_mean = vec![0.0; d];
        let mut y_mean = 0.0;
        for ((row, &y), &w) in design.iter().zip(targets).zip(weights) {
            for j in 0..d {
                x_mean[j] += w * row[j];
            }
            y_mean += w * y;
        }
        x_mean.iter_mut().for_each(|m| *m /= sw);
        y_mean /= sw;
        let mut gram = vec![0.0; d * d];
        let mut cross = vec![0.0; d];
        let mut xc = vec![0.0; d];
        for ((row, &y), &w) in design.iter().zip(targets).zip(weights) {
            if w == 0.0 {
                continue;
            }
            for j in 0..d {
                xc[j] = row[j] - x_mean[j];
            }
            let yc = y - y_mean;
            for a in 0..d {
                if xc[a] == 0.0 {
                    continue;
                }
                let wa = w * xc[a];
                cross[a] += wa * yc;
                for b in a..d {
                    gram[a * d + b] += wa * xc[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                gram[a * d + b] = gram[b * d + a];
            }
        }
        Centred {
            d,
            gram,
            cross,
            x_mean,
            y_mean,
        }
    }

    fn solve(&self, support: &[usize]) -> (Vec<f64>, bool) {
        let n = support.len();
        let mut a = vec![0.0; n * n];
        for (p, &i) in support.iter().enumerate() {
            for (q, &j) in support.iter().enumerate() {
                a[p * n + q] = self.gram[i * self.d + j];
            }
        }
        let b: Vec<f64> = support.iter().map(|&i| self.cross[i]).collect();
        solve_normal(&a, &b, n)
    }

    /// Weighted sum of squares explained by a fit on `support`.
    fn explained(&self, support: &[usize]) -> f64 {
        let (beta, _) = self.solve(support);
        support.iter().zip(&beta).map(|(&i, b)| self.cross[i] * b).sum()
    }
}

/// Fits `g(z) = intercept + weights . z` minimizing `sum_i weights_i (targets_i - g(z_i))^2`.
/// With `limit = Some(k)`, at most `k` coefficients are nonzero; the support
/// is grown greedily, each step adding the column that explains the most
/// remaining weighted variance. Columns that are constant over the
/// weighted rows get a zero coefficient.
pub fn fit_weighted_surrogate(
    design: &[Vec<f64>],
    targets: &[f64],
    weights: &[f64],
    limit: Option<usize>,
) -> Result<SurrogateFit> {
    let d = design.first().map_or(0, Vec::len);
    if design.len() != targets.len() || design.len() != weights.len() {
        return Err(Error::InvalidArgument("design, targets and weights differ in length".into()));
    }
    if design.len() < d + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} rows for {d} columns, got {}",
            d + 1,
            design.len()
        )));
    }
    if design.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidArgument("ragged design matrix".into()));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidArgument("weights must be non-negative and not all zero".into()));
    }
    if limit == Some(0) {
        return Err(Error::InvalidArgument("complexity limit must be at least 1".into()));
    }

    let stats = Centred::new(design, targets, weights, d);
    let diag_max = (0..d).map(|j| stats.gram[j * d + j]).fold(0.0, f64::max);
    let usable: Vec<usize> = (0..d)
        .filter(|&j| stats.gram[j * d + j] > 1e-14 * diag_max.max(f64::MIN_POSITIVE))
        .collect();

    let support = match limit {
        Some(k) if k < usable.len() => {
            let mut chosen: Vec<usize> = Vec::with_capacity(k);
            for _ in 0..k {
                let mut best: Option<(f64, usize)> = None;
                for &j in &usable {
                    if chosen.contains(&j) {
                        continue;
                    }
                    let mut trial = chosen.clone();
                    trial.push(j);
                    let gain = stats.explained(&trial);
                    if best.is_none_or(|(g, _)| gain > g + 1e-12 * g.abs().max(1e-300)) {
                        best = Some((gain, j));
                    }
                }
                chosen.push(best.expect("candidates remain").1);
            }
            chosen.sort_unstable();
            chosen
        }
        _ => usable,
    };

    let (beta, degraded) = stats.solve(&support);
    let mut coef = vec![0.0; d];
    for (&j, b) in support.iter().zip(&beta) {
        coef[j] = *b;
    }
    let intercept = stats.y_mean - coef.iter().zip(&stats.x_mean).map(|(c, m)| c * m).sum::<f64>();

    let mut rss = 0.0;
    let mut tss = 0.0;
    for ((row, &y), &w) in design.iter().zip(targets).zip(weights) {
        let fit = intercept + row.iter().zip(&coef).map(|(x, c)| x * c).sum::<f64>();
        rss += w * (y - fit).powi(2);
        tss += w * (y - stats.y_mean).powi(2);
    }
    Ok(SurrogateFit {
        weights: coef,
        intercept,
        fidelity: r_squared(rss, tss),
        degraded,
    })
}

pub(crate) fn r_squared(rss: f64, tss: f64) -> f64 {
    if tss > 1e-300 {
        1.0 - rss / tss
    } else if rss <= 1e-24 {
        1.0
    } else {
        0.0
    }
}
