use crate::error::{Error, Result};
use crate::models::TabularModel;

/// Largest player count accepted by the exact enumeration.
pub const MAX_EXACT_PLAYERS: usize = 15;

/// Shapley values of a cooperative game given by `value(mask)`, where bit
/// `j` of `mask` marks player `j` present. Uses the permutation weights
/// `|S|! (n - |S| - 1)! / n!` over all coalitions.
pub fn shapley_values(n: usize, mut value: impl FnMut(u32) -> f64) -> Result<Vec<f64>> {
    if n > MAX_EXACT_PLAYERS {
        return Err(Error::InvalidArgument(format!(
            "exact Shapley enumeration limited to {MAX_EXACT_PLAYERS} players, got {n}"
        )));
    }
    let table: Vec<f64> = (0..1u32 << n).map(&mut value).collect();
    let mut fact = vec![1.0f64; n + 1];
    for i in 1..=n {
        fact[i] = fact[i - 1] * i as f64;
    }
    let mut phi = vec![0.0; n];
    for (j, slot) in phi.iter_mut().enumerate() {
        let bit = 1u32 << j;
        for mask in 0..1u32 << n {
            if mask & bit != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let weight = fact[s] * fact[n - s - 1] / fact[n];
            *slot += weight * (table[(mask | bit) as usize] - table[mask as usize]);
        }
    }
    Ok(phi)
}

/// Exact Shapley values of the class-1 probability at `x`. A coalition's
/// value is the mean model output over `background`, with absent features
/// taken from the background row.
pub fn exact_shapley(model: &dyn TabularModel, x: &[f64], background: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = x.len();
    if d != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            actual: d,
        });
    }
    if background.is_empty() {
        return Err(Error::InvalidArgument("empty background set".into()));
    }
    if d > MAX_EXACT_PLAYERS {
        return Err(Error::InvalidArgument(format!("{d} features exceed the exact enumeration limit")));
    }
    let mut failure = None;
    let phi = shapley_values(d, |mask| {
        let mut total = 0.0;
        for b in background {
            let z: Vec<f64> = (0..d).map(|j| if mask >> j & 1 == 1 { x[j] } else { b[j] }).collect();
            match model.predict_proba(&z) {
                Ok(p) => total += p[1],
                Err(e) => failure = Some(e),
            }
        }
        total / background.len() as f64
    });
    if let Some(e) = failure {
        return Err(e);
    }
    phi
}
