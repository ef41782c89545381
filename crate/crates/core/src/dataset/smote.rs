use rand::Rng;

use super::{FeatureKind, TabularDataset};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub const DEFAULT_SMOTE_NEIGHBORS: usize = 5;

/// Balances the two classes by synthesising minority rows.
///
/// Each synthetic row picks a minority parent `p` and one of its
/// `k_neighbors` nearest minority neighbours `q` (Euclidean distance on
/// z-scored numeric features), then sets every numeric cell to
/// `p + u * (q - p)` with a single `u ~ U[0, 1]`. Categorical cells are
/// copied from `p`. Original rows come first, synthetic rows after.
pub fn smote_oversample(ds: &TabularDataset, k_neighbors: usize, seed: u64) -> Result<TabularDataset> {
    if k_neighbors == 0 {
        return Err(Error::InvalidArgument("k_neighbors must be positive".into()));
    }
    let counts = ds.class_counts();
    if counts[0] == counts[1] {
        return Ok(ds.clone());
    }
    let minority_class = if counts[0] < counts[1] { 0 } else { 1 };
    let minority: Vec<usize> = (0..ds.n_instances())
        .filter(|&i| ds.labels()[i] == minority_class)
        .collect();
    if minority.len() < 2 {
        return Err(Error::Degenerate(format!(
            "minority class {minority_class} has {} instance(s); SMOTE needs at least 2 \
             (duplicate the instance instead)",
            minority.len()
        )));
    }
    let needed = counts[minority_class ^ 1] - counts[minority_class];

    let numeric: Vec<usize> = ds
        .schema()
        .features
        .iter()
        .enumerate()
        .filter(|(_, f)| f.kind == FeatureKind::Numeric)
        .map(|(j, _)| j)
        .collect();
    let scale: Vec<(f64, f64)> = numeric
        .iter()
        .map(|&j| {
            let n = ds.n_instances() as f64;
            let mean = ds.rows().iter().map(|r| r[j]).sum::<f64>() / n;
            let var = ds.rows().iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            (mean, if sd > 0.0 { sd } else { 1.0 })
        })
        .collect();
    let z: Vec<Vec<f64>> = minority
        .iter()
        .map(|&i| {
            numeric
                .iter()
                .zip(&scale)
                .map(|(&j, &(m, s))| (ds.row(i)[j] - m) / s)
                .collect()
        })
        .collect();

    let k = k_neighbors.min(minority.len() - 1);
    let neighbours: Vec<Vec<usize>> = (0..minority.len())
        .map(|a| {
            let mut others: Vec<(f64, usize)> = (0..minority.len())
                .filter(|&b| b != a)
                .map(|b| {
                    let d2: f64 = z[a].iter().zip(&z[b]).map(|(x, y)| (x - y).powi(2)).sum();
                    (d2, b)
                })
                .collect();
            others.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            others.into_iter().take(k).map(|(_, b)| b).collect()
        })
        .collect();

    let mut rng = rng_from_seed(seed);
    let mut rows = ds.rows().to_vec();
    let mut labels = ds.labels().to_vec();
    for _ in 0..needed {
        let a = rng.random_range(0..minority.len());
        let b = neighbours[a][rng.random_range(0..k)];
        let u: f64 = rng.random();
        let p = ds.row(minority[a]);
        let q = ds.row(minority[b]);
        let mut row = p.to_vec();
        for &j in &numeric {
            let (lo, hi) = if p[j] <= q[j] { (p[j], q[j]) } else { (q[j], p[j]) };
            row[j] = (p[j] + u * (q[j] - p[j])).clamp(lo, hi);
        }
        rows.push(row);
        labels.push(minority_class);
    }
    Ok(ds.with_rows(rows, labels))
}
