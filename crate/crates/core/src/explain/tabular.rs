use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::Explainable;
use crate::dataset::{FeatureKind, TabularDataset};
use crate::error::{Error, Result};
use crate::models::TabularModel;
use crate::rng::rng_from_seed;

/// Training values of one feature grouped by bin. Numeric features use
/// quartile bins, categorical features one bin per category.
#[derive(Debug, Clone, PartialEq)]
struct ColumnStats {
    kind: FeatureKind,
    cuts: Vec<f64>,
    n_bins: usize,
    values: Vec<f64>,
    offsets: Vec<usize>,
}

impl ColumnStats {
    fn bin(&self, v: f64) -> usize {
        match self.kind {
            FeatureKind::Numeric => self.cuts.iter().filter(|&&c| c < v).count(),
            FeatureKind::Categorical => (v.max(0.0) as usize).min(self.n_bins - 1),
        }
    }

    fn bin_range(&self, b: usize) -> (usize, usize) {
        (self.offsets[b], self.offsets[b + 1])
    }

    /// Probability that a training value falls outside `v`'s bin.
    fn mismatch_rate(&self, v: f64) -> f64 {
        let (lo, hi) = self.bin_range(self.bin(v));
        1.0 - (hi - lo) as f64 / self.values.len() as f64
    }

    /// A training value from a bin other than `v`'s, or `v` when none exists.
    fn draw_other(&self, v: f64, rng: &mut impl Rng) -> f64 {
        let (lo, hi) = self.bin_range(self.bin(v));
        let outside = self.values.len() - (hi - lo);
        if outside == 0 {
            return v;
        }
        let r = rng.random_range(0..outside);
        if r < lo {
            self.values[r]
        } else {
            self.values[r + (hi - lo)]
        }
    }
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Training-set statistics used to perturb tabular instances: per-feature
/// binned marginals, plus a background sample for coalition values.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingStats {
    names: Vec<String>,
    columns: Vec<ColumnStats>,
    background: Vec<Vec<f64>>,
}

impl TrainingStats {
    /// `background_size` rows are drawn without replacement under `seed`
    /// (all rows when the dataset is smaller).
    pub fn fit(ds: &TabularDataset, background_size: usize, seed: u64) -> Result<Self> {
        let n = ds.n_instances();
        if n == 0 {
            return Err(Error::Degenerate("training statistics need at least one row".into()));
        }
        let mut columns = Vec::with_capacity(ds.n_features());
        for (j, spec) in ds.schema().features.iter().enumerate() {
            let mut raw: Vec<f64> = ds.rows().iter().map(|r| r[j]).collect();
            raw.sort_by(f64::total_cmp);
            let (cuts, n_bins) = match spec.kind {
                FeatureKind::Numeric => {
                    let cuts: Vec<f64> = [0.25, 0.5, 0.75].iter().map(|&q| quantile(&raw, q)).collect();
                    (cuts, 4)
                }
                FeatureKind::Categorical => (Vec::new(), ds.categories(j).len().max(1)),
            };
            let mut col = ColumnStats {
                kind: spec.kind,
                cuts,
                n_bins,
                values: Vec::new(),
                offsets: Vec::new(),
            };
            let mut by_bin: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
            for &v in &raw {
                by_bin[col.bin(v)].push(v);
            }
            col.offsets.push(0);
            for b in by_bin {
                col.values.extend(b);
                col.offsets.push(col.values.len());
            }
            columns.push(col);
        }
        let size = background_size.clamp(1, n);
        let mut picked: Vec<usize> = if size == n {
            (0..n).collect()
        } else {
            sample(&mut rng_from_seed(seed), n, size).into_vec()
        };
        picked.sort_unstable();
        Ok(TrainingStats {
            names: ds.schema().names(),
            columns,
            background: picked.iter().map(|&i| ds.row(i).to_vec()).collect(),
        })
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn background(&self) -> &[Vec<f64>] {
        &self.background
    }

    /// Quartile cut points of a numeric feature (empty for categorical ones).
    pub fn cuts(&self, feature: usize) -> &[f64] {
        &self.columns[feature].cuts
    }

    pub fn bin(&self, feature: usize, value: f64) -> usize {
        self.columns[feature].bin(value)
    }
}

/// Maps an interpretable instance back to feature space: set bits keep the
/// instance's value, cleared bits take a training value from another bin
/// (another category for categorical features).
pub fn map_to_feature_space(x: &[f64], bits: &[bool], stats: &TrainingStats, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if x.len() != stats.n_features() || bits.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: stats.n_features(),
            actual: if x.len() != stats.n_features() { x.len() } else { bits.len() },
        });
    }
    Ok(x.iter()
        .zip(bits)
        .zip(&stats.columns)
        .map(|((&v, &keep), col)| if keep { v } else { col.draw_other(v, rng) })
        .collect())
}

/// One tabular instance under a model, seen through its interpretable bits.
pub struct TabularTarget<'a> {
    model: &'a dyn TabularModel,
    x: &'a [f64],
    stats: &'a TrainingStats,
}

impl<'a> TabularTarget<'a> {
    pub fn new(model: &'a dyn TabularModel, x: &'a [f64], stats: &'a TrainingStats) -> Result<Self> {
        for actual in [x.len(), stats.n_features()] {
            if actual != model.n_features() {
                return Err(Error::DimensionMismatch {
                    expected: model.n_features(),
                    actual,
                });
            }
        }
        Ok(TabularTarget { model, x, stats })
    }
}

impl Explainable for TabularTarget<'_> {
    fn feature_names(&self) -> Vec<String> {
        self.stats.names.clone()
    }

    fn dim(&self) -> usize {
        self.x.len()
    }

    fn ignores(&self, j: usize) -> bool {
        self.model.ignores_feature(j)
    }

    fn perturb(&self, active: &[usize], rng: &mut ChaCha8Rng) -> Vec<bool> {
        let mut bits = vec![true; self.x.len()];
        for &j in active {
            let p = self.stats.columns[j].mismatch_rate(self.x[j]);
            bits[j] = !(p > 0.0 && rng.random_bool(p.min(1.0)));
        }
        bits
    }

    fn perturbed_value(&self, bits: &[bool], rng: &mut ChaCha8Rng) -> Result<f64> {
        let z = map_to_feature_space(self.x, bits, self.stats, rng)?;
        Ok(self.model.predict_proba(&z)?[1])
    }

    fn coalition_value(&self, present: &[bool]) -> Result<f64> {
        let mut z = self.x.to_vec();
        let mut total = 0.0;
        for b in &self.stats.background {
            for j in 0..z.len() {
                z[j] = if present[j] { self.x[j] } else { b[j] };
            }
            total += self.model.predict_proba(&z)?[1];
        }
        Ok(total / self.stats.background.len() as f64)
    }
}
