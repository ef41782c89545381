//! Global explanations: choose instances (random or submodular pick),
//! explain each locally, and rank features by mean signed contribution.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::TabularDataset;
use crate::error::{Error, Result};
use crate::explain::{explain, ExplainerKind, KernelConfig, LocalExplanation, TabularTarget, TextTarget, TrainingStats};
use crate::models::{TabularModel, TextModel};
use crate::rng::{derive_seed, rng_from_seed};
use crate::text::Corpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Uniform random sample.
    Rs,
    /// Submodular pick from a larger random candidate pool.
    Sp,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Rs => "rs",
            Strategy::Sp => "sp",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rs" => Ok(Strategy::Rs),
            "sp" => Ok(Strategy::Sp),
            other => Err(Error::InvalidArgument(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSpec {
    /// Share of the population, rounded down.
    Fraction(f64),
    Count(usize),
}

impl SampleSpec {
    pub fn resolve(&self, population: usize) -> Result<usize> {
        let n = match *self {
            SampleSpec::Fraction(f) if f > 0.0 && f <= 1.0 => (population as f64 * f).floor() as usize,
            SampleSpec::Fraction(f) => {
                return Err(Error::InvalidArgument(format!("sample fraction {f} outside (0, 1]")));
            }
            SampleSpec::Count(c) => c,
        };
        if n == 0 || n > population {
            return Err(Error::InvalidArgument(format!(
                "sample of {n} instances from a population of {population}"
            )));
        }
        Ok(n)
    }
}

impl FromStr for SampleSpec {
    type Err = Error;

    /// `"0.05"` or `"5%"` is a fraction, `"93"` a count.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("invalid sample spec `{s}`"));
        if let Some(p) = s.strip_suffix('%') {
            let v: f64 = p.trim().parse().map_err(|_| bad())?;
            return Ok(SampleSpec::Fraction(v / 100.0));
        }
        if let Ok(c) = s.parse::<usize>() {
            return Ok(SampleSpec::Count(c));
        }
        s.parse::<f64>().map(SampleSpec::Fraction).map_err(|_| bad())
    }
}

/// Sorted ids of a uniform sample without replacement.
pub fn sample_random(population: usize, spec: SampleSpec, seed: u64) -> Result<Vec<usize>> {
    let n = spec.resolve(population)?;
    let mut ids = sample(&mut rng_from_seed(seed), population, n).into_vec();
    ids.sort_unstable();
    Ok(ids)
}

/// Local contributions, one row per explained instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationMatrix {
    pub feature_names: Vec<String>,
    pub instance_ids: Vec<usize>,
    pub values: Vec<Vec<f64>>,
}

impl ExplanationMatrix {
    /// Aligns explanations on the union of their feature names. When all
    /// share one name list its order is kept, otherwise names are sorted.
    pub fn assemble(instance_ids: Vec<usize>, explanations: &[LocalExplanation]) -> Self {
        let same = explanations.windows(2).all(|w| w[0].feature_names == w[1].feature_names);
        let feature_names: Vec<String> = if same {
            explanations.first().map(|e| e.feature_names.clone()).unwrap_or_default()
        } else {
            let mut all: Vec<String> = explanations.iter().flat_map(|e| e.feature_names.iter().cloned()).collect();
            all.sort_unstable();
            all.dedup();
            all
        };
        let index: BTreeMap<&str, usize> = feature_names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let values = explanations
            .iter()
            .map(|e| {
                let mut row = vec![0.0; feature_names.len()];
                for (n, w) in e.feature_names.iter().zip(&e.weights) {
                    row[index[n.as_str()]] += w;
                }
                row
            })
            .collect();
        ExplanationMatrix {
            feature_names,
            instance_ids,
            values,
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        ExplanationMatrix {
            feature_names: self.feature_names.clone(),
            instance_ids: rows.iter().map(|&r| self.instance_ids[r]).collect(),
            values: rows.iter().map(|&r| self.values[r].clone()).collect(),
        }
    }
}

/// Per-feature importance `sqrt(sum_i |W_ij|)`.
pub fn global_importance(w: &ExplanationMatrix) -> Vec<f64> {
    let mut imp = vec![0.0; w.feature_names.len()];
    for row in &w.values {
        for (acc, v) in imp.iter_mut().zip(row) {
            *acc += v.abs();
        }
    }
    imp.iter().map(|v| v.sqrt()).collect()
}

/// Coverage of a row set: total importance of features explained by some
/// row. A feature counts as explained by a nonzero weight, or by a strictly
/// positive one when `strict_positive` is set.
pub fn coverage(w: &ExplanationMatrix, importance: &[f64], rows: &[usize], strict_positive: bool) -> f64 {
    (0..importance.len())
        .filter(|&j| rows.iter().any(|&i| covers(w.values[i][j], strict_positive)))
        .map(|j| importance[j])
        .sum()
}

fn covers(v: f64, strict_positive: bool) -> bool {
    if strict_positive {
        v > 0.0
    } else {
        v != 0.0
    }
}

/// Greedy coverage maximization: repeatedly adds the row with the largest
/// marginal gain (lowest row on ties) until `budget` rows are chosen or no
/// row adds coverage. Returns row indices in pick order.
pub fn submodular_pick(w: &ExplanationMatrix, importance: &[f64], budget: usize, strict_positive: bool) -> Vec<usize> {
    let d = importance.len();
    let mut covered = vec![false; d];
    let mut chosen = Vec::new();
    let mut used = vec![false; w.values.len()];
    while chosen.len() < budget {
        let mut best: Option<(f64, usize)> = None;
        for (i, row) in w.values.iter().enumerate() {
            if used[i] {
                continue;
            }
            let gain: f64 = (0..d)
                .filter(|&j| !covered[j] && covers(row[j], strict_positive))
                .map(|j| importance[j])
                .sum();
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, i));
            }
        }
        match best {
            Some((gain, i)) if gain > 0.0 => {
                used[i] = true;
                chosen.push(i);
                for (c, &v) in covered.iter_mut().zip(&w.values[i]) {
                    *c |= covers(v, strict_positive);
                }
            }
            _ => break,
        }
    }
    chosen
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalEntry {
    pub feature: String,
    /// Mean signed contribution over the explained instances.
    pub contribution: f64,
    /// Sum of the signed contributions.
    pub total: f64,
    /// 0-based position by decreasing absolute contribution.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalExplanation {
    /// Sorted by rank.
    pub entries: Vec<GlobalEntry>,
    pub sample_size: usize,
    pub strategy: Strategy,
    pub explainer: ExplainerKind,
    pub instance_ids: Vec<usize>,
}

impl GlobalExplanation {
    pub fn from_matrix(w: &ExplanationMatrix, strategy: Strategy, explainer: ExplainerKind) -> Self {
        let n = w.values.len().max(1) as f64;
        let mut entries: Vec<GlobalEntry> = w
            .feature_names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let total: f64 = w.values.iter().map(|r| r[j]).sum();
                GlobalEntry {
                    feature: name.clone(),
                    contribution: total / n,
                    total,
                    rank: 0,
                }
            })
            .collect();
        entries.sort_by(|a, b| {
            b.contribution
                .abs()
                .total_cmp(&a.contribution.abs())
                .then_with(|| a.feature.cmp(&b.feature))
        });
        for (r, e) in entries.iter_mut().enumerate() {
            e.rank = r;
        }
        GlobalExplanation {
            entries,
            sample_size: w.values.len(),
            strategy,
            explainer,
            instance_ids: w.instance_ids.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, feature: &str) -> Option<&GlobalEntry> {
        self.entries.iter().find(|e| e.feature == feature)
    }

    /// The first `k` entries (all when `k` exceeds the length).
    pub fn top(&self, k: usize) -> &[GlobalEntry] {
        &self.entries[..k.min(self.entries.len())]
    }

    /// `rank,feature,contribution,total` with 1-based ranks.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,feature,contribution,total\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.rank + 1,
                crate::dataset::csv_field(&e.feature),
                e.contribution,
                e.total
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalSettings {
    pub strategy: Strategy,
    pub sample: SampleSpec,
    pub seed: u64,
    /// Count coverage by strictly positive weights only.
    pub strict_positive: bool,
    /// Submodular pick chooses from `pool_factor` times the sample size.
    pub pool_factor: usize,
}

impl GlobalSettings {
    pub fn new(strategy: Strategy, sample: SampleSpec, seed: u64) -> Self {
        GlobalSettings {
            strategy,
            sample,
            seed,
            strict_positive: false,
            pool_factor: 10,
        }
    }
}

/// Explains the chosen instances with `explain_one(id, seed)`, where the
/// seed is derived from the settings seed and the instance id.
pub fn build_global_explanation<F>(
    population: usize,
    explainer: ExplainerKind,
    settings: &GlobalSettings,
    explain_one: F,
) -> Result<GlobalExplanation>
where
    F: Fn(usize, u64) -> Result<LocalExplanation> + Sync,
{
    let budget = settings.sample.resolve(population)?;
    let candidates = match settings.strategy {
        Strategy::Rs => budget,
        Strategy::Sp => (budget * settings.pool_factor.max(1)).min(population),
    };
    let ids = sample_random(population, SampleSpec::Count(candidates), settings.seed)?;
    let explanations: Vec<LocalExplanation> = ids
        .par_iter()
        .map(|&id| explain_one(id, derive_seed(settings.seed, id as u64)))
        .collect::<Result<_>>()?;
    let w = ExplanationMatrix::assemble(ids, &explanations);
    let w = match settings.strategy {
        Strategy::Rs => w,
        Strategy::Sp => {
            let importance = global_importance(&w);
            let mut picked = submodular_pick(&w, &importance, budget, settings.strict_positive);
            picked.sort_unstable();
            w.select_rows(&picked)
        }
    };
    Ok(GlobalExplanation::from_matrix(&w, settings.strategy, explainer))
}

/// Global explanation of a tabular model over the rows of `data`.
pub fn global_tabular(
    model: &dyn TabularModel,
    data: &TabularDataset,
    stats: &TrainingStats,
    kernel: &KernelConfig,
    settings: &GlobalSettings,
) -> Result<GlobalExplanation> {
    build_global_explanation(data.n_instances(), kernel.explainer, settings, |id, seed| {
        let target = TabularTarget::new(model, data.row(id), stats)?;
        explain(&target, &kernel.with_seed(seed))
    })
}

/// Global explanation of a text model over the documents of `corpus`;
/// features are the union of the explained documents' words.
pub fn global_text(
    model: &dyn TextModel,
    corpus: &Corpus,
    kernel: &KernelConfig,
    settings: &GlobalSettings,
) -> Result<GlobalExplanation> {
    build_global_explanation(corpus.len(), kernel.explainer, settings, |id, seed| {
        let target = TextTarget::new(model, &corpus.documents()[id].tokens);
        explain(&target, &kernel.with_seed(seed))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::{prop, prop_assert, proptest};
    use rand::Rng;

    fn matrix(values: Vec<Vec<f64>>) -> ExplanationMatrix {
        let d = values[0].len();
        ExplanationMatrix {
            feature_names: (0..d).map(|j| format!("f{j}")).collect(),
            instance_ids: (0..values.len()).collect(),
            values,
        }
    }

    fn local(names: &[&str], weights: &[f64]) -> LocalExplanation {
        LocalExplanation {
            feature_names: names.iter().map(|s| s.to_string()).collect(),
            weights: weights.to_vec(),
            intercept: 0.0,
            fidelity: 1.0,
            target_class: 1,
            degraded: false,
        }
    }

    #[test]
    fn sample_sizes() {
        assert_eq!(SampleSpec::Fraction(0.05).resolve(1000).unwrap(), 50);
        assert_eq!(SampleSpec::Fraction(0.005).resolve(32561).unwrap(), 162);
        assert_eq!(sample_random(7, SampleSpec::Count(7), 1).unwrap(), (0..7).collect::<Vec<_>>());
        assert_eq!(sample_random(100, SampleSpec::Count(9), 4).unwrap(), sample_random(100, SampleSpec::Count(9), 4).unwrap());
        assert!(sample_random(5, SampleSpec::Count(0), 0).is_err());
        assert!(sample_random(5, SampleSpec::Count(6), 0).is_err());
        assert_eq!("5%".parse::<SampleSpec>().unwrap(), SampleSpec::Fraction(0.05));
        assert_eq!("93".parse::<SampleSpec>().unwrap(), SampleSpec::Count(93));
        assert_eq!("0.1".parse::<SampleSpec>().unwrap(), SampleSpec::Fraction(0.1));
    }

    #[test]
    fn importance_is_root_of_absolute_sums() {
        let w = matrix(vec![vec![1.0, -4.0, 0.0]]);
        assert_eq!(global_importance(&w), vec![1.0, 2.0, 0.0]);
    }

    #[test]
    fn pick_prefers_coverage() {
        let w = matrix(vec![vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.5, 0.0, 3.0]]);
        let imp = global_importance(&w);
        assert_eq!(submodular_pick(&w, &imp, 1, false), vec![2]);
        assert_eq!(submodular_pick(&w, &imp, 2, false), vec![2, 1]);
        // nothing left to cover: stops early
        assert_eq!(submodular_pick(&w, &imp, 3, false).len(), 2);
        let neg = matrix(vec![vec![-1.0, 0.0], vec![0.0, 0.5]]);
        let imp = global_importance(&neg);
        assert_eq!(submodular_pick(&neg, &imp, 1, false), vec![0]);
        assert_eq!(submodular_pick(&neg, &imp, 1, true), vec![1]);
    }

    #[test]
    fn disjoint_supports_both_chosen() {
        let w = matrix(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let imp = global_importance(&w);
        let mut p = submodular_pick(&w, &imp, 2, false);
        p.sort_unstable();
        assert_eq!(p, vec![0, 1]);
    }

    fn best_pair(w: &ExplanationMatrix, imp: &[f64], budget: usize) -> f64 {
        let n = w.values.len();
        let mut best = 0.0f64;
        for mask in 0u32..1 << n {
            if mask.count_ones() as usize <= budget {
                let rows: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                best = best.max(coverage(w, imp, &rows, false));
            }
        }
        best
    }

    #[test]
    fn random_six_by_four_meets_bound() {
        let mut rng = rng_from_seed(11);
        let values: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..4).map(|_| if rng.random_bool(0.4) { rng.random_range(-1.0..1.0) } else { 0.0 }).collect())
            .collect();
        let w = matrix(values);
        let imp = global_importance(&w);
        let greedy = coverage(&w, &imp, &submodular_pick(&w, &imp, 2, false), false);
        assert!(greedy >= (1.0 - (-1f64).exp()) * best_pair(&w, &imp, 2) - 1e-12);
    }

    proptest! {
        #[test]
        fn greedy_coverage_bound(cells in prop::collection::vec(prop::option::weighted(0.4, -1.0f64..1.0), 1..40), budget in 1usize..4) {
            let d = 5;
            let n = (cells.len() / d).clamp(1, 8);
            let mut values = vec![vec![0.0; d]; n];
            for (k, c) in cells.iter().enumerate().take(n * d) {
                values[k / d][k % d] = c.unwrap_or(0.0);
            }
            let w = matrix(values);
            let imp = global_importance(&w);
            let greedy = coverage(&w, &imp, &submodular_pick(&w, &imp, budget, false), false);
            prop_assert!(greedy >= (1.0 - (-1f64).exp()) * best_pair(&w, &imp, budget) - 1e-12);
        }

        #[test]
        fn scaling_keeps_importance_order(values in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..6), c in 0.01f64..100.0) {
            let w = matrix(values.clone());
            let scaled = matrix(values.iter().map(|r| r.iter().map(|v| v * c).collect()).collect());
            let (a, b) = (global_importance(&w), global_importance(&scaled));
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((y - x * c.sqrt()).abs() <= 1e-9 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn aggregation_ranks_by_absolute_mean() {
        let ex = vec![local(&["a", "b", "c"], &[1.0, -3.0, 0.0]), local(&["a", "b", "c"], &[1.0, -1.0, 0.0])];
        let w = ExplanationMatrix::assemble(vec![4, 9], &ex);
        let g = GlobalExplanation::from_matrix(&w, Strategy::Rs, ExplainerKind::Lime);
        let order: Vec<&str> = g.entries.iter().map(|e| e.feature.as_str()).collect();
        assert_eq!(order, vec!["b", "a", "c"]);
        assert_eq!(g.entry("b").unwrap().contribution, -2.0);
        assert_eq!(g.entry("b").unwrap().total, -4.0);
        assert_eq!(g.entry("c").unwrap().contribution, 0.0);
        assert_eq!(g.to_csv().lines().nth(1).unwrap(), "1,b,-2,-4");
    }

    #[test]
    fn union_alignment_for_differing_vocabularies() {
        let ex = vec![local(&["x", "y"], &[1.0, 2.0]), local(&["y", "z"], &[3.0, 4.0])];
        let w = ExplanationMatrix::assemble(vec![0, 1], &ex);
        assert_eq!(w.feature_names, vec!["x", "y", "z"]);
        assert_eq!(w.values, vec![vec![1.0, 2.0, 0.0], vec![0.0, 3.0, 4.0]]);
    }

    #[test]
    fn constant_explanations_give_zero_contributions_and_determinism() {
        let settings = GlobalSettings::new(Strategy::Sp, SampleSpec::Count(3), 5);
        let run = || {
            build_global_explanation(20, ExplainerKind::Shap, &settings, |id, seed| {
                let v = if id % 2 == 0 { (seed % 7) as f64 } else { 0.0 };
                Ok(local(&["p", "q"], &[v, 0.0]))
            })
            .unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        assert_eq!(a.entry("q").unwrap().contribution, 0.0);
        let ranks: Vec<usize> = a.entries.iter().map(|e| e.rank).collect();
        assert_eq!(ranks, vec![0, 1]);
        let zero = build_global_explanation(10, ExplainerKind::Lime, &GlobalSettings::new(Strategy::Rs, SampleSpec::Count(4), 1), |_, _| {
            Ok(local(&["p", "q"], &[0.0, 0.0]))
        })
        .unwrap();
        assert!(zero.entries.iter().all(|e| e.contribution == 0.0));
        assert_eq!(zero.sample_size, 4);
    }
}
