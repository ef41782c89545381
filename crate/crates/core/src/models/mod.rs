//! Binary probabilistic classifiers: logistic regression, random forest,
//! bagging and AdaBoost, trained on tabular rows or sparse TF-IDF vectors.

mod adaboost;
mod forest;
mod logistic;
mod matrix;
mod text;
mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::TabularDataset;
use crate::error::{Error, Result};

pub use adaboost::AdaBoost;
pub use forest::Forest;
pub use logistic::{ColumnEncoding, Encoder, LogisticParams, LogisticRegression};
pub use matrix::{DesignMatrix, Row};
pub use text::TextClassifier;
pub use tree::{DecisionTree, Node, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Rf,
    Bag,
    Ada,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Lr, ModelKind::Rf, ModelKind::Bag, ModelKind::Ada];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Rf => "rf",
            ModelKind::Bag => "bag",
            ModelKind::Ada => "ada",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lr" => Ok(ModelKind::Lr),
            "rf" => Ok(ModelKind::Rf),
            "bag" => Ok(ModelKind::Bag),
            "ada" => Ok(ModelKind::Ada),
            other => Err(Error::InvalidArgument(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Training settings. `n_estimators` defaults per kind: 100 trees for RF,
/// 10 for bagging, 50 boosting rounds for AdaBoost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub seed: u64,
    pub n_estimators: Option<usize>,
    pub max_depth: Option<usize>,
    pub learning_rate: f64,
    pub l2: f64,
    pub max_iter: usize,
    pub tolerance: f64,
}

impl TrainConfig {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        TrainConfig {
            kind,
            seed,
            n_estimators: None,
            max_depth: None,
            learning_rate: 1.0,
            l2: 1.0,
            max_iter: 1000,
            tolerance: 1e-6,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn estimators(&self) -> usize {
        self.n_estimators.unwrap_or(match self.kind {
            ModelKind::Lr => 1,
            ModelKind::Rf => 100,
            ModelKind::Bag => 10,
            ModelKind::Ada => 50,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.estimators() == 0 {
            return Err(Error::InvalidArgument("estimator count must be positive".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidArgument("depth limit must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.l2 >= 0.0) || !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(
                "learning rate and tolerance must be positive, l2 non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Estimator {
    Logistic(LogisticRegression),
    Forest(Forest),
    Boost(AdaBoost),
}

/// A trained binary classifier over a fixed input arity. Tabular models
/// consume rows in dataset layout (categorical cells as codes); logistic
/// regression encodes them internally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilisticClassifier {
    kind: ModelKind,
    n_features: usize,
    encoder: Option<Encoder>,
    estimator: Estimator,
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    model: T,
}

const FORMAT: &str = "fixout-model";
const VERSION: u32 = 1;

fn check_labels(labels: &[usize]) -> Result<()> {
    if labels.len() < 2 {
        return Err(Error::Degenerate("need at least two training instances".into()));
    }
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::Degenerate("training labels contain a single class".into()));
    }
    Ok(())
}

impl ProbabilisticClassifier {
    pub fn train(config: &TrainConfig, ds: &TabularDataset) -> Result<Self> {
        config.validate()?;
        check_labels(ds.labels())?;
        let d = ds.n_features();
        if config.kind == ModelKind::Lr {
            let encoder = Encoder::fit(ds);
            let encoded: Vec<Vec<(usize, f64)>> = ds.rows().iter().map(|r| encoder.encode(Row::Dense(r))).collect();
            let x = DesignMatrix::from_sparse(&encoded, encoder.width());
            let lr = LogisticRegression::fit(&x, ds.labels(), logistic_params(config));
            return Ok(ProbabilisticClassifier {
                kind: config.kind,
                n_features: d,
                encoder: Some(encoder),
                estimator: Estimator::Logistic(lr),
            });
        }
        let x = DesignMatrix::from_dense(ds.rows(), d);
        Ok(Self::fit_matrix(config, &x, ds.labels()))
    }

    /// Trains on sparse rows of `(column, value)` pairs sorted by column.
    pub fn train_sparse<R: AsRef<[(usize, f64)]>>(
        config: &TrainConfig,
        rows: &[R],
        dim: usize,
        labels: &[usize],
    ) -> Result<Self> {
        config.validate()?;
        check_labels(labels)?;
        if rows.len() != labels.len() {
            return Err(Error::InvalidArgument(format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        if let Some(bad) = rows.iter().flat_map(|r| r.as_ref()).find(|e| e.0 >= dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.0 + 1,
            });
        }
        let x = DesignMatrix::from_sparse(rows, dim);
        Ok(Self::fit_matrix(config, &x, labels))
    }

    fn fit_matrix(config: &TrainConfig, x: &DesignMatrix, y: &[usize]) -> Self {
        let d = x.n_cols();
        let tree = TreeParams {
            max_depth: config.max_depth,
            ..Default::default()
        };
        let estimator = match config.kind {
            ModelKind::Lr => Estimator::Logistic(LogisticRegression::fit(x, y, logistic_params(config))),
            ModelKind::Rf => {
                let max_features = ((d as f64).sqrt().floor() as usize).max(1);
                let params = TreeParams {
                    max_features: Some(max_features),
                    ..tree
                };
                Estimator::Forest(Forest::fit(x, y, config.estimators(), params, config.seed))
            }
            ModelKind::Bag => Estimator::Forest(Forest::fit(x, y, config.estimators(), tree, config.seed)),
            ModelKind::Ada => Estimator::Boost(AdaBoost::fit(
                x,
                y,
                config.estimators(),
                config.learning_rate,
                config.seed,
            )),
        };
        ProbabilisticClassifier {
            kind: config.kind,
            n_features: d,
            encoder: None,
            estimator,
        }
    }

    /// Logistic model over raw (unencoded) inputs.
    pub fn logistic_from_parameters(weights: Vec<f64>, bias: f64) -> Self {
        ProbabilisticClassifier {
            kind: ModelKind::Lr,
            n_features: weights.len(),
            encoder: None,
            estimator: Estimator::Logistic(LogisticRegression { weights, bias }),
        }
    }

    pub fn forest_from_trees(trees: Vec<DecisionTree>, n_features: usize, kind: ModelKind) -> Self {
        ProbabilisticClassifier {
            kind,
            n_features,
            encoder: None,
            estimator: Estimator::Forest(Forest::from_trees(trees)),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn encoder(&self) -> Option<&Encoder> {
        self.encoder.as_ref()
    }

    fn p1(&self, x: Row<'_>) -> f64 {
        match &self.estimator {
            Estimator::Logistic(lr) => {
                let z = match &self.encoder {
                    Some(enc) => lr.decision_entries(&enc.encode(x)),
                    None => lr.decision(x),
                };
                logistic::sigmoid(z)
            }
            Estimator::Forest(f) => f.p1(x),
            Estimator::Boost(b) => b.p1(x),
        }
    }

    pub fn predict_row(&self, x: Row<'_>) -> Result<[f64; 2]> {
        if x.dim() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.dim(),
            });
        }
        let p = self.p1(x).clamp(0.0, 1.0);
        Ok([1.0 - p, p])
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<[f64; 2]> {
        self.predict_row(Row::Dense(x))
    }

    pub fn to_json(&self) -> Result<String> {
        to_envelope(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        from_envelope(s)
    }
}

fn logistic_params(config: &TrainConfig) -> LogisticParams {
    LogisticParams {
        l2: config.l2,
        max_iter: config.max_iter,
        tolerance: config.tolerance,
    }
}

pub(crate) fn to_envelope<T: Serialize>(model: &T) -> Result<String> {
    Ok(serde_json::to_string(&Envelope {
        format: FORMAT.into(),
        version: VERSION,
        model,
    })?)
}

pub(crate) fn from_envelope<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T> {
    let env: Envelope<T> = serde_json::from_str(s)?;
    if env.format != FORMAT || env.version != VERSION {
        return Err(Error::InvalidArgument(format!(
            "unsupported model document {} v{}",
            env.format, env.version
        )));
    }
    Ok(env.model)
}

/// Writes a model document atomically (temporary file, then rename).
pub fn save_json(json: &str, path: &Path) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, json).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// A classifier over tabular rows of fixed arity.
pub trait TabularModel: Sync {
    fn n_features(&self) -> usize;

    fn predict_proba(&self, x: &[f64]) -> Result<[f64; 2]>;

    /// True only when the output provably does not depend on feature `j`.
    fn ignores_feature(&self, _j: usize) -> bool {
        false
    }
}

impl TabularModel for ProbabilisticClassifier {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[f64]) -> Result<[f64; 2]> {
        ProbabilisticClassifier::predict_proba(self, x)
    }
}

/// A classifier over stemmed token lists.
pub trait TextModel: Sync {
    fn predict_proba(&self, tokens: &[String]) -> [f64; 2];

    /// True only when the output provably does not depend on `word`.
    fn ignores_word(&self, _word: &str) -> bool {
        false
    }
}

/// Share of instances whose argmax class equals the label (ties go to class 0).
pub fn accuracy<M: TabularModel + ?Sized>(model: &M, ds: &TabularDataset) -> Result<f64> {
    if ds.n_instances() == 0 {
        return Err(Error::InvalidArgument("accuracy of an empty dataset".into()));
    }
    let mut hits = 0;
    for (row, &label) in ds.rows().iter().zip(ds.labels()) {
        let p = model.predict_proba(row)?;
        hits += usize::from(usize::from(p[1] > p[0]) == label);
    }
    Ok(hits as f64 / ds.n_instances() as f64)
}

pub fn text_accuracy<M: TextModel + ?Sized>(model: &M, corpus: &crate::text::Corpus) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty corpus".into()));
    }
    let hits = corpus
        .documents()
        .iter()
        .filter(|d| {
            let p = model.predict_proba(&d.tokens);
            usize::from(p[1] > p[0]) == d.label
        })
        .count();
    Ok(hits as f64 / corpus.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FeatureSchema, FeatureSpec};
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn numeric_ds(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> TabularDataset {
        let d = rows[0].len();
        let schema = FeatureSchema::new(
            (0..d).map(|j| FeatureSpec::numeric(&format!("x{j}"))).collect(),
            "y",
            "1",
        )
        .unwrap();
        TabularDataset::from_parts(schema, vec![vec![]; d], rows, labels).unwrap()
    }

    fn noisy_ds(n: usize, seed: u64) -> TabularDataset {
        let mut rng = rng_from_seed(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let labels = rows
            .iter()
            .map(|r| usize::from(r[0] - r[1] + rng.random_range(-0.5..0.5) > 0.0))
            .collect();
        numeric_ds(rows, labels)
    }

    #[test]
    fn logistic_separates_separable_toy() {
        let rows = vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![0.5, 1.0], vec![3.0, 3.0], vec![4.0, 2.5], vec![2.5, 4.0]];
        let ds = numeric_ds(rows, vec![0, 0, 0, 1, 1, 1]);
        let m = ProbabilisticClassifier::train(&TrainConfig::new(ModelKind::Lr, 0), &ds).unwrap();
        assert_eq!(accuracy(&m, &ds).unwrap(), 1.0);
    }

    #[test]
    fn zero_weights_give_even_odds() {
        let m = ProbabilisticClassifier::logistic_from_parameters(vec![0.0; 3], 0.0);
        assert_eq!(m.predict_proba(&[5.0, -1.0, 2.0]).unwrap(), [0.5, 0.5]);
        assert!(matches!(m.predict_proba(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn constant_features_predict_majority() {
        let ds = numeric_ds(vec![vec![1.0, 2.0]; 10], vec![1, 1, 1, 1, 1, 1, 0, 0, 0, 0]);
        for kind in ModelKind::ALL {
            let m = ProbabilisticClassifier::train(&TrainConfig::new(kind, 3), &ds).unwrap();
            for probe in [[1.0, 2.0], [-5.0, 9.0]] {
                let p = m.predict_proba(&probe).unwrap();
                assert!(p[1] >= 0.5, "{kind}: {p:?}");
            }
            assert!((accuracy(&m, &ds).unwrap() - 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let ds = numeric_ds(vec![vec![1.0], vec![2.0]], vec![1, 1]);
        let err = ProbabilisticClassifier::train(&TrainConfig::new(ModelKind::Rf, 0), &ds);
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }

    #[test]
    fn training_is_deterministic_and_serializable() {
        let ds = noisy_ds(120, 4);
        let probe = noisy_ds(30, 5);
        for kind in ModelKind::ALL {
            let cfg = TrainConfig::new(kind, 11);
            let a = ProbabilisticClassifier::train(&cfg, &ds).unwrap();
            let b = ProbabilisticClassifier::train(&cfg, &ds).unwrap();
            let back = ProbabilisticClassifier::from_json(&a.to_json().unwrap()).unwrap();
            assert_eq!(a, back);
            for r in probe.rows() {
                assert_eq!(a.predict_proba(r).unwrap(), b.predict_proba(r).unwrap());
            }
            assert!(accuracy(&a, &probe).unwrap() > 0.7, "{kind}");
        }
        assert!(ProbabilisticClassifier::from_json(r#"{"format":"other","version":1,"model":null}"#).is_err());
    }

    #[test]
    fn forest_of_class_one_leaves_is_certain() {
        let m = ProbabilisticClassifier::forest_from_trees(vec![DecisionTree::single_leaf(1.0); 5], 2, ModelKind::Rf);
        assert_eq!(m.predict_proba(&[0.0, 0.0]).unwrap(), [0.0, 1.0]);
    }

    #[test]
    fn flipped_predictor_scores_zero() {
        let ds = numeric_ds(vec![vec![0.0], vec![1.0], vec![0.0], vec![1.0]], vec![1, 0, 1, 0]);
        let m = ProbabilisticClassifier::logistic_from_parameters(vec![10.0], -5.0);
        assert_eq!(accuracy(&m, &ds).unwrap(), 0.0);
        let ok = ProbabilisticClassifier::logistic_from_parameters(vec![-10.0], 5.0);
        assert_eq!(accuracy(&ok, &ds).unwrap(), 1.0);
        let empty = ds.subset(&[]);
        assert!(accuracy(&m, &empty).is_err());
    }

    #[test]
    fn sparse_training_matches_declared_dimension() {
        let rows = vec![vec![(0usize, 1.0)], vec![(2, 1.0)], vec![(0, 0.5), (1, 0.2)], vec![(2, 0.7)]];
        let m = ProbabilisticClassifier::train_sparse(&TrainConfig::new(ModelKind::Bag, 0), &rows, 3, &[1, 0, 1, 0]).unwrap();
        assert_eq!(m.n_features(), 3);
        assert!(m.predict_proba(&[1.0, 0.0, 0.0]).unwrap()[1] > 0.5);
        let bad = vec![vec![(5usize, 1.0)], vec![(0, 1.0)]];
        assert!(ProbabilisticClassifier::train_sparse(&TrainConfig::new(ModelKind::Lr, 0), &bad, 3, &[0, 1]).is_err());
    }

    fn trained_models() -> &'static Vec<ProbabilisticClassifier> {
        static MODELS: std::sync::OnceLock<Vec<ProbabilisticClassifier>> = std::sync::OnceLock::new();
        MODELS.get_or_init(|| {
            let ds = noisy_ds(80, 9);
            ModelKind::ALL
                .iter()
                .map(|&k| ProbabilisticClassifier::train(&TrainConfig::new(k, 1), &ds).unwrap())
                .collect()
        })
    }

    proptest! {
        #[test]
        fn probabilities_are_valid(x in prop::collection::vec(-1e6f64..1e6, 3)) {
            for m in trained_models() {
                let p = m.predict_proba(&x).unwrap();
                prop_assert!(p.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
                prop_assert!((p[0] + p[1] - 1.0).abs() < 1e-9);
            }
        }
    }
}
