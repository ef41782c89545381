//! Local explanations. LIME and KernelSHAP both sample binary
//! interpretable instances around the explained input, query the model on
//! their feature-space images, and fit a weighted linear surrogate.

mod kernels;
mod shapley;
mod surrogate;
mod tabular;
mod text;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub use kernels::{binomial, lime_kernel, shap_kernel};
pub use shapley::{exact_shapley, shapley_values, MAX_EXACT_PLAYERS};
pub use surrogate::{fit_weighted_surrogate, SurrogateFit, RIDGE};
pub use tabular::{map_to_feature_space, TabularTarget, TrainingStats};
pub use text::TextTarget;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplainerKind {
    Lime,
    Shap,
}

impl fmt::Display for ExplainerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExplainerKind::Lime => "lime",
            ExplainerKind::Shap => "shap",
        })
    }
}

impl FromStr for ExplainerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lime" => Ok(ExplainerKind::Lime),
            "shap" => Ok(ExplainerKind::Shap),
            other => Err(Error::InvalidArgument(format!("unknown explainer `{other}`"))),
        }
    }
}

/// Distance between a perturbed interpretable instance and the all-ones original.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    Euclidean,
    /// One minus the cosine similarity.
    Cosine,
}

impl Distance {
    fn to_ones(self, n_zero: usize, dim: usize) -> f64 {
        match self {
            Distance::Euclidean => (n_zero as f64).sqrt(),
            Distance::Cosine => {
                let on = (dim - n_zero) as f64;
                if on == 0.0 {
                    1.0
                } else {
                    1.0 - (on / dim as f64).sqrt()
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub explainer: ExplainerKind,
    /// Perturbations (LIME) or coalitions (SHAP) per explanation.
    pub n_samples: usize,
    /// `None` means `0.75 * sqrt(d')`.
    pub kernel_width: Option<f64>,
    pub distance: Distance,
    /// LIME's cap on nonzero weights; `None` keeps every unit.
    pub complexity_limit: Option<usize>,
    pub seed: u64,
    /// Training rows averaged over for absent tabular features (SHAP).
    pub background_size: usize,
}

impl KernelConfig {
    pub fn lime(seed: u64) -> Self {
        KernelConfig {
            explainer: ExplainerKind::Lime,
            n_samples: 5000,
            kernel_width: None,
            distance: Distance::Euclidean,
            complexity_limit: None,
            seed,
            background_size: 100,
        }
    }

    pub fn shap(seed: u64) -> Self {
        KernelConfig {
            explainer: ExplainerKind::Shap,
            ..Self::lime(seed)
        }
    }

    pub fn of_kind(kind: ExplainerKind, seed: u64) -> Self {
        match kind {
            ExplainerKind::Lime => Self::lime(seed),
            ExplainerKind::Shap => Self::shap(seed),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.n_samples < dim + 2 {
            return Err(Error::InvalidArgument(format!(
                "{} samples are too few for {dim} interpretable units",
                self.n_samples
            )));
        }
        if self.kernel_width.is_some_and(|w| !(w > 0.0)) {
            return Err(Error::InvalidArgument("kernel width must be positive".into()));
        }
        if self.complexity_limit == Some(0) {
            return Err(Error::InvalidArgument("complexity limit must be at least 1".into()));
        }
        Ok(())
    }
}

/// A linear surrogate of the class-1 probability around one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExplanation {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub fidelity: f64,
    pub target_class: usize,
    pub degraded: bool,
}

impl LocalExplanation {
    pub fn weight_of(&self, name: &str) -> Option<f64> {
        self.feature_names.iter().position(|n| n == name).map(|i| self.weights[i])
    }

    /// `(name, weight, rank)` with 1-based ranks by decreasing `|weight|`,
    /// ties by name.
    pub fn records(&self) -> Vec<(String, f64, usize)> {
        let mut order: Vec<usize> = (0..self.weights.len()).collect();
        order.sort_by(|&a, &b| {
            self.weights[b]
                .abs()
                .total_cmp(&self.weights[a].abs())
                .then_with(|| self.feature_names[a].cmp(&self.feature_names[b]))
        });
        order
            .into_iter()
            .enumerate()
            .map(|(r, i)| (self.feature_names[i].clone(), self.weights[i], r + 1))
            .collect()
    }
}

/// An instance under a black box, seen through binary interpretable units.
pub trait Explainable: Sync {
    fn feature_names(&self) -> Vec<String>;

    fn dim(&self) -> usize;

    /// Units the model provably does not depend on; they get weight 0.
    fn ignores(&self, j: usize) -> bool;

    /// A random interpretable neighbour; only `active` units may be cleared.
    fn perturb(&self, active: &[usize], rng: &mut ChaCha8Rng) -> Vec<bool>;

    /// Class-1 probability of a (random) feature-space image of `bits`.
    fn perturbed_value(&self, bits: &[bool], rng: &mut ChaCha8Rng) -> Result<f64>;

    /// Expected class-1 probability with absent units marginalized out.
    fn coalition_value(&self, present: &[bool]) -> Result<f64>;
}

fn active_units(target: &dyn Explainable) -> Vec<usize> {
    (0..target.dim()).filter(|&j| !target.ignores(j)).collect()
}

fn expand(dim: usize, active: &[usize], weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (&j, &w) in active.iter().zip(weights) {
        out[j] = w;
    }
    out
}

pub fn explain(target: &dyn Explainable, config: &KernelConfig) -> Result<LocalExplanation> {
    match config.explainer {
        ExplainerKind::Lime => lime_explain(target, config),
        ExplainerKind::Shap => shap_explain(target, config),
    }
}

/// LIME: the first sample is the instance itself, the others come from
/// `perturb`; each is weighted by the exponential kernel of its distance
/// to the all-ones vector.
pub fn lime_explain(target: &dyn Explainable, config: &KernelConfig) -> Result<LocalExplanation> {
    let dim = target.dim();
    let active = active_units(target);
    config.validate(active.len())?;
    let mut rng = rng_from_seed(config.seed);
    let names = target.feature_names();
    let ones = vec![true; dim];
    if active.is_empty() {
        return Ok(LocalExplanation {
            feature_names: names,
            weights: vec![0.0; dim],
            intercept: target.perturbed_value(&ones, &mut rng)?,
            fidelity: 1.0,
            target_class: 1,
            degraded: false,
        });
    }
    let width = config.kernel_width.unwrap_or(0.75 * (active.len() as f64).sqrt());
    let mut design = Vec::with_capacity(config.n_samples);
    let mut targets = Vec::with_capacity(config.n_samples);
    let mut weights = Vec::with_capacity(config.n_samples);
    for i in 0..config.n_samples {
        let bits = if i == 0 { ones.clone() } else { target.perturb(&active, &mut rng) };
        let row: Vec<f64> = active.iter().map(|&j| f64::from(u8::from(bits[j]))).collect();
        let n_zero = row.iter().filter(|&&b| b == 0.0).count();
        targets.push(target.perturbed_value(&bits, &mut rng)?);
        weights.push(lime_kernel(config.distance.to_ones(n_zero, active.len()), width));
        design.push(row);
    }
    let fit = fit_weighted_surrogate(&design, &targets, &weights, config.complexity_limit)?;
    Ok(LocalExplanation {
        feature_names: names,
        weights: expand(dim, &active, &fit.weights),
        intercept: fit.intercept,
        fidelity: fit.fidelity,
        target_class: 1,
        degraded: fit.degraded,
    })
}

/// Coalitions with their regression weights. Enumerates every proper
/// non-empty coalition when `2^m <= n_samples`; otherwise draws sizes with
/// probability proportional to the total kernel mass of each size, a
/// uniform coalition of that size, and its complement, all with unit weight.
fn coalitions(m: usize, n_samples: usize, rng: &mut ChaCha8Rng) -> Vec<(Vec<bool>, f64)> {
    if m < usize::BITS as usize - 1 && (1usize << m) <= n_samples {
        return (1..(1usize << m) - 1)
            .map(|mask| {
                let bits: Vec<bool> = (0..m).map(|j| mask >> j & 1 == 1).collect();
                let s = mask.count_ones() as usize;
                (bits, shap_kernel(m, s))
            })
            .collect();
    }
    let mass: Vec<f64> = (1..m).map(|s| 1.0 / (s * (m - s)) as f64).collect();
    let total: f64 = mass.iter().sum();
    let mut out = Vec::with_capacity(n_samples);
    while out.len() < n_samples {
        let mut u = rng.random::<f64>() * total;
        let mut s = m - 1;
        for (i, w) in mass.iter().enumerate() {
            if u < *w {
                s = i + 1;
                break;
            }
            u -= w;
        }
        let mut bits = vec![false; m];
        for j in sample(rng, m, s) {
            bits[j] = true;
        }
        let complement: Vec<bool> = bits.iter().map(|b| !b).collect();
        out.push((bits, 1.0));
        if out.len() < n_samples {
            out.push((complement, 1.0));
        }
    }
    out
}

/// KernelSHAP. The empty and full coalitions enter as constraints: the
/// intercept is the all-absent value and the weights sum to
/// `f(x) - intercept`. The last active unit's weight is eliminated through
/// that equality and the rest solved by weighted least squares.
pub fn shap_explain(target: &dyn Explainable, config: &KernelConfig) -> Result<LocalExplanation> {
    let dim = target.dim();
    let active = active_units(target);
    let m = active.len();
    config.validate(m)?;
    let names = target.feature_names();
    let mut rng = rng_from_seed(config.seed);

    let mut cache: HashMap<Vec<bool>, f64> = HashMap::new();
    let mut value = |present: &[bool]| -> Result<f64> {
        let mut full = vec![true; dim];
        for (&j, &p) in active.iter().zip(present) {
            full[j] = p;
        }
        if let Some(v) = cache.get(present) {
            return Ok(*v);
        }
        let v = target.coalition_value(&full)?;
        cache.insert(present.to_vec(), v);
        Ok(v)
    };
    let fx = value(&vec![true; m])?;
    let base = value(&vec![false; m])?;
    let delta = fx - base;
    let result = |phi: Vec<f64>, fidelity: f64, degraded: bool| LocalExplanation {
        feature_names: names.clone(),
        weights: expand(dim, &active, &phi),
        intercept: base,
        fidelity,
        target_class: 1,
        degraded,
    };
    if m <= 1 {
        return Ok(result(if m == 1 { vec![delta] } else { vec![] }, 1.0, false));
    }

    let samples = coalitions(m, config.n_samples, &mut rng);
    let k = m - 1;
    let mut gram = vec![0.0; k * k];
    let mut cross = vec![0.0; k];
    let mut values = Vec::with_capacity(samples.len());
    let mut row = vec![0.0; k];
    for (bits, w) in &samples {
        let v = value(bits)?;
        values.push(v);
        let last = f64::from(u8::from(bits[k]));
        for j in 0..k {
            row[j] = f64::from(u8::from(bits[j])) - last;
        }
        let y = v - base - last * delta;
        for a in 0..k {
            if row[a] == 0.0 {
                continue;
            }
            cross[a] += w * row[a] * y;
            for b in 0..k {
                gram[a * k + b] += w * row[a] * row[b];
            }
        }
    }
    let (mut phi, degraded) = surrogate::solve_normal(&gram, &cross, k);
    phi.push(delta - phi.iter().sum::<f64>());

    let sw: f64 = samples.iter().map(|s| s.1).sum();
    let mean = samples.iter().zip(&values).map(|(s, v)| s.1 * v).sum::<f64>() / sw;
    let (mut rss, mut tss) = (0.0, 0.0);
    for ((bits, w), v) in samples.iter().zip(&values) {
        let g = base + bits.iter().zip(&phi).filter(|p| *p.0).map(|p| p.1).sum::<f64>();
        rss += w * (v - g).powi(2);
        tss += w * (v - mean).powi(2);
    }
    Ok(result(phi, surrogate::r_squared(rss, tss), degraded))
}
