//! Fairness verdicts on global explanations, the kurtosis cutoff, the
//! dropout ensemble and rank-diff reports.

mod ensemble;
mod kurtosis;
mod workflow;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::csv_field;
use crate::error::{Error, Result};
use crate::global::GlobalExplanation;

pub use ensemble::{
    aggregate_probabilities, build_tabular_ensemble, build_text_ensemble, FeatureSubsetModel, FixOutEnsemble, Member,
};
pub use kurtosis::{find_k, kurtosis, FindK};
pub use workflow::{fixout_tabular, fixout_text, FixOutOutcome, FixOutSettings};

/// Reports show ranks up to this position; later ones print as `>500`.
pub const RANK_WINDOW: usize = 500;

/// How many top features the verdict inspects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KSpec {
    Manual(usize),
    /// Kurtosis cutoff with threshold `alpha` on absolute contributions.
    Auto { alpha: f64, restore: bool },
}

impl KSpec {
    pub fn auto(alpha: f64) -> Self {
        KSpec::Auto { alpha, restore: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KSource {
    Manual,
    FindK,
}

impl fmt::Display for KSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KSource::Manual => "manual",
            KSource::FindK => "find-k",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessVerdict {
    pub unfair: bool,
    /// The inspected head of the global explanation, in rank order.
    pub top_k: Vec<(String, f64)>,
    /// Sensitive units found in `top_k`, in rank order.
    pub flagged: Vec<String>,
    pub k_used: usize,
    pub k_source: KSource,
}

/// Deems the model unfair when a sensitive unit appears among the top `k`
/// entries. A manual `k` above the number of entries is clamped.
pub fn assess_fairness<S: AsRef<str>>(global: &GlobalExplanation, sensitive: &[S], k: KSpec) -> Result<FairnessVerdict> {
    let d = global.len();
    let (k_used, k_source) = match k {
        KSpec::Manual(0) => return Err(Error::InvalidArgument("k must be at least 1".into())),
        KSpec::Manual(k) if k > d => {
            log::warn!("k = {k} exceeds the {d} explained features; using {d}");
            (d, KSource::Manual)
        }
        KSpec::Manual(k) => (k, KSource::Manual),
        KSpec::Auto { alpha, restore } => {
            let magnitudes: Vec<f64> = global.entries.iter().map(|e| e.contribution.abs()).collect();
            (find_k(&magnitudes, alpha, restore)?.k, KSource::FindK)
        }
    };
    let top_k: Vec<(String, f64)> = global
        .top(k_used)
        .iter()
        .map(|e| (e.feature.clone(), e.contribution))
        .collect();
    let flagged: Vec<String> = top_k
        .iter()
        .filter(|(name, _)| sensitive.iter().any(|s| s.as_ref() == name))
        .map(|(name, _)| name.clone())
        .collect();
    Ok(FairnessVerdict {
        unfair: !flagged.is_empty(),
        top_k,
        flagged,
        k_used,
        k_source,
    })
}

/// `(after - before) / min(before, after)` for 1-based ranks.
pub fn rank_diff(before: usize, after: usize) -> Result<f64> {
    if before == 0 || after == 0 {
        return Err(Error::InvalidArgument("ranks are 1-based".into()));
    }
    Ok((after as f64 - before as f64) / before.min(after) as f64)
}

/// Two decimals, truncated toward zero.
pub fn format_diff(diff: f64) -> String {
    let t = ((diff * 100.0) + diff.signum() * 1e-9).trunc() / 100.0;
    let t = if t == 0.0 { 0.0 } else { t };
    format!("{t:.2}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDiffEntry {
    pub unit: String,
    /// 1-based rank; `None` when the unit was not explained at all.
    pub rank_before: Option<usize>,
    pub contrib_before: f64,
    pub rank_after: Option<usize>,
    pub contrib_after: f64,
    /// Ranks beyond the window count as the window size.
    pub diff: f64,
}

impl RankDiffEntry {
    /// Rank and mean contribution of `unit` before and after the repair.
    pub fn compare(unit: &str, before: &GlobalExplanation, after: &GlobalExplanation, window: usize) -> Self {
        let lookup = |g: &GlobalExplanation| g.entry(unit).map(|e| (e.rank + 1, e.contribution));
        let (rank_before, contrib_before) = split(lookup(before));
        let (rank_after, contrib_after) = split(lookup(after));
        let capped = |r: Option<usize>| r.map_or(window, |r| r.min(window));
        RankDiffEntry {
            unit: unit.to_string(),
            rank_before,
            contrib_before,
            rank_after,
            contrib_after,
            diff: rank_diff(capped(rank_before), capped(rank_after)).expect("window is positive"),
        }
    }
}

fn split(found: Option<(usize, f64)>) -> (Option<usize>, f64) {
    match found {
        Some((r, c)) => (Some(r), c),
        None => (None, 0.0),
    }
}

/// Report CSV; ranks beyond `window` print as `>window` with `-` for the
/// contribution.
pub fn rank_diff_csv(entries: &[RankDiffEntry], window: usize) -> String {
    let mut out = String::from("unit,rank_before,contrib_before,rank_after,contrib_after,diff\n");
    let cell = |rank: Option<usize>, contrib: f64| match rank {
        Some(r) if r <= window => (r.to_string(), contrib.to_string()),
        _ => (format!(">{window}"), "-".to_string()),
    };
    for e in entries {
        let (rb, cb) = cell(e.rank_before, e.contrib_before);
        let (ra, ca) = cell(e.rank_after, e.contrib_after);
        out.push_str(&format!(
            "{},{rb},{cb},{ra},{ca},{}\n",
            csv_field(&e.unit),
            format_diff(e.diff)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::ExplainerKind;
    use crate::global::{GlobalEntry, Strategy};

    fn global(pairs: &[(&str, f64)]) -> GlobalExplanation {
        let mut entries: Vec<GlobalEntry> = pairs
            .iter()
            .map(|&(f, c)| GlobalEntry {
                feature: f.to_string(),
                contribution: c,
                total: c,
                rank: 0,
            })
            .collect();
        entries.sort_by(|a, b| b.contribution.abs().total_cmp(&a.contribution.abs()));
        for (r, e) in entries.iter_mut().enumerate() {
            e.rank = r;
        }
        GlobalExplanation {
            entries,
            sample_size: 1,
            strategy: Strategy::Rs,
            explainer: ExplainerKind::Lime,
            instance_ids: vec![0],
        }
    }

    #[test]
    fn published_diff_values() {
        for (b, a, shown) in [(14, 30, "1.14"), (12, 29, "1.41"), (7, 55, "6.85"), (20, 12, "-0.66"), (5, 5, "0.00")] {
            assert_eq!(format_diff(rank_diff(b, a).unwrap()), shown);
        }
        assert!(rank_diff(0, 3).is_err());
        assert_eq!(format_diff(29.0 / 100.0), "0.29");
        assert_eq!(format_diff(-1e-4), "0.00");
    }

    #[test]
    fn verdict_on_german_like_ranking() {
        let g = global(&[
            ("checkingaccount", -10.75),
            ("duration", 5.1),
            ("statussex", 4.0),
            ("credithistory", 3.9),
            ("amount", -3.0),
            ("savings", 2.5),
            ("telephone", 2.0),
            ("purpose", 1.9),
            ("age", 1.5),
            ("housing", 1.2),
            ("foreignworker", 0.3),
        ]);
        let sensitive = ["statussex", "telephone", "foreignworker"];
        let v = assess_fairness(&g, &sensitive, KSpec::Manual(10)).unwrap();
        assert!(v.unfair);
        assert_eq!(v.flagged, vec!["statussex", "telephone"]);
        assert_eq!(v.top_k[0].0, "checkingaccount");
        assert!(!assess_fairness(&g, &[] as &[&str], KSpec::Manual(10)).unwrap().unfair);
        let one = assess_fairness(&g, &["checkingaccount"], KSpec::Manual(1)).unwrap();
        assert!(one.unfair && one.flagged.len() == 1);
        let clamped = assess_fairness(&g, &sensitive, KSpec::Manual(99)).unwrap();
        assert_eq!(clamped.k_used, 11);
        assert_eq!(clamped.flagged.len(), 3);
        assert!(assess_fairness(&g, &sensitive, KSpec::Manual(0)).is_err());
        let auto = assess_fairness(&g, &sensitive, KSpec::auto(0.5)).unwrap();
        assert_eq!(auto.k_source, KSource::FindK);
        assert!(auto.k_used >= 1 && auto.k_used <= 11);
    }

    #[test]
    fn verdict_is_monotone_in_k() {
        let g = global(&[("a", 5.0), ("b", 4.0), ("s", 3.0), ("c", 2.0), ("d", 1.0)]);
        let unfair: Vec<bool> = (1..=5)
            .map(|k| assess_fairness(&g, &["s"], KSpec::Manual(k)).unwrap().unfair)
            .collect();
        assert_eq!(unfair, vec![false, false, true, true, true]);
    }

    #[test]
    fn report_marks_units_beyond_the_window() {
        let before = global(&[("a", 3.0), ("nig", 2.0), ("b", 1.0)]);
        let after = global(&[("a", 3.0), ("b", 1.0), ("nig", 0.0)]);
        let e = RankDiffEntry::compare("nig", &before, &after, 2);
        assert_eq!((e.rank_before, e.rank_after), (Some(2), Some(3)));
        assert_eq!(e.diff, 0.0);
        let e = RankDiffEntry::compare("nig", &before, &after, RANK_WINDOW);
        assert_eq!(e.diff, 0.5);
        let missing = RankDiffEntry::compare("zzz", &before, &after, 2);
        assert_eq!(missing.diff, 0.0);
        let csv = rank_diff_csv(&[RankDiffEntry::compare("nig", &before, &after, 2), missing], 2);
        assert_eq!(
            csv,
            "unit,rank_before,contrib_before,rank_after,contrib_after,diff\nnig,2,2,>2,-,0.00\nzzz,>2,-,>2,-,0.00\n"
        );
    }
}
