use crate::error::{Error, Result};

/// Pearson (non-excess) kurtosis `mean(((x - mean) / sd)^4)` with the
/// population standard deviation.
pub fn kurtosis(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::Degenerate("kurtosis needs at least two values".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if !(m2 > 1e-300) || m2.sqrt() <= 1e-12 * mean.abs() {
        return Err(Error::Degenerate("kurtosis of a zero-variance list".into()));
    }
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    Ok(m4 / (m2 * m2))
}

/// Outcome of the kurtosis-based cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FindK {
    /// Length of the retained head.
    pub k: usize,
    /// Whether some removal moved the kurtosis by more than the threshold.
    pub triggered: bool,
}

/// Kurtosis-based cutoff on a list sorted by decreasing magnitude. Removes
/// the last element repeatedly and stops right after the first removal
/// whose remaining list has a kurtosis differing from the full list's by
/// more than `alpha`. The triggering element stays removed unless
/// `restore_trigger` is set. When nothing triggers the head element alone
/// is kept. Steps with zero variance never trigger, and a full list with
/// zero variance keeps every element.
pub fn find_k(values: &[f64], alpha: f64, restore_trigger: bool) -> Result<FindK> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {alpha}")));
    }
    let n = values.len();
    if n < 2 {
        return Ok(FindK { k: n, triggered: false });
    }
    let Ok(full) = kurtosis(values) else {
        return Ok(FindK { k: n, triggered: false });
    };
    for len in (1..n).rev() {
        let step = if len >= 2 { kurtosis(&values[..len]).ok() } else { None };
        if let Some(h) = step {
            if (full - h).abs() > alpha {
                let k = if restore_trigger { len + 1 } else { len };
                return Ok(FindK { k, triggered: true });
            }
        }
    }
    Ok(FindK { k: 1, triggered: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn hand_values() {
        assert_eq!(kurtosis(&[-1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(kurtosis(&[-1.0, 0.0, 1.0]).unwrap(), 1.5);
        assert!(kurtosis(&[2.0, 2.0, 2.0]).is_err());
        assert!(kurtosis(&[1.0]).is_err());
    }

    #[test]
    fn normal_sample_is_mesokurtic() {
        let mut rng = rng_from_seed(2024);
        let xs: Vec<f64> = (0..1_000_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!((kurtosis(&xs).unwrap() - 3.0).abs() < 0.05);
    }

    #[test]
    fn long_flat_tail_stops_inside_the_tail() {
        // Kurtosis of the full list is 3.2506; dropping 0.03 gives 2.7862
        // (step 0.46) and dropping 0.04 as well gives 2.3338 (step 0.92), so
        // the cut lands two places into the flat tail.
        let l = [100.0, 99.0, 0.1, 0.09, 0.08, 0.07, 0.06, 0.05, 0.04, 0.03];
        assert!((kurtosis(&l).unwrap() - 3.2505517).abs() < 1e-6);
        assert_eq!(find_k(&l, 0.5, false).unwrap(), FindK { k: 8, triggered: true });
        assert_eq!(find_k(&l, 0.5, true).unwrap().k, 9);
    }

    #[test]
    fn short_tail_is_cut_at_head_boundary() {
        let l = [10.0, 9.0, 8.5, 8.0, 7.0, 0.02];
        // full 3.6779, without the tail value 2.05
        let r = find_k(&l, 0.5, false).unwrap();
        assert_eq!(r, FindK { k: 5, triggered: true });
    }

    #[test]
    fn huge_threshold_keeps_head_only() {
        let l = [5.0, 4.0, 1.0, 0.5];
        assert_eq!(find_k(&l, 1e9, false).unwrap(), FindK { k: 1, triggered: false });
        assert_eq!(find_k(&[3.0], 0.5, false).unwrap().k, 1);
        assert_eq!(find_k(&[], 0.5, false).unwrap().k, 0);
        assert!(find_k(&l, 0.0, false).is_err());
        assert_eq!(find_k(&[2.0, 2.0, 2.0], 0.5, false).unwrap().k, 3);
    }

    #[test]
    fn threshold_just_below_largest_step_stops_there() {
        let l = [9.0, 8.0, 3.0, 2.9, 2.8, 0.5, 0.4];
        let full = kurtosis(&l).unwrap();
        let steps: Vec<(usize, f64)> = (2..l.len()).rev().map(|len| (len, (full - kurtosis(&l[..len]).unwrap()).abs())).collect();
        let (len, biggest) = steps.iter().copied().fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        let first_at_or_above = steps.iter().find(|s| s.1 > biggest - 1e-9).unwrap().0;
        assert_eq!(first_at_or_above, len);
        assert_eq!(find_k(&l, biggest - 1e-9, false).unwrap().k, len);
    }

    proptest! {
        #[test]
        fn larger_threshold_never_keeps_more(raw in prop::collection::vec(0.0f64..10.0, 2..15), a in 0.05f64..3.0, b in 0.05f64..3.0) {
            let mut l = raw.clone();
            l.sort_by(|x, y| y.total_cmp(x));
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let k_lo = find_k(&l, lo, false).unwrap().k;
            let k_hi = find_k(&l, hi, false).unwrap().k;
            prop_assert!(k_lo >= k_hi);
        }
    }
}
