//! Turns permutation distributions into p-values, confidence intervals and
//! multiplicity-corrected quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serde_ext::ext_f64_vec;
use crate::types::{Interval, Tail};

/// Relative tolerance under which two statistics count as tied. Equal
/// statistics reached through different arithmetic (the observed value and
/// its own rearrangement, or mirror-image partitions) must compare as equal.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// How a statistic family measures extremeness and builds intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatScale {
    /// t and z: symmetric about 0, intervals scaled by a standard error.
    Location,
    /// F: a positive ratio, symmetric about 1 on the log scale.
    Ratio,
    /// r: symmetric about 0 and confined to [-1, 1].
    Bounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullDistribution {
    #[serde(with = "ext_f64_vec")]
    pub values: Vec<f64>,
    pub tail: Tail,
    pub scale: StatScale,
    /// Built by max reduction across variables.
    pub corrected: bool,
    pub n_vars_joined: usize,
    /// Every distinct rearrangement was enumerated once.
    pub exact: bool,
}

impl NullDistribution {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Maps a statistic to a value where larger means more extreme for `tail`.
pub fn extreme(v: f64, tail: Tail, scale: StatScale) -> f64 {
    match tail {
        Tail::Right => v,
        Tail::Left => -v,
        Tail::TwoTailed => match scale {
            StatScale::Location | StatScale::Bounded => v.abs(),
            StatScale::Ratio => {
                if v <= 0.0 {
                    f64::INFINITY
                } else {
                    v.max(1.0 / v)
                }
            }
        },
    }
}

/// True when `candidate` is at least as extreme as `observed` (both already
/// passed through [`extreme`]).
#[inline]
pub fn at_least_as_extreme(candidate: f64, observed: f64) -> bool {
    candidate >= observed - TIE_TOLERANCE * observed.abs().max(1.0)
}

/// Per-row reduction of a rearrangements × variables matrix: largest |value|
/// (two-tailed), largest value (right) or smallest value (left).
pub fn max_reduce(rows: &[Vec<f64>], tail: Tail) -> NullDistribution {
    max_reduce_scaled(rows, tail, StatScale::Location)
}

pub fn max_reduce_scaled(rows: &[Vec<f64>], tail: Tail, scale: StatScale) -> NullDistribution {
    assert!(!rows.is_empty(), "max_reduce needs at least one rearrangement");
    let n_vars = rows[0].len();
    let values = rows
        .iter()
        .map(|row| reduce_row(row, tail, scale))
        .collect();
    NullDistribution {
        values,
        tail,
        scale,
        corrected: true,
        n_vars_joined: n_vars,
        exact: false,
    }
}

/// Most extreme entry of one rearrangement, in the representation stored in
/// a corrected distribution.
pub fn reduce_row(row: &[f64], tail: Tail, scale: StatScale) -> f64 {
    match tail {
        Tail::TwoTailed => row
            .iter()
            .map(|&v| extreme(v, tail, scale))
            .fold(f64::NEG_INFINITY, f64::max),
        Tail::Right => row.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Tail::Left => row.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

/// Proportion of the distribution at least as extreme as `observed`.
///
/// Monte Carlo distributions count the observed arrangement once more:
/// p = (1 + #hits) / (n + 1). Exhaustive distributions already contain it,
/// so the plain proportion is returned.
pub fn pvalue(observed: f64, dist: &NullDistribution) -> f64 {
    assert!(!dist.is_empty(), "empty null distribution");
    let obs = extreme(observed, dist.tail, dist.scale);
    let hits = dist
        .values
        .iter()
        .filter(|&&d| at_least_as_extreme(extreme(d, dist.tail, dist.scale), obs))
        .count();
    p_from_count(hits, dist.len(), dist.exact)
}

pub(crate) fn p_from_count(hits: usize, n: usize, exact: bool) -> f64 {
    if exact {
        hits as f64 / n as f64
    } else {
        (1 + hits) as f64 / (n + 1) as f64
    }
}

/// Linear-interpolation percentile: rank position 1 + pct/100 · (n − 1) on
/// the sorted values.
pub fn percentile(values: &[f64], pct: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of an empty sequence");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, pct)
}

pub fn percentile_sorted(sorted: &[f64], pct: f64) -> f64 {
    let n = sorted.len();
    let pos = (pct.clamp(0.0, 100.0) / 100.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        return sorted[lo];
    }
    let frac = pos - lo as f64;
    let (a, b) = (sorted[lo], sorted[hi]);
    if a == b {
        a
    } else {
        a + frac * (b - a)
    }
}

/// Confidence interval for the tested quantity using the permutation
/// distribution's 100(1 − alpha) percentile of extremeness as critical value.
///
/// * Location (t, z): estimate ± crit · se, one-sided bounds at ±∞.
/// * Ratio (F): (F / crit, F · crit) for two tails, (F / crit, ∞) right,
///   (0, F / q_alpha) left.
/// * Bounded (r): (r − q, r + q) clamped to [−1, 1]; one-sided intervals end
///   at the support bound.
pub fn ci_from_dist(
    estimate: f64,
    se: Option<f64>,
    dist: &NullDistribution,
    alpha: f64,
) -> Result<Interval> {
    assert!(!dist.is_empty(), "empty null distribution");
    let ext: Vec<f64> = dist
        .values
        .iter()
        .map(|&d| extreme(d, dist.tail, dist.scale))
        .collect();
    let crit = percentile(&ext, 100.0 * (1.0 - alpha));
    Ok(match dist.scale {
        StatScale::Location => {
            let se = se.ok_or(Error::SeUnavailable {
                family: "location".into(),
            })?;
            match dist.tail {
                Tail::TwoTailed => Interval::new(estimate - crit * se, estimate + crit * se),
                Tail::Right => Interval::new(estimate - crit * se, f64::INFINITY),
                Tail::Left => Interval::new(f64::NEG_INFINITY, estimate + crit * se),
            }
        }
        StatScale::Ratio => match dist.tail {
            Tail::TwoTailed => Interval::new(estimate / crit, estimate * crit),
            Tail::Right => Interval::new(estimate / crit, f64::INFINITY),
            // crit is the negated lower alpha-quantile of the ratio.
            Tail::Left => Interval::new(0.0, estimate / (-crit)),
        },
        StatScale::Bounded => {
            let clamp = |v: f64| v.clamp(-1.0, 1.0);
            match dist.tail {
                Tail::TwoTailed => Interval::new(clamp(estimate - crit), clamp(estimate + crit)),
                Tail::Right => Interval::new(clamp(estimate - crit), 1.0),
                Tail::Left => Interval::new(-1.0, clamp(estimate + crit)),
            }
        }
    })
}

/// min(1, m · p_i)
pub fn adjust_bonferroni(p: &[f64], m: usize) -> Vec<f64> {
    p.iter().map(|&pi| (pi * m as f64).min(1.0)).collect()
}

/// Holm step-down adjustment; output order matches the input.
pub fn adjust_holm(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut out = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (rank, &idx) in order.iter().enumerate() {
        running = running.max((p[idx] * (m - rank) as f64).min(1.0));
        out[idx] = running;
    }
    out
}
