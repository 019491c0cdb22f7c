//! Test statistics on original data.
//!
//! The functions here compute observed statistics with two-pass arithmetic
//! and report degenerate inputs as [`Error::ZeroVariance`]. The permutation
//! loops use the sufficient-statistic evaluators in `rearranged`.

pub(crate) mod rearranged;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reference::distributions::norm_inv;
use crate::types::{Dof, SampleSummary, VarAssumption};

/// A variance counts as zero when it is below this fraction of the data's
/// mean square (standard deviation below 1e-12 of the data's magnitude).
pub(crate) const NEGLIGIBLE: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatValue {
    pub statistic: f64,
    pub df: Dof,
    pub se: Option<f64>,
    pub estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    #[default]
    Pearson,
    Spearman,
    Rankit,
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub(crate) fn mean_square(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

pub(crate) fn negligible(var: f64, mean_sq: f64) -> bool {
    var <= NEGLIGIBLE * mean_sq
}

/// Mean and n − 1 standard deviation.
pub fn summary(sample: &[f64]) -> SampleSummary {
    let n = sample.len();
    assert!(n >= 1, "summary of an empty sample");
    let m = mean(sample);
    let sd = if n < 2 {
        0.0
    } else {
        let ss: f64 = sample.iter().map(|v| (v - m) * (v - m)).sum();
        (ss / (n - 1) as f64).sqrt()
    };
    SampleSummary { n, mean: m, sd }
}

pub fn median(x: &[f64]) -> f64 {
    assert!(!x.is_empty(), "median of an empty sample");
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn require_len(n: usize, min: usize, what: &'static str) -> Result<()> {
    if n < min {
        Err(Error::DimensionTooSmall { what: what.into(), min, got: n })
    } else {
        Ok(())
    }
}

/// Two-sample t from group summaries. Student's t pools the variances with
/// df = nx + ny − 2; Welch's t uses unpooled variances and the
/// Welch–Satterthwaite df. `estimate` is the mean difference.
pub fn t_two_sample_from_summaries(
    sx: &SampleSummary,
    sy: &SampleSummary,
    var: VarAssumption,
) -> Result<StatValue> {
    require_len(sx.n, 2, "group X")?;
    require_len(sy.n, 2, "group Y")?;
    let (nx, ny) = (sx.n as f64, sy.n as f64);
    let (vx, vy) = (sx.sd * sx.sd, sy.sd * sy.sd);
    let diff = sx.mean - sy.mean;
    let (se, df) = match var {
        VarAssumption::Equal => {
            let sp2 = ((nx - 1.0) * vx + (ny - 1.0) * vy) / (nx + ny - 2.0);
            ((sp2 * (1.0 / nx + 1.0 / ny)).sqrt(), nx + ny - 2.0)
        }
        VarAssumption::Unequal => {
            let (a, b) = (vx / nx, vy / ny);
            let df = (a + b) * (a + b) / (a * a / (nx - 1.0) + b * b / (ny - 1.0));
            ((a + b).sqrt(), df)
        }
    };
    if !(se > 0.0) {
        return Err(Error::zero_variance("two-sample t: standard error is zero"));
    }
    Ok(StatValue {
        statistic: diff / se,
        df: Dof::One(df),
        se: Some(se),
        estimate: diff,
    })
}

pub fn t_two_sample(x: &[f64], y: &[f64], var: VarAssumption) -> Result<StatValue> {
    require_len(x.len(), 2, "group X")?;
    require_len(y.len(), 2, "group Y")?;
    let (sx, sy) = (summary(x), summary(y));
    if negligible(sx.sd * sx.sd, mean_square(x)) && negligible(sy.sd * sy.sd, mean_square(y)) {
        return Err(Error::zero_variance("two-sample t: both groups are constant"));
    }
    t_two_sample_from_summaries(&sx, &sy, var)
}

/// One-sample t against `mu`. For paired designs pass the differences.
pub fn t_one_sample(x: &[f64], mu: f64) -> Result<StatValue> {
    require_len(x.len(), 2, "one-sample t")?;
    let s = summary(x);
    let dev_sq = x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / x.len() as f64;
    if negligible(s.sd * s.sd, dev_sq.max(mean_square(x))) {
        return Err(Error::zero_variance("one-sample t: sample is constant"));
    }
    let se = s.sd / (s.n as f64).sqrt();
    Ok(StatValue {
        statistic: (s.mean - mu) / se,
        df: Dof::One((s.n - 1) as f64),
        se: Some(se),
        estimate: s.mean - mu,
    })
}

/// Variance ratio sx² / sy² with df (nx − 1, ny − 1).
pub fn f_two_sample(x: &[f64], y: &[f64]) -> Result<StatValue> {
    require_len(x.len(), 2, "group X")?;
    require_len(y.len(), 2, "group Y")?;
    let (sx, sy) = (summary(x), summary(y));
    if negligible(sy.sd * sy.sd, mean_square(y)) {
        return Err(Error::zero_variance("variance ratio: group Y is constant"));
    }
    let f = (sx.sd * sx.sd) / (sy.sd * sy.sd);
    Ok(StatValue {
        statistic: f,
        df: Dof::Two((sx.n - 1) as f64, (sy.n - 1) as f64),
        se: None,
        estimate: f,
    })
}

/// One-sample z with known `sigma`.
pub fn z_one_sample(x: &[f64], mu: f64, sigma: f64) -> Result<StatValue> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::SigmaNonPositive { sigma });
    }
    require_len(x.len(), 1, "one-sample z")?;
    let se = sigma / (x.len() as f64).sqrt();
    let est = mean(x) - mu;
    Ok(StatValue {
        statistic: est / se,
        df: Dof::None,
        se: Some(se),
        estimate: est,
    })
}

/// Midranks: tied values share the average of the ranks they span.
pub fn rank_transform(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[order[j]] == x[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) hold ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Normal score for a (possibly fractional) rank under the (r − 0.5)/n
/// plotting position. Upper-half scores are computed by reflection so the
/// scores are exactly antisymmetric.
fn rankit_of(rank: f64, n: usize) -> f64 {
    let n = n as f64;
    let lower = rank - 0.5;
    let upper = n - rank + 0.5;
    if lower <= upper {
        norm_inv(lower / n).expect("plotting position lies in (0, 1)")
    } else {
        -norm_inv(upper / n).expect("plotting position lies in (0, 1)")
    }
}

/// Φ⁻¹((i − 0.5)/n) for i = 1..n.
pub fn rankit_scores(n: usize) -> Vec<f64> {
    (1..=n).map(|i| rankit_of(i as f64, n)).collect()
}

/// Midranks replaced by their normal scores.
pub fn rankit_transform(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    rank_transform(x).into_iter().map(|r| rankit_of(r, n)).collect()
}

/// The transform a correlation kind applies before Pearson's formula.
pub fn correlation_transform(x: &[f64], kind: CorrelationKind) -> Vec<f64> {
    match kind {
        CorrelationKind::Pearson => x.to_vec(),
        CorrelationKind::Spearman => rank_transform(x),
        CorrelationKind::Rankit => rankit_transform(x),
    }
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (&u, &v) in a.iter().zip(b) {
        let (du, dv) = (u - ma, v - mb);
        sab += du * dv;
        saa += du * du;
        sbb += dv * dv;
    }
    let n = a.len() as f64;
    if negligible(saa / n, mean_square(a)) || negligible(sbb / n, mean_square(b)) {
        return Err(Error::zero_variance("correlation: a variable is constant"));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

pub fn correlation(x: &[f64], y: &[f64], kind: CorrelationKind) -> Result<StatValue> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "correlation needs equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    require_len(x.len(), 3, "correlation")?;
    let r = pearson(
        &correlation_transform(x, kind),
        &correlation_transform(y, kind),
    )?;
    Ok(StatValue {
        statistic: r,
        df: Dof::One((x.len() - 2) as f64),
        se: None,
        estimate: r,
    })
}

/// One-way ANOVA F = MS_between / MS_within, df (k − 1, N − k).
pub fn anova1_f<G: AsRef<[f64]>>(groups: &[G]) -> Result<StatValue> {
    let k = groups.len();
    require_len(k, 2, "one-way ANOVA groups")?;
    for g in groups {
        require_len(g.as_ref().len(), 2, "one-way ANOVA group")?;
    }
    let all: Vec<f64> = groups.iter().flat_map(|g| g.as_ref().iter().copied()).collect();
    let n = all.len();
    let grand = mean(&all);
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in groups {
        let g = g.as_ref();
        let m = mean(g);
        ssb += g.len() as f64 * (m - grand) * (m - grand);
        ssw += g.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    }
    if negligible(ssw / n as f64, mean_square(&all)) {
        return Err(Error::zero_variance("one-way ANOVA: within-group variance is zero"));
    }
    let (df1, df2) = ((k - 1) as f64, (n - k) as f64);
    let f = (ssb / df1) / (ssw / df2);
    Ok(StatValue {
        statistic: f,
        df: Dof::Two(df1, df2),
        se: None,
        estimate: f,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anova2Stats {
    pub factor_a: StatValue,
    pub factor_b: StatValue,
    pub interaction: StatValue,
}

/// Balanced two-way fixed-effects ANOVA. `cells[i][j]` holds the replicates
/// for level i of factor A and level j of factor B.
pub fn anova2_f(cells: &[Vec<Vec<f64>>]) -> Result<Anova2Stats> {
    let (a, b, r) = balanced_dims(cells)?;
    let n = (a * b * r) as f64;
    let all: Vec<f64> = cells.iter().flatten().flatten().copied().collect();
    let grand = mean(&all);
    let cell_mean: Vec<Vec<f64>> = cells
        .iter()
        .map(|row| row.iter().map(|c| mean(c)).collect())
        .collect();
    let row_mean: Vec<f64> = cell_mean.iter().map(|row| mean(row)).collect();
    let col_mean: Vec<f64> = (0..b)
        .map(|j| cell_mean.iter().map(|row| row[j]).sum::<f64>() / a as f64)
        .collect();
    let ss_a = (b * r) as f64 * row_mean.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_b = (a * r) as f64 * col_mean.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let mut ss_ab = 0.0;
    let mut ss_e = 0.0;
    for i in 0..a {
        for j in 0..b {
            let inter = cell_mean[i][j] - row_mean[i] - col_mean[j] + grand;
            ss_ab += r as f64 * inter * inter;
            ss_e += cells[i][j]
                .iter()
                .map(|v| (v - cell_mean[i][j]).powi(2))
                .sum::<f64>();
        }
    }
    if negligible(ss_e / n, mean_square(&all)) {
        return Err(Error::zero_variance("two-way ANOVA: error variance is zero"));
    }
    let df_e = (a * b * (r - 1)) as f64;
    let ms_e = ss_e / df_e;
    let make = |ss: f64, df: f64| {
        let f = (ss / df) / ms_e;
        StatValue {
            statistic: f,
            df: Dof::Two(df, df_e),
            se: None,
            estimate: f,
        }
    };
    Ok(Anova2Stats {
        factor_a: make(ss_a, (a - 1) as f64),
        factor_b: make(ss_b, (b - 1) as f64),
        interaction: make(ss_ab, ((a - 1) * (b - 1)) as f64),
    })
}

/// (levels of A, levels of B, replicates per cell) of a balanced grid.
pub(crate) fn balanced_dims(cells: &[Vec<Vec<f64>>]) -> Result<(usize, usize, usize)> {
    let a = cells.len();
    require_len(a, 2, "levels of factor A")?;
    let b = cells[0].len();
    require_len(b, 2, "levels of factor B")?;
    if cells.iter().any(|row| row.len() != b) {
        return Err(Error::Unbalanced("factor B levels differ between rows".into()));
    }
    let r = cells[0][0].len();
    for (i, row) in cells.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            if c.len() != r {
                return Err(Error::Unbalanced(format!(
                    "cell ({i}, {j}) has {} replicates, expected {r}",
                    c.len()
                )));
            }
        }
    }
    require_len(r, 2, "replicates per cell")?;
    Ok((a, b, r))
}
