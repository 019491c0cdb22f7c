//! Permutation tests for each statistic family.
//!
//! Every entry point follows the same path: compute the observed statistic
//! per variable, pick a resampling plan (exact when small enough), evaluate
//! all draws, then turn counts into p-values and intervals according to the
//! configured correction. A variable whose observed statistic is undefined
//! is reported as failed and left out of the joint max distribution.

pub(crate) mod engine;

use std::fmt::Display;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{
    adjust_bonferroni, adjust_holm, ci_from_dist, p_from_count, pvalue, NullDistribution, StatScale,
};
use crate::kernels::rearranged::{
    Evaluator, OneWay, RowPermCorr, SignFlip, TwoSampleT, TwoWay, VarianceRatio,
};
use crate::kernels::{self, CorrelationKind, StatValue};
use crate::resample::{ResampleKind, ResamplePlan};
use crate::types::{
    CorrectionMethod, DataMatrix, NullDistributions, Outcome, PermutationResult, SampleSummary,
    StatisticKind, Tail, TestConfig, TestKind, VarAssumption, VariableStat, Warning,
};
use engine::{EngineOutput, Observed};

/// Default variable labels: var1, var2, ...
pub fn default_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("var{i}")).collect()
}

/// Unordered variable pairs (i, j), i < j, in the order correlation-matrix
/// results list them.
pub fn pair_indices(k: usize) -> Vec<(usize, usize)> {
    (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .collect()
}

struct Family {
    test: TestKind,
    kind: StatisticKind,
    scale: StatScale,
}

struct Prepared {
    family: Family,
    labels: Vec<String>,
    observed: Vec<Result<StatValue>>,
    summaries: Vec<Vec<SampleSummary>>,
    warnings: Vec<Warning>,
}

fn observed_values(observed: &[Result<StatValue>]) -> Vec<Option<f64>> {
    observed
        .iter()
        .map(|o| o.as_ref().ok().map(|s| s.statistic))
        .collect()
}

fn run_family<E: Evaluator>(
    prep: Prepared,
    ev: &E,
    plan: &ResamplePlan,
    cfg: &TestConfig,
) -> PermutationResult {
    let values = observed_values(&prep.observed);
    let out = engine::run(
        ev,
        plan,
        &Observed {
            values: &values,
            tail: cfg.tail,
            scale: prep.family.scale,
        },
        cfg.correction != CorrectionMethod::Max,
    );
    assemble(prep, out, plan, cfg)
}

fn assemble(
    prep: Prepared,
    out: EngineOutput,
    plan: &ResamplePlan,
    cfg: &TestConfig,
) -> PermutationResult {
    let Prepared {
        family,
        labels,
        observed,
        summaries,
        mut warnings,
    } = prep;
    let n_draws = plan.n_draws;
    if plan.exact {
        warnings.retain(|w| !matches!(w, Warning::LowPermutationCount { .. }));
    }
    let active: Vec<usize> = (0..observed.len()).filter(|&v| observed[v].is_ok()).collect();
    let m = active.len();
    let dist = |values: Vec<f64>, corrected: bool, joined: usize| NullDistribution {
        values,
        tail: cfg.tail,
        scale: family.scale,
        corrected,
        n_vars_joined: joined,
        exact: plan.exact,
    };

    let p_unc: Vec<f64> = out
        .hits
        .iter()
        .map(|&h| p_from_count(h, n_draws, plan.exact))
        .collect();

    let mut p = vec![f64::NAN; observed.len()];
    let mut ci_alpha = cfg.alpha;
    let null_distribution = match cfg.correction {
        CorrectionMethod::Max if m > 0 => {
            let shared = dist(out.maxima, true, m);
            for &v in &active {
                let stat = observed[v].as_ref().expect("active").statistic;
                p[v] = pvalue(stat, &shared);
            }
            NullDistributions::Shared(shared)
        }
        CorrectionMethod::Max => NullDistributions::PerVariable(vec![None; observed.len()]),
        other => {
            let active_p: Vec<f64> = active.iter().map(|&v| p_unc[v]).collect();
            let adjusted = match other {
                CorrectionMethod::Bonferroni => adjust_bonferroni(&active_p, m),
                CorrectionMethod::Holm => adjust_holm(&active_p),
                _ => active_p,
            };
            for (&v, q) in active.iter().zip(adjusted) {
                p[v] = q;
            }
            if matches!(other, CorrectionMethod::Bonferroni | CorrectionMethod::Holm) && m > 0 {
                ci_alpha = cfg.alpha / m as f64;
            }
            let mut columns = out.columns.into_iter();
            NullDistributions::PerVariable(
                (0..observed.len())
                    .map(|v| {
                        let col = columns.next().expect("one column per output");
                        observed[v].is_ok().then(|| dist(col, false, 1))
                    })
                    .collect(),
            )
        }
    };

    let outcomes = observed
        .into_iter()
        .enumerate()
        .map(|(v, obs)| match obs {
            Ok(s) => {
                let d = null_distribution
                    .for_variable(v)
                    .expect("tested variables have a distribution");
                let ci = ci_from_dist(s.estimate, s.se, d, ci_alpha)
                    .expect("every family supplies what its interval needs");
                Outcome::Tested(VariableStat {
                    statistic: s.statistic,
                    df: s.df,
                    p: p[v],
                    p_uncorrected: p_unc[v],
                    ci,
                    estimate: s.estimate,
                    se: s.se,
                })
            }
            Err(error) => {
                warnings.push(Warning::VariableFailed {
                    label: labels[v].clone(),
                    error: error.clone(),
                });
                Outcome::Failed { error }
            }
        })
        .collect();

    PermutationResult {
        test: family.test,
        statistic_kind: family.kind,
        labels,
        outcomes,
        summaries,
        null_distribution,
        exact: plan.exact,
        n_rearrangements: n_draws,
        config: *cfg,
        warnings,
    }
}

fn per_variable(values: &[f64], n_vars: usize, what: &str) -> Result<Vec<f64>> {
    match values.len() {
        0 => Ok(vec![0.0; n_vars]),
        1 => Ok(vec![values[0]; n_vars]),
        k if k == n_vars => Ok(values.to_vec()),
        k => Err(Error::ShapeMismatch(format!(
            "{what} has {k} entries for {n_vars} variables"
        ))),
    }
}

fn same_shape(x: &DataMatrix, y: &DataMatrix) -> Result<()> {
    if x.n_obs() != y.n_obs() || x.n_vars() != y.n_vars() {
        return Err(Error::ShapeMismatch(format!(
            "paired data must have equal shapes, got {}x{} and {}x{}",
            x.n_obs(),
            x.n_vars(),
            y.n_obs(),
            y.n_vars()
        )));
    }
    Ok(())
}

fn same_vars(x: &DataMatrix, y: &DataMatrix) -> Result<()> {
    if x.n_vars() != y.n_vars() {
        return Err(Error::ShapeMismatch(format!(
            "X has {} variables, Y has {}",
            x.n_vars(),
            y.n_vars()
        )));
    }
    Ok(())
}

/// One-sample (y = None) or paired t-test against `mu` by sign flipping the
/// deviations. `mu` may hold one value per variable, a single shared value,
/// or nothing (0).
pub fn permuttest(
    x: &DataMatrix,
    y: Option<&DataMatrix>,
    mu: &[f64],
    cfg: &TestConfig,
) -> Result<PermutationResult> {
    cfg.validate()?;
    if let Some(y) = y {
        same_shape(x, y)?;
    }
    x.require_obs(2, "one-sample t")?;
    let mu = per_variable(mu, x.n_vars(), "mu")?;
    let devs: Vec<Vec<f64>> = (0..x.n_vars())
        .map(|v| {
            let xc = x.column(v);
            match y {
                Some(y) => xc.iter().zip(y.column(v)).map(|(a, b)| a - b - mu[v]).collect(),
                None => xc.iter().map(|a| a - mu[v]).collect(),
            }
        })
        .collect();
    let observed = devs.iter().map(|d| kernels::t_one_sample(d, 0.0)).collect();
    let summaries = (0..x.n_vars())
        .map(|v| {
            let mut s = vec![kernels::summary(x.column(v))];
            if let Some(y) = y {
                s.push(kernels::summary(y.column(v)));
            }
            s
        })
        .collect();
    let prep = Prepared {
        family: Family {
            test: if y.is_some() { TestKind::PairedT } else { TestKind::OneSampleT },
            kind: StatisticKind::T,
            scale: StatScale::Location,
        },
        labels: default_labels(x.n_vars()),
        observed,
        summaries,
        warnings: cfg.warnings(),
    };
    let plan = ResamplePlan::new(
        ResampleKind::SignFlip { n: x.n_obs() },
        cfg.n_perm,
        cfg.seed,
        cfg.exact_threshold,
    );
    Ok(run_family(prep, &SignFlip::t(devs), &plan, cfg))
}

/// One-sample z-test with known sigma by sign flipping deviations from `mu`.
pub fn permuztest(
    x: &DataMatrix,
    mu: &[f64],
    sigma: &[f64],
    cfg: &TestConfig,
) -> Result<PermutationResult> {
    cfg.validate()?;
    x.require_obs(1, "one-sample z")?;
    let n_vars = x.n_vars();
    let mu = per_variable(mu, n_vars, "mu")?;
    if sigma.is_empty() {
        return Err(Error::SigmaNonPositive { sigma: 0.0 });
    }
    let sigma = per_variable(sigma, n_vars, "sigma")?;
    if let Some(&bad) = sigma.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(Error::SigmaNonPositive { sigma: bad });
    }
    let observed: Vec<Result<StatValue>> = (0..n_vars)
        .map(|v| kernels::z_one_sample(x.column(v), mu[v], sigma[v]))
        .collect();
    let devs: Vec<Vec<f64>> = (0..n_vars)
        .map(|v| x.column(v).iter().map(|a| a - mu[v]).collect())
        .collect();
    let se: Vec<f64> = sigma.iter().map(|s| s / (x.n_obs() as f64).sqrt()).collect();
    let prep = Prepared {
        family: Family {
            test: TestKind::OneSampleZ,
            kind: StatisticKind::Z,
            scale: StatScale::Location,
        },
        labels: default_labels(n_vars),
        observed,
        summaries: (0..n_vars).map(|v| vec![kernels::summary(x.column(v))]).collect(),
        warnings: cfg.warnings(),
    };
    let plan = ResamplePlan::new(
        ResampleKind::SignFlip { n: x.n_obs() },
        cfg.n_perm,
        cfg.seed,
        cfg.exact_threshold,
    );
    Ok(run_family(prep, &SignFlip::z(devs, se), &plan, cfg))
}

fn two_sample_checks(x: &DataMatrix, y: &DataMatrix) -> Result<()> {
    same_vars(x, y)?;
    x.require_obs(2, "group X")?;
    y.require_obs(2, "group Y")
}

fn two_group_summaries(x: &DataMatrix, y: &DataMatrix) -> Vec<Vec<SampleSummary>> {
    (0..x.n_vars())
        .map(|v| vec![kernels::summary(x.column(v)), kernels::summary(y.column(v))])
        .collect()
}

fn partition_plan(x: &DataMatrix, y: &DataMatrix, cfg: &TestConfig) -> ResamplePlan {
    ResamplePlan::new(
        ResampleKind::Partition {
            group_sizes: vec![x.n_obs(), y.n_obs()],
        },
        cfg.n_perm,
        cfg.seed,
        cfg.exact_threshold,
    )
}

fn two_sample_prepared(x: &DataMatrix, y: &DataMatrix, cfg: &TestConfig) -> Prepared {
    let mut warnings = cfg.warnings();
    if x.n_obs() != y.n_obs() && cfg.var_assumption == VarAssumption::Equal {
        warnings.push(Warning::UnequalSampleSize {
            nx: x.n_obs(),
            ny: y.n_obs(),
        });
    }
    Prepared {
        family: Family {
            test: TestKind::TwoSampleT,
            kind: StatisticKind::T,
            scale: StatScale::Location,
        },
        labels: default_labels(x.n_vars()),
        observed: (0..x.n_vars())
            .map(|v| kernels::t_two_sample(x.column(v), y.column(v), cfg.var_assumption))
            .collect(),
        summaries: two_group_summaries(x, y),
        warnings,
    }
}

fn two_sample_evaluator(x: &DataMatrix, y: &DataMatrix, var: VarAssumption) -> TwoSampleT {
    let xs: Vec<&[f64]> = x.columns().collect();
    let ys: Vec<&[f64]> = y.columns().collect();
    TwoSampleT::new(&xs, &ys, var)
}

/// Two-sample t-test by re-partitioning the pooled observations.
pub fn permuttest2(x: &DataMatrix, y: &DataMatrix, cfg: &TestConfig) -> Result<PermutationResult> {
    cfg.validate()?;
    two_sample_checks(x, y)?;
    let prep = two_sample_prepared(x, y, cfg);
    let plan = partition_plan(x, y, cfg);
    let ev = two_sample_evaluator(x, y, cfg.var_assumption);
    Ok(run_family(prep, &ev, &plan, cfg))
}

/// Max-corrected and uncorrected p-values of a two-sample run from a single
/// pass over the draws, with NaN for failed variables. Used by the FWER
/// simulation, which needs every correction for the same data.
pub(crate) fn two_sample_p_values(
    x: &DataMatrix,
    y: &DataMatrix,
    cfg: &TestConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    two_sample_checks(x, y)?;
    let prep = two_sample_prepared(x, y, cfg);
    let plan = partition_plan(x, y, cfg);
    let ev = two_sample_evaluator(x, y, cfg.var_assumption);
    let values = observed_values(&prep.observed);
    let out = engine::run(
        &ev,
        &plan,
        &Observed {
            values: &values,
            tail: cfg.tail,
            scale: StatScale::Location,
        },
        false,
    );
    let shared = NullDistribution {
        values: out.maxima,
        tail: cfg.tail,
        scale: StatScale::Location,
        corrected: true,
        n_vars_joined: values.iter().flatten().count(),
        exact: plan.exact,
    };
    let mut p_max = vec![f64::NAN; values.len()];
    let mut p_unc = vec![f64::NAN; values.len()];
    for (v, obs) in values.iter().enumerate() {
        if let Some(t) = obs {
            p_max[v] = pvalue(*t, &shared);
            p_unc[v] = p_from_count(out.hits[v], plan.n_draws, plan.exact);
        }
    }
    Ok((p_max, p_unc))
}

/// Two-sample variance-ratio test. Each group is centered on its own mean
/// before the pooled values are re-partitioned.
pub fn permuvartest2(x: &DataMatrix, y: &DataMatrix, cfg: &TestConfig) -> Result<PermutationResult> {
    cfg.validate()?;
    two_sample_checks(x, y)?;
    let prep = Prepared {
        family: Family {
            test: TestKind::VarianceF,
            kind: StatisticKind::F,
            scale: StatScale::Ratio,
        },
        labels: default_labels(x.n_vars()),
        observed: (0..x.n_vars())
            .map(|v| kernels::f_two_sample(x.column(v), y.column(v)))
            .collect(),
        summaries: two_group_summaries(x, y),
        warnings: cfg.warnings(),
    };
    let plan = partition_plan(x, y, cfg);
    let xs: Vec<&[f64]> = x.columns().collect();
    let ys: Vec<&[f64]> = y.columns().collect();
    Ok(run_family(prep, &VarianceRatio::new(&xs, &ys), &plan, cfg))
}

/// Correlation test. With `y`, variable v of X is paired with variable v of
/// Y; without, every unordered pair of X's variables is tested. The second
/// member of each pair is row-permuted.
pub fn permucorr(
    x: &DataMatrix,
    y: Option<&DataMatrix>,
    kind: CorrelationKind,
    cfg: &TestConfig,
) -> Result<PermutationResult> {
    cfg.validate()?;
    x.require_obs(3, "correlation")?;
    let transformed = |m: &DataMatrix| -> Vec<Vec<f64>> {
        m.columns()
            .map(|c| kernels::correlation_transform(c, kind))
            .collect()
    };
    let tx = transformed(x);
    let (index_pairs, labels, pair_data): (Vec<(usize, usize)>, Vec<String>, Vec<(Vec<f64>, Vec<f64>)>) =
        match y {
            Some(y) => {
                same_shape(x, y)?;
                let ty = transformed(y);
                let idx: Vec<_> = (0..x.n_vars()).map(|v| (v, v)).collect();
                let data = tx.into_iter().zip(ty).collect();
                (idx, default_labels(x.n_vars()), data)
            }
            None => {
                if x.n_vars() < 2 {
                    return Err(Error::DimensionTooSmall {
                        what: "correlation matrix variables".into(),
                        min: 2,
                        got: x.n_vars(),
                    });
                }
                let idx = pair_indices(x.n_vars());
                let names = default_labels(x.n_vars());
                let labels = idx.iter().map(|&(i, j)| format!("{}~{}", names[i], names[j])).collect();
                let data = idx.iter().map(|&(i, j)| (tx[i].clone(), tx[j].clone())).collect();
                (idx, labels, data)
            }
        };
    let second = |j: usize| y.map_or(x.column(j), |y| y.column(j));
    let observed = index_pairs
        .iter()
        .map(|&(i, j)| kernels::correlation(x.column(i), second(j), kind))
        .collect();
    let summaries = index_pairs
        .iter()
        .map(|&(i, j)| vec![kernels::summary(x.column(i)), kernels::summary(second(j))])
        .collect();
    let prep = Prepared {
        family: Family {
            test: TestKind::Correlation,
            kind: StatisticKind::R,
            scale: StatScale::Bounded,
        },
        labels,
        observed,
        summaries,
        warnings: cfg.warnings(),
    };
    let plan = ResamplePlan::new(
        ResampleKind::RowPermutation { n: x.n_obs() },
        cfg.n_perm,
        cfg.seed,
        cfg.exact_threshold,
    );
    Ok(run_family(prep, &RowPermCorr::new(&pair_data), &plan, cfg))
}

fn require_right_tail(cfg: &TestConfig) -> Result<()> {
    if cfg.tail != Tail::Right {
        return Err(Error::TailUnsupported {
            family: "ANOVA".into(),
            supported: "right".into(),
        });
    }
    Ok(())
}

/// Distinct labels in order of first appearance and the level index of
/// every observation.
fn levels<L: PartialEq + Clone>(labels: &[L]) -> (Vec<L>, Vec<usize>) {
    let mut distinct: Vec<L> = Vec::new();
    let idx = labels
        .iter()
        .map(|l| match distinct.iter().position(|d| d == l) {
            Some(i) => i,
            None => {
                distinct.push(l.clone());
                distinct.len() - 1
            }
        })
        .collect();
    (distinct, idx)
}

/// One-way ANOVA by shuffling group labels. Groups are formed from
/// `group_labels` in order of first appearance. Right tail only.
pub fn permuanova1<L: PartialEq + Clone + Display>(
    values: &[f64],
    group_labels: &[L],
    cfg: &TestConfig,
) -> Result<PermutationResult> {
    cfg.validate()?;
    require_right_tail(cfg)?;
    if values.len() != group_labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} values but {} group labels",
            values.len(),
            group_labels.len()
        )));
    }
    let (names, idx) = levels(group_labels);
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (&v, &g) in values.iter().zip(&idx) {
        groups[g].push(v);
    }
    let observed = kernels::anova1_f(&groups)?;
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let flat: Vec<f64> = groups.iter().flatten().copied().collect();
    let prep = Prepared {
        family: Family {
            test: TestKind::Anova1,
            kind: StatisticKind::F,
            scale: StatScale::Ratio,
        },
        labels: vec![names.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("|")],
        observed: vec![Ok(observed)],
        summaries: vec![groups.iter().map(|g| kernels::summary(g)).collect()],
        warnings: cfg.warnings(),
    };
    let plan = ResamplePlan::new(
        ResampleKind::Partition { group_sizes: sizes.clone() },
        cfg.n_perm,
        cfg.seed,
        cfg.exact_threshold,
    );
    Ok(run_family(prep, &OneWay::new(&flat, &sizes), &plan, cfg))
}

/// Results of a two-way ANOVA, one per effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anova2Result {
    pub factor_a: PermutationResult,
    pub factor_b: PermutationResult,
    pub interaction: PermutationResult,
}

impl Anova2Result {
    pub fn effects(&self) -> [&PermutationResult; 3] {
        [&self.factor_a, &self.factor_b, &self.interaction]
    }
}

/// Balanced two-way ANOVA with unrestricted shuffling of all observations
/// across cells. Right tail only.
pub fn permuanova2<A, B>(
    values: &[f64],
    factor_a: &[A],
    factor_b: &[B],
    cfg: &TestConfig,
) -> Result<Anova2Result>
where
    A: PartialEq + Clone + Display,
    B: PartialEq + Clone + Display,
{
    cfg.validate()?;
    require_right_tail(cfg)?;
    if values.len() != factor_a.len() || values.len() != factor_b.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} values, {} factor A labels, {} factor B labels",
            values.len(),
            factor_a.len(),
            factor_b.len()
        )));
    }
    let (names_a, ia) = levels(factor_a);
    let (names_b, ib) = levels(factor_b);
    let mut cells = vec![vec![Vec::new(); names_b.len()]; names_a.len()];
    for ((&v, &i), &j) in values.iter().zip(&ia).zip(&ib) {
        cells[i][j].push(v);
    }
    let (a, b, r) = kernels::balanced_dims(&cells)?;
    let stats = kernels::anova2_f(&cells)?;
    let flat: Vec<f64> = cells.iter().flatten().flatten().copied().collect();
    let plan = ResamplePlan::new(
        ResampleKind::Partition {
            group_sizes: vec![r; a * b],
        },
        cfg.n_perm,
        cfg.seed,
        cfg.exact_threshold,
    );
    let observed = [stats.factor_a, stats.factor_b, stats.interaction];
    let values3: Vec<Option<f64>> = observed.iter().map(|s| Some(s.statistic)).collect();
    let mut out = engine::run(
        &TwoWay::new(&flat, a, b, r),
        &plan,
        &Observed {
            values: &values3,
            tail: Tail::Right,
            scale: StatScale::Ratio,
        },
        true,
    );
    let summaries: Vec<SampleSummary> = cells.iter().flatten().map(|c| kernels::summary(c)).collect();
    let tests = [TestKind::Anova2A, TestKind::Anova2B, TestKind::Anova2Interaction];
    let labels = ["A", "B", "A:B"];
    let mut results = (0..3).map(|e| {
        let column = std::mem::take(&mut out.columns[e]);
        let single = EngineOutput {
            hits: vec![out.hits[e]],
            maxima: column.clone(),
            columns: vec![column],
        };
        let prep = Prepared {
            family: Family {
                test: tests[e],
                kind: StatisticKind::F,
                scale: StatScale::Ratio,
            },
            labels: vec![labels[e].to_string()],
            observed: vec![Ok(observed[e])],
            summaries: vec![summaries.clone()],
            warnings: cfg.warnings(),
        };
        assemble(prep, single, &plan, cfg)
    });
    Ok(Anova2Result {
        factor_a: results.next().expect("three effects"),
        factor_b: results.next().expect("three effects"),
        interaction: results.next().expect("three effects"),
    })
}
