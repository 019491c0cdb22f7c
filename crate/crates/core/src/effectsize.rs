//! Effect sizes with percentile bootstrap intervals and small-sample bias
//! correction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::percentile;
use crate::kernels::{mean, median, negligible, summary};
use crate::resample::{ResampleKind, ResamplePlan};
use crate::types::{
    DataMatrix, EffectEstimate, EffectKind, EffectOutcome, EffectSizeResult, Interval,
    SampleSummary, VarAssumption, DEFAULT_ALPHA, MIN_RESAMPLES,
};

pub const DEFAULT_N_BOOT: usize = 10_000;

/// Which sample standardizes Glass' delta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Control {
    X,
    #[default]
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootConfig {
    pub n_boot: usize,
    pub seed: u64,
    pub alpha: f64,
    pub paired: bool,
    pub var_assumption: VarAssumption,
    pub bias_correct: bool,
    pub control: Control,
}

impl Default for BootConfig {
    fn default() -> Self {
        BootConfig {
            n_boot: DEFAULT_N_BOOT,
            seed: 0,
            alpha: DEFAULT_ALPHA,
            paired: false,
            var_assumption: VarAssumption::Equal,
            bias_correct: true,
            control: Control::Y,
        }
    }
}

impl BootConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::AlphaOutOfRange { alpha: self.alpha });
        }
        if self.n_boot < MIN_RESAMPLES {
            return Err(Error::PermCountTooLow {
                requested: self.n_boot,
                min: MIN_RESAMPLES,
            });
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_n_boot(mut self, n_boot: usize) -> Self {
        self.n_boot = n_boot;
        self
    }

    pub fn with_paired(mut self, paired: bool) -> Self {
        self.paired = paired;
        self
    }

    pub fn with_bias_correct(mut self, on: bool) -> Self {
        self.bias_correct = on;
        self
    }

    pub fn with_var_assumption(mut self, var: VarAssumption) -> Self {
        self.var_assumption = var;
        self
    }

    pub fn with_control(mut self, control: Control) -> Self {
        self.control = control;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}

/// 1 − 3/(4n − 9).
pub fn bias_factor(n_total: usize) -> Result<f64> {
    if n_total < 3 {
        return Err(Error::SampleTooSmall { n: n_total });
    }
    Ok(1.0 - 3.0 / (4.0 * n_total as f64 - 9.0))
}

/// (#{x_i > y_j} − #{x_i < y_j}) / (nx · ny).
pub fn cliffs_d(x: &[f64], y: &[f64]) -> f64 {
    assert!(!x.is_empty() && !y.is_empty(), "Cliff's d needs non-empty samples");
    let mut ys = y.to_vec();
    ys.sort_by(f64::total_cmp);
    let mut dom: i64 = 0;
    for &xi in x {
        let below = ys.partition_point(|&v| v < xi) as i64;
        let above = (ys.len() - ys.partition_point(|&v| v <= xi)) as i64;
        dom += below - above;
    }
    dom as f64 / (x.len() * ys.len()) as f64
}

fn sd_checked(v: &[f64], what: &str) -> Result<f64> {
    let s = summary(v);
    let ms = v.iter().map(|a| a * a).sum::<f64>() / v.len() as f64;
    if negligible(s.sd * s.sd, ms) {
        return Err(Error::zero_variance(format!("{what}: standard deviation is zero")));
    }
    Ok(s.sd)
}

fn require_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::DimensionTooSmall {
            what: "effect size sample".into(),
            min,
            got: n,
        });
    }
    Ok(())
}

fn point(
    x: &[f64],
    y: Option<&[f64]>,
    kind: EffectKind,
    paired: bool,
    var: VarAssumption,
    control: Control,
) -> Result<f64> {
    let min = if kind == EffectKind::Cliff { 1 } else { 2 };
    require_n(x.len(), min)?;
    let Some(y) = y else {
        return match kind {
            EffectKind::Cohen => Ok(mean(x) / sd_checked(x, "Cohen's d")?),
            EffectKind::Glass => Err(Error::Unsupported(
                "Glass' delta needs a control sample".into(),
            )),
            EffectKind::Cliff => Ok(cliffs_d(x, &[0.0])),
            EffectKind::MeanDiff => Ok(mean(x)),
            EffectKind::MedianDiff => Ok(median(x)),
        };
    };
    require_n(y.len(), min)?;
    if paired && x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "paired samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    match kind {
        EffectKind::Cohen if paired => {
            let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
            let s = summary(&d);
            let scale = x.iter().chain(y).map(|v| v * v).sum::<f64>() / (2 * x.len()) as f64;
            if negligible(s.sd * s.sd, scale) {
                return Err(Error::zero_variance("paired Cohen's d: differences are constant"));
            }
            Ok(s.mean / s.sd)
        }
        EffectKind::Cohen => {
            let (sx, sy) = (summary(x), summary(y));
            let (vx, vy) = (sx.sd * sx.sd, sy.sd * sy.sd);
            let denom = match var {
                VarAssumption::Equal => {
                    let (nx, ny) = (sx.n as f64, sy.n as f64);
                    (((nx - 1.0) * vx + (ny - 1.0) * vy) / (nx + ny - 2.0)).sqrt()
                }
                VarAssumption::Unequal => ((vx + vy) / 2.0).sqrt(),
            };
            let scale = x.iter().chain(y).map(|v| v * v).sum::<f64>() / (x.len() + y.len()) as f64;
            if negligible(denom * denom, scale) {
                return Err(Error::zero_variance("Cohen's d: both samples are constant"));
            }
            Ok((sx.mean - sy.mean) / denom)
        }
        EffectKind::Glass => {
            let sd = match control {
                Control::Y => sd_checked(y, "Glass' delta control sample")?,
                Control::X => sd_checked(x, "Glass' delta control sample")?,
            };
            Ok((mean(x) - mean(y)) / sd)
        }
        EffectKind::Cliff => Ok(cliffs_d(x, y)),
        EffectKind::MeanDiff => Ok(mean(x) - mean(y)),
        EffectKind::MedianDiff => Ok(median(x) - median(y)),
    }
}

/// Cohen's d from group summaries, before bias correction.
pub fn cohens_d_from_summaries(sx: &SampleSummary, sy: &SampleSummary, var: VarAssumption) -> Result<f64> {
    require_n(sx.n, 2)?;
    require_n(sy.n, 2)?;
    let (vx, vy) = (sx.sd * sx.sd, sy.sd * sy.sd);
    let denom = match var {
        VarAssumption::Equal => {
            let (nx, ny) = (sx.n as f64, sy.n as f64);
            (((nx - 1.0) * vx + (ny - 1.0) * vy) / (nx + ny - 2.0)).sqrt()
        }
        VarAssumption::Unequal => ((vx + vy) / 2.0).sqrt(),
    };
    if !(denom > 0.0) {
        return Err(Error::zero_variance("Cohen's d: both standard deviations are zero"));
    }
    Ok((sx.mean - sy.mean) / denom)
}

/// Point estimate before any bias correction. Glass' delta standardizes by
/// y. Without `y`, the measures describe x against zero.
pub fn effect_point(
    x: &[f64],
    y: Option<&[f64]>,
    kind: EffectKind,
    paired: bool,
    var: VarAssumption,
) -> Result<f64> {
    point(x, y, kind, paired, var, Control::Y)
}

fn result_label(kind: EffectKind, corrected: bool) -> &'static str {
    match kind {
        EffectKind::Cohen if corrected => "hedges_g",
        EffectKind::Cohen => "cohens_d",
        EffectKind::Glass => "glass_delta",
        EffectKind::Cliff => "cliffs_d",
        EffectKind::MeanDiff => "mean_diff",
        EffectKind::MedianDiff => "median_diff",
    }
}

/// Bootstrap one variable: the first `n_boot` non-degenerate resamples in
/// draw order, giving up after 10 · n_boot draws.
fn bootstrap_variable(
    x: &[f64],
    y: Option<&[f64]>,
    kind: EffectKind,
    cfg: &BootConfig,
    plan: &ResamplePlan,
) -> Result<Vec<f64>> {
    let cap = 10 * cfg.n_boot;
    let ny = if cfg.paired { 0 } else { y.map_or(0, <[f64]>::len) };
    let eval = |i: usize| -> Option<f64> {
        let mut xi = vec![0usize; x.len()];
        let mut yi = vec![0usize; ny];
        plan.bootstrap_into(i, &mut xi, &mut yi);
        let xs: Vec<f64> = xi.iter().map(|&k| x[k]).collect();
        let ys: Option<Vec<f64>> = y.map(|y| {
            if cfg.paired {
                xi.iter().map(|&k| y[k]).collect()
            } else {
                yi.iter().map(|&k| y[k]).collect()
            }
        });
        point(&xs, ys.as_deref(), kind, cfg.paired, cfg.var_assumption, cfg.control).ok()
    };
    let mut values = Vec::with_capacity(cfg.n_boot);
    let mut next = 0;
    while values.len() < cfg.n_boot {
        if next >= cap {
            return Err(Error::DegenerateBootstrap { attempts: cap });
        }
        let batch = (cfg.n_boot - values.len()).min(cap - next);
        let got: Vec<Option<f64>> = (next..next + batch).into_par_iter().map(eval).collect();
        next += batch;
        values.extend(got.into_iter().flatten().take(cfg.n_boot - values.len()));
    }
    Ok(values)
}

/// Per-variable effect size with a percentile bootstrap interval. Cohen's d
/// and Glass' delta, estimate and bounds alike, are scaled by the bias
/// factor unless `cfg.bias_correct` is off.
pub fn booteffectsize(
    x: &DataMatrix,
    y: Option<&DataMatrix>,
    kind: EffectKind,
    cfg: &BootConfig,
) -> Result<EffectSizeResult> {
    cfg.validate()?;
    if let Some(y) = y {
        if x.n_vars() != y.n_vars() || (cfg.paired && x.n_obs() != y.n_obs()) {
            return Err(Error::ShapeMismatch(format!(
                "X is {}x{}, Y is {}x{}",
                x.n_obs(),
                x.n_vars(),
                y.n_obs(),
                y.n_vars()
            )));
        }
    } else if cfg.paired {
        return Err(Error::ShapeMismatch("paired effect sizes need Y".into()));
    }
    let apply_bias = cfg.bias_correct && kind.is_standardized();
    let n_bias = match y {
        Some(y) if !cfg.paired => x.n_obs() + y.n_obs(),
        _ => x.n_obs(),
    };
    let factor = if apply_bias { bias_factor(n_bias)? } else { 1.0 };
    let plan = ResamplePlan {
        kind: ResampleKind::Bootstrap {
            nx: x.n_obs(),
            ny: match y {
                Some(y) if !cfg.paired => Some(y.n_obs()),
                _ => None,
            },
        },
        n_draws: cfg.n_boot,
        seed: cfg.seed,
        exact: false,
    };
    let outcomes = (0..x.n_vars())
        .map(|v| {
            let xv = x.column(v);
            let yv = y.map(|y| y.column(v));
            let run = || -> Result<EffectEstimate> {
                let est = point(xv, yv, kind, cfg.paired, cfg.var_assumption, cfg.control)?;
                let boots = bootstrap_variable(xv, yv, kind, cfg, &plan)?;
                let lo = percentile(&boots, 100.0 * cfg.alpha / 2.0);
                let hi = percentile(&boots, 100.0 * (1.0 - cfg.alpha / 2.0));
                Ok(EffectEstimate {
                    effect: est * factor,
                    ci: Interval::new(lo * factor, hi * factor),
                    correction_factor: factor,
                })
            };
            match run() {
                Ok(e) => EffectOutcome::Estimated(e),
                Err(error) => EffectOutcome::Failed { error },
            }
        })
        .collect();
    Ok(EffectSizeResult {
        kind,
        label: result_label(kind, apply_bias).to_string(),
        labels: crate::permtests::default_labels(x.n_vars()),
        outcomes,
        n_boot: cfg.n_boot,
        seed: cfg.seed,
        alpha: cfg.alpha,
        paired: cfg.paired,
        bias_corrected: apply_bias,
    })
}
