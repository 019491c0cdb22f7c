//! Domain types, configuration validation and the result model shared by
//! every test family.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::inference::NullDistribution;
use crate::serde_ext::ext_f64;

pub const DEFAULT_N_PERM: usize = 10_000;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_EXACT_THRESHOLD: u64 = 20_000;
/// Hard floor on resample counts.
pub const MIN_RESAMPLES: usize = 100;
/// Below this many permutations a warning is raised.
pub const RECOMMENDED_N_PERM: usize = 1_000;

/// Observations × variables matrix of finite reals, stored column-major so
/// each variable is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Vec<f64>,
    n_obs: usize,
    n_vars: usize,
}

impl DataMatrix {
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let n_vars = columns.len();
        if n_vars == 0 {
            return Err(Error::ShapeMismatch("matrix needs at least one variable".into()));
        }
        let n_obs = columns[0].len();
        if let Some((j, c)) = columns.iter().enumerate().find(|(_, c)| c.len() != n_obs) {
            return Err(Error::ShapeMismatch(format!(
                "column {j} has {} observations, expected {n_obs}",
                c.len()
            )));
        }
        let values: Vec<f64> = columns.into_iter().flatten().collect();
        Self::check_finite(&values, n_obs)?;
        Ok(DataMatrix {
            values,
            n_obs,
            n_vars,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_obs = rows.len();
        let n_vars = rows.first().map_or(0, Vec::len);
        if n_vars == 0 {
            return Err(Error::ShapeMismatch("matrix needs at least one variable".into()));
        }
        let mut columns = vec![Vec::with_capacity(n_obs); n_vars];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_vars {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} values, expected {n_vars}",
                    row.len()
                )));
            }
            for (col, &v) in columns.iter_mut().zip(row) {
                col.push(v);
            }
        }
        Self::from_columns(columns)
    }

    /// Single-variable matrix.
    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        Self::from_columns(vec![values])
    }

    fn check_finite(values: &[f64], n_obs: usize) -> Result<()> {
        match values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(k) => Err(Error::NonFiniteValue {
                row: k % n_obs.max(1),
                col: k / n_obs.max(1),
                value: values[k].to_string(),
            }),
        }
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn column(&self, v: usize) -> &[f64] {
        &self.values[v * self.n_obs..(v + 1) * self.n_obs]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n_vars).map(move |v| self.column(v))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[col * self.n_obs + row]
    }

    pub(crate) fn require_obs(&self, min: usize, what: &'static str) -> Result<()> {
        if self.n_obs < min {
            Err(Error::DimensionTooSmall {
                what: what.into(),
                min,
                got: self.n_obs,
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    #[default]
    #[serde(rename = "two")]
    TwoTailed,
    Right,
    Left,
}

impl fmt::Display for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tail::TwoTailed => "two",
            Tail::Right => "right",
            Tail::Left => "left",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionMethod {
    #[default]
    Max,
    Bonferroni,
    Holm,
    None,
}

impl fmt::Display for CorrectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrectionMethod::Max => "max",
            CorrectionMethod::Bonferroni => "bonferroni",
            CorrectionMethod::Holm => "holm",
            CorrectionMethod::None => "none",
        })
    }
}

/// Selects Student (pooled) or Welch (unpooled) variance handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarAssumption {
    #[default]
    Equal,
    Unequal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub n_perm: usize,
    pub seed: u64,
    pub tail: Tail,
    pub alpha: f64,
    pub correction: CorrectionMethod,
    pub var_assumption: VarAssumption,
    /// Enumerate exhaustively when the number of distinct rearrangements
    /// is at most this. Zero forces Monte Carlo sampling.
    pub exact_threshold: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            n_perm: DEFAULT_N_PERM,
            seed: 0,
            tail: Tail::TwoTailed,
            alpha: DEFAULT_ALPHA,
            correction: CorrectionMethod::Max,
            var_assumption: VarAssumption::Equal,
            exact_threshold: DEFAULT_EXACT_THRESHOLD,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::AlphaOutOfRange { alpha: self.alpha });
        }
        if self.n_perm < MIN_RESAMPLES {
            return Err(Error::PermCountTooLow {
                requested: self.n_perm,
                min: MIN_RESAMPLES,
            });
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<Warning> {
        let mut out = Vec::new();
        if self.n_perm < RECOMMENDED_N_PERM {
            out.push(Warning::LowPermutationCount {
                n_perm: self.n_perm,
            });
        }
        out
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = tail;
        self
    }

    pub fn with_correction(mut self, correction: CorrectionMethod) -> Self {
        self.correction = correction;
        self
    }

    pub fn with_n_perm(mut self, n_perm: usize) -> Self {
        self.n_perm = n_perm;
        self
    }

    pub fn with_exact_threshold(mut self, threshold: u64) -> Self {
        self.exact_threshold = threshold;
        self
    }

    pub fn with_var_assumption(mut self, var: VarAssumption) -> Self {
        self.var_assumption = var;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}

/// A configuration as supplied by a caller; unset fields take defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PartialConfig {
    pub n_perm: Option<usize>,
    pub seed: Option<u64>,
    pub tail: Option<Tail>,
    pub alpha: Option<f64>,
    pub correction: Option<CorrectionMethod>,
    pub var_assumption: Option<VarAssumption>,
    pub exact_threshold: Option<u64>,
}

/// Fills defaults and rejects out-of-range fields.
pub fn validate_config(cfg: &PartialConfig) -> Result<TestConfig> {
    let d = TestConfig::default();
    let out = TestConfig {
        n_perm: cfg.n_perm.unwrap_or(d.n_perm),
        seed: cfg.seed.unwrap_or(d.seed),
        tail: cfg.tail.unwrap_or(d.tail),
        alpha: cfg.alpha.unwrap_or(d.alpha),
        correction: cfg.correction.unwrap_or(d.correction),
        var_assumption: cfg.var_assumption.unwrap_or(d.var_assumption),
        exact_threshold: cfg.exact_threshold.unwrap_or(d.exact_threshold),
    };
    out.validate()?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator; 0 when n = 1).
    pub sd: f64,
}

/// Degrees of freedom: absent (z), single (t, r) or a pair (F).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dof {
    None,
    One(f64),
    Two(f64, f64),
}

impl Dof {
    /// First (or only) degrees of freedom.
    pub fn primary(&self) -> Option<f64> {
        match *self {
            Dof::None => None,
            Dof::One(d) | Dof::Two(d, _) => Some(d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "ext_f64")]
    pub lower: f64,
    #[serde(with = "ext_f64")]
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Interval { lower, upper }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticKind {
    T,
    F,
    Z,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    OneSampleT,
    PairedT,
    TwoSampleT,
    VarianceF,
    OneSampleZ,
    Correlation,
    Anova1,
    Anova2A,
    Anova2B,
    Anova2Interaction,
}

/// Per-variable test outcome. Never carries an accept/reject verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariableStat {
    #[serde(with = "ext_f64")]
    pub statistic: f64,
    pub df: Dof,
    pub p: f64,
    /// p before multiplicity correction.
    pub p_uncorrected: f64,
    pub ci: Interval,
    /// Unstandardised quantity: mean difference, variance ratio or r.
    pub estimate: f64,
    /// Standard error of the estimate where the family defines one.
    pub se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Tested(VariableStat),
    Failed { error: Error },
}

impl Outcome {
    pub fn stat(&self) -> Option<&VariableStat> {
        match self {
            Outcome::Tested(s) => Some(s),
            Outcome::Failed { .. } => None,
        }
    }
}

/// Null distributions attached to a result: one shared max-statistic
/// distribution, or one per variable when no max correction was applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", content = "distributions", rename_all = "snake_case")]
pub enum NullDistributions {
    Shared(NullDistribution),
    PerVariable(Vec<Option<NullDistribution>>),
}

impl NullDistributions {
    /// Distribution a given variable's p-value was computed against.
    pub fn for_variable(&self, v: usize) -> Option<&NullDistribution> {
        match self {
            NullDistributions::Shared(d) => Some(d),
            NullDistributions::PerVariable(ds) => ds.get(v).and_then(Option::as_ref),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub test: TestKind,
    pub statistic_kind: StatisticKind,
    pub labels: Vec<String>,
    pub outcomes: Vec<Outcome>,
    /// Per variable, one summary per group (empty for pair-wise results).
    pub summaries: Vec<Vec<SampleSummary>>,
    pub null_distribution: NullDistributions,
    /// True when every distinct rearrangement was enumerated.
    pub exact: bool,
    pub n_rearrangements: usize,
    pub config: TestConfig,
    #[serde(skip)]
    pub warnings: Vec<Warning>,
}

impl PermutationResult {
    pub fn n_vars(&self) -> usize {
        self.outcomes.len()
    }

    pub fn stat(&self, v: usize) -> Option<&VariableStat> {
        self.outcomes.get(v).and_then(Outcome::stat)
    }

    /// Convenience accessor; panics when the variable failed.
    pub fn tested(&self, v: usize) -> &VariableStat {
        self.stat(v)
            .unwrap_or_else(|| panic!("variable {v} was not tested: {:?}", self.outcomes[v]))
    }

    /// p-values with NaN for failed variables.
    pub fn p_values(&self) -> Vec<f64> {
        self.outcomes
            .iter()
            .map(|o| o.stat().map_or(f64::NAN, |s| s.p))
            .collect()
    }

    pub fn statistics(&self) -> Vec<f64> {
        self.outcomes
            .iter()
            .map(|o| o.stat().map_or(f64::NAN, |s| s.statistic))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectKind {
    Cohen,
    Glass,
    Cliff,
    MeanDiff,
    MedianDiff,
}

impl EffectKind {
    pub fn is_standardized(self) -> bool {
        matches!(self, EffectKind::Cohen | EffectKind::Glass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub effect: f64,
    pub ci: Interval,
    /// 1 when no bias correction was applied.
    pub correction_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EffectOutcome {
    Estimated(EffectEstimate),
    Failed { error: Error },
}

impl EffectOutcome {
    pub fn estimate(&self) -> Option<&EffectEstimate> {
        match self {
            EffectOutcome::Estimated(e) => Some(e),
            EffectOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSizeResult {
    pub kind: EffectKind,
    /// Display name: "hedges_g" for bias-corrected Cohen, and so on.
    pub label: String,
    pub labels: Vec<String>,
    pub outcomes: Vec<EffectOutcome>,
    pub n_boot: usize,
    pub seed: u64,
    pub alpha: f64,
    pub paired: bool,
    pub bias_corrected: bool,
}

impl EffectSizeResult {
    pub fn estimate(&self, v: usize) -> &EffectEstimate {
        self.outcomes[v]
            .estimate()
            .unwrap_or_else(|| panic!("variable {v} failed: {:?}", self.outcomes[v]))
    }
}

/// Non-fatal conditions reported alongside results (printed to stderr by
/// the CLI, never mixed into result output).
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    LowPermutationCount { n_perm: usize },
    UnequalSampleSize { nx: usize, ny: usize },
    VariableFailed { label: String, error: Error },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::LowPermutationCount { n_perm } => write!(
                f,
                "only {n_perm} permutations requested; several thousand are needed for reliable p-values"
            ),
            Warning::UnequalSampleSize { nx, ny } => write!(
                f,
                "unequal sample sizes ({nx} vs {ny}) with equal-variance t; permutation tests are only robust to variance differences when sizes match"
            ),
            Warning::VariableFailed { label, error } => {
                write!(f, "variable {label} excluded: {error}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_permutation_count_filled() {
        let cfg = validate_config(&PartialConfig::default()).unwrap();
        assert_eq!(cfg.n_perm, 10_000);
        assert_eq!(cfg.alpha, 0.05);
        assert_eq!(cfg.tail, Tail::TwoTailed);
        assert_eq!(cfg.correction, CorrectionMethod::Max);
        assert_eq!(cfg.exact_threshold, 20_000);
    }

    #[test]
    fn alpha_out_of_range() {
        for alpha in [1.5, 0.0, 1.0, -0.1, f64::NAN] {
            let cfg = PartialConfig {
                alpha: Some(alpha),
                ..Default::default()
            };
            assert!(matches!(
                validate_config(&cfg),
                Err(Error::AlphaOutOfRange { .. })
            ));
        }
    }

    #[test]
    fn perm_count_floor() {
        let cfg = PartialConfig {
            n_perm: Some(50),
            ..Default::default()
        };
        assert_eq!(
            validate_config(&cfg),
            Err(Error::PermCountTooLow {
                requested: 50,
                min: 100
            })
        );
        let ok = TestConfig::default().with_n_perm(500);
        ok.validate().unwrap();
        assert_eq!(ok.warnings().len(), 1);
        assert!(TestConfig::default().warnings().is_empty());
    }

    #[test]
    fn non_finite_cells_rejected_with_coordinates() {
        let err = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { row: 1, col: 1, .. }));
        let err = DataMatrix::from_columns(vec![vec![1.0, f64::INFINITY]]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { row: 1, col: 0, .. }));
    }

    #[test]
    fn matrix_is_column_major() {
        let m = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(m.n_obs(), 3);
        assert_eq!(m.n_vars(), 2);
        assert_eq!(m.column(1), &[2.0, 4.0, 6.0]);
        assert_eq!(m.get(2, 0), 5.0);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(matches!(
            DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn dof_serializes_compactly() {
        assert_eq!(serde_json::to_string(&Dof::None).unwrap(), "null");
        assert_eq!(serde_json::to_string(&Dof::One(58.0)).unwrap(), "58.0");
        assert_eq!(serde_json::to_string(&Dof::Two(2.0, 6.0)).unwrap(), "[2.0,6.0]");
        let back: Dof = serde_json::from_str("[2.0,6.0]").unwrap();
        assert_eq!(back, Dof::Two(2.0, 6.0));
        let back: Dof = serde_json::from_str("null").unwrap();
        assert_eq!(back, Dof::None);
    }
}
