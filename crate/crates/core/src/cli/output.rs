//! Serialized result formats: the versioned JSON envelope, flat CSV and the
//! tab-separated plot data.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::reference::fwer::FwerReport;
use crate::serde_ext::ext_f64;
use crate::types::{
    CorrectionMethod, Dof, EffectOutcome, EffectSizeResult, Outcome, PermutationResult, Tail,
    VarAssumption,
};

pub const SCHEMA: &str = "permstat/1";

/// Settings echoed with every test result so a run can be repeated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEcho {
    pub n_perm: usize,
    pub seed: u64,
    pub correction: CorrectionMethod,
    pub tail: Tail,
    pub alpha: f64,
    pub var_assumption: VarAssumption,
    pub exact: bool,
    pub n_rearrangements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub label: String,
    pub test: String,
    pub status: String,
    #[serde(with = "ext_f64")]
    pub statistic: f64,
    pub df: Dof,
    #[serde(with = "ext_f64")]
    pub p: f64,
    #[serde(with = "ext_f64")]
    pub p_uncorrected: f64,
    #[serde(with = "ext_f64")]
    pub ci_lower: f64,
    #[serde(with = "ext_f64")]
    pub ci_upper: f64,
    #[serde(with = "ext_f64")]
    pub estimate: f64,
    pub se: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestEnvelope {
    pub schema: String,
    pub command: String,
    pub config: RunEcho,
    pub results: Vec<TestRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRecord {
    pub label: String,
    pub status: String,
    #[serde(with = "ext_f64")]
    pub effect: f64,
    #[serde(with = "ext_f64")]
    pub ci_lower: f64,
    #[serde(with = "ext_f64")]
    pub ci_upper: f64,
    pub correction_factor: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEnvelope {
    pub schema: String,
    pub command: String,
    pub measure: String,
    pub n_boot: usize,
    pub seed: u64,
    pub alpha: f64,
    pub paired: bool,
    pub bias_corrected: bool,
    pub results: Vec<EffectRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwerEnvelope {
    pub schema: String,
    pub command: String,
    pub reports: Vec<FwerReport>,
}

fn test_name(r: &PermutationResult) -> String {
    serde_json::to_value(r.test)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn test_records(r: &PermutationResult) -> Vec<TestRecord> {
    let test = test_name(r);
    r.outcomes
        .iter()
        .zip(&r.labels)
        .map(|(o, label)| match o {
            Outcome::Tested(s) => TestRecord {
                label: label.clone(),
                test: test.clone(),
                status: "tested".into(),
                statistic: s.statistic,
                df: s.df,
                p: s.p,
                p_uncorrected: s.p_uncorrected,
                ci_lower: s.ci.lower,
                ci_upper: s.ci.upper,
                estimate: s.estimate,
                se: s.se,
                error: None,
            },
            Outcome::Failed { error } => TestRecord {
                label: label.clone(),
                test: test.clone(),
                status: "failed".into(),
                statistic: f64::NAN,
                df: Dof::None,
                p: f64::NAN,
                p_uncorrected: f64::NAN,
                ci_lower: f64::NAN,
                ci_upper: f64::NAN,
                estimate: f64::NAN,
                se: None,
                error: Some(error.to_string()),
            },
        })
        .collect()
}

pub fn test_envelope(command: &str, results: &[&PermutationResult]) -> TestEnvelope {
    let first = results[0];
    TestEnvelope {
        schema: SCHEMA.into(),
        command: command.into(),
        config: RunEcho {
            n_perm: first.config.n_perm,
            seed: first.config.seed,
            correction: first.config.correction,
            tail: first.config.tail,
            alpha: first.config.alpha,
            var_assumption: first.config.var_assumption,
            exact: first.exact,
            n_rearrangements: first.n_rearrangements,
        },
        results: results.iter().flat_map(|r| test_records(r)).collect(),
    }
}

pub fn effect_records(r: &EffectSizeResult) -> Vec<EffectRecord> {
    r.outcomes
        .iter()
        .zip(&r.labels)
        .map(|(o, label)| match o {
            EffectOutcome::Estimated(e) => EffectRecord {
                label: label.clone(),
                status: "estimated".into(),
                effect: e.effect,
                ci_lower: e.ci.lower,
                ci_upper: e.ci.upper,
                correction_factor: Some(e.correction_factor),
                error: None,
            },
            EffectOutcome::Failed { error } => EffectRecord {
                label: label.clone(),
                status: "failed".into(),
                effect: f64::NAN,
                ci_lower: f64::NAN,
                ci_upper: f64::NAN,
                correction_factor: None,
                error: Some(error.to_string()),
            },
        })
        .collect()
}

pub fn effect_envelope(r: &EffectSizeResult) -> EffectEnvelope {
    EffectEnvelope {
        schema: SCHEMA.into(),
        command: "effectsize".into(),
        measure: r.label.clone(),
        n_boot: r.n_boot,
        seed: r.seed,
        alpha: r.alpha,
        paired: r.paired,
        bias_corrected: r.bias_corrected,
        results: effect_records(r),
    }
}

/// Shortest round-tripping decimal, or inf/-inf/nan.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, fmt_num)
}

fn fmt_df(df: &Dof) -> (String, String) {
    match df {
        Dof::None => (String::new(), String::new()),
        Dof::One(a) => (fmt_num(*a), String::new()),
        Dof::Two(a, b) => (fmt_num(*a), fmt_num(*b)),
    }
}

pub fn write_test_csv(w: &mut dyn Write, env: &TestEnvelope) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let c = &env.config;
    let head = [
        "label", "test", "status", "statistic", "df1", "df2", "p", "p_uncorrected", "ci_lower",
        "ci_upper", "estimate", "se", "n_perm", "seed", "correction", "tail", "error",
    ];
    let io = |e: csv::Error| crate::error::Error::Io(e.to_string());
    out.write_record(head).map_err(io)?;
    for r in &env.results {
        let (d1, d2) = fmt_df(&r.df);
        out.write_record([
            r.label.clone(),
            r.test.clone(),
            r.status.clone(),
            fmt_num(r.statistic),
            d1,
            d2,
            fmt_num(r.p),
            fmt_num(r.p_uncorrected),
            fmt_num(r.ci_lower),
            fmt_num(r.ci_upper),
            fmt_num(r.estimate),
            fmt_opt(r.se),
            c.n_perm.to_string(),
            c.seed.to_string(),
            c.correction.to_string(),
            tail_name(c.tail).into(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_effect_csv(w: &mut dyn Write, env: &EffectEnvelope) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| crate::error::Error::Io(e.to_string());
    out.write_record([
        "label", "measure", "status", "effect", "ci_lower", "ci_upper", "correction_factor",
        "n_boot", "seed", "error",
    ])
    .map_err(io)?;
    for r in &env.results {
        out.write_record([
            r.label.clone(),
            env.measure.clone(),
            r.status.clone(),
            fmt_num(r.effect),
            fmt_num(r.ci_lower),
            fmt_num(r.ci_upper),
            fmt_opt(r.correction_factor),
            env.n_boot.to_string(),
            env.seed.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_fwer_csv(w: &mut dyn Write, env: &FwerEnvelope) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| crate::error::Error::Io(e.to_string());
    out.write_record([
        "correction", "n_sims", "n_vars", "n_obs", "alpha", "empirical_fwer", "mc_stderr",
        "empirical_power", "effect_shift", "n_shifted", "n_perm", "seed",
    ])
    .map_err(io)?;
    for r in &env.reports {
        out.write_record([
            r.correction.to_string(),
            r.n_sims.to_string(),
            r.n_vars.to_string(),
            r.n_obs.to_string(),
            fmt_num(r.alpha),
            fmt_num(r.empirical_fwer),
            fmt_num(r.mc_stderr),
            fmt_opt(r.empirical_power),
            fmt_num(r.effect_shift),
            r.n_shifted.to_string(),
            r.n_perm.to_string(),
            r.seed.to_string(),
        ])
        .map_err(io)?;
    }
    out.flush()?;
    Ok(())
}

pub fn tail_name(t: Tail) -> &'static str {
    match t {
        Tail::TwoTailed => "two",
        Tail::Right => "right",
        Tail::Left => "left",
    }
}

pub const PLOT_COLUMNS: [&str; 9] = [
    "label",
    "estimate",
    "ci_lower",
    "ci_upper",
    "p",
    "statistic",
    "effect",
    "effect_ci_lower",
    "effect_ci_upper",
];

/// Tab-separated per-variable data for plotting estimates, intervals,
/// p-values and (when given) effect sizes. Missing values are written as NA.
pub fn emit_plot_data(
    result: &PermutationResult,
    effects: Option<&EffectSizeResult>,
    path: &Path,
) -> Result<()> {
    let mut text = PLOT_COLUMNS.join("\t");
    text.push('\n');
    let na = || "NA".to_string();
    for (v, label) in result.labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        match result.stat(v) {
            Some(s) => row.extend([s.estimate, s.ci.lower, s.ci.upper, s.p, s.statistic].map(fmt_num)),
            None => row.extend(std::iter::repeat_with(na).take(5)),
        }
        match effects.and_then(|e| e.outcomes.get(v)).and_then(EffectOutcome::estimate) {
            Some(e) => row.extend([e.effect, e.ci.lower, e.ci.upper].map(fmt_num)),
            None => row.extend(std::iter::repeat_with(na).take(3)),
        }
        text.push_str(&row.join("\t"));
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}
