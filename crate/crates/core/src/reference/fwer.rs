//! Monte Carlo estimates of family-wise error rate and power.
//!
//! Each simulated dataset is two independent groups of standard-normal
//! variables, optionally with a location shift added to the first
//! `n_shifted` variables of Y. Every dataset is tested once with the
//! two-sample permutation engine; all four corrections are read off the same
//! pass, so they are compared on identical data.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{adjust_bonferroni, adjust_holm};
use crate::permtests::two_sample_p_values;
use crate::resample::{domain, draw_rng};
use crate::types::{CorrectionMethod, DataMatrix, TestConfig, RECOMMENDED_N_PERM};

pub const MIN_SIMS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwerConfig {
    pub n_vars: usize,
    pub n_obs: usize,
    pub n_sims: usize,
    pub alpha: f64,
    /// Added to the shifted variables of Y; 0 simulates the global null.
    pub effect_shift: f64,
    /// Number of shifted variables; defaults to half of `n_vars`.
    pub n_shifted: Option<usize>,
    pub n_perm: usize,
    pub seed: u64,
}

impl FwerConfig {
    pub fn new(n_vars: usize, n_obs: usize, n_sims: usize) -> Self {
        FwerConfig {
            n_vars,
            n_obs,
            n_sims,
            alpha: 0.05,
            effect_shift: 0.0,
            n_shifted: None,
            n_perm: RECOMMENDED_N_PERM,
            seed: 0,
        }
    }

    fn shifted(&self) -> usize {
        if self.effect_shift == 0.0 {
            0
        } else {
            self.n_shifted.unwrap_or(self.n_vars / 2).min(self.n_vars)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwerReport {
    pub n_sims: usize,
    pub n_vars: usize,
    pub n_obs: usize,
    pub alpha: f64,
    pub correction: CorrectionMethod,
    /// Fraction of datasets with at least one null variable at p < alpha.
    pub empirical_fwer: f64,
    /// Mean fraction of shifted variables at p < alpha.
    pub empirical_power: Option<f64>,
    /// sqrt(f (1 − f) / n_sims) for the FWER estimate.
    pub mc_stderr: f64,
    pub effect_shift: f64,
    pub n_shifted: usize,
    pub n_perm: usize,
    pub seed: u64,
}

impl FwerReport {
    /// Monte Carlo standard error of the power estimate, treating the
    /// per-dataset detection fractions as independent draws.
    pub fn power_stderr(&self) -> Option<f64> {
        self.empirical_power
            .map(|p| (p * (1.0 - p) / (self.n_sims * self.n_shifted.max(1)) as f64).sqrt())
    }
}

fn normal_matrix<R: RngCore>(rng: &mut R, n_obs: usize, n_vars: usize, shift: &[f64]) -> DataMatrix {
    let cols = (0..n_vars)
        .map(|v| {
            (0..n_obs)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    z + shift[v]
                })
                .collect()
        })
        .collect();
    DataMatrix::from_columns(cols).expect("simulated values are finite")
}

const CORRECTIONS: [CorrectionMethod; 4] = [
    CorrectionMethod::None,
    CorrectionMethod::Bonferroni,
    CorrectionMethod::Holm,
    CorrectionMethod::Max,
];

/// Per dataset and correction: (any null rejection, shifted rejections).
fn simulate_one(cfg: &FwerConfig, sim: usize) -> Result<[(bool, usize); 4]> {
    let mut rng = draw_rng(cfg.seed, domain::SIMULATION, sim as u64);
    let k = cfg.shifted();
    let none = vec![0.0; cfg.n_vars];
    let shift: Vec<f64> = (0..cfg.n_vars)
        .map(|v| if v < k { cfg.effect_shift } else { 0.0 })
        .collect();
    let x = normal_matrix(&mut rng, cfg.n_obs, cfg.n_vars, &none);
    let y = normal_matrix(&mut rng, cfg.n_obs, cfg.n_vars, &shift);
    let test_cfg = TestConfig::default()
        .with_n_perm(cfg.n_perm)
        .with_seed(rng.next_u64())
        .with_alpha(cfg.alpha)
        .with_exact_threshold(0);
    let (p_max, p_unc) = two_sample_p_values(&x, &y, &test_cfg)?;
    let m = cfg.n_vars;
    let mut out = [(false, 0usize); 4];
    for (slot, method) in out.iter_mut().zip(CORRECTIONS) {
        let p = match method {
            CorrectionMethod::None => p_unc.clone(),
            CorrectionMethod::Bonferroni => adjust_bonferroni(&p_unc, m),
            CorrectionMethod::Holm => adjust_holm(&p_unc),
            CorrectionMethod::Max => p_max.clone(),
        };
        let null_hit = p[k..].iter().any(|&q| q < cfg.alpha);
        let power_hits = p[..k].iter().filter(|&&q| q < cfg.alpha).count();
        *slot = (null_hit, power_hits);
    }
    Ok(out)
}

/// Reports for every correction method, estimated on the same datasets.
pub fn fwer_sim_all(cfg: &FwerConfig) -> Result<Vec<FwerReport>> {
    if cfg.n_sims < MIN_SIMS {
        return Err(Error::PermCountTooLow {
            requested: cfg.n_sims,
            min: MIN_SIMS,
        });
    }
    if cfg.n_vars == 0 {
        return Err(Error::DimensionTooSmall {
            what: "simulated variables".into(),
            min: 1,
            got: 0,
        });
    }
    if cfg.n_obs < 2 {
        return Err(Error::DimensionTooSmall {
            what: "simulated group".into(),
            min: 2,
            got: cfg.n_obs,
        });
    }
    TestConfig::default()
        .with_n_perm(cfg.n_perm)
        .with_alpha(cfg.alpha)
        .validate()?;
    let per_sim: Vec<[(bool, usize); 4]> = (0..cfg.n_sims)
        .into_par_iter()
        .map(|s| simulate_one(cfg, s))
        .collect::<Result<_>>()?;
    let k = cfg.shifted();
    let n = cfg.n_sims as f64;
    Ok(CORRECTIONS
        .iter()
        .enumerate()
        .map(|(c, &method)| {
            let fwer = per_sim.iter().filter(|r| r[c].0).count() as f64 / n;
            let power = (k > 0).then(|| {
                per_sim.iter().map(|r| r[c].1).sum::<usize>() as f64 / (n * k as f64)
            });
            FwerReport {
                n_sims: cfg.n_sims,
                n_vars: cfg.n_vars,
                n_obs: cfg.n_obs,
                alpha: cfg.alpha,
                correction: method,
                empirical_fwer: fwer,
                empirical_power: power,
                mc_stderr: (fwer * (1.0 - fwer) / n).sqrt(),
                effect_shift: cfg.effect_shift,
                n_shifted: k,
                n_perm: cfg.n_perm,
                seed: cfg.seed,
            }
        })
        .collect())
}

/// FWER and power for one correction method.
pub fn fwer_sim(
    n_vars: usize,
    n_obs: usize,
    n_sims: usize,
    alpha: f64,
    correction: CorrectionMethod,
    effect_shift: f64,
    seed: u64,
) -> Result<FwerReport> {
    let cfg = FwerConfig {
        alpha,
        effect_shift,
        seed,
        ..FwerConfig::new(n_vars, n_obs, n_sims)
    };
    fwer_sim_with(&cfg, correction)
}

pub fn fwer_sim_with(cfg: &FwerConfig, correction: CorrectionMethod) -> Result<FwerReport> {
    Ok(fwer_sim_all(cfg)?
        .into_iter()
        .find(|r| r.correction == correction)
        .expect("every correction is reported"))
}
