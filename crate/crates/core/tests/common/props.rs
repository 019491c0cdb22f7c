//! Invariant properties, runnable from `invariants.rs` (one test each) and
//! from the acceptance target (one summary line).

use permstat::cli::output::test_envelope;
use permstat::effectsize::{cliffs_d, effect_point};
use permstat::inference::{adjust_bonferroni, adjust_holm};
use permstat::kernels::{self, CorrelationKind};
use permstat::{
    booteffectsize, permuanova1, permuttest2, BootConfig, CorrectionMethod, DataMatrix, EffectKind,
    TestConfig, VarAssumption,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub const CASES: u32 = 1000;

pub fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    })
}

fn sample(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, min..=max)
}

/// Values on a coarse grid, so ties are common.
fn tied_sample(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-6i32..6).prop_map(f64::from), min..=max)
}

fn matrix(n_obs: usize, n_vars: usize) -> impl Strategy<Value = DataMatrix> {
    prop::collection::vec(-10.0f64..10.0, n_obs * n_vars)
        .prop_map(move |v| DataMatrix::from_columns(v.chunks(n_obs).map(<[f64]>::to_vec).collect()).unwrap())
}

fn two_groups() -> impl Strategy<Value = (DataMatrix, DataMatrix)> {
    (3usize..8, 3usize..8, 1usize..4)
        .prop_flat_map(|(nx, ny, v)| (matrix(nx, v), matrix(ny, v)))
}

fn run<S: Strategy>(
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner().run(&strategy, test).map_err(|e| e.to_string())
}

fn small_cfg(seed: u64, correction: CorrectionMethod) -> TestConfig {
    TestConfig::default()
        .with_n_perm(200)
        .with_seed(seed)
        .with_exact_threshold(0)
        .with_correction(correction)
}

pub fn determinism() -> Result<(), String> {
    run((two_groups(), any::<u64>()), |((x, y), seed)| {
        let cfg = small_cfg(seed, CorrectionMethod::Max);
        let a = permuttest2(&x, &y, &cfg).unwrap();
        let b = permuttest2(&x, &y, &cfg).unwrap();
        let ja = serde_json::to_vec(&test_envelope("ttest2", &[&a])).unwrap();
        let jb = serde_json::to_vec(&test_envelope("ttest2", &[&b])).unwrap();
        prop_assert_eq!(ja, jb);
        Ok(())
    })
}

pub fn max_not_below_uncorrected() -> Result<(), String> {
    run((two_groups(), any::<u64>()), |((x, y), seed)| {
        let r = permuttest2(&x, &y, &small_cfg(seed, CorrectionMethod::Max)).unwrap();
        for v in 0..r.n_vars() {
            if let Some(s) = r.stat(v) {
                prop_assert!(s.p >= s.p_uncorrected, "var {}: {} < {}", v, s.p, s.p_uncorrected);
            }
        }
        Ok(())
    })
}

pub fn holm_not_above_bonferroni() -> Result<(), String> {
    run(prop::collection::vec(1e-6f64..=1.0, 1..30), |p| {
        let holm = adjust_holm(&p);
        let bonf = adjust_bonferroni(&p, p.len());
        for i in 0..p.len() {
            prop_assert!(holm[i] <= bonf[i], "{} > {}", holm[i], bonf[i]);
            prop_assert!(holm[i] >= p[i]);
        }
        Ok(())
    })
}

pub fn cliff_bounded_and_antisymmetric() -> Result<(), String> {
    run((tied_sample(1, 15), tied_sample(1, 15)), |(x, y)| {
        let d = cliffs_d(&x, &y);
        prop_assert!((-1.0..=1.0).contains(&d));
        prop_assert_eq!(d, -cliffs_d(&y, &x));
        Ok(())
    })
}

pub fn spearman_is_pearson_of_ranks() -> Result<(), String> {
    run(
        (3usize..20).prop_flat_map(|n| (tied_sample(n, n), sample(n, n))),
        |(x, y)| {
            let s = kernels::correlation(&x, &y, CorrelationKind::Spearman);
            let p = kernels::correlation(
                &kernels::rank_transform(&x),
                &kernels::rank_transform(&y),
                CorrelationKind::Pearson,
            );
            match (s, p) {
                (Ok(s), Ok(p)) => prop_assert!((s.statistic - p.statistic).abs() < 1e-12),
                (s, p) => prop_assert_eq!(s.is_err(), p.is_err()),
            }
            Ok(())
        },
    )
}

pub fn anova_f_is_t_squared() -> Result<(), String> {
    run((sample(2, 7), sample(2, 7), any::<u64>()), |(x, y, seed)| {
        let cfg = TestConfig::default().with_n_perm(200).with_seed(seed);
        let t = permuttest2(&column(&x), &column(&y), &cfg).unwrap();
        let values: Vec<f64> = x.iter().chain(&y).copied().collect();
        let labels: Vec<u8> = x.iter().map(|_| 0).chain(y.iter().map(|_| 1)).collect();
        let f = permuanova1(&values, &labels, &cfg.with_tail(permstat::Tail::Right)).unwrap();
        let (Some(t), Some(f)) = (t.stat(0), f.stat(0)) else {
            return Ok(());
        };
        let t2 = t.statistic * t.statistic;
        prop_assert!((f.statistic - t2).abs() <= 1e-9 * t2.max(1.0), "F {} vs t² {}", f.statistic, t2);
        Ok(())
    })
}

fn column(v: &[f64]) -> DataMatrix {
    DataMatrix::from_vec(v.to_vec()).unwrap()
}

pub fn affine_invariance() -> Result<(), String> {
    run(
        (sample(3, 10), sample(3, 10), 0.01f64..100.0, -100.0f64..100.0, any::<bool>()),
        |(x, y, a, b, flip)| {
            let map = |v: &[f64], s: f64| v.iter().map(|u| s * u + b).collect::<Vec<f64>>();
            let (xa, ya) = (map(&x, a), map(&y, a));
            let close = |u: f64, v: f64| (u - v).abs() <= 1e-7 * u.abs().max(1.0);
            for var in [VarAssumption::Equal, VarAssumption::Unequal] {
                let t0 = kernels::t_two_sample(&x, &y, var).unwrap().statistic;
                let t1 = kernels::t_two_sample(&xa, &ya, var).unwrap().statistic;
                prop_assert!(close(t0, t1), "t {} vs {}", t0, t1);
                for kind in [EffectKind::Cohen, EffectKind::Glass] {
                    let d0 = effect_point(&x, Some(&y), kind, false, var).unwrap();
                    let d1 = effect_point(&xa, Some(&ya), kind, false, var).unwrap();
                    prop_assert!(close(d0, d1), "{:?} {} vs {}", kind, d0, d1);
                }
            }
            let f0 = kernels::f_two_sample(&x, &y).unwrap().statistic;
            let f1 = kernels::f_two_sample(&xa, &ya).unwrap().statistic;
            prop_assert!(close(f0, f1));
            prop_assert_eq!(cliffs_d(&x, &y), cliffs_d(&xa, &ya));

            let n = x.len().min(y.len());
            let s = if flip { -a } else { a };
            for kind in [CorrelationKind::Pearson, CorrelationKind::Spearman, CorrelationKind::Rankit] {
                let r0 = kernels::correlation(&x[..n], &y[..n], kind).unwrap().statistic;
                let r1 = kernels::correlation(&map(&x[..n], s), &y[..n], kind).unwrap().statistic;
                let expect = if flip { -r0 } else { r0 };
                prop_assert!((r1 - expect).abs() < 1e-9, "{:?} {} vs {}", kind, r1, expect);
            }
            Ok(())
        },
    )
}

/// The bias factor scales the bootstrapped interval along with the point
/// estimate, and the bootstrap is invariant to shifting both samples.
pub fn bootstrap_scaling() -> Result<(), String> {
    let strategy = (sample(4, 9), sample(4, 9), -20.0f64..20.0, any::<u64>());
    let mut r = TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() });
    r.run(&strategy, |(x, y, b, seed)| {
        let cfg = BootConfig::default().with_n_boot(200).with_seed(seed);
        let shift = |v: &[f64]| column(&v.iter().map(|u| u + b).collect::<Vec<_>>());
        let raw = booteffectsize(&column(&x), Some(&column(&y)), EffectKind::Cohen, &cfg.clone().with_bias_correct(false)).unwrap();
        let g = booteffectsize(&column(&x), Some(&column(&y)), EffectKind::Cohen, &cfg).unwrap();
        let gs = booteffectsize(&shift(&x), Some(&shift(&y)), EffectKind::Cohen, &cfg).unwrap();
        let (d, g, gs) = (raw.estimate(0), g.estimate(0), gs.estimate(0));
        let k = g.correction_factor;
        prop_assert!((g.effect - k * d.effect).abs() < 1e-12 * d.effect.abs().max(1.0));
        prop_assert!((g.ci.lower - k * d.ci.lower).abs() < 1e-9 * d.ci.lower.abs().max(1.0));
        prop_assert!((g.ci.upper - k * d.ci.upper).abs() < 1e-9 * d.ci.upper.abs().max(1.0));
        prop_assert!((gs.effect - g.effect).abs() < 1e-7 * g.effect.abs().max(1.0));
        Ok(())
    })
    .map_err(|e| e.to_string())
}

pub type Property = (&'static str, fn() -> Result<(), String>);

pub const ALL: [Property; 8] = [
    ("determinism", determinism),
    ("max_not_below_uncorrected", max_not_below_uncorrected),
    ("holm_not_above_bonferroni", holm_not_above_bonferroni),
    ("cliff_bounded_and_antisymmetric", cliff_bounded_and_antisymmetric),
    ("spearman_is_pearson_of_ranks", spearman_is_pearson_of_ranks),
    ("anova_f_is_t_squared", anova_f_is_t_squared),
    ("affine_invariance", affine_invariance),
    ("bootstrap_scaling", bootstrap_scaling),
];
