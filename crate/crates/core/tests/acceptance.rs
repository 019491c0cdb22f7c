//! Acceptance criteria 1 to 7. Each test writes one `criterion N PASS|FAIL`
//! line straight to stdout (so it shows without `--nocapture`) and then
//! asserts the outcome.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use common::props;
use common::{Family, SmallCase};
use permstat::effectsize::{bias_factor, cohens_d_from_summaries, effect_point};
use permstat::kernels::t_two_sample_from_summaries;
use permstat::reference::distributions::{f_cdf, norm_cdf, norm_inv, t_cdf, t_two_sided_p};
use permstat::reference::fwer::{fwer_sim_all, FwerConfig, FwerReport};
use permstat::{
    booteffectsize, permuttest2, BootConfig, CorrectionMethod, Dof, EffectKind, SampleSummary,
    TestConfig, VarAssumption,
};

fn report(n: u32, pass: bool, detail: &str) {
    let line = format!("criterion {n} {}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "criterion {n} failed: {detail}");
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

#[test]
fn criterion_1_exact_oracle_equivalence() {
    let start = Instant::now();
    let families = [
        [Family::TwoSampleT, Family::TwoSampleT],
        [Family::OneSampleT, Family::PairedT],
        [Family::Variance, Family::Variance],
        [Family::Correlation, Family::Correlation],
        [Family::Anova1, Family::Anova1],
    ];
    let mc = TestConfig::default().with_n_perm(50_000).with_exact_threshold(0).with_seed(1);
    let exact = TestConfig::default().with_exact_threshold(1_000_000);
    let mut rng = common::rng(2024);
    let mut worst_mc: f64 = 0.0;
    let mut exact_mismatches = 0;
    let mut not_exact = 0;
    let mut cases = 0;
    for pair in families {
        for i in 0..50 {
            let case = SmallCase::random(pair[i % 2], &mut rng);
            let want = case.oracle_p();
            let (p_mc, _) = case.engine_p(&mc.clone().with_seed(i as u64));
            let (p_ex, was_exact) = case.engine_p(&exact);
            worst_mc = worst_mc.max((p_mc - want).abs());
            exact_mismatches += usize::from(p_ex != want);
            not_exact += usize::from(!was_exact);
            cases += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_mc <= 0.01 && exact_mismatches == 0 && not_exact == 0 && elapsed < Duration::from_secs(120);
    report(
        1,
        pass,
        &format!(
            "{cases} datasets; max |MC p - exact p| = {worst_mc:.4} (tol 0.01); exact-mode mismatches {exact_mismatches}; runtime {}",
            secs(elapsed)
        ),
    );
}

#[test]
fn criterion_2_summary_statistics() {
    let x = SampleSummary { n: 30, mean: -0.06, sd: 0.91 };
    let y = SampleSummary { n: 30, mean: -1.09, sd: 0.86 };
    let t = t_two_sample_from_summaries(&x, &y, VarAssumption::Equal).unwrap();
    let df = match t.df {
        Dof::One(df) => df,
        other => panic!("unexpected df {other:?}"),
    };
    let d = cohens_d_from_summaries(&x, &y, VarAssumption::Equal).unwrap();
    let bf = bias_factor(60).unwrap();
    let g = d * bf;
    let pass = (t.statistic - 4.49).abs() <= 0.02
        && df == 58.0
        && (d - 1.16).abs() <= 0.02
        && bf == 1.0 - 3.0 / 231.0
        && (bf - 0.98701).abs() < 5e-6
        && (g - 1.14).abs() <= 0.02;
    report(
        2,
        pass,
        &format!(
            "t = {:.4} (4.49 +/- 0.02), df = {df}, d = {d:.4} (1.16 +/- 0.02), bias factor = {bf:.6} (1 - 3/231), g = {g:.4} (1.14 +/- 0.02); parametric p = {:.2e}",
            t.statistic,
            t_two_sided_p(t.statistic, df).unwrap()
        ),
    );
}

#[test]
fn criterion_3_example_data_recipe() {
    let start = Instant::now();
    let (n_obs, n_vars, n_true) = (30, 20, 10);
    let shifts: Vec<f64> = (0..n_vars).map(|v| if v < n_true { -1.0 } else { 0.0 }).collect();
    let mut true_hits = 0usize;
    let mut null_clear = 0usize;
    let mut g_sum = 0.0;
    let seeds = 100u64;
    for seed in 0..seeds {
        let mut rng = common::rng(10_000 + seed);
        let x = common::normal_matrix(&mut rng, n_obs, &vec![0.0; n_vars]);
        let y = common::normal_matrix(&mut rng, n_obs, &shifts);
        let r = permuttest2(&x, &y, &TestConfig::default().with_seed(seed)).unwrap();
        for v in 0..n_vars {
            let p = r.tested(v).p;
            if v < n_true {
                true_hits += usize::from(p < 0.05);
            } else {
                null_clear += usize::from(p >= 0.05);
            }
        }
        let x1 = common::column(x.column(0));
        let y1 = common::column(y.column(0));
        let e = booteffectsize(&x1, Some(&y1), EffectKind::Cohen, &BootConfig::default().with_seed(seed)).unwrap();
        g_sum += e.estimate(0).effect;
    }
    let power = true_hits as f64 / (seeds as usize * n_true) as f64;
    let specificity = null_clear as f64 / (seeds as usize * (n_vars - n_true)) as f64;
    let g_mean = g_sum / seeds as f64;
    let elapsed = start.elapsed();
    let pass = power >= 0.95
        && specificity >= 0.95
        && (g_mean - 1.14).abs() <= 0.25
        && elapsed < Duration::from_secs(300);
    report(
        3,
        pass,
        &format!(
            "true-effect variables with max-corrected p < 0.05: {:.1}% (need >= 95%); null variables with p >= 0.05: {:.1}% (need >= 95%); mean g(var1) = {g_mean:.3} (1.14 +/- 0.25); runtime {}",
            100.0 * power,
            100.0 * specificity,
            secs(elapsed)
        ),
    );
}

fn by(reports: &[FwerReport], c: CorrectionMethod) -> &FwerReport {
    reports.iter().find(|r| r.correction == c).unwrap()
}

#[test]
fn criterion_4_fwer_control() {
    let start = Instant::now();
    let null_cfg = FwerConfig { seed: 4, ..FwerConfig::new(20, 30, 2000) };
    let null = fwer_sim_all(&null_cfg).unwrap();
    let shift_cfg = FwerConfig { effect_shift: 1.0, n_shifted: Some(10), seed: 5, ..null_cfg.clone() };
    let shifted = fwer_sim_all(&shift_cfg).unwrap();
    let elapsed = start.elapsed();

    let unc = by(&null, CorrectionMethod::None).empirical_fwer;
    let max = by(&null, CorrectionMethod::Max).empirical_fwer;
    let power = |c| by(&shifted, c).empirical_power.unwrap();
    let se = |c| by(&shifted, c).power_stderr().unwrap();
    let (pm, ph, pb) = (power(CorrectionMethod::Max), power(CorrectionMethod::Holm), power(CorrectionMethod::Bonferroni));
    // Two standard errors of the difference, treating the estimates as independent.
    let slack = |a, b| 2.0 * (se(a).powi(2) + se(b).powi(2)).sqrt();
    let max_ge_holm = pm >= ph - slack(CorrectionMethod::Max, CorrectionMethod::Holm);
    let holm_ge_bonf = ph >= pb - slack(CorrectionMethod::Holm, CorrectionMethod::Bonferroni);
    let analytic = 1.0 - 0.95f64.powi(20);
    let pass = (unc - 0.64).abs() <= 0.04
        && max <= 0.07
        && max_ge_holm
        && holm_ge_bonf
        && elapsed < Duration::from_secs(600);
    report(
        4,
        pass,
        &format!(
            "uncorrected FWER = {unc:.4} (0.64 +/- 0.04, analytic {analytic:.4}); Max FWER = {max:.4} (<= 0.07); power Max = {pm:.4}, Holm = {ph:.4}, Bonferroni = {pb:.4} (Max >= Holm: {max_ge_holm}, Holm >= Bonferroni: {holm_ge_bonf}); runtime {}",
            secs(elapsed)
        ),
    );
}

#[test]
fn criterion_5_parametric_parity() {
    let mut rng = common::rng(55);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let shift = (i % 10) as f64 * 0.03;
        let x = common::normals(&mut rng, 200, shift);
        let y = common::normals(&mut rng, 200, 0.0);
        let r = permuttest2(&common::column(&x), &common::column(&y), &TestConfig::default().with_seed(i)).unwrap();
        let s = r.tested(0);
        let parametric = t_two_sided_p(s.statistic, 398.0).unwrap();
        worst = worst.max((s.p - parametric).abs());
    }

    let mut dist_err: [f64; 3] = [0.0; 3];
    for k in -40..=40 {
        let t = k as f64 * 0.25;
        let cauchy = 0.5 + t.atan() / std::f64::consts::PI;
        dist_err[0] = dist_err[0].max((t_cdf(t, 1.0).unwrap() - cauchy).abs());
        let df2 = 0.5 + t / (2.0 * (2.0 + t * t).sqrt());
        dist_err[0] = dist_err[0].max((t_cdf(t, 2.0).unwrap() - df2).abs());
        for df in [3.0, 7.5, 30.0] {
            let sym = t_cdf(t, df).unwrap() + t_cdf(-t, df).unwrap() - 1.0;
            dist_err[0] = dist_err[0].max(sym.abs());
        }
        if t >= 0.0 {
            let f11 = 2.0 / std::f64::consts::PI * t.sqrt().atan();
            dist_err[1] = dist_err[1].max((f_cdf(t, 1.0, 1.0).unwrap() - f11).abs());
            dist_err[1] = dist_err[1].max((f_cdf(t, 2.0, 2.0).unwrap() - t / (1.0 + t)).abs());
            if t > 0.0 {
                // F(d1, d2) at x and F(d2, d1) at 1/x are complementary.
                let c = f_cdf(t, 3.0, 8.0).unwrap() + f_cdf(1.0 / t, 8.0, 3.0).unwrap() - 1.0;
                dist_err[1] = dist_err[1].max(c.abs());
            }
        }
    }
    for df in [1.0, 4.0, 17.0] {
        dist_err[1] = dist_err[1].max((f_cdf(1.0, df, df).unwrap() - 0.5).abs());
    }
    let known = [(0.5, 0.0), (0.975, 1.959963984540054), (0.025, -1.959963984540054), (0.8413447460685429, 1.0)];
    for (p, z) in known {
        dist_err[2] = dist_err[2].max((norm_inv(p).unwrap() - z).abs());
    }
    for k in 1..200 {
        let p = k as f64 / 200.0;
        dist_err[2] = dist_err[2].max((norm_inv(p).unwrap() + norm_inv(1.0 - p).unwrap()).abs());
        let z = (k as f64 - 100.0) / 25.0;
        dist_err[2] = dist_err[2].max((norm_inv(norm_cdf(z)).unwrap() - z).abs());
    }
    let pass = worst <= 0.02 && dist_err[0] <= 1e-10 && dist_err[1] <= 1e-10 && dist_err[2] <= 1e-9;
    report(
        5,
        pass,
        &format!(
            "max |perm p - parametric p| = {worst:.4} over 100 datasets (tol 0.02); t_cdf err {:.1e} (1e-10), f_cdf err {:.1e} (1e-10), norm_inv err {:.1e} (1e-9)",
            dist_err[0], dist_err[1], dist_err[2]
        ),
    );
}

#[test]
fn criterion_6_invariant_suite() {
    let start = Instant::now();
    let failures: Vec<String> = props::ALL
        .iter()
        .filter_map(|(name, check)| check().err().map(|e| format!("{name}: {e}")))
        .collect();
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(300);
    report(
        6,
        pass,
        &format!(
            "{} properties x {} cases, failures: {}; runtime {}",
            props::ALL.len(),
            props::CASES,
            if failures.is_empty() { "none".to_string() } else { failures.join("; ") },
            secs(elapsed)
        ),
    );
}

#[test]
fn criterion_7_small_sample_bias() {
    let sims = 10_000;
    let delta = 1.0;
    let mut lines = Vec::new();
    let mut pass = true;
    for n_total in [20usize, 30, 40, 50] {
        let half = n_total / 2;
        let bf = bias_factor(n_total).unwrap();
        let mut rng = common::rng(700 + n_total as u64);
        let (mut d_sum, mut g_sum, mut inflation_sum) = (0.0, 0.0, 0.0);
        for _ in 0..sims {
            let x = common::normals(&mut rng, half, delta);
            let y = common::normals(&mut rng, half, 0.0);
            let d = effect_point(&x, Some(&y), EffectKind::Cohen, false, VarAssumption::Equal).unwrap();
            let diff = x.iter().sum::<f64>() / half as f64 - y.iter().sum::<f64>() / half as f64;
            d_sum += d;
            g_sum += d * bf;
            // d / diff is 1 / s_pooled; its mean is the factor by which d
            // overstates the true standardized difference, free of the
            // mean-difference noise.
            inflation_sum += d / diff;
        }
        let ratio = d_sum / g_sum;
        let inflation = inflation_sum / sims as f64;
        let target = 1.0 / bf;
        let ok_ratio = (ratio / target - 1.0).abs() <= 0.005;
        let ok_inflation = (inflation / target - 1.0).abs() <= 0.005;
        pass &= ok_ratio && ok_inflation;
        lines.push(format!(
            "n={n_total}: 1/bias_factor = {target:.4}, mean d / mean g = {ratio:.4}, E[d]/delta = {inflation:.4} (raw mean d = {:.4})",
            d_sum / sims as f64
        ));
    }
    report(7, pass, &format!("{} sims per n, tol 0.5%; {}", sims, lines.join("; ")));
}
