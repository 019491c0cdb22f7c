//! Engine p-values against independent exhaustive enumeration.

mod common;

use common::{Family, SmallCase, FAMILIES};
use permstat::kernels::CorrelationKind;
use permstat::reference::exact::{exact_test, ExactCase};
use permstat::{permucorr, permuttest2, permuztest, CorrectionMethod, Tail, TestConfig, VarAssumption};

fn exact_cfg() -> TestConfig {
    TestConfig::default().with_exact_threshold(1_000_000)
}

#[test]
fn exact_mode_matches_enumeration() {
    let mut rng = common::rng(11);
    for family in FAMILIES {
        for _ in 0..20 {
            let case = SmallCase::random(family, &mut rng);
            let (p, exact) = case.engine_p(&exact_cfg());
            assert!(exact, "{family:?} should enumerate");
            assert_eq!(p, case.oracle_p(), "{case:?}");
        }
    }
}

#[test]
fn monte_carlo_is_close_to_enumeration() {
    let mut rng = common::rng(12);
    let cfg = TestConfig::default().with_exact_threshold(0).with_n_perm(20_000).with_seed(5);
    for family in FAMILIES {
        for _ in 0..5 {
            let case = SmallCase::random(family, &mut rng);
            let (p, exact) = case.engine_p(&cfg);
            assert!(!exact);
            let want = case.oracle_p();
            assert!((p - want).abs() < 0.015, "{family:?}: {p} vs {want}");
        }
    }
}

#[test]
fn one_sided_tails_match_enumeration() {
    let mut rng = common::rng(13);
    for tail in [Tail::Right, Tail::Left] {
        for _ in 0..10 {
            let case = SmallCase::random(Family::TwoSampleT, &mut rng);
            let cfg = exact_cfg().with_tail(tail);
            let r = permuttest2(&common::column(&case.x), &common::column(&case.y), &cfg).unwrap();
            let want = exact_test(
                ExactCase::TwoSample { x: &case.x, y: &case.y, var: VarAssumption::Equal },
                tail,
            )
            .unwrap();
            assert_eq!(r.tested(0).p, want.p);
            assert_eq!(r.tested(0).statistic, want.observed);
        }
    }
}

#[test]
fn welch_spearman_rankit_and_z() {
    let mut rng = common::rng(14);
    for _ in 0..10 {
        let x = common::normals(&mut rng, 4, 1.0);
        let y = common::normals(&mut rng, 5, 0.0);
        let cfg = exact_cfg().with_var_assumption(VarAssumption::Unequal);
        let r = permuttest2(&common::column(&x), &common::column(&y), &cfg).unwrap();
        let want = exact_test(ExactCase::TwoSample { x: &x, y: &y, var: VarAssumption::Unequal }, Tail::TwoTailed);
        assert_eq!(r.tested(0).p, want.unwrap().p);

        let y2: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        for kind in [CorrelationKind::Spearman, CorrelationKind::Rankit] {
            let r = permucorr(&common::column(&x), Some(&common::column(&y2)), kind, &exact_cfg()).unwrap();
            let want = exact_test(ExactCase::Correlation { x: &x, y: &y2, kind }, Tail::TwoTailed).unwrap();
            assert_eq!(r.tested(0).p, want.p, "{kind:?}");
        }

        let z = permuztest(&common::column(&y), &[0.2], &[1.5], &exact_cfg()).unwrap();
        let want = exact_test(ExactCase::OneSampleZ { x: &y, mu: 0.2, sigma: 1.5 }, Tail::TwoTailed).unwrap();
        assert_eq!(z.tested(0).p, want.p);
    }
}

/// With several variables the max-corrected p of each variable is the share
/// of rearrangements whose most extreme statistic reaches it; checked here
/// by brute force over all 70 splits of 4 + 4 observations.
#[test]
fn max_correction_by_brute_force() {
    let mut rng = common::rng(15);
    let shifts = [1.5, 0.0, -0.5];
    let x = common::normal_matrix(&mut rng, 4, &shifts);
    let y = common::normal_matrix(&mut rng, 4, &[0.0; 3]);
    let r = permuttest2(&x, &y, &exact_cfg()).unwrap();
    assert!(r.exact);
    assert_eq!(r.n_rearrangements, 70);

    let pooled: Vec<Vec<f64>> = (0..3)
        .map(|v| x.column(v).iter().chain(y.column(v)).copied().collect())
        .collect();
    let mut maxima = Vec::new();
    for mask in 0u32..256 {
        if mask.count_ones() != 4 {
            continue;
        }
        let m = (0..3)
            .map(|v| {
                let (a, b): (Vec<(usize, f64)>, Vec<(usize, f64)>) =
                    pooled[v].iter().copied().enumerate().partition(|(i, _)| mask & (1 << i) != 0);
                let a: Vec<f64> = a.into_iter().map(|p| p.1).collect();
                let b: Vec<f64> = b.into_iter().map(|p| p.1).collect();
                permstat::kernels::t_two_sample(&a, &b, VarAssumption::Equal).unwrap().statistic.abs()
            })
            .fold(0.0, f64::max);
        maxima.push(m);
    }
    for v in 0..3 {
        let t = r.tested(v).statistic.abs();
        let hits = maxima.iter().filter(|&&m| m >= t - 1e-10 * t.max(1.0)).count();
        assert_eq!(r.tested(v).p, hits as f64 / 70.0, "var {v}");
    }

    for correction in [CorrectionMethod::Bonferroni, CorrectionMethod::Holm, CorrectionMethod::None] {
        let rc = permuttest2(&x, &y, &exact_cfg().with_correction(correction)).unwrap();
        for v in 0..3 {
            let unc = r.tested(v).p_uncorrected;
            assert_eq!(rc.tested(v).p_uncorrected, unc);
            assert!(rc.tested(v).p >= unc);
        }
    }
}
