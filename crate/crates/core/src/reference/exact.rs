//! Brute-force exact permutation tests.
//!
//! Every rearrangement is materialized as actual data and the statistic is
//! recomputed from scratch with the two-pass kernels. Nothing here shares
//! code with the resampling plans or the sufficient-statistic evaluators the
//! engine uses, which is the point: the engine is checked against it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, CorrelationKind};
use crate::types::{Tail, VarAssumption};

/// Largest number of rearrangements the oracle will enumerate.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

/// A single-variable test to enumerate.
#[derive(Debug, Clone, Copy)]
pub enum ExactCase<'a> {
    OneSample { x: &'a [f64], mu: f64 },
    Paired { x: &'a [f64], y: &'a [f64] },
    OneSampleZ { x: &'a [f64], mu: f64, sigma: f64 },
    TwoSample { x: &'a [f64], y: &'a [f64], var: VarAssumption },
    Variance { x: &'a [f64], y: &'a [f64] },
    Correlation { x: &'a [f64], y: &'a [f64], kind: CorrelationKind },
    Anova1 { groups: &'a [Vec<f64>] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactReport {
    pub observed: f64,
    pub p: f64,
    pub n_rearrangements: u64,
}

#[derive(Clone, Copy, PartialEq)]
enum Shape {
    Symmetric,
    Ratio,
}

fn magnitude(v: f64, tail: Tail, shape: Shape) -> f64 {
    match (tail, shape) {
        (Tail::Right, _) => v,
        (Tail::Left, _) => -v,
        (Tail::TwoTailed, Shape::Symmetric) => v.abs(),
        (Tail::TwoTailed, Shape::Ratio) if v <= 0.0 => f64::INFINITY,
        (Tail::TwoTailed, Shape::Ratio) => v.max(1.0 / v),
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn factorial(n: u64) -> u64 {
    (1..=n).try_fold(1u64, |a, b| a.checked_mul(b)).unwrap_or(u64::MAX)
}

fn check_limit(count: u64) -> Result<()> {
    if count > ENUMERATION_LIMIT {
        return Err(Error::TooLargeToEnumerate {
            count: count.to_string(),
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

fn sd(v: &[f64]) -> f64 {
    kernels::summary(v).sd
}

fn tiny(var: f64, data: &[f64]) -> bool {
    let ms = data.iter().map(|a| a * a).sum::<f64>() / data.len() as f64;
    var <= 1e-24 * ms
}

/// t of a rearrangement, with constant samples mapped to ±∞ (or 0 when the
/// mean is zero as well).
fn t_one(d: &[f64], sigma: Option<f64>) -> f64 {
    let n = d.len() as f64;
    let m = d.iter().sum::<f64>() / n;
    if let Some(sigma) = sigma {
        return m / (sigma / n.sqrt());
    }
    let s = sd(d);
    if tiny(s * s, d) {
        let ms = (d.iter().map(|a| a * a).sum::<f64>() / n).sqrt();
        return if m.abs() <= 1e-12 * ms { 0.0 } else { m.signum() * f64::INFINITY };
    }
    m / (s / n.sqrt())
}

fn t_two(x: &[f64], y: &[f64], var: VarAssumption) -> f64 {
    match kernels::t_two_sample(x, y, var) {
        Ok(s) => s.statistic,
        Err(_) => {
            let diff = x.iter().sum::<f64>() / x.len() as f64 - y.iter().sum::<f64>() / y.len() as f64;
            let all: Vec<f64> = x.iter().chain(y).copied().collect();
            let ms = (all.iter().map(|a| a * a).sum::<f64>() / all.len() as f64).sqrt();
            if diff.abs() <= 1e-12 * ms {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            }
        }
    }
}

fn f_two(x: &[f64], y: &[f64]) -> f64 {
    let (vx, vy) = (sd(x).powi(2), sd(y).powi(2));
    let all: Vec<f64> = x.iter().chain(y).copied().collect();
    match (tiny(vx, &all), tiny(vy, &all)) {
        (true, true) => 1.0,
        (false, true) => f64::INFINITY,
        _ => vx / vy,
    }
}

fn f_groups(groups: &[Vec<f64>]) -> f64 {
    match kernels::anova1_f(groups) {
        Ok(s) => s.statistic,
        Err(_) => {
            let all: Vec<f64> = groups.iter().flatten().copied().collect();
            let grand = all.iter().sum::<f64>() / all.len() as f64;
            let ssb: f64 = groups
                .iter()
                .map(|g| {
                    let m = g.iter().sum::<f64>() / g.len() as f64;
                    g.len() as f64 * (m - grand).powi(2)
                })
                .sum();
            if tiny(ssb / all.len() as f64, &all) {
                1.0
            } else {
                f64::INFINITY
            }
        }
    }
}

/// Calls `visit` with every subset of `0..n` of size `k`, as a membership mask.
fn for_each_subset(n: usize, k: usize, visit: &mut dyn FnMut(&[bool])) {
    fn rec(start: usize, left: usize, mask: &mut Vec<bool>, visit: &mut dyn FnMut(&[bool])) {
        if left == 0 {
            visit(mask);
            return;
        }
        for i in start..=mask.len() - left {
            mask[i] = true;
            rec(i + 1, left - 1, mask, visit);
            mask[i] = false;
        }
    }
    let mut mask = vec![false; n];
    rec(0, k, &mut mask, visit);
}

/// Heap's algorithm over all orderings of `items`.
fn for_each_ordering(items: &mut [f64], visit: &mut dyn FnMut(&[f64])) {
    let n = items.len();
    let mut c = vec![0usize; n];
    visit(items);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(items);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Every distinct assignment of the observations to groups of the given
/// sizes, as a label per observation.
fn for_each_labelling(sizes: &[usize], visit: &mut dyn FnMut(&[usize])) {
    fn rec(pos: usize, left: &mut [usize], labels: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if pos == labels.len() {
            visit(labels);
            return;
        }
        for g in 0..left.len() {
            if left[g] > 0 {
                left[g] -= 1;
                labels[pos] = g;
                rec(pos + 1, left, labels, visit);
                left[g] += 1;
            }
        }
    }
    let n: usize = sizes.iter().sum();
    let mut left = sizes.to_vec();
    let mut labels = vec![0; n];
    rec(0, &mut left, &mut labels, visit);
}

fn split(all: &[f64], mask: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (&v, &m) in all.iter().zip(mask) {
        if m {
            a.push(v);
        } else {
            b.push(v);
        }
    }
    (a, b)
}

fn center(v: &[f64]) -> Vec<f64> {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|a| a - m).collect()
}

/// Enumerates every rearrangement of `case` and returns the exact proportion
/// at least as extreme as the observed statistic (ties within a relative
/// 1e-10 count as extreme).
pub fn exact_test(case: ExactCase<'_>, tail: Tail) -> Result<ExactReport> {
    let mut stats: Vec<f64> = Vec::new();
    let observed: f64;
    let shape;
    match case {
        ExactCase::OneSample { x, mu } => {
            shape = Shape::Symmetric;
            observed = kernels::t_one_sample(x, mu)?.statistic;
            sign_flips(&x.iter().map(|v| v - mu).collect::<Vec<_>>(), None, &mut stats)?;
        }
        ExactCase::Paired { x, y } => {
            shape = Shape::Symmetric;
            if x.len() != y.len() {
                return Err(Error::ShapeMismatch("paired samples differ in length".into()));
            }
            let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
            observed = kernels::t_one_sample(&d, 0.0)?.statistic;
            sign_flips(&d, None, &mut stats)?;
        }
        ExactCase::OneSampleZ { x, mu, sigma } => {
            shape = Shape::Symmetric;
            observed = kernels::z_one_sample(x, mu, sigma)?.statistic;
            sign_flips(&x.iter().map(|v| v - mu).collect::<Vec<_>>(), Some(sigma), &mut stats)?;
        }
        ExactCase::TwoSample { x, y, var } => {
            shape = Shape::Symmetric;
            observed = kernels::t_two_sample(x, y, var)?.statistic;
            let all: Vec<f64> = x.iter().chain(y).copied().collect();
            check_limit(binomial(all.len() as u64, x.len() as u64))?;
            for_each_subset(all.len(), x.len(), &mut |mask| {
                let (a, b) = split(&all, mask);
                stats.push(t_two(&a, &b, var));
            });
        }
        ExactCase::Variance { x, y } => {
            shape = Shape::Ratio;
            observed = kernels::f_two_sample(x, y)?.statistic;
            let all: Vec<f64> = center(x).into_iter().chain(center(y)).collect();
            check_limit(binomial(all.len() as u64, x.len() as u64))?;
            for_each_subset(all.len(), x.len(), &mut |mask| {
                let (a, b) = split(&all, mask);
                stats.push(f_two(&a, &b));
            });
        }
        ExactCase::Correlation { x, y, kind } => {
            shape = Shape::Symmetric;
            observed = kernels::correlation(x, y, kind)?.statistic;
            check_limit(factorial(y.len() as u64))?;
            let mut yy = y.to_vec();
            for_each_ordering(&mut yy, &mut |perm| {
                stats.push(
                    kernels::correlation(x, perm, kind)
                        .expect("a permutation keeps the variance")
                        .statistic,
                );
            });
        }
        ExactCase::Anova1 { groups } => {
            shape = Shape::Ratio;
            if tail != Tail::Right {
                return Err(Error::TailUnsupported {
                    family: "ANOVA".into(),
                    supported: "right".into(),
                });
            }
            observed = kernels::anova1_f(groups)?.statistic;
            let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
            let all: Vec<f64> = groups.iter().flatten().copied().collect();
            let mut count = factorial(all.len() as u64) as u128;
            for &s in &sizes {
                count /= factorial(s as u64) as u128;
            }
            check_limit(count.min(u64::MAX as u128) as u64)?;
            for_each_labelling(&sizes, &mut |labels| {
                let mut gs: Vec<Vec<f64>> = vec![Vec::new(); sizes.len()];
                for (&v, &l) in all.iter().zip(labels) {
                    gs[l].push(v);
                }
                stats.push(f_groups(&gs));
            });
        }
    }
    let obs = magnitude(observed, tail, shape);
    let tol = 1e-10 * obs.abs().max(1.0);
    let hits = stats
        .iter()
        .filter(|&&s| magnitude(s, tail, shape) >= obs - tol)
        .count();
    Ok(ExactReport {
        observed,
        p: hits as f64 / stats.len() as f64,
        n_rearrangements: stats.len() as u64,
    })
}

fn sign_flips(d: &[f64], sigma: Option<f64>, stats: &mut Vec<f64>) -> Result<()> {
    let n = d.len();
    if n >= 64 {
        return Err(Error::TooLargeToEnumerate {
            count: format!("2^{n}"),
            limit: ENUMERATION_LIMIT,
        });
    }
    check_limit(1u64 << n)?;
    let mut flipped = vec![0.0; n];
    for mask in 0u64..(1u64 << n) {
        for (k, f) in flipped.iter_mut().enumerate() {
            *f = if mask >> k & 1 == 1 { -d[k] } else { d[k] };
        }
        stats.push(t_one(&flipped, sigma));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_examples() {
        let r = exact_test(
            ExactCase::TwoSample { x: &[1.0, 2.0], y: &[3.0, 4.0], var: VarAssumption::Equal },
            Tail::TwoTailed,
        )
        .unwrap();
        assert_eq!(r.n_rearrangements, 6);
        assert!((r.p - 1.0 / 3.0).abs() < 1e-15);

        let r = exact_test(ExactCase::OneSample { x: &[1.0, 2.0, 3.0], mu: 0.0 }, Tail::TwoTailed).unwrap();
        assert_eq!(r.n_rearrangements, 8);
        assert_eq!(r.p, 0.25);

        let x = [1.0, 3.0, 2.0, 5.0];
        let r = exact_test(
            ExactCase::TwoSample { x: &x, y: &x, var: VarAssumption::Equal },
            Tail::TwoTailed,
        )
        .unwrap();
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn enumeration_counts() {
        let mut n = 0;
        for_each_subset(8, 4, &mut |_| n += 1);
        assert_eq!(n, 70);
        let mut n = 0;
        for_each_ordering(&mut [1.0, 2.0, 3.0, 4.0, 5.0], &mut |_| n += 1);
        assert_eq!(n, 120);
        let mut seen = std::collections::HashSet::new();
        for_each_labelling(&[3, 3, 3], &mut |l| {
            seen.insert(l.to_vec());
        });
        assert_eq!(seen.len(), 1680);
        let mut orders = std::collections::HashSet::new();
        for_each_ordering(&mut [1.0, 2.0, 3.0, 4.0], &mut |p| {
            orders.insert(p.iter().map(|v| *v as u8).collect::<Vec<_>>());
        });
        assert_eq!(orders.len(), 24);
    }

    #[test]
    fn refuses_huge_enumerations() {
        let x: Vec<f64> = (0..15).map(f64::from).collect();
        let y: Vec<f64> = (0..15).map(|v| f64::from(v) * 0.5).collect();
        assert!(matches!(
            exact_test(ExactCase::TwoSample { x: &x, y: &y, var: VarAssumption::Equal }, Tail::TwoTailed),
            Err(Error::TooLargeToEnumerate { .. })
        ));
        let z: Vec<f64> = (0..12).map(f64::from).collect();
        assert!(matches!(
            exact_test(ExactCase::Correlation { x: &z, y: &z, kind: CorrelationKind::Pearson }, Tail::TwoTailed),
            Err(Error::TooLargeToEnumerate { .. })
        ));
    }

    #[test]
    fn anova_right_tail_only() {
        let g = vec![vec![1.0, 2.0], vec![3.0, 5.0]];
        assert!(exact_test(ExactCase::Anova1 { groups: &g }, Tail::TwoTailed).is_err());
        let r = exact_test(ExactCase::Anova1 { groups: &g }, Tail::Right).unwrap();
        assert_eq!(r.n_rearrangements, 6);
    }
}
