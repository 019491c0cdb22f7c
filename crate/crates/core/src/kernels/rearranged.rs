//! Statistics of rearranged data from precomputed sufficient statistics.
//!
//! Each evaluator is built once from the original data and then maps one
//! draw (a sign vector or an index permutation) to one statistic per output.
//! Pooled data are centered first so the running sums stay small relative to
//! the totals they are subtracted from.
//!
//! A rearrangement can have zero spread (every flipped deviation equal, or a
//! partition that puts identical values in one group). Those map to ±∞ when
//! the numerator is non-zero and to the neutral value (0 for t, z and r, 1
//! for F) when it is zero as well.

use super::{mean, NEGLIGIBLE};
use crate::types::VarAssumption;

#[derive(Debug, Clone, Copy)]
pub(crate) enum Draw<'a> {
    Signs(&'a [f64]),
    Perm(&'a [usize]),
}

pub(crate) trait Evaluator: Sync {
    fn n_out(&self) -> usize;
    fn eval(&self, draw: Draw<'_>, out: &mut [f64]);
}

/// num / sqrt(var), with the degenerate cases described in the module docs.
#[inline]
fn t_like(num: f64, var: f64, scale_sq: f64) -> f64 {
    if var > NEGLIGIBLE * scale_sq {
        num / var.sqrt()
    } else if num.abs() <= 1e-12 * scale_sq.sqrt() {
        0.0
    } else {
        num.signum() * f64::INFINITY
    }
}

#[inline]
fn ratio_like(num: f64, den: f64, scale_sq: f64) -> f64 {
    let num_zero = num <= NEGLIGIBLE * scale_sq;
    let den_zero = den <= NEGLIGIBLE * scale_sq;
    match (num_zero, den_zero) {
        (true, true) => 1.0,
        (false, true) => f64::INFINITY,
        _ => num / den,
    }
}

fn partition_blocks(group_sizes: &[usize]) -> Vec<(usize, usize)> {
    let mut start = 0;
    group_sizes
        .iter()
        .map(|&g| {
            let b = (start, start + g);
            start += g;
            b
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SignStat {
    T,
    /// Known standard error per output.
    Z,
}

/// One-sample t or z under sign flips of deviations d = x − mu.
pub(crate) struct SignFlip {
    n: usize,
    devs: Vec<Vec<f64>>,
    sum_sq: Vec<f64>,
    se_known: Vec<f64>,
    stat: SignStat,
}

impl SignFlip {
    pub(crate) fn t(devs: Vec<Vec<f64>>) -> Self {
        Self::build(devs, Vec::new(), SignStat::T)
    }

    pub(crate) fn z(devs: Vec<Vec<f64>>, se: Vec<f64>) -> Self {
        Self::build(devs, se, SignStat::Z)
    }

    fn build(devs: Vec<Vec<f64>>, se_known: Vec<f64>, stat: SignStat) -> Self {
        let n = devs.first().map_or(0, Vec::len);
        let sum_sq = devs.iter().map(|d| d.iter().map(|v| v * v).sum()).collect();
        SignFlip {
            n,
            devs,
            sum_sq,
            se_known,
            stat,
        }
    }
}

impl Evaluator for SignFlip {
    fn n_out(&self) -> usize {
        self.devs.len()
    }

    fn eval(&self, draw: Draw<'_>, out: &mut [f64]) {
        let Draw::Signs(signs) = draw else {
            unreachable!("sign-flip evaluator needs a sign vector")
        };
        let n = self.n as f64;
        for (v, o) in out.iter_mut().enumerate() {
            let s: f64 = self.devs[v].iter().zip(signs).map(|(d, s)| d * s).sum();
            let m = s / n;
            *o = match self.stat {
                SignStat::T => {
                    let q = self.sum_sq[v];
                    let var = ((q - s * m) / (n - 1.0)).max(0.0);
                    t_like(m, var / n, q / n)
                }
                SignStat::Z => m / self.se_known[v],
            };
        }
    }
}

/// Two-sample t under re-partition of pooled, centered observations.
/// Pseudo-group X is the first `nx` permuted indices.
pub(crate) struct TwoSampleT {
    nx: usize,
    ny: usize,
    pooled: Vec<Vec<f64>>,
    total: Vec<f64>,
    sum_sq: Vec<f64>,
    var: VarAssumption,
}

impl TwoSampleT {
    pub(crate) fn new(x: &[&[f64]], y: &[&[f64]], var: VarAssumption) -> Self {
        let nx = x[0].len();
        let ny = y[0].len();
        let pooled: Vec<Vec<f64>> = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let all: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
                let m = mean(&all);
                all.into_iter().map(|v| v - m).collect()
            })
            .collect();
        let total = pooled.iter().map(|c| c.iter().sum()).collect();
        let sum_sq = pooled.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
        TwoSampleT {
            nx,
            ny,
            pooled,
            total,
            sum_sq,
            var,
        }
    }
}

impl Evaluator for TwoSampleT {
    fn n_out(&self) -> usize {
        self.pooled.len()
    }

    fn eval(&self, draw: Draw<'_>, out: &mut [f64]) {
        let Draw::Perm(perm) = draw else {
            unreachable!("two-sample evaluator needs a permutation")
        };
        let (nx, ny) = (self.nx as f64, self.ny as f64);
        let y_idx = &perm[self.nx..];
        for (v, o) in out.iter_mut().enumerate() {
            let c = &self.pooled[v];
            let q = self.sum_sq[v];
            let scale = q / (nx + ny);
            let (sy, qy) = y_idx.iter().fold((0.0, 0.0), |(s, qq), &i| {
                let val = c[i];
                (s + val, qq + val * val)
            });
            let sx = self.total[v] - sy;
            let diff = sx / nx - sy / ny;
            let var = match self.var {
                VarAssumption::Equal => {
                    let ssw = (q - sx * sx / nx - sy * sy / ny).max(0.0);
                    ssw / (nx + ny - 2.0) * (1.0 / nx + 1.0 / ny)
                }
                VarAssumption::Unequal => {
                    let qx = q - qy;
                    let vx = ((qx - sx * sx / nx) / (nx - 1.0)).max(0.0);
                    let vy = ((qy - sy * sy / ny) / (ny - 1.0)).max(0.0);
                    vx / nx + vy / ny
                }
            };
            *o = t_like(diff, var, scale);
        }
    }
}

/// Variance ratio under re-partition. Each group is centered on its own mean
/// before pooling, so a location difference does not enter the null.
pub(crate) struct VarianceRatio {
    nx: usize,
    ny: usize,
    pooled: Vec<Vec<f64>>,
    total: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl VarianceRatio {
    pub(crate) fn new(x: &[&[f64]], y: &[&[f64]]) -> Self {
        let nx = x[0].len();
        let ny = y[0].len();
        let pooled: Vec<Vec<f64>> = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let (ma, mb) = (mean(a), mean(b));
                a.iter()
                    .map(|v| v - ma)
                    .chain(b.iter().map(|v| v - mb))
                    .collect()
            })
            .collect();
        let total = pooled.iter().map(|c| c.iter().sum()).collect();
        let sum_sq = pooled.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
        VarianceRatio {
            nx,
            ny,
            pooled,
            total,
            sum_sq,
        }
    }
}

impl Evaluator for VarianceRatio {
    fn n_out(&self) -> usize {
        self.pooled.len()
    }

    fn eval(&self, draw: Draw<'_>, out: &mut [f64]) {
        let Draw::Perm(perm) = draw else {
            unreachable!("variance evaluator needs a permutation")
        };
        let (nx, ny) = (self.nx as f64, self.ny as f64);
        let y_idx = &perm[self.nx..];
        for (v, o) in out.iter_mut().enumerate() {
            let c = &self.pooled[v];
            let q = self.sum_sq[v];
            let (sy, qy) = y_idx.iter().fold((0.0, 0.0), |(s, qq), &i| {
                let val = c[i];
                (s + val, qq + val * val)
            });
            let sx = self.total[v] - sy;
            let qx = q - qy;
            let vx = ((qx - sx * sx / nx) / (nx - 1.0)).max(0.0);
            let vy = ((qy - sy * sy / ny) / (ny - 1.0)).max(0.0);
            *o = ratio_like(vx, vy, q / (nx + ny));
        }
    }
}

/// One-way ANOVA F under label shuffling of a single response.
pub(crate) struct OneWay {
    blocks: Vec<(usize, usize)>,
    values: Vec<f64>,
    sum_sq: f64,
}

impl OneWay {
    pub(crate) fn new(values: &[f64], group_sizes: &[usize]) -> Self {
        let m = mean(values);
        let values: Vec<f64> = values.iter().map(|v| v - m).collect();
        let sum_sq = values.iter().map(|v| v * v).sum();
        OneWay {
            blocks: partition_blocks(group_sizes),
            values,
            sum_sq,
        }
    }
}

impl Evaluator for OneWay {
    fn n_out(&self) -> usize {
        1
    }

    fn eval(&self, draw: Draw<'_>, out: &mut [f64]) {
        let Draw::Perm(perm) = draw else {
            unreachable!("ANOVA evaluator needs a permutation")
        };
        let n = self.values.len() as f64;
        let k = self.blocks.len() as f64;
        let total: f64 = self.values.iter().sum();
        let between_raw: f64 = self
            .blocks
            .iter()
            .map(|&(a, b)| {
                let s: f64 = perm[a..b].iter().map(|&i| self.values[i]).sum();
                s * s / (b - a) as f64
            })
            .sum();
        let ssb = (between_raw - total * total / n).max(0.0);
        let ssw = (self.sum_sq - between_raw).max(0.0);
        out[0] = ratio_like(ssb / (k - 1.0), ssw / (n - k), self.sum_sq / n);
    }
}

/// Balanced two-way ANOVA under unrestricted shuffling. The response is laid
/// out cell by cell, cell (i, j) occupying slots (i·b + j)·r .. +r.
/// Outputs F for A, B and the interaction.
pub(crate) struct TwoWay {
    a: usize,
    b: usize,
    r: usize,
    values: Vec<f64>,
    sum_sq: f64,
}

impl TwoWay {
    pub(crate) fn new(values: &[f64], a: usize, b: usize, r: usize) -> Self {
        debug_assert_eq!(values.len(), a * b * r);
        let m = mean(values);
        let values: Vec<f64> = values.iter().map(|v| v - m).collect();
        let sum_sq = values.iter().map(|v| v * v).sum();
        TwoWay {
            a,
            b,
            r,
            values,
            sum_sq,
        }
    }
}

impl Evaluator for TwoWay {
    fn n_out(&self) -> usize {
        3
    }

    fn eval(&self, draw: Draw<'_>, out: &mut [f64]) {
        let Draw::Perm(perm) = draw else {
            unreachable!("ANOVA evaluator needs a permutation")
        };
        let (a, b, r) = (self.a, self.b, self.r);
        let n = (a * b * r) as f64;
        let mut rows = vec![0.0; a];
        let mut cols = vec![0.0; b];
        let mut cells_sq = 0.0;
        let mut total = 0.0;
        for i in 0..a {
            for j in 0..b {
                let start = (i * b + j) * r;
                let s: f64 = perm[start..start + r].iter().map(|&k| self.values[k]).sum();
                rows[i] += s;
                cols[j] += s;
                total += s;
                cells_sq += s * s;
            }
        }
        let corr = total * total / n;
        let ss_a = (rows.iter().map(|s| s * s).sum::<f64>() / (b * r) as f64 - corr).max(0.0);
        let ss_b = (cols.iter().map(|s| s * s).sum::<f64>() / (a * r) as f64 - corr).max(0.0);
        let ss_cells = cells_sq / r as f64 - corr;
        let ss_ab = (ss_cells - ss_a - ss_b).max(0.0);
        let ss_e = (self.sum_sq - cells_sq / r as f64).max(0.0);
        let ms_e = ss_e / (a * b * (r - 1)) as f64;
        let scale = self.sum_sq / n;
        out[0] = ratio_like(ss_a / (a - 1) as f64, ms_e, scale);
        out[1] = ratio_like(ss_b / (b - 1) as f64, ms_e, scale);
        out[2] = ratio_like(ss_ab / ((a - 1) * (b - 1)) as f64, ms_e, scale);
    }
}

/// Correlations of fixed first members with row-permuted second members.
/// Both members are centered and scaled to unit norm, so r is a dot product.
pub(crate) struct RowPermCorr {
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

fn unit_norm(x: &[f64]) -> Vec<f64> {
    let m = mean(x);
    let c: Vec<f64> = x.iter().map(|v| v - m).collect();
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        c.into_iter().map(|v| v / norm).collect()
    } else {
        c
    }
}

impl RowPermCorr {
    /// `pairs` lists (first, second) member data, already transformed.
    pub(crate) fn new(pairs: &[(Vec<f64>, Vec<f64>)]) -> Self {
        RowPermCorr {
            first: pairs.iter().map(|p| unit_norm(&p.0)).collect(),
            second: pairs.iter().map(|p| unit_norm(&p.1)).collect(),
        }
    }
}

impl Evaluator for RowPermCorr {
    fn n_out(&self) -> usize {
        self.first.len()
    }

    fn eval(&self, draw: Draw<'_>, out: &mut [f64]) {
        let Draw::Perm(perm) = draw else {
            unreachable!("correlation evaluator needs a permutation")
        };
        for (v, o) in out.iter_mut().enumerate() {
            let (a, b) = (&self.first[v], &self.second[v]);
            let r: f64 = a.iter().zip(perm).map(|(x, &i)| x * b[i]).sum();
            *o = r.clamp(-1.0, 1.0);
        }
    }
}
