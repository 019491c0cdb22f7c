//! Helpers shared by the integration tests.
#![allow(dead_code)]

pub mod props;

use permstat::kernels::CorrelationKind;
use permstat::reference::exact::{exact_test, ExactCase};
use permstat::{
    permuanova1, permucorr, permuttest, permuttest2, permuvartest2, DataMatrix, Tail, TestConfig,
    VarAssumption,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn normals(rng: &mut ChaCha20Rng, n: usize, shift: f64) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) + shift).collect()
}

pub fn column(v: &[f64]) -> DataMatrix {
    DataMatrix::from_vec(v.to_vec()).unwrap()
}

pub fn normal_matrix(rng: &mut ChaCha20Rng, n_obs: usize, shifts: &[f64]) -> DataMatrix {
    DataMatrix::from_columns(shifts.iter().map(|&s| normals(rng, n_obs, s)).collect()).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    TwoSampleT,
    OneSampleT,
    PairedT,
    Variance,
    Correlation,
    Anova1,
}

/// One single-variable dataset small enough to enumerate.
#[derive(Debug, Clone)]
pub struct SmallCase {
    pub family: Family,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub groups: Vec<Vec<f64>>,
}

impl SmallCase {
    /// Random data with at most 10 observations in total and an effect of
    /// random size, so p-values cover the whole unit interval.
    pub fn random(family: Family, rng: &mut ChaCha20Rng) -> SmallCase {
        let effect = rng.gen_range(0.0..2.0);
        let mut case = SmallCase { family, x: vec![], y: vec![], groups: vec![] };
        match family {
            Family::TwoSampleT | Family::Variance => {
                let nx = rng.gen_range(3..=5);
                let ny = rng.gen_range(3..=10 - nx);
                case.x = normals(rng, nx, effect);
                case.y = normals(rng, ny, 0.0);
                if family == Family::Variance {
                    case.x.iter_mut().for_each(|v| *v *= 1.0 + effect);
                }
            }
            Family::OneSampleT => {
                let n = rng.gen_range(4..=10);
                case.x = normals(rng, n, effect * 0.8);
            }
            Family::PairedT => {
                let n = rng.gen_range(3..=5);
                case.x = normals(rng, n, effect);
                case.y = normals(rng, n, 0.0);
            }
            Family::Correlation => {
                let n = rng.gen_range(4..=8);
                case.x = normals(rng, n, 0.0);
                let noise = normals(rng, n, 0.0);
                case.y = case.x.iter().zip(noise).map(|(a, e)| effect * a + e).collect();
            }
            Family::Anova1 => {
                let sizes = match rng.gen_range(0..3) {
                    0 => vec![3, 3, 3],
                    1 => vec![2, 3, 4],
                    _ => vec![3, 3, 4],
                };
                case.groups = sizes
                    .iter()
                    .enumerate()
                    .map(|(g, &n)| normals(rng, n, effect * g as f64 * 0.5))
                    .collect();
            }
        }
        case
    }

    pub fn tail(&self) -> Tail {
        match self.family {
            Family::Anova1 => Tail::Right,
            _ => Tail::TwoTailed,
        }
    }

    pub fn oracle_p(&self) -> f64 {
        let case = match self.family {
            Family::TwoSampleT => ExactCase::TwoSample { x: &self.x, y: &self.y, var: VarAssumption::Equal },
            Family::OneSampleT => ExactCase::OneSample { x: &self.x, mu: 0.0 },
            Family::PairedT => ExactCase::Paired { x: &self.x, y: &self.y },
            Family::Variance => ExactCase::Variance { x: &self.x, y: &self.y },
            Family::Correlation => ExactCase::Correlation { x: &self.x, y: &self.y, kind: CorrelationKind::Pearson },
            Family::Anova1 => ExactCase::Anova1 { groups: &self.groups },
        };
        exact_test(case, self.tail()).unwrap().p
    }

    /// Uncorrected engine p-value and whether it was enumerated exactly.
    pub fn engine_p(&self, cfg: &TestConfig) -> (f64, bool) {
        let cfg = cfg.clone().with_tail(self.tail());
        let r = match self.family {
            Family::TwoSampleT => permuttest2(&column(&self.x), &column(&self.y), &cfg),
            Family::OneSampleT => permuttest(&column(&self.x), None, &[], &cfg),
            Family::PairedT => permuttest(&column(&self.x), Some(&column(&self.y)), &[], &cfg),
            Family::Variance => permuvartest2(&column(&self.x), &column(&self.y), &cfg),
            Family::Correlation => {
                permucorr(&column(&self.x), Some(&column(&self.y)), CorrelationKind::Pearson, &cfg)
            }
            Family::Anova1 => {
                let values: Vec<f64> = self.groups.iter().flatten().copied().collect();
                let labels: Vec<usize> = self
                    .groups
                    .iter()
                    .enumerate()
                    .flat_map(|(g, v)| std::iter::repeat(g).take(v.len()))
                    .collect();
                permuanova1(&values, &labels, &cfg)
            }
        }
        .unwrap();
        (r.tested(0).p_uncorrected, r.exact)
    }
}

pub const FAMILIES: [Family; 6] = [
    Family::TwoSampleT,
    Family::OneSampleT,
    Family::PairedT,
    Family::Variance,
    Family::Correlation,
    Family::Anova1,
];
