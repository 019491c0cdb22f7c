//! Deterministic permutation and bootstrap index generation.
//!
//! Every draw is a pure function of `(seed, index, dimensions)`. Monte Carlo
//! draws take their randomness from a ChaCha20 block cipher keyed by the seed
//! and a per-purpose domain tag, with the draw index as the 64-bit stream
//! number. Exact-mode draws are obtained by unranking the index into the
//! enumeration order, so any subset of draws can be produced on any thread
//! in any order and still come out bit-identical.
//!
//! Generator contract: key = `seed.to_le_bytes() ++ domain.to_le_bytes() ++
//! [0; 16]`, stream = draw index, word position 0. Uniform integers in
//! `0..k` come from `rand` 0.8's `gen_range` on `u64`, so the output does not
//! depend on the platform's pointer width.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Domain tags separating the random streams used for different purposes
/// under one user seed.
pub mod domain {
    pub const PERMUTATION: u64 = 0x7065_726d_7574_6521;
    pub const BOOTSTRAP: u64 = 0x626f_6f74_7374_7261;
    pub const SIMULATION: u64 = 0x7369_6d75_6c61_7465;
}

/// Random source for draw `index` of the stream selected by `(seed, domain)`.
pub fn draw_rng(seed: u64, domain: u64, index: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Number of distinct rearrangements of a resampling scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RearrangementCount {
    Exact(u64),
    /// More than `i64::MAX` rearrangements.
    Huge,
}

impl RearrangementCount {
    pub fn at_most(self, threshold: u64) -> bool {
        matches!(self, RearrangementCount::Exact(c) if c <= threshold)
    }
}

impl std::fmt::Display for RearrangementCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RearrangementCount::Exact(c) => write!(f, "{c}"),
            RearrangementCount::Huge => f.write_str("more than 2^63-1"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleKind {
    /// Sign flips of `n` deviations (one-sample and paired designs).
    SignFlip { n: usize },
    /// Random assignment of pooled observations to groups of the given sizes.
    Partition { group_sizes: Vec<usize> },
    /// Reordering of the `n` rows of one member of a pair.
    RowPermutation { n: usize },
    /// Indices drawn with replacement. `ny = None` means a single sample (or
    /// jointly resampled pairs).
    Bootstrap { nx: usize, ny: Option<usize> },
}

const SATURATION: u128 = i64::MAX as u128;

fn saturate(v: Option<u128>) -> RearrangementCount {
    match v {
        Some(c) if c <= SATURATION => RearrangementCount::Exact(c as u64),
        _ => RearrangementCount::Huge,
    }
}

/// Multinomial coefficient N! / prod(n_g!), computed as a product of binomials.
fn multinomial(group_sizes: &[usize]) -> Option<u128> {
    let mut total: u128 = 1;
    let mut seen: u128 = 0;
    for &g in group_sizes {
        for k in 1..=g as u128 {
            seen += 1;
            // C(seen, k) built incrementally: total * seen / k stays integral.
            total = total.checked_mul(seen)? / k;
            if total > SATURATION {
                return None;
            }
        }
    }
    Some(total)
}

/// Count of distinct rearrangements for a scheme. Bootstrap schemes have no
/// meaningful exact enumeration and report the number of index tuples.
pub fn count_exact(kind: &ResampleKind) -> RearrangementCount {
    match kind {
        ResampleKind::SignFlip { n } => {
            if *n >= 63 {
                RearrangementCount::Huge
            } else {
                RearrangementCount::Exact(1u64 << n)
            }
        }
        ResampleKind::Partition { group_sizes } => saturate(multinomial(group_sizes)),
        ResampleKind::RowPermutation { n } => {
            saturate((1..=*n as u128).try_fold(1u128, |acc, k| {
                acc.checked_mul(k).filter(|v| *v <= SATURATION)
            }))
        }
        ResampleKind::Bootstrap { nx, ny } => {
            let pow = |n: usize| -> Option<u128> {
                (0..n).try_fold(1u128, |acc, _| {
                    acc.checked_mul(n as u128).filter(|v| *v <= SATURATION)
                })
            };
            saturate(match ny {
                None => pow(*nx),
                Some(ny) => pow(*nx).and_then(|a| pow(*ny).and_then(|b| a.checked_mul(b))),
            })
        }
    }
}

/// Complete description of the draws used by one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResamplePlan {
    pub kind: ResampleKind,
    pub n_draws: usize,
    pub seed: u64,
    /// True when the draws enumerate every distinct rearrangement once.
    pub exact: bool,
}

impl ResamplePlan {
    /// Chooses exact enumeration when the rearrangement count is at most
    /// `exact_threshold`, otherwise `n_perm` Monte Carlo draws.
    pub fn new(kind: ResampleKind, n_perm: usize, seed: u64, exact_threshold: u64) -> Self {
        let exact_count = match &kind {
            ResampleKind::Bootstrap { .. } => None,
            k => match count_exact(k) {
                RearrangementCount::Exact(c) if c <= exact_threshold => Some(c as usize),
                _ => None,
            },
        };
        match exact_count {
            Some(c) => ResamplePlan {
                kind,
                n_draws: c,
                seed,
                exact: true,
            },
            None => ResamplePlan {
                kind,
                n_draws: n_perm,
                seed,
                exact: false,
            },
        }
    }

    /// Total number of observations a draw rearranges.
    pub fn width(&self) -> usize {
        match &self.kind {
            ResampleKind::SignFlip { n } | ResampleKind::RowPermutation { n } => *n,
            ResampleKind::Partition { group_sizes } => group_sizes.iter().sum(),
            ResampleKind::Bootstrap { nx, ny } => nx + ny.unwrap_or(0),
        }
    }

    fn rng(&self, domain: u64, i: usize) -> ChaCha20Rng {
        draw_rng(self.seed, domain, i as u64)
    }

    /// Writes the ±1 sign vector of draw `i`.
    pub fn signs_into(&self, i: usize, out: &mut [f64]) {
        let ResampleKind::SignFlip { n } = self.kind else {
            panic!("signs_into called on {:?}", self.kind)
        };
        debug_assert_eq!(out.len(), n);
        if self.exact {
            for (j, s) in out.iter_mut().enumerate() {
                *s = if (i >> j) & 1 == 1 { -1.0 } else { 1.0 };
            }
        } else {
            let mut rng = self.rng(domain::PERMUTATION, i);
            for chunk in out.chunks_mut(64) {
                let bits = rng.next_u64();
                for (j, s) in chunk.iter_mut().enumerate() {
                    *s = if (bits >> j) & 1 == 1 { -1.0 } else { 1.0 };
                }
            }
        }
    }

    /// Writes draw `i` as a permutation of `0..width`. For partitions the
    /// first `group_sizes[0]` entries form pseudo-group 0, the next
    /// `group_sizes[1]` pseudo-group 1, and so on.
    pub fn permutation_into(&self, i: usize, out: &mut [usize]) {
        debug_assert_eq!(out.len(), self.width());
        match &self.kind {
            ResampleKind::Partition { group_sizes } if self.exact => {
                unrank_partition(i as u128, group_sizes, out)
            }
            ResampleKind::RowPermutation { n } if self.exact => unrank_permutation(i as u64, *n, out),
            ResampleKind::Partition { .. } | ResampleKind::RowPermutation { .. } => {
                let mut rng = self.rng(domain::PERMUTATION, i);
                shuffle_into(&mut rng, out);
            }
            other => panic!("permutation_into called on {other:?}"),
        }
    }

    /// Writes bootstrap draw `i`. `y_out` is ignored for one-sample plans.
    pub fn bootstrap_into(&self, i: usize, x_out: &mut [usize], y_out: &mut [usize]) {
        let ResampleKind::Bootstrap { nx, ny } = self.kind else {
            panic!("bootstrap_into called on {:?}", self.kind)
        };
        let mut rng = self.rng(domain::BOOTSTRAP, i);
        for v in x_out.iter_mut() {
            *v = rng.gen_range(0..nx as u64) as usize;
        }
        if let Some(ny) = ny {
            for v in y_out.iter_mut() {
                *v = rng.gen_range(0..ny as u64) as usize;
            }
        }
    }
}

/// Fisher–Yates shuffle of the identity permutation.
fn shuffle_into<R: Rng>(rng: &mut R, out: &mut [usize]) {
    for (k, v) in out.iter_mut().enumerate() {
        *v = k;
    }
    for k in (1..out.len()).rev() {
        let j = rng.gen_range(0..=k as u64) as usize;
        out.swap(k, j);
    }
}

/// Lexicographic unranking of group-label strings (multiset permutations),
/// converted to an index permutation listing group 0's members first.
fn unrank_partition(mut rank: u128, group_sizes: &[usize], out: &mut [usize]) {
    let mut remaining: Vec<usize> = group_sizes.to_vec();
    let mut left: usize = remaining.iter().sum();
    let mut count = multinomial(&remaining).expect("exact plans are bounded by the threshold");
    let mut labels = Vec::with_capacity(left);
    while left > 0 {
        for g in 0..remaining.len() {
            if remaining[g] == 0 {
                continue;
            }
            let with_g = count * remaining[g] as u128 / left as u128;
            if rank < with_g {
                labels.push(g);
                remaining[g] -= 1;
                count = with_g;
                break;
            }
            rank -= with_g;
        }
        left -= 1;
    }
    let mut slot = 0;
    for g in 0..group_sizes.len() {
        for (idx, &l) in labels.iter().enumerate() {
            if l == g {
                out[slot] = idx;
                slot += 1;
            }
        }
    }
}

/// Lexicographic unranking via the factorial number system.
fn unrank_permutation(mut rank: u64, n: usize, out: &mut [usize]) {
    let mut pool: Vec<usize> = (0..n).collect();
    for (k, slot) in out.iter_mut().enumerate() {
        let div: u64 = (1..(n - k) as u64).product();
        let pick = (rank / div) as usize;
        rank %= div;
        *slot = pool.remove(pick);
    }
}

/// Sign vectors for a one-sample or paired design.
#[derive(Debug, Clone, PartialEq)]
pub struct SignFlips {
    pub exact: bool,
    pub vectors: Vec<Vec<i8>>,
}

pub fn gen_signflips(n: usize, n_perm: usize, seed: u64, exact_threshold: u64) -> Result<SignFlips> {
    require(n, 2, "sign-flip scheme")?;
    let plan = ResamplePlan::new(ResampleKind::SignFlip { n }, n_perm, seed, exact_threshold);
    let mut buf = vec![0.0; n];
    let vectors = (0..plan.n_draws)
        .map(|i| {
            plan.signs_into(i, &mut buf);
            buf.iter().map(|&s| s as i8).collect()
        })
        .collect();
    Ok(SignFlips {
        exact: plan.exact,
        vectors,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partitions {
    pub exact: bool,
    pub permutations: Vec<Vec<usize>>,
}

/// Label shuffles for two independent samples; the first `nx` entries of
/// each permutation form pseudo-group X.
pub fn gen_partitions(
    nx: usize,
    ny: usize,
    n_perm: usize,
    seed: u64,
    exact_threshold: u64,
) -> Result<Partitions> {
    require(nx, 2, "group X")?;
    require(ny, 2, "group Y")?;
    let plan = ResamplePlan::new(
        ResampleKind::Partition {
            group_sizes: vec![nx, ny],
        },
        n_perm,
        seed,
        exact_threshold,
    );
    let mut buf = vec![0; nx + ny];
    let permutations = (0..plan.n_draws)
        .map(|i| {
            plan.permutation_into(i, &mut buf);
            buf.clone()
        })
        .collect();
    Ok(Partitions {
        exact: plan.exact,
        permutations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BootstrapDraw {
    pub x: Vec<usize>,
    /// Empty for paired and one-sample designs.
    pub y: Vec<usize>,
}

/// Bootstrap index draws. In paired mode (or when `ny` is zero) a single
/// index vector over `0..n` is drawn and applied to both members of each
/// pair; otherwise X and Y are resampled separately.
pub fn gen_bootstrap(
    n: usize,
    n_boot: usize,
    seed: u64,
    paired: bool,
    nx: usize,
    ny: usize,
) -> Result<Vec<BootstrapDraw>> {
    let plan = if paired || ny == 0 {
        require(n, 2, "bootstrap sample")?;
        ResamplePlan::new(ResampleKind::Bootstrap { nx: n, ny: None }, n_boot, seed, 0)
    } else {
        require(nx, 2, "bootstrap group X")?;
        require(ny, 2, "bootstrap group Y")?;
        ResamplePlan::new(ResampleKind::Bootstrap { nx, ny: Some(ny) }, n_boot, seed, 0)
    };
    let (lx, ly) = match plan.kind {
        ResampleKind::Bootstrap { nx, ny } => (nx, ny.unwrap_or(0)),
        _ => unreachable!(),
    };
    Ok((0..plan.n_draws)
        .map(|i| {
            let mut d = BootstrapDraw {
                x: vec![0; lx],
                y: vec![0; ly],
            };
            plan.bootstrap_into(i, &mut d.x, &mut d.y);
            d
        })
        .collect())
}

fn require(n: usize, min: usize, what: &'static str) -> Result<()> {
    if n < min {
        Err(Error::DimensionTooSmall { what: what.into(), min, got: n })
    } else {
        Ok(())
    }
}
