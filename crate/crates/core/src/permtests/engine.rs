//! Parallel evaluation of every draw in a plan.
//!
//! Draws are split into fixed chunks; each chunk is evaluated independently
//! and the partial results are concatenated in chunk order, so the output
//! does not depend on the number of worker threads.

use rayon::prelude::*;

use crate::inference::{at_least_as_extreme, extreme, reduce_row, StatScale};
use crate::kernels::rearranged::{Draw, Evaluator};
use crate::resample::{ResampleKind, ResamplePlan};
use crate::types::Tail;

const CHUNK: usize = 256;

pub(crate) struct Observed<'a> {
    /// Observed statistic per output, `None` for outputs that failed and are
    /// left out of every reduction.
    pub values: &'a [Option<f64>],
    pub tail: Tail,
    pub scale: StatScale,
}

#[derive(Debug, Default)]
pub(crate) struct EngineOutput {
    /// Per output: draws at least as extreme as the observed value.
    pub hits: Vec<usize>,
    /// Per draw: most extreme value over active outputs.
    pub maxima: Vec<f64>,
    /// Per output: the raw value of every draw. Empty unless requested.
    pub columns: Vec<Vec<f64>>,
}

struct ChunkOut {
    hits: Vec<usize>,
    maxima: Vec<f64>,
    rows: Vec<f64>,
}

pub(crate) fn run<E: Evaluator>(
    ev: &E,
    plan: &ResamplePlan,
    obs: &Observed<'_>,
    keep_columns: bool,
) -> EngineOutput {
    let n_out = ev.n_out();
    debug_assert_eq!(obs.values.len(), n_out);
    let obs_ext: Vec<Option<f64>> = obs
        .values
        .iter()
        .map(|o| o.map(|v| extreme(v, obs.tail, obs.scale)))
        .collect();
    let active: Vec<usize> = (0..n_out).filter(|&v| obs.values[v].is_some()).collect();
    let n_chunks = plan.n_draws.div_ceil(CHUNK);
    let width = plan.width();
    let signs = matches!(plan.kind, ResampleKind::SignFlip { .. });

    let chunks: Vec<ChunkOut> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(plan.n_draws);
            let mut sign_buf = vec![0.0; if signs { width } else { 0 }];
            let mut perm_buf = vec![0usize; if signs { 0 } else { width }];
            let mut out = vec![0.0; n_out];
            let mut active_vals = Vec::with_capacity(active.len());
            let mut local = ChunkOut {
                hits: vec![0; n_out],
                maxima: Vec::with_capacity(end - start),
                rows: Vec::with_capacity(if keep_columns { (end - start) * n_out } else { 0 }),
            };
            for i in start..end {
                if signs {
                    plan.signs_into(i, &mut sign_buf);
                    ev.eval(Draw::Signs(&sign_buf), &mut out);
                } else {
                    plan.permutation_into(i, &mut perm_buf);
                    ev.eval(Draw::Perm(&perm_buf), &mut out);
                }
                active_vals.clear();
                for &v in &active {
                    let e = extreme(out[v], obs.tail, obs.scale);
                    if at_least_as_extreme(e, obs_ext[v].expect("active output")) {
                        local.hits[v] += 1;
                    }
                    active_vals.push(out[v]);
                }
                local.maxima.push(reduce_row(&active_vals, obs.tail, obs.scale));
                if keep_columns {
                    local.rows.extend_from_slice(&out);
                }
            }
            local
        })
        .collect();

    let mut result = EngineOutput {
        hits: vec![0; n_out],
        maxima: Vec::with_capacity(plan.n_draws),
        columns: if keep_columns {
            vec![Vec::with_capacity(plan.n_draws); n_out]
        } else {
            Vec::new()
        },
    };
    for ch in chunks {
        for (h, c) in result.hits.iter_mut().zip(&ch.hits) {
            *h += c;
        }
        result.maxima.extend_from_slice(&ch.maxima);
        if keep_columns {
            for row in ch.rows.chunks(n_out) {
                for (col, &v) in result.columns.iter_mut().zip(row) {
                    col.push(v);
                }
            }
        }
    }
    result
}
