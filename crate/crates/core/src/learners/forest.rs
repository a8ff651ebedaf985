//! Random survival forest with log-rank splitting.
//!
//! Trees are grown on bootstrap samples; each split maximizes the
//! log-rank statistic for the target cause over `mtry` randomly chosen
//! covariates and up to 32 randomly subsampled cutpoints per covariate
//! (midpoints between distinct sorted values). Terminal nodes keep the
//! Nelson-Aalen estimate of their rows and predictions average the
//! routed terminal curves across trees.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::hazard::CumulativeHazard;
use crate::seeding;

const MAX_CUTPOINTS: usize = 32;

#[derive(Debug, Clone)]
pub struct ForestOptions {
    pub n_trees: usize,
    /// Covariates tried per split; defaults to ceil(sqrt(p)).
    pub mtry: Option<usize>,
    pub min_node_size: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestOptions {
    fn default() -> Self {
        Self {
            n_trees: 100,
            mtry: None,
            min_node_size: 15,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: u32,
        cutpoint: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        /// Nelson-Aalen increments as (grid index, jump size).
        curve: Vec<(u32, f64)>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    fn leaf_curve(&self, x: &[f64]) -> &[(u32, f64)] {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                Node::Split {
                    feature,
                    cutpoint,
                    left,
                    right,
                } => {
                    idx = if x[*feature as usize] <= *cutpoint {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
                Node::Leaf { curve } => return curve,
            }
        }
    }
}

/// Fitted forest: averaged terminal Nelson-Aalen curves on the grid of
/// training event times of the target cause.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestHazard {
    pub grid: Vec<f64>,
    pub trees: Vec<Tree>,
}

impl CumulativeHazard for ForestHazard {
    fn cumulative(&self, t: f64, x: &[f64]) -> f64 {
        let inc = self.increments(x);
        self.grid
            .iter()
            .zip(&inc)
            .take_while(|(s, _)| **s <= t)
            .map(|(_, dj)| dj)
            .sum()
    }

    fn jump_times(&self) -> &[f64] {
        &self.grid
    }

    fn increments(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.grid.len()];
        for tree in &self.trees {
            for &(gi, dj) in tree.leaf_curve(x) {
                acc[gi as usize] += dj;
            }
        }
        let scale = 1.0 / self.trees.len() as f64;
        for v in &mut acc {
            *v *= scale;
        }
        acc
    }
}

struct GrowContext<'a> {
    frame: &'a Dataset,
    cause: u8,
    grid: &'a [f64],
    mtry: usize,
    min_node_size: usize,
}

pub(crate) fn fit(frame: &Dataset, cause: u8, opts: &ForestOptions) -> ForestHazard {
    let p = frame.n_covariates();
    let mtry = opts
        .mtry
        .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
        .min(p);
    let mut grid: Vec<f64> = frame
        .observations()
        .iter()
        .filter(|o| o.status == cause)
        .map(|o| o.time)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let ctx = GrowContext {
        frame,
        cause,
        grid: &grid,
        mtry,
        min_node_size: opts.min_node_size,
    };

    use rayon::prelude::*;
    let trees: Vec<Tree> = (0..opts.n_trees)
        .into_par_iter()
        .map(|tree_idx| {
            let mut rng = seeding::rng_from(opts.seed, &[seeding::tag("tree"), tree_idx as u64]);
            let n = frame.len();
            let mut rows: Vec<usize> = if opts.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            // Keep node rows sorted by time so log-rank scans and
            // terminal estimates are single passes.
            rows.sort_by(|&a, &b| {
                ctx.frame
                    .observation(a)
                    .time
                    .total_cmp(&ctx.frame.observation(b).time)
                    .then(a.cmp(&b))
            });
            let mut nodes = Vec::new();
            grow(&ctx, rows, &mut nodes, &mut rng);
            Tree { nodes }
        })
        .collect();

    ForestHazard { grid, trees }
}

/// Grow a subtree over time-sorted `rows`; returns its root node index.
fn grow(ctx: &GrowContext, rows: Vec<usize>, nodes: &mut Vec<Node>, rng: &mut ChaCha12Rng) -> u32 {
    let m = rows.len();
    if m >= ctx.min_node_size {
        if let Some((feature, cutpoint)) = best_split(ctx, &rows, rng) {
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&i| ctx.frame.observation(i).covariates[feature] <= cutpoint);
            let idx = nodes.len();
            nodes.push(Node::Leaf { curve: Vec::new() }); // placeholder
            let left = grow(ctx, left_rows, nodes, rng);
            let right = grow(ctx, right_rows, nodes, rng);
            nodes[idx] = Node::Split {
                feature: feature as u32,
                cutpoint,
                left,
                right,
            };
            return idx as u32;
        }
    }
    let idx = nodes.len();
    nodes.push(Node::Leaf {
        curve: terminal_curve(ctx, &rows),
    });
    idx as u32
}

fn best_split(ctx: &GrowContext, rows: &[usize], rng: &mut ChaCha12Rng) -> Option<(usize, f64)> {
    let p = ctx.frame.n_covariates();
    if ctx.mtry == 0 || p == 0 {
        return None;
    }
    let features = rand::seq::index::sample(rng, p, ctx.mtry.min(p)).into_vec();

    let times: Vec<f64> = rows
        .iter()
        .map(|&i| ctx.frame.observation(i).time)
        .collect();
    let events: Vec<bool> = rows
        .iter()
        .map(|&i| ctx.frame.observation(i).status == ctx.cause)
        .collect();

    let mut best: Option<(f64, usize, f64)> = None;
    for feature in features {
        let values: Vec<f64> = rows
            .iter()
            .map(|&i| ctx.frame.observation(i).covariates[feature])
            .collect();
        let mut distinct = values.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 2 {
            continue;
        }
        let midpoints: Vec<f64> = distinct.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let candidates: Vec<f64> = if midpoints.len() > MAX_CUTPOINTS {
            let mut picks =
                rand::seq::index::sample(rng, midpoints.len(), MAX_CUTPOINTS).into_vec();
            picks.sort_unstable();
            picks.into_iter().map(|i| midpoints[i]).collect()
        } else {
            midpoints
        };
        for cut in candidates {
            let stat = log_rank_statistic(&times, &events, &values, cut);
            if stat > 0.0 && best.is_none_or(|(b, _, _)| stat > b) {
                best = Some((stat, feature, cut));
            }
        }
    }
    best.map(|(_, feature, cut)| (feature, cut))
}

/// Two-sample log-rank statistic (O-E)^2 / V for the partition
/// value <= cut, over time-sorted rows.
fn log_rank_statistic(times: &[f64], events: &[bool], values: &[f64], cut: f64) -> f64 {
    let m = times.len();
    let mut at_risk = m as f64;
    let mut at_risk_left = values.iter().filter(|&&v| v <= cut).count() as f64;
    if at_risk_left == 0.0 || at_risk_left == at_risk {
        return 0.0;
    }
    let mut observed_minus_expected = 0.0;
    let mut variance = 0.0;
    let mut i = 0;
    while i < m {
        let t = times[i];
        let mut j = i;
        let mut d = 0.0;
        let mut d_left = 0.0;
        let mut block = 0.0;
        let mut block_left = 0.0;
        while j < m && times[j] == t {
            let left = values[j] <= cut;
            block += 1.0;
            if left {
                block_left += 1.0;
            }
            if events[j] {
                d += 1.0;
                if left {
                    d_left += 1.0;
                }
            }
            j += 1;
        }
        if d > 0.0 && at_risk > 1.0 {
            let frac = at_risk_left / at_risk;
            observed_minus_expected += d_left - d * frac;
            variance += d * frac * (1.0 - frac) * (at_risk - d) / (at_risk - 1.0);
        }
        at_risk -= block;
        at_risk_left -= block_left;
        i = j;
    }
    if variance > 0.0 {
        observed_minus_expected * observed_minus_expected / variance
    } else {
        0.0
    }
}

/// Nelson-Aalen increments of the node rows on the forest grid.
fn terminal_curve(ctx: &GrowContext, rows: &[usize]) -> Vec<(u32, f64)> {
    let m = rows.len();
    let mut curve = Vec::new();
    let mut at_risk = m as f64;
    let mut i = 0;
    while i < m {
        let t = ctx.frame.observation(rows[i]).time;
        let mut j = i;
        let mut d = 0.0;
        while j < m && ctx.frame.observation(rows[j]).time == t {
            if ctx.frame.observation(rows[j]).status == ctx.cause {
                d += 1.0;
            }
            j += 1;
        }
        if d > 0.0 {
            let gi = ctx
                .grid
                .binary_search_by(|g| g.total_cmp(&t))
                .expect("event time missing from forest grid");
            curve.push((gi as u32, d / at_risk));
        }
        at_risk -= (j - i) as f64;
        i = j;
    }
    curve
}
