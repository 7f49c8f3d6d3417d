//! Distances through memoized unit-interval skeletons.
//!
//! A clean interval `[h^n m, h^n (m+1)]` is carried onto `[0, 1]` by
//! `t -> h^-n t - m`, which sends level-`k` shortcuts to level `k - n` ones
//! and scales `d_R` by `mu^-n`. So one all-pairs table over the shortcut
//! endpoints of `[0, 1]` per depth answers every query localized anywhere.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;

use super::graph::{unwind, Hop, ShortcutGraph};
use super::itinerary::Itinerary;
use super::{check_witness, localizing_window, snow_exact, solve_flat, DistanceOptions, DistanceResult};
use crate::config::SnowflakeConfig;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};

/// All-pairs distances between the `[0, 1]` shortcut endpoints of level `<= depth`.
struct Skeleton {
    graph: ShortcutGraph,
    dist: Vec<f64>,
    prev: Vec<(u32, Hop)>,
}

impl Skeleton {
    fn build(cfg: &SnowflakeConfig, depth: u32, max_vertices: usize) -> Result<Self> {
        let graph = ShortcutGraph::build(cfg, &Dyadic::zero(), &Dyadic::one(), depth, &[], max_vertices)?;
        let n = graph.len();
        let weights = graph.weight_matrix();
        let rows: Vec<_> = (0..n).into_par_iter().map(|u| graph.dense_from(&weights, u)).collect();
        let mut dist = Vec::with_capacity(n * n);
        let mut prev = Vec::with_capacity(n * n);
        for (d, p) in rows {
            dist.extend(d);
            prev.extend(p);
        }
        Ok(Self { graph, dist, prev })
    }

    /// `min(|x-y|^s, min_{u,v} |x-u|^s + D(u,v) + |v-y|^s)` for `x, y` in `[0, 1]`.
    fn query(&self, cfg: &SnowflakeConfig, x: &Dyadic, y: &Dyadic, with_witness: bool) -> Result<(f64, Option<Itinerary>)> {
        let direct = snow_exact(cfg, x, y)?;
        let n = self.graph.len();
        let s = cfg.s();
        let (xf, yf) = (x.to_f64()?, y.to_f64()?);
        let from_x: Vec<f64> = self.graph.pos.iter().map(|&u| (xf - u).abs().powf(s)).collect();
        let mut best = (direct, usize::MAX, usize::MAX);
        for v in 0..n {
            let to_y = (self.graph.pos[v] - yf).abs().powf(s);
            if to_y >= best.0 {
                continue;
            }
            let mut reach = (f64::INFINITY, 0);
            for u in 0..n {
                let c = from_x[u] + self.dist[u * n + v];
                if c < reach.0 {
                    reach = (c, u);
                }
            }
            let total = reach.0 + to_y;
            if total < best.0 {
                best = (total, reach.1, v);
            }
        }
        if !with_witness {
            return Ok((best.0, None));
        }
        let (value, u, v) = best;
        let mut pairs = Vec::new();
        if u == usize::MAX {
            pairs.push((x.clone(), y.clone()));
        } else {
            let node = |i: usize| self.graph.exact[i].clone();
            if node(u) != *x {
                pairs.push((x.clone(), node(u)));
            }
            let path = unwind(&self.prev[u * n..(u + 1) * n], u, v);
            for w in path.windows(2) {
                if w[1].1 == Hop::Walk {
                    pairs.push((node(w[0].0), node(w[1].0)));
                }
            }
            if node(v) != *y {
                pairs.push((node(v), y.clone()));
            }
        }
        Ok((value, Some(Itinerary::from_pairs(cfg, pairs)?)))
    }
}

/// Flat-equivalent solver that memoizes one skeleton per depth.
///
/// Safe to share between threads; concurrent misses may build the same
/// skeleton twice but only the first one inserted is kept.
pub struct HierarchicalSolver {
    cfg: SnowflakeConfig,
    opts: DistanceOptions,
    max_skeleton_vertices: usize,
    memo: RwLock<HashMap<u32, Arc<Skeleton>>>,
}

impl HierarchicalSolver {
    pub fn new(cfg: SnowflakeConfig, opts: DistanceOptions) -> Self {
        Self { cfg, opts, max_skeleton_vertices: 1500, memo: RwLock::new(HashMap::new()) }
    }

    /// Largest skeleton (vertex count) the solver will tabulate; deeper
    /// queries go to the flat solver.
    pub fn with_skeleton_limit(mut self, vertices: usize) -> Self {
        self.max_skeleton_vertices = vertices;
        self
    }

    pub fn config(&self) -> &SnowflakeConfig {
        &self.cfg
    }

    pub fn cached_depths(&self) -> Vec<u32> {
        let mut depths: Vec<u32> = self.memo.read().expect("memo lock").keys().copied().collect();
        depths.sort_unstable();
        depths
    }

    fn skeleton(&self, depth: u32) -> Result<Arc<Skeleton>> {
        if let Some(sk) = self.memo.read().expect("memo lock").get(&depth) {
            return Ok(sk.clone());
        }
        let built = Arc::new(Skeleton::build(&self.cfg, depth, self.max_skeleton_vertices)?);
        let mut memo = self.memo.write().expect("memo lock");
        Ok(memo.entry(depth).or_insert(built).clone())
    }

    /// Rescaled query at one truncation level, or `None` when the points
    /// share no clean interval or the skeleton would be over the limit.
    fn scaled(&self, x: &Dyadic, y: &Dyadic, level: u32, with_witness: bool) -> Result<Option<(f64, Option<Itinerary>)>> {
        let window = localizing_window(&self.cfg, x, y);
        let Some(iv) = window.interval else { return Ok(None) };
        let shift = (iv.level * self.cfg.l()) as i64;
        let offset = Dyadic::from_int(iv.index);
        let to_unit = |t: &Dyadic| &t.mul_pow2(shift) - &offset;
        let sk = match self.skeleton(level.saturating_sub(iv.level)) {
            Ok(sk) => sk,
            Err(Error::Resource(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let (unit_value, unit_witness) = sk.query(&self.cfg, &to_unit(x), &to_unit(y), with_witness)?;
        let direct = snow_exact(&self.cfg, x, y)?;
        let scaled = self.cfg.mu_pow(iv.level as i64) * unit_value;
        if direct <= scaled {
            let it = with_witness.then(|| Itinerary::from_pairs(&self.cfg, vec![(x.clone(), y.clone())])).transpose()?;
            return Ok(Some((direct, it)));
        }
        let back = offset.mul_pow2(-shift);
        let it = unit_witness.map(|w| w.mapped(&self.cfg, -shift, &back)).transpose()?;
        Ok(Some((scaled, it)))
    }

    /// Value only, at truncation `level`.
    pub fn value(&self, x: &Dyadic, y: &Dyadic, level: u32) -> Result<f64> {
        if x == y {
            return Ok(0.0);
        }
        match self.scaled(x, y, level, false)? {
            Some((v, _)) => Ok(v),
            None => Ok(self.distance(x, y, level)?.value),
        }
    }

    pub fn distance(&self, x: &Dyadic, y: &Dyadic, level: u32) -> Result<DistanceResult> {
        if self.opts.tol <= 0.0 {
            return Err(Error::Contract(format!("tol must be positive, got {}", self.opts.tol)));
        }
        let window = localizing_window(&self.cfg, x, y);
        if x == y {
            return Ok(DistanceResult::zero(level, window));
        }
        let mut history = Vec::with_capacity(level as usize + 1);
        let mut witness = None;
        for k in 0..=level {
            let Some((v, it)) = self.scaled(x, y, k, k == level)? else {
                return solve_flat(&self.cfg, window, x, y, level, &self.opts);
            };
            history.push(v);
            witness = it;
        }
        let result = DistanceResult::from_history(level, history, witness.expect("top level witness"), window, self.opts.tol);
        check_witness(&self.cfg, &result.witness, x, y, result.value)?;
        Ok(result)
    }
}

/// One-shot hierarchical query; keep a [`HierarchicalSolver`] to reuse the memo.
pub fn distance_hierarchical(
    cfg: &SnowflakeConfig,
    x: &Dyadic,
    y: &Dyadic,
    level: u32,
    opts: &DistanceOptions,
) -> Result<DistanceResult> {
    HierarchicalSolver::new(cfg.clone(), *opts).distance(x, y, level)
}
