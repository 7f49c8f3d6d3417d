//! The itinerary graph: shortcut endpoints plus query points, complete walk
//! edges weighted `|a - b|^s` and zero-weight teleports between partners.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;

use crate::config::SnowflakeConfig;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::shortcuts::{count_shortcuts_in_interval, shortcuts_in_interval};

const NONE: u32 = u32::MAX;

/// One hop of a shortest path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Hop {
    Walk,
    Teleport,
}

#[derive(Clone, Debug)]
pub(crate) struct ShortcutGraph {
    /// Sorted exact positions.
    pub exact: Vec<Dyadic>,
    pub pos: Vec<f64>,
    pub partner: Vec<Option<usize>>,
    pub s: f64,
}

/// Upper estimate of the vertex count before building, for the resource check.
pub(crate) fn estimate_vertices(cfg: &SnowflakeConfig, lo: &Dyadic, hi: &Dyadic, max_level: u32) -> u64 {
    2 * count_shortcuts_in_interval(cfg, lo, hi, max_level) + 2
}

impl ShortcutGraph {
    /// Endpoints of the shortcuts of level `<= max_level` with both ends in
    /// `[lo, hi]`, merged with `extra` points.
    pub fn build(
        cfg: &SnowflakeConfig,
        lo: &Dyadic,
        hi: &Dyadic,
        max_level: u32,
        extra: &[Dyadic],
        max_vertices: usize,
    ) -> Result<Self> {
        let estimate = estimate_vertices(cfg, lo, hi, max_level) + extra.len() as u64;
        if estimate > max_vertices as u64 {
            return Err(Error::Resource(format!(
                "truncation level {max_level} on [{lo}, {hi}] needs about {estimate} vertices (limit {max_vertices})"
            )));
        }
        let mut partner_of: BTreeMap<Dyadic, Option<Dyadic>> = BTreeMap::new();
        for sc in shortcuts_in_interval(cfg, lo, hi, max_level) {
            if sc.p >= *lo && sc.q <= *hi {
                partner_of.insert(sc.p.clone(), Some(sc.q.clone()));
                partner_of.insert(sc.q, Some(sc.p));
            }
        }
        for x in extra {
            partner_of.entry(x.clone()).or_insert(None);
        }
        let exact: Vec<Dyadic> = partner_of.keys().cloned().collect();
        let index = |d: &Dyadic| exact.binary_search(d).expect("partner is a vertex");
        let partner = partner_of.values().map(|p| p.as_ref().map(index)).collect();
        let pos = exact.iter().map(|d| d.to_f64()).collect::<Result<Vec<_>>>()?;
        Ok(Self { exact, pos, partner, s: cfg.s() })
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn index_of(&self, x: &Dyadic) -> Option<usize> {
        self.exact.binary_search(x).ok()
    }

    #[inline]
    pub fn weight(&self, u: usize, v: usize) -> f64 {
        (self.pos[u] - self.pos[v]).abs().powf(self.s)
    }

    /// Label-setting search from `src` to `dst`. Walk edges longer than the
    /// remaining budget to the current best are never relaxed.
    pub fn shortest_path(&self, src: usize, dst: usize) -> (f64, Vec<(usize, Hop)>) {
        let n = self.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![(NONE, Hop::Walk); n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(Entry(0.0, src));
        if src != dst {
            dist[dst] = self.weight(src, dst);
            prev[dst] = (src as u32, Hop::Walk);
        }
        let inv_s = 1.0 / self.s;
        while let Some(Entry(d, u)) = heap.pop() {
            if done[u] || d > dist[u] {
                continue;
            }
            if u == dst || d >= dist[dst] {
                break;
            }
            done[u] = true;
            if let Some(p) = self.partner[u] {
                if d < dist[p] {
                    dist[p] = d;
                    prev[p] = (u as u32, Hop::Teleport);
                    heap.push(Entry(d, p));
                }
            }
            let nd = d + self.weight(u, dst);
            if nd < dist[dst] {
                dist[dst] = nd;
                prev[dst] = (u as u32, Hop::Walk);
            }
            // the margin keeps the cut conservative under rounding of powf
            let reach = (dist[dst] - d).powf(inv_s) * (1.0 + 1e-9) + 1e-300;
            let x = self.pos[u];
            let first = self.pos.partition_point(|&p| p < x - reach);
            let last = self.pos.partition_point(|&p| p <= x + reach);
            for v in first..last {
                if v == u || done[v] {
                    continue;
                }
                let nd = d + self.weight(u, v);
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = (u as u32, Hop::Walk);
                    heap.push(Entry(nd, v));
                }
            }
        }
        (dist[dst], unwind(&prev, src, dst))
    }

    pub fn weight_matrix(&self) -> Vec<f64> {
        let n = self.len();
        let mut w = vec![0.0; n * n];
        if n == 0 {
            return w;
        }
        w.par_chunks_mut(n).enumerate().for_each(|(u, row)| {
            for (v, cell) in row.iter_mut().enumerate() {
                *cell = self.weight(u, v);
            }
        });
        w
    }

    /// Distances from `src` to every vertex over a precomputed weight matrix,
    /// with the predecessor of each vertex (`u32::MAX` at the source).
    pub fn dense_from(&self, weights: &[f64], src: usize) -> (Vec<f64>, Vec<(u32, Hop)>) {
        let n = self.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![(NONE, Hop::Walk); n];
        let mut done = vec![false; n];
        dist[src] = 0.0;
        for _ in 0..n {
            let mut u = NONE as usize;
            let mut best = f64::INFINITY;
            for v in 0..n {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == NONE as usize {
                break;
            }
            done[u] = true;
            let d = dist[u];
            if let Some(p) = self.partner[u] {
                if !done[p] && d < dist[p] {
                    dist[p] = d;
                    prev[p] = (u as u32, Hop::Teleport);
                }
            }
            let row = &weights[u * n..(u + 1) * n];
            for v in 0..n {
                if !done[v] {
                    let nd = d + row[v];
                    if nd < dist[v] {
                        dist[v] = nd;
                        prev[v] = (u as u32, Hop::Walk);
                    }
                }
            }
        }
        (dist, prev)
    }
}

pub(crate) fn unwind(prev: &[(u32, Hop)], src: usize, dst: usize) -> Vec<(usize, Hop)> {
    // (vertex, hop used to reach it); the source carries a dummy walk
    let mut path = vec![];
    let mut v = dst;
    while v != src {
        let (u, hop) = prev[v];
        if u == NONE {
            return vec![];
        }
        path.push((v, hop));
        v = u as usize;
    }
    path.push((src, Hop::Walk));
    path.reverse();
    path
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
