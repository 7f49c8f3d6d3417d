//! The quotient semi-distance `d_R`: cheapest itinerary cost when shortcut
//! pairs may be crossed for free, truncated to shortcuts of level `<= N`.

mod graph;
mod hierarchical;
mod itinerary;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::SnowflakeConfig;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::shortcuts::{is_clean, GridInterval};

use graph::{Hop, ShortcutGraph};
pub use hierarchical::{distance_hierarchical, HierarchicalSolver};
pub use itinerary::Itinerary;

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceOptions {
    /// Convergence threshold on the last decrement of the truncation history.
    pub tol: f64,
    /// Refuse graphs with more vertices than this.
    pub max_vertices: usize,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_vertices: 50_000 }
    }
}

impl DistanceOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// The part of the line whose shortcuts a computation may use.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Window {
    pub lo: Dyadic,
    pub hi: Dyadic,
    /// Set when the window is a grid interval with no shortcut at its ends.
    pub interval: Option<GridInterval>,
}

impl Window {
    pub fn span(lo: Dyadic, hi: Dyadic) -> Self {
        Self { lo, hi, interval: None }
    }

    pub fn clean(cfg: &SnowflakeConfig, interval: GridInterval) -> Self {
        Self { lo: interval.left(cfg), hi: interval.right(cfg), interval: Some(interval) }
    }

    pub fn contains(&self, x: &Dyadic) -> bool {
        self.lo <= *x && *x <= self.hi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceResult {
    /// Upper bound on `d_R(x, y)`; includes `snap_correction` for real inputs.
    pub value: f64,
    pub truncation_level: u32,
    /// `history[k]` is the distance using shortcuts of level `<= k`, for `k = 0..=N`.
    pub history: Vec<f64>,
    pub converged: bool,
    pub witness: Itinerary,
    pub window: Window,
    pub snap_correction: f64,
}

impl DistanceResult {
    fn zero(level: u32, window: Window) -> Self {
        Self {
            value: 0.0,
            truncation_level: level,
            history: vec![0.0; level as usize + 1],
            converged: true,
            witness: Itinerary::empty(),
            window,
            snap_correction: 0.0,
        }
    }

    fn from_history(level: u32, history: Vec<f64>, witness: Itinerary, window: Window, tol: f64) -> Self {
        let value = *history.last().expect("history has level 0");
        let converged = value == 0.0 || (history.len() >= 2 && history[history.len() - 2] - value < tol);
        Self { value, truncation_level: level, history, converged, witness, window, snap_correction: 0.0 }
    }

    /// Last decrement `d^(N-1) - d^(N)`, zero when `N = 0`.
    pub fn last_decrement(&self) -> f64 {
        match self.history.len() {
            0 | 1 => 0.0,
            n => self.history[n - 2] - self.history[n - 1],
        }
    }
}

fn check_tol(opts: &DistanceOptions) -> Result<()> {
    if opts.tol > 0.0 {
        Ok(())
    } else {
        Err(Error::Contract(format!("tol must be positive, got {}", opts.tol)))
    }
}

pub(crate) fn snow_exact(cfg: &SnowflakeConfig, x: &Dyadic, y: &Dyadic) -> Result<f64> {
    Ok((x - y).abs().to_f64()?.powf(cfg.s()))
}

/// Smallest grid interval without shortcut at its ends containing both
/// points. When the points lie in different unit intervals the window is the
/// integer hull, which no shortcut crosses either.
pub fn localizing_window(cfg: &SnowflakeConfig, x: &Dyadic, y: &Dyadic) -> Window {
    let (a, b) = if x <= y { (x, y) } else { (y, x) };
    let gap = b - a;
    let finest = gap.exponent().max(a.exponent()) / cfg.l() + 1;
    for n in (0..=finest).rev() {
        let idx = a.mul_pow2((cfg.l() * n) as i64).floor();
        let Ok(idx) = i64::try_from(idx) else { break };
        let cell = GridInterval::new(n, idx);
        if cell.contains(cfg, b) && is_clean(cfg, &cell) {
            return Window::clean(cfg, cell);
        }
    }
    Window::span(Dyadic::new(a.floor(), 0), Dyadic::new(b.ceil(), 0))
}

fn witness_from_path(cfg: &SnowflakeConfig, g: &ShortcutGraph, path: &[(usize, Hop)]) -> Result<Itinerary> {
    let pairs = path
        .windows(2)
        .filter(|w| w[1].1 == Hop::Walk)
        .map(|w| (g.exact[w[0].0].clone(), g.exact[w[1].0].clone()))
        .collect();
    Itinerary::from_pairs(cfg, pairs)
}

pub(crate) fn check_witness(cfg: &SnowflakeConfig, it: &Itinerary, x: &Dyadic, y: &Dyadic, value: f64) -> Result<()> {
    it.validate(cfg, x, y)?;
    if (it.cost - value).abs() > 1e-12 * value.max(1.0) {
        return Err(Error::Internal(format!("witness costs {} but the search reported {value}", it.cost)));
    }
    Ok(())
}

/// Flat search over every shortcut with both ends in `window`.
fn solve_flat(
    cfg: &SnowflakeConfig,
    window: Window,
    x: &Dyadic,
    y: &Dyadic,
    level: u32,
    opts: &DistanceOptions,
) -> Result<DistanceResult> {
    check_tol(opts)?;
    if x == y {
        return Ok(DistanceResult::zero(level, window));
    }
    let direct = snow_exact(cfg, x, y)?;
    let mut history = vec![direct];
    let mut witness = Itinerary::from_pairs(cfg, vec![(x.clone(), y.clone())])?;
    for k in 1..=level {
        let g = ShortcutGraph::build(cfg, &window.lo, &window.hi, k, &[x.clone(), y.clone()], opts.max_vertices)?;
        let (src, dst) = (g.index_of(x).expect("query vertex"), g.index_of(y).expect("query vertex"));
        let (value, path) = g.shortest_path(src, dst);
        history.push(value);
        if k == level {
            witness = witness_from_path(cfg, &g, &path)?;
        }
    }
    let result = DistanceResult::from_history(level, history, witness, window, opts.tol);
    check_witness(cfg, &result.witness, x, y, result.value)?;
    Ok(result)
}

/// `d_R(x, y)` with shortcuts of level `<= level`, searched inside the
/// localizing window.
pub fn distance(
    cfg: &SnowflakeConfig,
    x: &Dyadic,
    y: &Dyadic,
    level: u32,
    opts: &DistanceOptions,
) -> Result<DistanceResult> {
    solve_flat(cfg, localizing_window(cfg, x, y), x, y, level, opts)
}

/// Same contract as [`distance`] with the relation restricted to `interval`.
pub fn distance_restricted(
    cfg: &SnowflakeConfig,
    interval: &GridInterval,
    x: &Dyadic,
    y: &Dyadic,
    level: u32,
    opts: &DistanceOptions,
) -> Result<DistanceResult> {
    if !is_clean(cfg, interval) {
        return Err(Error::Contract(format!("{interval:?} has a shortcut at one of its ends")));
    }
    let window = Window::clean(cfg, *interval);
    if !window.contains(x) || !window.contains(y) {
        return Err(Error::Contract(format!("{x} and {y} must lie in [{}, {}]", window.lo, window.hi)));
    }
    solve_flat(cfg, window, x, y, level, opts)
}

/// Uses every shortcut with both ends in `[lo, hi]`, with no cleanliness
/// requirement on the window.
pub fn distance_in_window(
    cfg: &SnowflakeConfig,
    lo: &Dyadic,
    hi: &Dyadic,
    x: &Dyadic,
    y: &Dyadic,
    level: u32,
    opts: &DistanceOptions,
) -> Result<DistanceResult> {
    let window = Window::span(lo.clone(), hi.clone());
    if lo > hi || !window.contains(x) || !window.contains(y) {
        return Err(Error::Contract(format!("{x} and {y} must lie in [{lo}, {hi}]")));
    }
    solve_flat(cfg, window, x, y, level, opts)
}

/// Resolution at which real inputs are snapped: `2^-(l (N + 2))`.
pub fn snap_exponent(cfg: &SnowflakeConfig, level: u32) -> u32 {
    cfg.l() * (level + 2)
}

/// Exact dyadic for a real input; points finer than the snap resolution are
/// rounded to it and the snowflaked displacement is returned alongside.
pub fn snap_point(cfg: &SnowflakeConfig, x: f64, level: u32) -> Result<(Dyadic, f64)> {
    let exact = Dyadic::from_f64(x).ok_or_else(|| Error::Contract(format!("{x} is not a finite number")))?;
    let k = snap_exponent(cfg, level);
    if exact.exponent() <= k {
        return Ok((exact, 0.0));
    }
    let snapped = Dyadic::snap(x, k).expect("finite");
    let moved = snow_exact(cfg, &exact, &snapped)?;
    Ok((snapped, moved))
}

/// [`distance`] for real inputs. The reported value adds the snap
/// displacement of both points, capped by `|x - y|^s`.
pub fn distance_real(cfg: &SnowflakeConfig, x: f64, y: f64, level: u32, opts: &DistanceOptions) -> Result<DistanceResult> {
    let (xs, cx) = snap_point(cfg, x, level)?;
    let (ys, cy) = snap_point(cfg, y, level)?;
    let mut result = distance(cfg, &xs, &ys, level, opts)?;
    if cx + cy > 0.0 {
        let direct = (x - y).abs().powf(cfg.s());
        result.snap_correction = cx + cy;
        result.value = (result.value + cx + cy).min(direct);
    }
    Ok(result)
}

/// `d_R` between every pair of `points`, all in `[lo, hi]`, using the
/// shortcuts of level `<= level` with both ends there. Row-major.
pub fn distance_matrix(
    cfg: &SnowflakeConfig,
    lo: &Dyadic,
    hi: &Dyadic,
    points: &[Dyadic],
    level: u32,
    opts: &DistanceOptions,
) -> Result<Vec<f64>> {
    if let Some(bad) = points.iter().find(|p| *p < lo || *p > hi) {
        return Err(Error::Contract(format!("{bad} lies outside [{lo}, {hi}]")));
    }
    let g = ShortcutGraph::build(cfg, lo, hi, level, points, opts.max_vertices)?;
    let idx: Vec<usize> = points.iter().map(|p| g.index_of(p).expect("query vertex")).collect();
    let weights = g.weight_matrix();
    let rows: Vec<Vec<f64>> = idx
        .par_iter()
        .map(|&src| {
            let (dist, _) = g.dense_from(&weights, src);
            idx.iter().map(|&v| dist[v]).collect()
        })
        .collect();
    Ok(rows.concat())
}

/// `sum_{k in L} d_R(x_k, y_k) + sum_{k not in L} |x_k - y_k|^(s_k)`.
pub fn product_semidistance(
    cfg: &SnowflakeConfig,
    x: &[f64],
    y: &[f64],
    level: u32,
    opts: &DistanceOptions,
) -> Result<f64> {
    if x.len() != cfg.dim() || y.len() != cfg.dim() {
        return Err(Error::Contract(format!(
            "points have {} and {} coordinates, the configuration has {}",
            x.len(),
            y.len(),
            cfg.dim()
        )));
    }
    let mut total = 0.0;
    for (k, &sk) in cfg.exponents().iter().enumerate() {
        total += if cfg.in_layer(k) && !cfg.is_degenerate() {
            distance_real(cfg, x[k], y[k], level, opts)?.value
        } else {
            (x[k] - y[k]).abs().powf(sk)
        };
    }
    Ok(total)
}

#[cfg(test)]
mod tests;
