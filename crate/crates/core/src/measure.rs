//! Grid-cover estimators for Hausdorff measure, ball-measure scans for
//! Ahlfors regularity, and the product measure on boxes.
//!
//! Every estimate is an upper bound from one fixed grid cover; no cover is
//! optimized.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::SnowflakeConfig;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::product::{cube_side, ProductNorm};
use crate::quotient::{distance_matrix, DistanceOptions, HierarchicalSolver};
use crate::shortcuts::{is_clean, GridInterval};

/// Cells whose diameter has no closed form are sampled at `2^DIAMETER_SAMPLE_BITS + 1`
/// evenly spaced points, both ends included.
pub const DIAMETER_SAMPLE_BITS: u32 = 4;

/// A distance on the line that can also report diameters of grid cells.
pub trait IntervalMetric: Sync {
    fn distance(&self, x: &Dyadic, y: &Dyadic) -> Result<f64>;

    /// Diameter of the closed cell `[lo, hi]`.
    fn diameter(&self, lo: &Dyadic, hi: &Dyadic) -> Result<f64>;

    /// `diameter^alpha`; overridden where the power cancels exactly.
    fn diameter_pow(&self, lo: &Dyadic, hi: &Dyadic, alpha: f64) -> Result<f64> {
        Ok(self.diameter(lo, hi)?.powf(alpha))
    }

    /// A lower bound on the distance of points `gap` apart.
    fn separation_bound(&self, _gap: f64) -> f64 {
        0.0
    }
}

pub struct Euclidean;

impl IntervalMetric for Euclidean {
    fn distance(&self, x: &Dyadic, y: &Dyadic) -> Result<f64> {
        (x - y).abs().to_f64()
    }

    fn separation_bound(&self, gap: f64) -> f64 {
        gap
    }

    fn diameter(&self, lo: &Dyadic, hi: &Dyadic) -> Result<f64> {
        (hi - lo).to_f64()
    }
}

/// `|x - y|^s`.
pub struct Snowflake {
    pub s: f64,
}

impl IntervalMetric for Snowflake {
    fn distance(&self, x: &Dyadic, y: &Dyadic) -> Result<f64> {
        Ok((x - y).abs().to_f64()?.powf(self.s))
    }

    fn separation_bound(&self, gap: f64) -> f64 {
        gap.powf(self.s)
    }

    fn diameter(&self, lo: &Dyadic, hi: &Dyadic) -> Result<f64> {
        Ok((hi - lo).to_f64()?.powf(self.s))
    }

    fn diameter_pow(&self, lo: &Dyadic, hi: &Dyadic, alpha: f64) -> Result<f64> {
        Ok((hi - lo).to_f64()?.powf(self.s * alpha))
    }
}

/// `d_R` at a fixed truncation level.
///
/// A grid cell is carried onto `[0, 1]` through its smallest clean ancestor,
/// so cells in the same relative position share one computed diameter. The
/// diameter is the largest distance among evenly spaced dyadic sample points
/// of the cell.
pub struct QuotientMetric {
    cfg: SnowflakeConfig,
    truncation: u32,
    opts: DistanceOptions,
    solver: HierarchicalSolver,
    memo: Mutex<HashMap<(u32, u32, i64), f64>>,
}

impl QuotientMetric {
    pub fn new(cfg: SnowflakeConfig, truncation: u32, opts: DistanceOptions) -> Self {
        let solver = HierarchicalSolver::new(cfg.clone(), opts);
        Self { cfg, truncation, opts, solver, memo: Mutex::new(HashMap::new()) }
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    /// Diameter of a grid cell of the configuration's own grid.
    pub fn cell_diameter(&self, cell: &GridInterval) -> Result<f64> {
        let mut ancestor = *cell;
        while !is_clean(&self.cfg, &ancestor) {
            ancestor = ancestor.parent(&self.cfg).expect("unit cells are clean");
        }
        let rel_level = cell.level - ancestor.level;
        let rel_index = cell.index - (ancestor.index << (self.cfg.l() * rel_level));
        let depth = self.truncation.saturating_sub(ancestor.level);
        let key = (depth, rel_level, rel_index);
        if let Some(v) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(self.cfg.mu_pow(ancestor.level as i64) * v);
        }
        let rel = GridInterval::new(rel_level, rel_index);
        let (lo, w) = (rel.left(&self.cfg), rel.width(&self.cfg));
        let step = w.mul_pow2(-(DIAMETER_SAMPLE_BITS as i64));
        let pts: Vec<Dyadic> = (0..=1i64 << DIAMETER_SAMPLE_BITS).map(|k| &lo + &(&step * &Dyadic::from_int(k))).collect();
        let m = distance_matrix(&self.cfg, &Dyadic::zero(), &Dyadic::one(), &pts, depth, &self.opts)?;
        let unit = m.into_iter().fold(0.0, f64::max);
        self.memo.lock().expect("memo lock").insert(key, unit);
        Ok(self.cfg.mu_pow(ancestor.level as i64) * unit)
    }
}

impl IntervalMetric for QuotientMetric {
    fn distance(&self, x: &Dyadic, y: &Dyadic) -> Result<f64> {
        self.solver.value(x, y, self.truncation)
    }

    fn diameter(&self, lo: &Dyadic, hi: &Dyadic) -> Result<f64> {
        let cell = GridInterval::from_endpoints(&self.cfg, lo, hi)
            .ok_or_else(|| Error::Contract(format!("[{lo}, {hi}] is not a cell of the h = 2^-{} grid", self.cfg.l())))?;
        self.cell_diameter(&cell)
    }
}

/// Finite union of closed intervals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalSet {
    pub intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(bad) = intervals.iter().find(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::Contract(format!("[{}, {}] is not a closed interval", bad.0, bad.1)));
        }
        Ok(Self { intervals })
    }

    pub fn unit() -> Self {
        Self { intervals: vec![(0.0, 1.0)] }
    }

    pub fn empty() -> Self {
        Self { intervals: vec![] }
    }

    /// Whether the cover should use the cell `[lo, hi]`: the cell overlaps a
    /// component in positive length, or holds a one-point component.
    pub fn meets_cell(&self, lo: f64, hi: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| if a == b { lo <= a && a < hi } else { a.max(lo) < b.min(hi) })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= x && x <= b)
    }
}

/// Grid of spacing `2^-(l * level)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Grid {
    pub l: u32,
    pub level: u32,
}

impl Grid {
    pub fn new(l: u32, level: u32) -> Self {
        Self { l, level }
    }

    pub fn width(&self) -> f64 {
        (-((self.l * self.level) as f64)).exp2()
    }

    fn cell(&self, m: i64) -> (Dyadic, Dyadic) {
        let e = self.l * self.level;
        (Dyadic::new(m, e), Dyadic::new(m + 1, e))
    }

    /// Cells meeting `set`, in increasing order.
    pub fn cells_meeting(&self, set: &IntervalSet) -> Vec<i64> {
        let w = self.width();
        let mut out: Vec<i64> = set
            .intervals
            .iter()
            .flat_map(|&(a, b)| ((a / w).floor() as i64 - 1)..=((b / w).ceil() as i64))
            .filter(|&m| set.meets_cell(m as f64 * w, (m + 1) as f64 * w))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverCell {
    pub lo: f64,
    pub hi: f64,
    pub diameter: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverEstimate {
    pub alpha: f64,
    /// Largest diameter in the cover.
    pub delta: f64,
    /// `sum diameter^alpha` over the cover.
    pub value: f64,
    pub cover: Vec<CoverCell>,
}

/// Grid-cover upper estimate of `H^alpha(set)` at the given grid.
pub fn hausdorff_estimate(metric: &dyn IntervalMetric, set: &IntervalSet, alpha: f64, grid: Grid) -> Result<CoverEstimate> {
    if !(alpha > 0.0) {
        return Err(Error::Contract(format!("alpha must be positive, got {alpha}")));
    }
    let cells = grid.cells_meeting(set);
    let parts: Vec<(CoverCell, f64)> = cells
        .par_iter()
        .map(|&m| {
            let (lo, hi) = grid.cell(m);
            let diameter = metric.diameter(&lo, &hi)?;
            let weight = metric.diameter_pow(&lo, &hi, alpha)?;
            Ok((CoverCell { lo: lo.to_f64()?, hi: hi.to_f64()?, diameter }, weight))
        })
        .collect::<Result<_>>()?;
    let value = parts.iter().map(|p| p.1).sum();
    let delta = parts.iter().map(|p| p.0.diameter).fold(0.0, f64::max);
    Ok(CoverEstimate { alpha, delta, value, cover: parts.into_iter().map(|p| p.0).collect() })
}

/// `m(A x B) = H^alpha(A) H^beta(B)` on boxes.
pub fn product_measure_on_boxes(a: &CoverEstimate, b: &CoverEstimate) -> f64 {
    a.value * b.value
}

/// Direct estimate of a box `prod_k [a_k, b_k]` of the product: cover by the
/// cubes `I^i_j` meeting the box, each of diameter
/// `||(side_k^(s_k))_k||` under `norm`, raised to `alpha = sum 1/s_k`.
pub fn box_cover_estimate(cfg: &SnowflakeConfig, norm: ProductNorm, bounds: &[(f64, f64)], scale: u32) -> Result<CoverEstimate> {
    if bounds.len() != cfg.dim() {
        return Err(Error::Contract(format!("box has {} sides, expected {}", bounds.len(), cfg.dim())));
    }
    let sides: Vec<f64> = (0..cfg.dim()).map(|k| cube_side(cfg, scale, k)).collect();
    let counts: Vec<u64> = bounds
        .iter()
        .zip(&sides)
        .map(|(&(a, b), w)| {
            // cells overlapping [a, b] in positive length; 1e-9 absorbs non-dyadic sides
            let first = (a / w + 1e-9).floor();
            let last = (b / w - 1e-9).ceil();
            (last - first).max(if a == b { 1.0 } else { 0.0 }) as u64
        })
        .collect();
    let factors: Vec<f64> = sides.iter().zip(cfg.exponents()).map(|(w, s)| w.powf(*s)).collect();
    let diameter = crate::product::product_distance(norm, &factors)?;
    let cells: u64 = counts.iter().product();
    let alpha = cfg.alpha();
    Ok(CoverEstimate { alpha, delta: diameter, value: cells as f64 * diameter.powf(alpha), cover: vec![] })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularitySample {
    pub center: f64,
    pub radius: f64,
    pub estimate: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub alpha: f64,
    pub samples: Vec<RegularitySample>,
    pub max_ratio: f64,
    pub min_ratio: f64,
}

impl RegularityReport {
    /// `max_ratio / min_ratio`, the empirical `K^2`.
    pub fn spread(&self) -> f64 {
        self.max_ratio / self.min_ratio
    }
}

/// Estimates `m(B(x, r))` over `[0, 1]` for each center and radius. A grid
/// cell counts toward the ball when its midpoint is within `r` of the center.
pub fn regularity_scan(
    metric: &dyn IntervalMetric,
    alpha: f64,
    centers: &[Dyadic],
    radii: &[f64],
    grid: Grid,
) -> Result<RegularityReport> {
    if !(alpha > 0.0) {
        return Err(Error::Contract(format!("alpha must be positive, got {alpha}")));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::Contract(format!("radius {r} must be positive")));
    }
    let cells = grid.cells_meeting(&IntervalSet::unit());
    let weights: Vec<(Dyadic, f64)> = cells
        .par_iter()
        .map(|&m| {
            let (lo, hi) = grid.cell(m);
            let mid = (&lo + &hi).mul_pow2(-1);
            Ok((mid, metric.diameter_pow(&lo, &hi, alpha)?))
        })
        .collect::<Result<_>>()?;
    let mut samples = Vec::with_capacity(centers.len() * radii.len());
    for c in centers {
        let dist: Vec<f64> = weights.par_iter().map(|(mid, _)| metric.distance(c, mid)).collect::<Result<_>>()?;
        for &r in radii {
            let estimate: f64 = dist.iter().zip(&weights).filter(|(d, _)| **d < r).map(|(_, w)| w.1).sum();
            samples.push(RegularitySample { center: c.to_f64()?, radius: r, estimate, ratio: estimate / r.powf(alpha) });
        }
    }
    let max_ratio = samples.iter().map(|s| s.ratio).fold(f64::NEG_INFINITY, f64::max);
    let min_ratio = samples.iter().map(|s| s.ratio).fold(f64::INFINITY, f64::min);
    Ok(RegularityReport { alpha, samples, max_ratio, min_ratio })
}
