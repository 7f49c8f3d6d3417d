//! Finite samples of compact sets: Hausdorff distance, and checks of the
//! convergence statements for sequences of compacta.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::SnowflakeConfig;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::measure::{hausdorff_estimate, Grid, IntervalMetric, IntervalSet};
use crate::product::d_s;
use crate::quotient::{product_semidistance, DistanceOptions};

const DEDUP_TOL: f64 = 1e-14;

/// A distance between points of `R^N`.
pub trait PointMetric: Sync {
    fn dist(&self, a: &[f64], b: &[f64]) -> Result<f64>;

    /// A lower bound on the distance of two points whose first coordinates
    /// differ by `gap`; lets the nearest-point search stop early.
    fn first_coordinate_bound(&self, _gap: f64) -> f64 {
        0.0
    }
}

fn on_line(a: &[f64]) -> Result<Dyadic> {
    match a {
        [x] => Dyadic::from_f64(*x).ok_or_else(|| Error::Contract(format!("{x} is not finite"))),
        _ => Err(Error::Contract(format!("a line metric needs 1 coordinate, got {}", a.len()))),
    }
}

impl<T: IntervalMetric + ?Sized> PointMetric for T {
    fn dist(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.distance(&on_line(a)?, &on_line(b)?)
    }

    fn first_coordinate_bound(&self, gap: f64) -> f64 {
        self.separation_bound(gap)
    }
}

struct OnLine<'a>(&'a dyn IntervalMetric);

impl PointMetric for OnLine<'_> {
    fn dist(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.0.dist(a, b)
    }

    fn first_coordinate_bound(&self, gap: f64) -> f64 {
        self.0.separation_bound(gap)
    }
}

/// `d_s` on `R^N`.
pub struct ProductSnowflake(pub SnowflakeConfig);

impl PointMetric for ProductSnowflake {
    fn dist(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        d_s(&self.0, a, b)
    }

    fn first_coordinate_bound(&self, gap: f64) -> f64 {
        gap.powf(self.0.exponents()[0])
    }
}

/// `d_s` with `d_R` on the layer coordinates, at a fixed truncation.
pub struct ProductQuotient {
    pub cfg: SnowflakeConfig,
    pub truncation: u32,
    pub opts: DistanceOptions,
}

impl PointMetric for ProductQuotient {
    fn dist(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        product_semidistance(&self.cfg, a, b, self.truncation, &self.opts)
    }

    fn first_coordinate_bound(&self, gap: f64) -> f64 {
        if self.cfg.in_layer(0) {
            0.0
        } else {
            gap.powf(self.cfg.exponents()[0])
        }
    }
}

/// Points sorted by first coordinate, with coordinates agreeing to `1e-14`
/// merged.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FinitePointSet {
    points: Vec<Vec<f64>>,
}

impl FinitePointSet {
    pub fn new(mut points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if let Some(bad) = points.iter().find(|p| p.len() != dim || p.is_empty() || p.iter().any(|x| !x.is_finite())) {
            return Err(Error::Contract(format!("point {bad:?} does not match dimension {dim} or is not finite")));
        }
        points.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let mut kept: Vec<Vec<f64>> = Vec::with_capacity(points.len());
        for p in points {
            let near = kept
                .iter()
                .rev()
                .take_while(|q| p[0] - q[0] <= DEDUP_TOL)
                .any(|q| q.iter().zip(&p).all(|(a, b)| (a - b).abs() <= DEDUP_TOL));
            if !near {
                kept.push(p);
            }
        }
        Ok(Self { points: kept })
    }

    pub fn from_line(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|x| vec![*x]).collect())
    }

    /// The `2^bits + 1` points `k / 2^bits` of `[0, 1]`.
    pub fn unit_grid(bits: u32) -> Self {
        let n = 1u64 << bits;
        Self { points: (0..=n).map(|k| vec![k as f64 / n as f64]).collect() }
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `min_{q in self} d(p, q)`, scanning outward from the first coordinate of `p`.
    pub fn distance_to(&self, metric: &dyn PointMetric, p: &[f64]) -> Result<f64> {
        let pts = &self.points;
        let start = pts.partition_point(|q| q[0] < p[0]);
        let mut best = f64::INFINITY;
        let (mut right, mut left) = (start, start);
        let (mut go_right, mut go_left) = (true, true);
        while go_right || go_left {
            if go_right {
                if right < pts.len() && metric.first_coordinate_bound(pts[right][0] - p[0]) < best {
                    best = best.min(metric.dist(p, &pts[right])?);
                    right += 1;
                } else {
                    go_right = false;
                }
            }
            if go_left {
                if left > 0 && metric.first_coordinate_bound(p[0] - pts[left - 1][0]) < best {
                    best = best.min(metric.dist(p, &pts[left - 1])?);
                    left -= 1;
                } else {
                    go_left = false;
                }
            }
        }
        Ok(best)
    }

    /// `sup_{a in self} d(a, other)`.
    pub fn excess_over(&self, metric: &dyn PointMetric, other: &FinitePointSet) -> Result<f64> {
        let gaps: Vec<f64> = self.points.par_iter().map(|a| other.distance_to(metric, a)).collect::<Result<_>>()?;
        Ok(gaps.into_iter().fold(0.0, f64::max))
    }

    fn as_line_set(&self) -> Result<IntervalSet> {
        if self.points.iter().any(|p| p.len() != 1) {
            return Err(Error::Contract("measure estimates need points on the line".into()));
        }
        IntervalSet::new(self.points.iter().map(|p| (p[0], p[0])).collect())
    }
}

/// `max(sup_a d(a, B), sup_b d(b, A))`.
pub fn hausdorff_distance(metric: &dyn PointMetric, a: &FinitePointSet, b: &FinitePointSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Contract("Hausdorff distance needs two nonempty sets".into()));
    }
    Ok(a.excess_over(metric, b)?.max(b.excess_over(metric, a)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SemicontinuityRow {
    pub index: usize,
    pub hausdorff_to_limit: f64,
    pub estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SemicontinuityReport {
    pub alpha: f64,
    pub rows: Vec<SemicontinuityRow>,
    pub limit_estimate: f64,
    /// Two cells' worth of `diameter^alpha`: the slack allowed between grid estimates.
    pub bias_bound: f64,
    pub distances_decreasing: bool,
    pub violation: bool,
}

/// Tabulates grid estimates of `H^alpha(K_n)` and `H^alpha(K)` for a
/// sequence of point sets on the line, flagging a tail estimate above the
/// limit's by more than the estimator bias.
pub fn semicontinuity_demo(
    metric: &dyn IntervalMetric,
    sequence: &[FinitePointSet],
    limit: &FinitePointSet,
    alpha: f64,
    grid: Grid,
) -> Result<SemicontinuityReport> {
    let limit_est = hausdorff_estimate(metric, &limit.as_line_set()?, alpha, grid)?;
    let mut rows = Vec::with_capacity(sequence.len());
    let mut biggest_cell = limit_est.delta;
    for (index, k) in sequence.iter().enumerate() {
        let est = hausdorff_estimate(metric, &k.as_line_set()?, alpha, grid)?;
        biggest_cell = biggest_cell.max(est.delta);
        rows.push(SemicontinuityRow { index, hausdorff_to_limit: hausdorff_distance(&OnLine(metric), k, limit)?, estimate: est.value });
    }
    let bias_bound = 2.0 * biggest_cell.powf(alpha);
    let distances_decreasing = rows.windows(2).all(|w| w[1].hausdorff_to_limit <= w[0].hausdorff_to_limit);
    let violation = rows.last().is_some_and(|r| r.estimate > limit_est.value + bias_bound);
    Ok(SemicontinuityReport { alpha, rows, limit_estimate: limit_est.value, bias_bound, distances_decreasing, violation })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KuratowskiReport {
    /// `sup_{x in K} d(x, K_n)`: how far the nearest-point selections are from each limit point.
    pub selection_gaps: Vec<f64>,
    /// `sup_{y in K_n} d(y, K)`: how far points of `K_n`, hence their accumulation points, lie from `K`.
    pub excess: Vec<f64>,
    pub tol: f64,
    pub selections_converge: bool,
    pub accumulation_in_limit: bool,
}

/// Both halves of the Kuratowski criterion on a finite sequence, judged on
/// its last term against `tol`.
pub fn kuratowski_check(
    metric: &dyn PointMetric,
    sequence: &[FinitePointSet],
    limit: &FinitePointSet,
    tol: f64,
) -> Result<KuratowskiReport> {
    if sequence.is_empty() || limit.is_empty() || sequence.iter().any(|k| k.is_empty()) {
        return Err(Error::Contract("the sequence and its limit must be nonempty".into()));
    }
    let mut selection_gaps = vec![];
    let mut excess = vec![];
    for k in sequence {
        selection_gaps.push(limit.excess_over(metric, k)?);
        excess.push(k.excess_over(metric, limit)?);
    }
    let last = |v: &[f64]| *v.last().expect("nonempty");
    Ok(KuratowskiReport {
        selections_converge: last(&selection_gaps) <= tol,
        accumulation_in_limit: last(&excess) <= tol,
        selection_gaps,
        excess,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{Euclidean, Snowflake};

    #[test]
    fn dedup_merges_near_points() {
        let s = FinitePointSet::from_line(&[0.5, 0.5 + 1e-16, 0.25, 0.5]).unwrap();
        assert_eq!(s.len(), 2);
        assert!(FinitePointSet::new(vec![vec![0.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn basic_distances() {
        let a = FinitePointSet::from_line(&[0.0]).unwrap();
        let b = FinitePointSet::from_line(&[1.0]).unwrap();
        assert_eq!(hausdorff_distance(&Euclidean, &a, &b).unwrap(), 1.0);
        assert_eq!(hausdorff_distance(&Euclidean, &a, &a).unwrap(), 0.0);
        let empty = FinitePointSet::new(vec![]).unwrap();
        assert!(hausdorff_distance(&Euclidean, &a, &empty).is_err());
    }

    #[test]
    fn grid_against_finer_grid() {
        // the finer points farthest from the coarse grid sit midway between coarse points
        let m = Snowflake { s: 0.5 };
        let coarse = FinitePointSet::unit_grid(6);
        let fine = FinitePointSet::unit_grid(10);
        let got = hausdorff_distance(&m, &coarse, &fine).unwrap();
        let mut brute: f64 = 0.0;
        for p in fine.points() {
            let near = coarse.points().iter().map(|q| (p[0] - q[0]).abs().sqrt()).fold(f64::INFINITY, f64::min);
            brute = brute.max(near);
        }
        assert_eq!(got, brute);
        assert_eq!(got, (2f64.powi(-6) / 2.0).sqrt());
    }

    #[test]
    fn pruned_search_matches_full_scan() {
        let cfg = SnowflakeConfig::new(vec![0.5, 0.75], 2, 8.0).unwrap();
        let m = ProductSnowflake(cfg);
        let a = FinitePointSet::new((0..40).map(|k| vec![(k as f64 * 0.37) % 1.0, (k as f64 * 0.61) % 1.0]).collect()).unwrap();
        for p in [[0.1, 0.9], [0.55, 0.2], [1.3, -0.4]] {
            let full = a.points().iter().map(|q| m.dist(&p, q).unwrap()).fold(f64::INFINITY, f64::min);
            assert_eq!(a.distance_to(&m, &p).unwrap(), full);
        }
    }

    #[test]
    fn shrinking_gap_sequence() {
        let grid = FinitePointSet::unit_grid(8);
        let seq: Vec<_> = (1..=5)
            .map(|n| {
                let gap = 0.5f64.powi(n + 1);
                let pts: Vec<f64> = grid.points().iter().map(|p| p[0]).filter(|x| (x - 0.5).abs() >= gap).collect();
                FinitePointSet::from_line(&pts).unwrap()
            })
            .collect();
        let r = semicontinuity_demo(&Euclidean, &seq, &grid, 1.0, Grid::new(2, 3)).unwrap();
        assert!(!r.violation && r.distances_decreasing);
        assert!(r.rows.windows(2).all(|w| w[0].estimate <= w[1].estimate));
        assert!(r.rows.last().unwrap().estimate <= r.limit_estimate);
    }

    #[test]
    fn constant_sequence() {
        let g = FinitePointSet::unit_grid(4);
        let r = semicontinuity_demo(&Euclidean, &[g.clone(), g.clone()], &g, 1.0, Grid::new(2, 2)).unwrap();
        assert!(r.rows.iter().all(|row| row.estimate == r.limit_estimate && row.hausdorff_to_limit == 0.0));
        let k = kuratowski_check(&Euclidean, &[g.clone(), g.clone()], &g, 0.0).unwrap();
        assert_eq!(k.selection_gaps, vec![0.0, 0.0]);
        assert!(k.selections_converge && k.accumulation_in_limit);
    }

    #[test]
    fn refining_grids_and_outliers() {
        let limit = FinitePointSet::unit_grid(10);
        let seq: Vec<_> = (2..=6).map(FinitePointSet::unit_grid).collect();
        let k = kuratowski_check(&Euclidean, &seq, &limit, 0.01).unwrap();
        for (bits, gap) in (2..=6).zip(&k.selection_gaps) {
            assert_eq!(*gap, 0.5f64.powi(bits + 1));
        }
        assert!(k.excess.iter().all(|e| *e == 0.0));
        assert!(k.selections_converge);
        let with_outlier: Vec<_> = seq
            .iter()
            .map(|s| {
                let mut pts: Vec<f64> = s.points().iter().map(|p| p[0]).collect();
                pts.push(1.5);
                FinitePointSet::from_line(&pts).unwrap()
            })
            .collect();
        let k = kuratowski_check(&Euclidean, &with_outlier, &limit, 0.01).unwrap();
        assert!(!k.accumulation_in_limit);
        assert!(k.excess.iter().all(|e| *e == 0.5));
    }
}
