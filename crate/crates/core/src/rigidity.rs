//! Numerical witnesses for Lipschitz rigidity: the `h^(sn)`-Lipschitz
//! rescaling inequality along block-of-zeros levels, and the collapse of the
//! oscillation any Lipschitz map into a snowflaked line can have.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::SnowflakeConfig;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::quotient::{distance_matrix, DistanceOptions, HierarchicalSolver};
use crate::shortcuts::{GridInterval, Shortcut};

/// Largest number of grid pairs an oscillation bound will tabulate.
pub const OSCILLATION_PAIR_BUDGET: usize = 1 << 22;

/// Matching numerical noise in the probe's `gap <= bound + slack` test.
const PROBE_EPS: f64 = 1e-12;

fn check_unit_point(x0: &Dyadic) -> Result<()> {
    if x0.is_zero() || (*x0 > Dyadic::zero() && *x0 < Dyadic::one()) {
        Ok(())
    } else {
        Err(Error::Contract(format!("x0 = {x0} must lie in [0, 1)")))
    }
}

/// The first `count` levels `n >= 1` at which binary digits `ln+1 ..= 2ln`
/// of `x0` all vanish.
pub fn block_zero_levels(x0: &Dyadic, l: u32, count: usize) -> Result<Vec<u32>> {
    check_unit_point(x0)?;
    if l == 0 {
        return Err(Error::Contract("l must be positive".into()));
    }
    let mut out = Vec::with_capacity(count);
    let mut n = 1u32;
    // every level past the last nonzero digit qualifies, so this ends
    while out.len() < count {
        let window = BigInt::one() << (l * n) as usize;
        if (x0.mul_pow2(2 * (l * n) as i64).floor() % window).is_zero() {
            out.push(n);
        }
        n += 1;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeLevel {
    pub level: u32,
    /// `h^(-sn) d_R(x0 + h^n p, x0 + h^n q)`.
    pub gap: f64,
    /// `2 |2^(ln) x0 - m|^s`, `m` the nearest integer.
    pub bound: f64,
    /// Rescaled last decrement of the gap query plus `d_R(p, q)` as computed.
    pub slack: f64,
    pub truncation: u32,
    pub converged: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RescalingProbe {
    pub x0: Dyadic,
    pub shortcut: Shortcut,
    pub levels: Vec<ProbeLevel>,
}

impl RescalingProbe {
    pub fn violations(&self) -> usize {
        self.levels.iter().filter(|r| !r.holds).count()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.levels.iter().map(|r| r.gap).collect()
    }
}

/// Pushes `shortcut` to scale `h^n` at `x0` and compares the rescaled gap
/// with the rescaling bound. The query at level `n` runs to truncation
/// `n + truncation`, so that the image of every shortcut of level
/// `<= truncation` is available.
pub fn rescaling_probe(
    cfg: &SnowflakeConfig,
    x0: &Dyadic,
    shortcut: &Shortcut,
    levels: &[u32],
    truncation: u32,
    opts: &DistanceOptions,
) -> Result<RescalingProbe> {
    check_unit_point(x0)?;
    if levels.is_empty() {
        return Err(Error::Contract("no probe levels".into()));
    }
    let solver = HierarchicalSolver::new(cfg.clone(), *opts);
    let l = cfg.l() as i64;
    let s = cfg.s();
    let base = solver.distance(&shortcut.p, &shortcut.q, truncation)?.value;
    let half = Dyadic::pow2_neg(1);
    let rows = levels
        .iter()
        .map(|&n| {
            let shift = l * n as i64;
            let x = x0 + &shortcut.p.mul_pow2(-shift);
            let y = x0 + &shortcut.q.mul_pow2(-shift);
            let r = solver.distance(&x, &y, n + truncation)?;
            let scale = cfg.mu_pow(-(n as i64));
            let blown = x0.mul_pow2(shift);
            let m = Dyadic::new((&blown + &half).floor(), 0);
            let bound = 2.0 * (&blown - &m).abs().to_f64()?.powf(s);
            let gap = scale * r.value;
            let slack = scale * r.last_decrement() + base;
            Ok(ProbeLevel {
                level: n,
                gap,
                bound,
                slack,
                truncation: n + truncation,
                converged: r.converged,
                holds: gap <= bound + slack + PROBE_EPS,
            })
        })
        .collect::<Result<_>>()?;
    Ok(RescalingProbe { x0: x0.clone(), shortcut: shortcut.clone(), levels: rows })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OscillationBound {
    pub lipschitz: f64,
    pub grid_level: u32,
    pub truncation: u32,
    /// Largest shortest-path distance between grid points under weights
    /// `(L d)^(1/s)`: no `L`-Lipschitz function on the grid varies by more.
    pub value: f64,
}

fn check_lipschitz(lipschitz: f64) -> Result<()> {
    if lipschitz.is_finite() && lipschitz >= 0.0 {
        Ok(())
    } else {
        Err(Error::Contract(format!("Lipschitz constant must be finite and nonnegative, got {lipschitz}")))
    }
}

fn grid_points(lo: &Dyadic, count: usize, step_exp: u32) -> Result<Vec<Dyadic>> {
    if count.saturating_mul(count) > OSCILLATION_PAIR_BUDGET {
        return Err(Error::Resource(format!(
            "{count} grid points need {} pairs, over the budget of {OSCILLATION_PAIR_BUDGET}",
            count.saturating_mul(count)
        )));
    }
    Ok((0..count).map(|k| lo + &Dyadic::new(BigInt::from(k), step_exp)).collect())
}

/// Floyd-Warshall on a row-major matrix, returning the largest entry.
fn max_geodesic(mut d: Vec<f64>, n: usize) -> f64 {
    for k in 0..n {
        let via: Vec<f64> = d[k * n..(k + 1) * n].to_vec();
        d.par_chunks_mut(n).for_each(|row| {
            let dik = row[k];
            if dik.is_finite() {
                for (j, v) in via.iter().enumerate() {
                    let c = dik + v;
                    if c < row[j] {
                        row[j] = c;
                    }
                }
            }
        });
    }
    d.into_iter().fold(0.0, f64::max)
}

fn oscillation_on(
    cfg: &SnowflakeConfig,
    lipschitz: f64,
    cell: GridInterval,
    grid_level: u32,
    truncation: u32,
    opts: &DistanceOptions,
) -> Result<f64> {
    check_lipschitz(lipschitz)?;
    let count = (1usize << (cfg.l() * grid_level) as usize) + 1;
    let step_exp = cfg.l() * (cell.level + grid_level);
    let lo = cell.left(cfg);
    let points = grid_points(&lo, count, step_exp)?;
    if lipschitz == 0.0 {
        return Ok(0.0);
    }
    let d = distance_matrix(cfg, &lo, &cell.right(cfg), &points, cell.level + truncation, opts)?;
    let inv = 1.0 / cfg.s();
    Ok(max_geodesic(d.into_iter().map(|v| (lipschitz * v).powf(inv)).collect(), count))
}

/// The oscillation bound on the `2^(l * grid_level) + 1` grid points of
/// `[0, 1]`, with `d_R` truncated at `truncation`.
pub fn oscillation_bound(
    cfg: &SnowflakeConfig,
    lipschitz: f64,
    grid_level: u32,
    truncation: u32,
    opts: &DistanceOptions,
) -> Result<OscillationBound> {
    let value = oscillation_on(cfg, lipschitz, GridInterval::new(0, 0), grid_level, truncation, opts)?;
    Ok(OscillationBound { lipschitz, grid_level, truncation, value })
}

/// The same bound over a grid cell, with grid and truncation levels taken
/// relative to the cell's level.
pub fn oscillation_bound_on(
    cfg: &SnowflakeConfig,
    lipschitz: f64,
    cell: GridInterval,
    grid_level: u32,
    truncation: u32,
    opts: &DistanceOptions,
) -> Result<OscillationBound> {
    let value = oscillation_on(cfg, lipschitz, cell, grid_level, truncation, opts)?;
    Ok(OscillationBound { lipschitz, grid_level, truncation, value })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LegBound {
    pub coordinate: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstancyBound {
    pub output: usize,
    pub legs: Vec<LegBound>,
    pub value: f64,
}

/// Bounds the variation of output coordinate `output` (a layer coordinate)
/// of an `L`-Lipschitz map `([0,1]^N, d_{s,R}) -> (R^N, d_s)` along the
/// staircase curve that moves one coordinate per leg.
pub fn coordinate_constancy_bound(
    cfg: &SnowflakeConfig,
    lipschitz: f64,
    output: usize,
    grid_level: u32,
    truncation: u32,
    opts: &DistanceOptions,
) -> Result<ConstancyBound> {
    if !cfg.in_layer(output) {
        return Err(Error::Contract(format!("coordinate {output} is not in the layer {:?}", cfg.layer())));
    }
    check_lipschitz(lipschitz)?;
    let inv = 1.0 / cfg.s();
    let count = (1usize << (cfg.l() * grid_level) as usize) + 1;
    let step_exp = cfg.l() * grid_level;
    let mut legs = Vec::with_capacity(cfg.dim());
    for (k, &sk) in cfg.exponents().iter().enumerate() {
        let value = if cfg.in_layer(k) {
            oscillation_on(cfg, lipschitz, GridInterval::new(0, 0), grid_level, truncation, opts)?
        } else {
            let pts = grid_points(&Dyadic::zero(), count, step_exp)?;
            let xs: Vec<f64> = pts.iter().map(Dyadic::to_f64).collect::<Result<_>>()?;
            let w = xs.iter().flat_map(|a| xs.iter().map(move |b| (lipschitz * (a - b).abs().powf(sk)).powf(inv))).collect();
            max_geodesic(w, count)
        };
        legs.push(LegBound { coordinate: k, value });
    }
    let value = legs.iter().map(|leg| leg.value).fold(0.0, f64::max);
    Ok(ConstancyBound { output, legs, value })
}
