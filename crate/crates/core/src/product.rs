//! Product distances, dilations and the cube combinatorics of the blow-up
//! argument: cubes `I^i_j = dil_{h^(is)}([0,1]^N + j)`, the maps `f_{i,j}`,
//! and the admissible index set.

use serde::Serialize;

use crate::config::SnowflakeConfig;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::quotient::{product_semidistance, DistanceOptions};
use crate::shortcuts::{is_clean, GridInterval};

const SLACK: f64 = 1e-12;

fn check_dim(cfg: &SnowflakeConfig, pts: &[&[f64]]) -> Result<()> {
    match pts.iter().find(|p| p.len() != cfg.dim()) {
        Some(p) => Err(Error::Contract(format!("point has {} coordinates, expected {}", p.len(), cfg.dim()))),
        None => Ok(()),
    }
}

/// `sum_k |x_k - y_k|^(s_k)`.
pub fn d_s(cfg: &SnowflakeConfig, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(cfg, &[x, y])?;
    Ok(cfg.exponents().iter().zip(x.iter().zip(y)).map(|(s, (a, b))| (a - b).abs().powf(*s)).sum())
}

/// `d_s` with the layer coordinates measured by `d_R` at truncation `level`.
pub fn d_s_r(cfg: &SnowflakeConfig, x: &[f64], y: &[f64], level: u32, opts: &DistanceOptions) -> Result<f64> {
    product_semidistance(cfg, x, y, level, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductNorm {
    Sup,
    One,
}

/// Norm of the vector of factor distances.
pub fn product_distance(norm: ProductNorm, factors: &[f64]) -> Result<f64> {
    if let Some(bad) = factors.iter().find(|d| !(**d >= 0.0)) {
        return Err(Error::Contract(format!("factor distance {bad} is negative")));
    }
    Ok(match norm {
        ProductNorm::Sup => factors.iter().copied().fold(0.0, f64::max),
        ProductNorm::One => factors.iter().sum(),
    })
}

/// Strict membership `||factors|| < r` in the product ball.
pub fn in_product_ball(norm: ProductNorm, factors: &[f64], r: f64) -> Result<bool> {
    Ok(product_distance(norm, factors)? < r)
}

/// `(delta^(1/s_1) z_1, ..., delta^(1/s_N) z_N)`, a similitude of ratio `delta` for `d_s`.
pub fn dil(cfg: &SnowflakeConfig, delta: f64, z: &[f64]) -> Result<Vec<f64>> {
    check_dim(cfg, &[z])?;
    if !(delta > 0.0) {
        return Err(Error::Contract(format!("dilation factor must be positive, got {delta}")));
    }
    Ok(cfg.exponents().iter().zip(z).map(|(s, x)| delta.powf(1.0 / s) * x).collect())
}

/// Address `(i, j)` of the cube `I^i_j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CubeIndex {
    pub scale: u32,
    pub offset: Vec<i64>,
}

impl CubeIndex {
    pub fn new(scale: u32, offset: Vec<i64>) -> Self {
        Self { scale, offset }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cube {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Exact corners of the layer coordinates, `None` elsewhere.
    pub exact: Vec<Option<(Dyadic, Dyadic)>>,
}

/// Side of `I^i_j` along coordinate `k`: `h^(i s / s_k)`.
pub fn cube_side(cfg: &SnowflakeConfig, scale: u32, k: usize) -> f64 {
    let ratio = cfg.s() / cfg.exponents()[k];
    (-(cfg.l() as f64) * scale as f64 * ratio).exp2()
}

fn layer_interval(idx: &CubeIndex, k: usize) -> GridInterval {
    GridInterval::new(idx.scale, idx.offset[k])
}

pub fn cube(cfg: &SnowflakeConfig, idx: &CubeIndex) -> Result<Cube> {
    if idx.offset.len() != cfg.dim() {
        return Err(Error::Contract(format!("cube offset has {} entries, expected {}", idx.offset.len(), cfg.dim())));
    }
    let mut c = Cube { lower: vec![], upper: vec![], exact: vec![] };
    for k in 0..cfg.dim() {
        if cfg.in_layer(k) {
            let iv = layer_interval(idx, k);
            let (a, b) = (iv.left(cfg), iv.right(cfg));
            c.lower.push(a.to_f64()?);
            c.upper.push(b.to_f64()?);
            c.exact.push(Some((a, b)));
        } else {
            let w = cube_side(cfg, idx.scale, k);
            c.lower.push(w * idx.offset[k] as f64);
            c.upper.push(w * (idx.offset[k] + 1) as f64);
            c.exact.push(None);
        }
    }
    Ok(c)
}

/// `diam_{d_s} I^i_j = N h^(is)`.
pub fn cube_diameter(cfg: &SnowflakeConfig, scale: u32) -> f64 {
    cfg.dim() as f64 * cfg.mu_pow(scale as i64)
}

pub fn cube_inside_unit(cfg: &SnowflakeConfig, idx: &CubeIndex) -> bool {
    (0..cfg.dim()).all(|k| {
        let j = idx.offset[k];
        if cfg.in_layer(k) {
            j >= 0 && (j as i128) < (1i128 << (cfg.l() * idx.scale).min(126))
        } else {
            j >= 0 && cube_side(cfg, idx.scale, k) * (j + 1) as f64 <= 1.0 + SLACK
        }
    })
}

/// Inside the unit cube with every layer side a clean interval: the
/// structural condition under which `f_{i,j}` rescales `d_{s,R}` by `h^(is)`.
pub fn is_admissible(cfg: &SnowflakeConfig, idx: &CubeIndex) -> bool {
    idx.offset.len() == cfg.dim()
        && cube_inside_unit(cfg, idx)
        && (cfg.is_degenerate() || cfg.layer().into_iter().all(|k| is_clean(cfg, &layer_interval(idx, k))))
}

/// `f_{i,j}(x) = dil_{h^(is)}(x + j)`.
pub fn f_map(cfg: &SnowflakeConfig, idx: &CubeIndex, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(cfg, &[x])?;
    let shifted: Vec<f64> = x.iter().zip(&idx.offset).map(|(a, j)| a + *j as f64).collect();
    dil(cfg, cfg.mu_pow(idx.scale as i64), &shifted)
}

/// Exact image of a layer coordinate under `f_{i,j}`.
pub fn f_map_layer(cfg: &SnowflakeConfig, idx: &CubeIndex, k: usize, t: &Dyadic) -> Dyadic {
    (t + &Dyadic::from_int(idx.offset[k])).mul_pow2(-((cfg.l() * idx.scale) as i64))
}

/// Offsets along coordinate `k` at scale `i` whose intervals fit in the unit interval.
fn unit_range(cfg: &SnowflakeConfig, scale: u32, k: usize) -> std::ops::Range<i64> {
    let count = if cfg.in_layer(k) {
        1i64 << (cfg.l() * scale)
    } else {
        ((1.0 + SLACK) / cube_side(cfg, scale, k)).floor() as i64
    };
    0..count
}

fn product_of_ranges(ranges: &[Vec<i64>], scale: u32) -> Vec<CubeIndex> {
    let mut out = vec![vec![]];
    for r in ranges {
        out = out.into_iter().flat_map(|prefix: Vec<i64>| r.iter().map(move |j| [prefix.clone(), vec![*j]].concat())).collect();
    }
    out.into_iter().map(|offset| CubeIndex::new(scale, offset)).collect()
}

/// All cubes of scale `i` inside the unit cube, in lexicographic order.
pub fn cubes_at_scale(cfg: &SnowflakeConfig, scale: u32, admissible_only: bool) -> Vec<CubeIndex> {
    let ranges: Vec<Vec<i64>> = (0..cfg.dim()).map(|k| unit_range(cfg, scale, k).collect()).collect();
    let mut cubes = product_of_ranges(&ranges, scale);
    if admissible_only {
        cubes.retain(|c| is_admissible(cfg, c));
    }
    cubes
}

/// Scale `i+1` cubes contained in `I^i_j`.
pub fn children(cfg: &SnowflakeConfig, idx: &CubeIndex) -> Vec<CubeIndex> {
    let next = idx.scale + 1;
    let ranges: Vec<Vec<i64>> = (0..cfg.dim())
        .map(|k| {
            let (w, w2) = (cube_side(cfg, idx.scale, k), cube_side(cfg, next, k));
            let (lo, hi) = (w * idx.offset[k] as f64, w * (idx.offset[k] + 1) as f64);
            let first = (lo / w2 - SLACK).ceil() as i64;
            (first..).take_while(|j| w2 * (*j + 1) as f64 <= hi + SLACK * w).collect()
        })
        .collect();
    product_of_ranges(&ranges, next)
}

pub fn admissible_children(cfg: &SnowflakeConfig, idx: &CubeIndex) -> Vec<CubeIndex> {
    children(cfg, idx).into_iter().filter(|c| is_admissible(cfg, c)).collect()
}
