//! The self-similar shortcut sets and the grid-interval predicates built on them.
//!
//! A level-`n` shortcut joins `p = h^(n-1) (m + 1/2)` to `q = p + h^(n+1)`.
//! In canonical dyadic form `p` has exponent `l(n-1)+1` and `q` has exponent
//! `l(n+1)`, so whether a point is a shortcut endpoint is decided from its
//! canonical form alone, for every level at once.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::config::SnowflakeConfig;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};

/// An identified pair `(p, q)` with `p < q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shortcut {
    pub level: u32,
    pub index: i64,
    pub p: Dyadic,
    pub q: Dyadic,
}

impl Shortcut {
    pub fn new(cfg: &SnowflakeConfig, level: u32, index: i64) -> Self {
        assert!(level >= 1, "shortcut levels start at 1");
        let l = cfg.l();
        let p = Dyadic::new(BigInt::from(index) * 2 + 1, l * (level - 1) + 1);
        let q = &p + &cfg.h_pow(level + 1);
        Self { level, index, p, q }
    }

    /// The other endpoint, if `x` is one of the two.
    pub fn partner(&self, x: &Dyadic) -> Option<&Dyadic> {
        if *x == self.p {
            Some(&self.q)
        } else if *x == self.q {
            Some(&self.p)
        } else {
            None
        }
    }
}

/// `[h^n m, h^n (m+1)]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridInterval {
    pub level: u32,
    pub index: i64,
}

impl GridInterval {
    pub fn new(level: u32, index: i64) -> Self {
        Self { level, index }
    }

    pub fn left(&self, cfg: &SnowflakeConfig) -> Dyadic {
        &Dyadic::from_int(self.index) * &cfg.h_pow(self.level)
    }

    pub fn right(&self, cfg: &SnowflakeConfig) -> Dyadic {
        &Dyadic::from_int(self.index + 1) * &cfg.h_pow(self.level)
    }

    pub fn width(&self, cfg: &SnowflakeConfig) -> Dyadic {
        cfg.h_pow(self.level)
    }

    pub fn contains(&self, cfg: &SnowflakeConfig, x: &Dyadic) -> bool {
        self.left(cfg) <= *x && *x <= self.right(cfg)
    }

    pub fn shifted(&self, by: i64) -> Self {
        Self { level: self.level, index: self.index + by }
    }

    /// The enclosing interval one level up.
    pub fn parent(&self, cfg: &SnowflakeConfig) -> Option<Self> {
        if self.level == 0 {
            return None;
        }
        let per = 1i64 << cfg.l();
        Some(Self { level: self.level - 1, index: self.index.div_euclid(per) })
    }

    /// Recognises `[a, b]` as a grid interval.
    pub fn from_endpoints(cfg: &SnowflakeConfig, a: &Dyadic, b: &Dyadic) -> Option<Self> {
        let width = b - a;
        if width.numerator() != &BigInt::from(1) || width.exponent() % cfg.l() != 0 {
            return None;
        }
        let level = width.exponent() / cfg.l();
        let scaled = a.mul_pow2((cfg.l() * level) as i64);
        if !scaled.is_integer() {
            return None;
        }
        Some(Self { level, index: scaled.floor().to_i64()? })
    }
}

/// Which end of a shortcut a point is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Level `n` such that `p = h^(n-1)(m + 1/2)`, i.e. the canonical exponent of
/// `p` equals `l(n-1)+1`.
pub fn shortcut_level_of_left_endpoint(cfg: &SnowflakeConfig, p: &Dyadic) -> Option<u32> {
    if cfg.is_degenerate() {
        return None;
    }
    let e = p.exponent();
    if e >= 1 && (e - 1) % cfg.l() == 0 {
        Some((e - 1) / cfg.l() + 1)
    } else {
        None
    }
}

fn right_endpoint_level(cfg: &SnowflakeConfig, x: &Dyadic) -> Option<u32> {
    if cfg.is_degenerate() {
        return None;
    }
    let l = cfg.l();
    let e = x.exponent();
    if e % l != 0 || e / l < 2 {
        return None;
    }
    let n = e / l - 1;
    let p = x - &cfg.h_pow(n + 1);
    (p.exponent() == l * (n - 1) + 1).then_some(n)
}

/// The shortcut having `x` as an endpoint, if any.
pub fn shortcut_at(cfg: &SnowflakeConfig, x: &Dyadic) -> Option<(Shortcut, Side)> {
    if let Some(n) = shortcut_level_of_left_endpoint(cfg, x) {
        // canonical numerator is odd, so 2m+1 is the numerator itself
        let m: BigInt = (x.numerator() - 1) / 2;
        return Some((Shortcut::new(cfg, n, m.to_i64()?), Side::Left));
    }
    if let Some(n) = right_endpoint_level(cfg, x) {
        let p = x - &cfg.h_pow(n + 1);
        let m: BigInt = (p.numerator() - 1) / 2;
        return Some((Shortcut::new(cfg, n, m.to_i64()?), Side::Right));
    }
    None
}

pub fn is_shortcut_endpoint(cfg: &SnowflakeConfig, x: &Dyadic) -> bool {
    shortcut_level_of_left_endpoint(cfg, x).is_some() || right_endpoint_level(cfg, x).is_some()
}

/// `x R y`: equal, or the two ends of one shortcut.
pub fn related(cfg: &SnowflakeConfig, x: &Dyadic, y: &Dyadic) -> bool {
    x == y || shortcut_at(cfg, x).is_some_and(|(sc, _)| sc.partner(x) == Some(y))
}

/// Neither end of `interval` is a shortcut endpoint, at any level.
pub fn is_interval_without_shortcut_at_ends(cfg: &SnowflakeConfig, interval: &GridInterval) -> bool {
    !is_shortcut_endpoint(cfg, &interval.left(cfg)) && !is_shortcut_endpoint(cfg, &interval.right(cfg))
}

/// Short alias used throughout the crate.
pub fn is_clean(cfg: &SnowflakeConfig, interval: &GridInterval) -> bool {
    is_interval_without_shortcut_at_ends(cfg, interval)
}

/// Index range of odd numerators `2m+1` with `(2m+1)/2^e` in `[lo, hi]`.
fn left_endpoint_indices(lo: &Dyadic, hi: &Dyadic, e: u32) -> Option<(i64, i64)> {
    let one = Dyadic::one();
    let lo_m = ((&lo.mul_pow2(e as i64) - &one).mul_pow2(-1)).ceil();
    let hi_m = ((&hi.mul_pow2(e as i64) - &one).mul_pow2(-1)).floor();
    if lo_m > hi_m {
        return None;
    }
    Some((lo_m.to_i64()?, hi_m.to_i64()?))
}

/// Every shortcut of level `1..=max_level` with at least one endpoint in
/// `[a, b]`, sorted by `(level, index)`.
pub fn shortcuts_in_interval(cfg: &SnowflakeConfig, a: &Dyadic, b: &Dyadic, max_level: u32) -> Vec<Shortcut> {
    let mut out = Vec::new();
    if cfg.is_degenerate() || a > b {
        return out;
    }
    for n in 1..=max_level {
        let e = cfg.l() * (n - 1) + 1;
        let gap = cfg.h_pow(n + 1);
        let mut indices = BTreeSet::new();
        // p in [a, b], or q in [a, b] i.e. p in [a - gap, b - gap]
        for (lo, hi) in [(a.clone(), b.clone()), (a - &gap, b - &gap)] {
            if let Some((m0, m1)) = left_endpoint_indices(&lo, &hi, e) {
                indices.extend(m0..=m1);
            }
        }
        out.extend(indices.into_iter().map(|m| Shortcut::new(cfg, n, m)));
    }
    out
}

/// Number of shortcuts [`shortcuts_in_interval`] would return, without
/// materialising them.
pub fn count_shortcuts_in_interval(cfg: &SnowflakeConfig, a: &Dyadic, b: &Dyadic, max_level: u32) -> u64 {
    if cfg.is_degenerate() || a > b {
        return 0;
    }
    let mut total = 0u64;
    for n in 1..=max_level {
        let e = cfg.l() * (n - 1) + 1;
        let gap = cfg.h_pow(n + 1);
        let lo = a - &gap;
        if let Some((m0, m1)) = left_endpoint_indices(&lo, b, e) {
            total = total.saturating_add((m1 - m0 + 1) as u64);
        }
    }
    total
}

/// Grid interval inside `(x - r^(1/s), x + r^(1/s))` with no shortcut at its
/// ends, at level `n = 1 + ceil(ln r / ln mu)` (clamped at 0).
///
/// Candidates are scanned left to right and the first clean one returned.
pub fn find_clean_interval_in_ball(cfg: &SnowflakeConfig, x: f64, r: f64) -> Result<GridInterval> {
    if !(r > 0.0) || !x.is_finite() {
        return Err(Error::Contract(format!("ball needs a finite centre and r > 0, got x={x}, r={r}")));
    }
    let s = cfg.s();
    let reach = r.powf(1.0 / s);
    let mut n = 1 + (r.ln() / cfg.mu().ln()).ceil() as i64;
    // guard against the quotient rounding down across an integer
    while n >= 1 && (-(cfg.l() as f64) * (n - 1) as f64).exp2() > reach {
        n += 1;
    }
    let level = n.max(0) as u32;
    let centre = Dyadic::from_f64(x).expect("finite");
    let reach_d = Dyadic::from_f64(reach).ok_or_else(|| Error::Contract(format!("radius {r} overflows")))?;
    let lo = &centre - &reach_d;
    let hi = &centre + &reach_d;
    let scale = (cfg.l() * level) as i64;
    let first = lo.mul_pow2(scale).floor();
    let last = hi.mul_pow2(scale).ceil();
    let (first, last) = match (first.to_i64(), last.to_i64()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Resource("ball too large for grid indexing".into())),
    };
    for m in first..=last {
        let cand = GridInterval::new(level, m);
        if cand.left(cfg) > lo && cand.right(cfg) < hi && is_clean(cfg, &cand) {
            return Ok(cand);
        }
    }
    Err(Error::Internal(format!("no clean level-{level} interval inside the ball around {x} of radius {r}")))
}

/// The neighbour `I - h^n` or `I + h^n` that is clean; the left one when both are.
pub fn adjacent_clean_interval(cfg: &SnowflakeConfig, interval: &GridInterval) -> Result<GridInterval> {
    if !is_clean(cfg, interval) {
        return Err(Error::Contract(format!("{interval:?} has a shortcut at one of its ends")));
    }
    for cand in [interval.shifted(-1), interval.shifted(1)] {
        if is_clean(cfg, &cand) {
            return Ok(cand);
        }
    }
    Err(Error::Internal(format!("neither neighbour of {interval:?} is clean")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg2() -> SnowflakeConfig {
        SnowflakeConfig::line(0.5, 2, 8.0).unwrap()
    }

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    /// Brute-force endpoint list in [lo, hi] from the defining formula, using
    /// integer numerators over a common denominator 2^den.
    fn brute_endpoints(l: u32, max_level: u32, lo: i128, hi: i128, den: u32) -> BTreeSet<i128> {
        let mut pts = BTreeSet::new();
        for n in 1..=max_level {
            let pe = l * (n - 1) + 1;
            let qe = l * (n + 1);
            assert!(qe <= den);
            let step = 1i128 << (den - pe);
            let gap = 1i128 << (den - qe);
            let mut m = (lo - gap) / (2 * step) - 2;
            loop {
                let p = (2 * m + 1) * step;
                if p > hi {
                    break;
                }
                for x in [p, p + gap] {
                    if x >= lo && x <= hi {
                        pts.insert(x);
                    }
                }
                m += 1;
            }
        }
        pts
    }

    #[test]
    fn level_one_in_unit_interval() {
        let cfg = cfg2();
        let got = shortcuts_in_interval(&cfg, &Dyadic::zero(), &Dyadic::one(), 1);
        assert_eq!(got.len(), 1);
        assert_eq!((got[0].p.clone(), got[0].q.clone()), (d("1/2"), d("9/16")));
    }

    #[test]
    fn level_two_in_unit_interval() {
        let cfg = cfg2();
        let got = shortcuts_in_interval(&cfg, &Dyadic::zero(), &Dyadic::one(), 2);
        let lefts: Vec<_> = got.iter().filter(|s| s.level == 2).map(|s| s.p.clone()).collect();
        assert_eq!(lefts, vec![d("1/8"), d("3/8"), d("5/8"), d("7/8")]);
        for sc in got.iter().filter(|s| s.level == 2) {
            assert_eq!(&sc.q - &sc.p, d("1/64"));
        }
    }

    #[test]
    fn nothing_near_zero_at_level_one() {
        let cfg = cfg2();
        assert!(shortcuts_in_interval(&cfg, &Dyadic::zero(), &d("1/8"), 1).is_empty());
    }

    #[test]
    fn straddling_shortcuts_are_included() {
        let cfg = cfg2();
        // only q = 9/16 lies in [17/32, 19/32]
        let got = shortcuts_in_interval(&cfg, &d("17/32"), &d("19/32"), 1);
        assert_eq!(got.len(), 1);
        // a window strictly between p and q sees nothing
        let got = shortcuts_in_interval(&cfg, &d("33/64"), &d("35/64"), 1);
        assert!(got.is_empty());
        assert_eq!(count_shortcuts_in_interval(&cfg, &Dyadic::zero(), &Dyadic::one(), 3), 21);
    }

    #[test]
    fn endpoints_match_brute_force() {
        for l in [2u32, 3] {
            let cfg = SnowflakeConfig::line(0.5, l, 8.0).unwrap();
            let max_level = 3;
            let den = l * (max_level + 1);
            let lo = -(1i128 << den) / 3;
            let hi = (5i128 << den) / 3;
            let expect = brute_endpoints(l, max_level, lo, hi, den);
            let a = Dyadic::new(lo as i64, den);
            let b = Dyadic::new(hi as i64, den);
            let mut got = BTreeSet::new();
            for sc in shortcuts_in_interval(&cfg, &a, &b, max_level) {
                for x in [sc.p, sc.q] {
                    if x >= a && x <= b {
                        got.insert(x);
                    }
                }
            }
            let expect: BTreeSet<_> = expect.into_iter().map(|x| Dyadic::new(x as i64, den)).collect();
            assert_eq!(got, expect, "l = {l}");
        }
    }

    #[test]
    fn left_endpoint_classification() {
        let cfg = cfg2();
        assert_eq!(shortcut_level_of_left_endpoint(&cfg, &d("1/2")), Some(1));
        assert_eq!(shortcut_level_of_left_endpoint(&cfg, &d("3/8")), Some(2));
        assert_eq!(shortcut_level_of_left_endpoint(&cfg, &d("1/4")), None);
        assert_eq!(shortcut_level_of_left_endpoint(&cfg, &d("9/16")), None);
    }

    #[test]
    fn shortcut_at_recovers_pairs() {
        let cfg = cfg2();
        for sc in shortcuts_in_interval(&cfg, &d("-1"), &d("2"), 4) {
            assert_eq!(shortcut_at(&cfg, &sc.p), Some((sc.clone(), Side::Left)));
            assert_eq!(shortcut_at(&cfg, &sc.q), Some((sc.clone(), Side::Right)));
            assert!(related(&cfg, &sc.p, &sc.q) && related(&cfg, &sc.q, &sc.p));
        }
        assert!(!related(&cfg, &d("1/2"), &d("5/8")));
        assert!(related(&cfg, &d("3/16"), &d("3/16")));
    }

    #[test]
    fn clean_interval_examples() {
        let cfg = cfg2();
        assert!(is_interval_without_shortcut_at_ends(&cfg, &GridInterval::new(1, 0)));
        assert!(!is_interval_without_shortcut_at_ends(&cfg, &GridInterval::new(1, 2)));
        assert!(!is_interval_without_shortcut_at_ends(&cfg, &GridInterval::new(2, 9)));
        assert!(is_interval_without_shortcut_at_ends(&cfg, &GridInterval::new(1, 3)));
        assert!(is_interval_without_shortcut_at_ends(&cfg, &GridInterval::new(0, 5)));
    }

    #[test]
    fn clean_predicate_matches_exhaustive_scan() {
        for l in [2u32, 3] {
            let cfg = SnowflakeConfig::line(0.5, l, 8.0).unwrap();
            for n in 0..=3u32 {
                // endpoints at exponent <= l n can only belong to levels <= n + 1
                let max_level = n + 1;
                let den = l * (max_level + 1);
                let per = 1i64 << (l * n);
                let all = brute_endpoints(l, max_level, -(1i128 << den), 2i128 << den, den);
                for m in -1..=(2 * per) {
                    let iv = GridInterval::new(n, m);
                    let a = (m as i128) << (den - l * n);
                    let b = ((m + 1) as i128) << (den - l * n);
                    let expect = !all.contains(&a) && !all.contains(&b);
                    assert_eq!(is_clean(&cfg, &iv), expect, "l={l} {iv:?}");
                }
            }
        }
    }

    #[test]
    fn ball_interval_example() {
        let cfg = cfg2();
        let iv = find_clean_interval_in_ball(&cfg, 0.3, cfg.mu()).unwrap();
        assert_eq!(iv.level, 2);
        // the enumeration oracle: scan the level-2 cells inside (0.05, 0.55)
        let mut expect = None;
        for m in 0..16i64 {
            let (a, b) = (m as f64 / 16.0, (m + 1) as f64 / 16.0);
            if a > 0.05 && b < 0.55 && is_clean(&cfg, &GridInterval::new(2, m)) {
                expect = Some(m);
                break;
            }
        }
        assert_eq!(Some(iv.index), expect);
        assert_eq!(iv.index, 3);
    }

    #[test]
    fn ball_interval_large_radius() {
        let cfg = cfg2();
        let iv = find_clean_interval_in_ball(&cfg, 0.7, 1.0).unwrap();
        assert_eq!(iv.level, 1);
        assert_eq!(iv.width(&cfg), d("1/4"));
        assert!(find_clean_interval_in_ball(&cfg, 0.7, 0.0).is_err());
    }

    #[test]
    fn ball_interval_avoids_shortcut_point() {
        let cfg = cfg2();
        for r in [0.3, 0.1, 0.05, 0.02] {
            let iv = find_clean_interval_in_ball(&cfg, 0.5, r).unwrap();
            assert!(iv.left(&cfg) != d("1/2") && iv.right(&cfg) != d("1/2"));
            let reach = r.powf(2.0);
            assert!(iv.left(&cfg).to_f64().unwrap() > 0.5 - reach);
            assert!(iv.right(&cfg).to_f64().unwrap() < 0.5 + reach);
        }
    }

    #[test]
    fn adjacent_examples() {
        let cfg = cfg2();
        let left_pref = adjacent_clean_interval(&cfg, &GridInterval::new(1, 0)).unwrap();
        // [-1/4, 0] is clean, so the left neighbour wins
        assert_eq!(left_pref, GridInterval::new(1, -1));
        assert!(adjacent_clean_interval(&cfg, &GridInterval::new(1, 1)).is_err());
        let right_only = adjacent_clean_interval(&cfg, &GridInterval::new(2, 3)).unwrap();
        assert!(is_clean(&cfg, &right_only));
    }

    #[test]
    fn grid_interval_helpers() {
        let cfg = cfg2();
        let iv = GridInterval::from_endpoints(&cfg, &d("1/2"), &d("3/4")).unwrap();
        assert_eq!(iv, GridInterval::new(1, 2));
        assert!(GridInterval::from_endpoints(&cfg, &d("1/2"), &d("5/8")).is_none());
        assert!(GridInterval::from_endpoints(&cfg, &d("1/8"), &d("3/8")).is_none());
        assert_eq!(GridInterval::new(2, 7).parent(&cfg), Some(GridInterval::new(1, 1)));
        assert_eq!(GridInterval::new(2, -1).parent(&cfg), Some(GridInterval::new(1, -1)));
    }

    #[test]
    fn degenerate_config_has_no_shortcuts() {
        let cfg = SnowflakeConfig::line(1.0, 2, 8.0).unwrap();
        assert!(shortcuts_in_interval(&cfg, &Dyadic::zero(), &Dyadic::one(), 5).is_empty());
        assert!(is_clean(&cfg, &GridInterval::new(1, 2)));
    }
}
