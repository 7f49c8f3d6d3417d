use serde::{Deserialize, Serialize};

use crate::config::SnowflakeConfig;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::shortcuts::related;

/// Walks `(x_k, y_k)` joined by teleports. With no walks the endpoints must be
/// related directly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Itinerary {
    pub pairs: Vec<(Dyadic, Dyadic)>,
    pub cost: f64,
}

impl Itinerary {
    pub fn empty() -> Self {
        Self { pairs: vec![], cost: 0.0 }
    }

    pub fn from_pairs(cfg: &SnowflakeConfig, pairs: Vec<(Dyadic, Dyadic)>) -> Result<Self> {
        let mut it = Self { pairs, cost: 0.0 };
        it.cost = it.recost(cfg)?;
        Ok(it)
    }

    /// Sum of `|x_k - y_k|^s`, evaluated from the exact pairs.
    pub fn recost(&self, cfg: &SnowflakeConfig) -> Result<f64> {
        let s = cfg.s();
        let mut total = 0.0;
        for (a, b) in &self.pairs {
            total += (a - b).abs().to_f64()?.powf(s);
        }
        Ok(total)
    }

    /// Checks the linkage `x R x_0`, `y_k R x_(k+1)`, `y_n R y`, and that the
    /// stored cost replays to within `1e-12`.
    pub fn validate(&self, cfg: &SnowflakeConfig, x: &Dyadic, y: &Dyadic) -> Result<()> {
        let mut at = x;
        for (k, (a, b)) in self.pairs.iter().enumerate() {
            if !related(cfg, at, a) {
                return Err(Error::Internal(format!("itinerary breaks before walk {k}: {at} is not related to {a}")));
            }
            at = b;
        }
        if !related(cfg, at, y) {
            return Err(Error::Internal(format!("itinerary ends at {at}, not related to {y}")));
        }
        let replay = self.recost(cfg)?;
        if (replay - self.cost).abs() > 1e-12 * self.cost.max(1.0) {
            return Err(Error::Internal(format!("itinerary cost {} replays as {replay}", self.cost)));
        }
        Ok(())
    }

    /// Image under `t -> scale * t + shift`, recosted.
    pub(crate) fn mapped(&self, cfg: &SnowflakeConfig, scale_pow2: i64, shift: &Dyadic) -> Result<Self> {
        let map = |t: &Dyadic| &t.mul_pow2(scale_pow2) + shift;
        Self::from_pairs(cfg, self.pairs.iter().map(|(a, b)| (map(a), map(b))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    #[test]
    fn linkage_through_a_shortcut() {
        let cfg = SnowflakeConfig::line(0.5, 2, 8.0).unwrap();
        let it = Itinerary::from_pairs(&cfg, vec![(d("0"), d("1/2")), (d("9/16"), d("1"))]).unwrap();
        assert!((it.cost - (0.5f64.sqrt() + (7.0f64 / 16.0).sqrt())).abs() < 1e-15);
        it.validate(&cfg, &d("0"), &d("1")).unwrap();
        assert!(it.validate(&cfg, &d("0"), &d("3/4")).is_err());
        let broken = Itinerary::from_pairs(&cfg, vec![(d("0"), d("1/2")), (d("5/8"), d("1"))]).unwrap();
        assert!(broken.validate(&cfg, &d("0"), &d("1")).is_err());
    }

    #[test]
    fn empty_itinerary_needs_related_ends() {
        let cfg = SnowflakeConfig::line(0.5, 2, 8.0).unwrap();
        Itinerary::empty().validate(&cfg, &d("1/2"), &d("9/16")).unwrap();
        Itinerary::empty().validate(&cfg, &d("3/8"), &d("3/8")).unwrap();
        Itinerary::empty().validate(&cfg, &d("1/4"), &d("3/4")).unwrap_err();
    }
}
