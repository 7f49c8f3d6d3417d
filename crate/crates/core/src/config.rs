//! Snowflake configuration `(s_1..s_N, l, c)` and its admissibility report.

use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};

/// Parameters of the snowflaked product and of the shortcut construction.
///
/// Construction only checks the domain of the parameters. Whether the
/// shortcut inequalities hold is reported by [`validate_config`], since
/// small illustrative configurations (such as `l = 2`) are useful even
/// though they are not admissible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct SnowflakeConfig {
    exponents: Vec<f64>,
    l: u32,
    c: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawConfig {
    s: Vec<f64>,
    l: u32,
    c: f64,
}

impl TryFrom<RawConfig> for SnowflakeConfig {
    type Error = Error;
    fn try_from(raw: RawConfig) -> Result<Self> {
        Self::new(raw.s, raw.l, raw.c)
    }
}

impl From<SnowflakeConfig> for RawConfig {
    fn from(cfg: SnowflakeConfig) -> Self {
        RawConfig { s: cfg.exponents, l: cfg.l, c: cfg.c }
    }
}

impl SnowflakeConfig {
    pub fn new(exponents: Vec<f64>, l: u32, c: f64) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidConfig("at least one exponent is required".into()));
        }
        if let Some(bad) = exponents.iter().find(|s| !(**s > 0.0 && **s <= 1.0)) {
            return Err(Error::InvalidConfig(format!("exponent {bad} is outside (0, 1]")));
        }
        if l < 1 {
            return Err(Error::InvalidConfig("l must be at least 1".into()));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidConfig(format!("c = {c} must be a positive real")));
        }
        Ok(Self { exponents, l, c })
    }

    /// One-dimensional configuration `(s, l, c)`.
    pub fn line(s: f64, l: u32, c: f64) -> Result<Self> {
        Self::new(vec![s], l, c)
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `h = 2^-l`.
    pub fn h(&self) -> Dyadic {
        Dyadic::pow2_neg(self.l)
    }

    pub fn h_f64(&self) -> f64 {
        (-(self.l as f64)).exp2()
    }

    /// `h^n` as an exact dyadic.
    pub fn h_pow(&self, n: u32) -> Dyadic {
        Dyadic::pow2_neg(self.l * n)
    }

    /// Smallest snowflake exponent.
    pub fn s(&self) -> f64 {
        self.exponents.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Coordinates carrying the smallest exponent.
    pub fn layer(&self) -> Vec<usize> {
        let s = self.s();
        (0..self.dim()).filter(|&k| self.exponents[k] == s).collect()
    }

    pub fn in_layer(&self, k: usize) -> bool {
        self.exponents.get(k).is_some_and(|&sk| sk == self.s())
    }

    /// `mu = h^s`.
    pub fn mu(&self) -> f64 {
        self.mu_pow(1)
    }

    /// `mu^n = 2^(-l s n)` for any integer `n`.
    pub fn mu_pow(&self, n: i64) -> f64 {
        (-(self.l as f64) * self.s() * n as f64).exp2()
    }

    /// The invisibility scale, fixed equal to `mu`.
    pub fn lambda(&self) -> f64 {
        self.mu()
    }

    /// Dimension of the product, the sum of `1/s_k`.
    pub fn alpha(&self) -> f64 {
        self.exponents.iter().map(|s| 1.0 / s).sum()
    }

    /// Dimension of one layer coordinate, `1/s`.
    pub fn alpha_layer(&self) -> f64 {
        1.0 / self.s()
    }

    /// All exponents equal 1: the euclidean product, where no shortcut is built.
    pub fn is_degenerate(&self) -> bool {
        self.s() >= 1.0
    }

    /// `|a - b|^s` for the layer exponent.
    pub fn snow(&self, a: f64, b: f64) -> f64 {
        (a - b).abs().powf(self.s())
    }
}

/// On-disk configuration: the snowflake parameters plus optional run defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfigFile {
    pub s: Vec<f64>,
    pub l: u32,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_level: Option<u32>,
}

impl ConfigFile {
    pub fn snowflake(&self) -> Result<SnowflakeConfig> {
        SnowflakeConfig::new(self.s.clone(), self.l, self.c)
    }
}

/// One inequality `lhs <= rhs` of the admissibility report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub family: &'static str,
    pub statement: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl InequalityCheck {
    fn new(family: &'static str, statement: &'static str, lhs: f64, rhs: f64) -> Self {
        Self { family, statement, lhs, rhs, slack: rhs - lhs, pass: lhs <= rhs }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub s: f64,
    pub l: u32,
    pub c: f64,
    pub mu: f64,
    pub lambda: f64,
    pub alpha: f64,
    /// Separation/net, heredity and invisibility families, in that order.
    pub checks: Vec<InequalityCheck>,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub combined_pass: bool,
    /// All exponents are 1: the euclidean-minimal case.
    pub degenerate: bool,
}

impl ValidationReport {
    pub fn admissible(&self) -> bool {
        self.combined_pass && !self.degenerate
    }
}

/// Evaluates the three inequality families with `lambda = mu`, and the
/// combined window `1/(2^s c) <= mu <= min{1/4, (1-s)^s, (2^(l-1)-1)^(s/2)/2}`.
pub fn validate_config(cfg: &SnowflakeConfig) -> ValidationReport {
    let s = cfg.s();
    let mu = cfg.mu();
    let lower = 1.0 / (s.exp2() * cfg.c());
    let heredity = 0.5 * ((cfg.l() as f64 - 1.0).exp2() - 1.0).powf(s / 2.0);
    let invisibility = (1.0 - s).powf(s);
    let checks = vec![
        InequalityCheck::new("separation-net", "4 lambda^n <= mu^(n-1), i.e. mu <= 1/4", mu, 0.25),
        InequalityCheck::new("separation-net", "mu^(n-1) <= 2^s c lambda^n, i.e. 1/(2^s c) <= mu", lower, mu),
        InequalityCheck::new(
            "heredity",
            "4 lambda^n <= mu^(n-2) (2^(l-1)-1)^s, i.e. mu <= (2^(l-1)-1)^(s/2)/2",
            mu,
            heredity,
        ),
        InequalityCheck::new("invisibility", "mu^(n+1) <= (1-s)^s lambda^n, i.e. mu <= (1-s)^s", mu, invisibility),
    ];
    let upper = 0.25f64.min(invisibility).min(heredity);
    ValidationReport {
        s,
        l: cfg.l(),
        c: cfg.c(),
        mu,
        lambda: cfg.lambda(),
        alpha: cfg.alpha(),
        combined_pass: lower <= mu && mu <= upper,
        checks,
        lower_bound: lower,
        upper_bound: upper,
        degenerate: cfg.is_degenerate(),
    }
}
