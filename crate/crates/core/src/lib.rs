//! Exact shortcut combinatorics and shortest-itinerary distances on
//! snowflaked lines, with measure estimators and rigidity probes built on top.

pub mod compacta;
pub mod config;
pub mod dyadic;
pub mod error;
pub mod measure;
pub mod product;
pub mod quotient;
pub mod rigidity;
pub mod shortcuts;

pub use config::{validate_config, ConfigFile, SnowflakeConfig, ValidationReport};
pub use dyadic::Dyadic;
pub use error::{Error, Result};
pub use shortcuts::{GridInterval, Shortcut};
