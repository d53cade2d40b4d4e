//! Driver decomposition of residential building carbon intensity.
//!
//! The crate models operational carbon intensity (kgCO2 per household) as a
//! product of socioeconomic and end-use factors, and attributes its change
//! over time to those drivers two independent ways:
//!
//! - [`dsd`], the path-integral engine: a linear response system solved per
//!   Euler segment, which can split both emission-factor and structural
//!   effects down to individual end uses;
//! - [`lmdi`], a residual-free log-mean decomposition used as an oracle,
//!   with an OLS comparison between the two methods.
//!
//! On top of the attribution sit [`decarb`] (decarbonization at six scales)
//! and [`scenario`] (avoided emissions from electrification improvements).
//! [`ingest`] handles data files and synthetic fixtures.

pub mod decarb;
pub mod dsd;
pub mod error;
pub mod ingest;
pub mod linalg;
pub mod lmdi;
pub mod model;
pub mod scenario;

pub use error::{Error, Result};
pub use model::{
    canonical_end_uses, derive_factors, intensity_series, AnnualObservation, CountrySeries,
    EndUse, FactorSeries, FactorState,
};
