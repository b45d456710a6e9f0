//! Desk-scale digital twin of a town's residential energy system.
//!
//! The crate synthesizes a population with vehicles from building data,
//! converts individual trip diaries into vehicle tours, simulates each EV
//! as a finite-state machine to obtain hourly home-charging profiles, and
//! quantifies how rooftop PV and battery storage offset the grid impact
//! of home charging across six scenarios.
//!
//! All power/energy/distance math is generic over the [`Scalar`] type
//! (`f32` or `f64`); concrete aliases for the common instantiations live
//! at the crate root.

pub mod calendar;
pub mod der;
pub mod error;
pub mod ev;
pub mod mobility;
pub mod rng;
pub mod scalar;
pub mod scenario;
pub mod series;
pub mod synthesis;
pub mod town;

pub use error::{CoreError, Result};
pub use scalar::Scalar;

/// Hourly power series over `f32` samples.
pub type TimeSeries32 = series::TimeSeries<f32>;
/// Hourly power series over `f64` samples (the CLI default).
pub type TimeSeries64 = series::TimeSeries<f64>;

pub type Town32 = town::Town<f32>;
pub type Town64 = town::Town<f64>;

pub type EvParams64 = ev::EvParams<f64>;
pub type PvParams64 = der::PvParams<f64>;
pub type ModeChoiceTable64 = mobility::ModeChoiceTable<f64>;
pub type ScenarioReport64 = scenario::ScenarioReport<f64>;
