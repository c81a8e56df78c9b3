//! Multi-zone transient building thermal and airflow simulation with a
//! passive-design study harness.
//!
//! The crate is organized around five pieces:
//!
//! - [`weather`]: hourly climate data, CSV ingestion, cold-sequence
//!   selection and a synthetic winter generator, with solar geometry and
//!   tilted-surface irradiance in [`solar`].
//! - [`building`]: the dwelling description (zones, layered constructions,
//!   glazing, crack openings), a stock six-zone house and the envelope
//!   transformations studied in design sweeps.
//! - [`solver`]: finite-volume wall conduction, zone heat balances, an
//!   orifice airflow network and the backward-Euler time stepper.
//! - [`comfort`]: resultant temperature, day/night averages and
//!   discomfort-hour accounting.
//! - [`study`]: the scenario matrix, a deterministic parallel runner and
//!   CSV/SVG report emission.
//!
//! The `mafana` binary wires these together behind `validate`, `simulate`,
//! `study` and `weather` subcommands.

pub mod building;
pub mod comfort;
pub mod solar;
pub mod solver;
pub mod study;
pub mod svg;
pub mod weather;

pub use building::{typical_house, BuildingModel};
pub use comfort::{ComfortSummary, ComfortThresholds};
pub use solver::{simulate, SimConfig};
pub use study::{builtin_scenarios, run_study, StudyReport};
pub use weather::{select_cold_sequence, synth_weather, SiteInfo, WeatherSeries};
