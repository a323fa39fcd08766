//! Conceptual catchment simulator (degree-day snow, soil store, fast and
//! slow linear reservoirs) and synthetic basin fleets.

mod fleet;
mod simulate;
mod weather;

pub use fleet::{make_fleet, perturb_params, Fleet, FleetBasin, FleetConfig, Regime};
pub use simulate::{simulate, CatchmentParams, SimOutput, Stores};
pub use weather::{generate_weather, WeatherConfig};
