//! Agent-based simulation of the review marketplace and the experiment
//! drivers built on it.

pub mod agents;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod sim;

pub use agents::{ReviewerProfile, Strategy};
pub use config::SimConfig;
pub use error::SimError;
pub use sim::{run_simulation, run_simulation_logged, RoundRecord, Simulation, SimulationResult};
