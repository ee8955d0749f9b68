//! Uplink/downlink TCP throughput ratio in an infrastructure WLAN as a
//! function of the access-point buffer size.
//!
//! * [`analytic`]: the closed-form queueing/TCP model and its three solvers.
//! * [`poly`]: closed-form real roots for degree <= 4 plus a bisection oracle.
//! * [`sim`]: a deterministic discrete-event simulator of the same cell.
//! * [`metrics`]: Jain fairness index and throughput ratio.
//! * [`harness`]: buffer sweeps, CSV and plot output, model-vs-simulation
//!   comparison.

pub mod analytic;
pub mod harness;
pub mod metrics;
pub mod poly;
pub mod sim;

pub use analytic::{solve_model, ModelSolution, ModelVariant, ScenarioParams};
pub use metrics::Ratio;
pub use poly::{RealPolynomial, RootSet};
pub use sim::{run_simulation, SimConfig, SimResult};
