//! Practical global linearization of asymptotically stable semiflows.
//!
//! The crate simulates semiflows of possibly discontinuous vector fields,
//! builds the linearizing homeomorphism `h_r` from a Lyapunov function and
//! checks the resulting conjugacy with `y' = -y` against closed forms.

pub mod conjugacy;
pub mod error;
pub mod flow;
mod integrator;
pub mod levelset;
pub mod roots;
pub mod sampling;
pub mod systems;
pub mod verify;

pub use conjugacy::{ConjugacyMap, OffsetReading};
pub use error::{Error, Result};
pub use flow::{closed_form_flow, flow, trajectory, FlowResult, FlowStatus, IntegratorConfig};
pub use levelset::{CrossingResult, LevelContext, LevelFrame};
pub use sampling::SamplerConfig;
pub use systems::{make_builtin, validate, Builtin, Domain, Params, State, SystemSpec};
pub use verify::{figdata, run_suite, FigureTable, ResidualReport, Suite, SuiteOptions};
