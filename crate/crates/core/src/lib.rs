//! Resistive-force-theory dynamics, controllability analysis and trajectory
//! planning for fully three-dimensional N-link microswimmers.
//!
//! Modules:
//! - [`lie`]: SE(3)/se(3) toolbox (hat/vee, exponential, commutator).
//! - [`swimmer`]: grand resistance matrix, shape wrench and control fields.
//! - [`controllability`]: Lie brackets, rank tests, the controllability determinant.
//! - [`simulator`]: geometric RK4 integration and physical diagnostics.
//! - [`planner`]: minimal-time and minimal-power maneuver search.
//! - [`optimize`]: Nelder–Mead and Levenberg–Marquardt used by the planner.

pub mod controllability;
pub mod error;
pub mod io;
pub mod jet;
pub mod lie;
pub mod optimize;
pub mod planner;
pub mod simulator;
pub mod swimmer;

pub use error::{Result, SwimError};
pub use lie::{BodyTwist, Pose, RotationMatrix};
pub use swimmer::{
    ConfigField, DragCoefficients, GrandResistance, LinkAngles, LinkChain, ShapeState, ShapeWrench,
    Swimmer,
};
