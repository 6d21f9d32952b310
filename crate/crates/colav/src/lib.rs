//! Predefined-time waypoint guidance and provably-safe collision avoidance
//! for constant-speed surface vehicles.
//!
//! The crate simulates a ship with first-order heading dynamics steered by a
//! predefined-time line-of-sight controller, wrapped in a switching
//! supervisor that detours around static and moving obstacles through
//! virtual waypoints placed on the corners of conservatively inflated
//! "unsafe boxes".  A fuzzy collision-risk index or a plain distance
//! threshold arms the avoidance modes, and reachability guards decide when
//! the goal leg may be resumed.
//!
//! The crate also ships the 22-case Imazu encounter benchmark, a classical
//! velocity-obstacle baseline for comparison, trajectory metrics, and
//! deterministic trace/report writers.  All internal state is SI
//! (metres, seconds, radians); unit conversion happens only when scenario
//! files are loaded.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod guidance;
pub mod metrics;
pub mod risk;
pub mod scenario;
pub mod sim;
pub mod supervisor;
pub mod vo;

pub use error::{Error, Result};
