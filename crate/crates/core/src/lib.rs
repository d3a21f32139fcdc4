//! Gateway placement for UAV flying networks.
//!
//! A flying gateway (FGW) relays the traffic of several flying access points
//! (FAPs). Given where the FAPs hover and the SNR each backhaul link needs,
//! the task is to place the gateway so that every link closes at the lowest
//! possible transmission power.
//!
//! - [`radio`]: free-space link budget and the MCS table.
//! - [`scenario`]: reproducible random networks and their file format.
//! - [`problem`]: the placement instance, feasibility and the
//!   ball-intersection test shared by the solvers.
//! - [`gwp`]: the baseline 1 dB power sweep.
//! - [`fgwp`]: the joint position and power minimisation.
//! - [`oracle`]: a brute-force grid reference.
//! - [`eval`]: analytic throughput and delay of a placement.
//! - [`bench`]: timing and memory harness.
//!
//! ```
//! use gwplace::{generate, solve_fgwp, solve_gwp, PlacementProblem, RadioConfig, Venue};
//!
//! let scenario = generate(6, 42, Venue::default(), RadioConfig::default()).unwrap();
//! let problem = PlacementProblem::from_scenario(&scenario);
//! let fast = solve_fgwp(&problem);
//! let sweep = solve_gwp(&problem);
//! assert!(fast.p_t_dbm <= sweep.p_t_dbm);
//! ```

pub mod bench;
pub mod convex;
pub mod error;
pub mod eval;
pub mod fgwp;
pub mod format;
pub mod geometry;
pub mod gwp;
mod linalg;
pub mod oracle;
pub mod problem;
pub mod radio;
pub mod scenario;

pub use error::{EvalError, OracleError, ParseError, RadioError, ScenarioError};
pub use eval::{evaluate, evaluate_placement, evaluate_with_load, EvaluationReport, FlowStats};
pub use fgwp::{solve_fgwp, solve_fgwp_with, FgwpOptions};
pub use geometry::{BoundingBox, Point3};
pub use gwp::solve_gwp;
pub use oracle::{oracle_solve, OracleConfig};
pub use problem::{
    ball_intersection_point, feasible_at, required_power_at, FeasibilityReport, PlacementProblem, PlacementSolution,
    SolverStatus,
};
pub use radio::{McsEntry, RadioConfig};
pub use scenario::{generate, validate, Fap, Scenario, Venue};

// Runs the guide's code listings as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/radio.md")]
    mod radio {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/placement.md")]
    mod placement {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/benchmarking.md")]
    mod benchmarking {}
}
