//! Shooting-method solver and classifier for the mixed convection
//! boundary-layer similarity equation
//!
//!   f''' + f f'' + beta f'(f' - 1) = 0,    beta > 0,
//!
//! with wall data f(0) = a >= 0, f'(0) = b >= 0 and the far-field condition
//! f'(t) -> 0 or 1 as t -> infinity.
//!
//! The boundary-value problems are solved by shooting on the initial
//! curvature c = f''(0):
//!
//! * [`ode::integrate`] runs the initial-value problem adaptively, with
//!   dense output, sign-change events for f', f' - 1, f'', blow-up
//!   detection, and dwell-confirmed limit detection;
//! * [`monitors`] evaluates the auxiliary functions H, L, K whose signed
//!   derivatives confine trajectories;
//! * [`classifier`] names the regime of each shot (concave, convex,
//!   concave-convex, convex-concave families) from its event log;
//! * [`shooting`] computes the critical constants c* (blow-up boundary,
//!   the unique limit-zero shot) and c** (concavity boundary) by bracketed
//!   bisection, and sweeps c-grids;
//! * [`crocco`] transforms strictly concave shots to the v(y) variables
//!   with y = f'^2 and checks the transformed equation;
//! * [`asymptotics`] fits the exponential and Gaussian tail laws of the
//!   critical shots.

pub mod asymptotics;
pub mod classifier;
pub mod crocco;
pub mod error;
pub mod monitors;
mod numeric;
pub mod ode;
pub mod problem;
pub mod shooting;

pub use error::{Error, Result};
pub use ode::{integrate, Event, EventKind, IntegratorControls, Termination, Trajectory};
pub use problem::{ProblemParams, ShootState, TargetLimit};
