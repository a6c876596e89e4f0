//! Transmit-power scheduling for an energy-harvesting source on a block-fading
//! channel, minimizing the average outage probability over a finite horizon.
//!
//! The source harvests energy at a rate that is constant within each of `N`
//! harvesting periods and transmits at a fixed rate `R` over `M` channel
//! coherence blocks per period. The channel gain is unknown at the
//! transmitter (only its distribution is known), so each block is in outage
//! with probability `F(P)`, a strictly decreasing function of the block's
//! transmit power. For the fading families considered here `F` is
//! concave-then-convex, which makes the scheduling problem non-convex; the
//! solvers exploit two structural powers of the curve:
//!
//! * `P_b` — the inflection point separating the concave and convex regions,
//! * `P_a` — the power at which the chord from `(0, 1)` touches the curve
//!   from below.
//!
//! Modules:
//!
//! * [`curve`] — outage curves, the `P_a`/`P_b` thresholds, and curve
//!   classification.
//! * [`single`] — exact and on-off schedulers for a single harvesting period
//!   (an average-power constraint over `M` blocks).
//! * [`trace`] — harvesting traces, power profiles, and feasibility checks.
//! * [`offline`] — schedulers with the whole trace known ahead of time.
//! * [`online`] — causal schedulers: finite-horizon dynamic programming over
//!   a discretized battery, and look-ahead heuristics.
//! * [`oracle`] — brute-force minimizers used to certify the schedulers on
//!   small instances.
//! * [`sim`] — Monte Carlo channel simulation and policy evaluation.

pub mod curve;
pub mod offline;
pub mod online;
pub mod oracle;
pub mod sim;
pub mod single;
pub mod trace;

mod error;
mod search;

pub use curve::{classify, compute_pa, compute_pb, slope_min_pa, CurveClass, OutageCurve, Thresholds};
pub use error::{Error, Result};
pub use offline::{solve_p1_optimal, solve_p1_suboptimal};
pub use online::{build_value_table, lookahead_policy, mdp_policy_step, EhModel, MdpValueTable};
pub use single::{f_k_objective, solve_p3, suboptimal_onoff_n1, N1Solution};
pub use trace::{validate_profile, EhTrace, PowerProfile, ValidationReport};
