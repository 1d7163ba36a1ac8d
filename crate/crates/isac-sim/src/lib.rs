//! Desk-scale simulator for a cell-free massive MIMO network that shares its
//! access points between downlink communication and single-target sensing.
//!
//! The library is organized around one random network drop:
//!
//! - [`topology`] places APs and users on a wrap-around square and produces the
//!   large-scale statistics (path loss, shadowing, channel-estimate quality).
//! - [`metrics`] evaluates the closed-form per-user SINR/SE and the
//!   mainlobe-to-average-sidelobe ratio (MASR) used as the sensing proxy.
//! - [`selection`] picks per-AP operation modes (communication vs. sensing),
//!   greedily or at random.
//! - [`power`] solves max-min spectral-efficiency power control under the MASR
//!   constraint: a bisection over convex feasibility programs for the
//!   communication powers, a line search for the sensing powers, and an
//!   alternating loop combining the two.
//! - [`channel`] and [`oracle`] provide a signal-level Monte Carlo path that
//!   independently validates every closed form used above.
//! - [`harness`] runs multi-drop experiments and writes CSV output.

pub mod channel;
pub mod config;
pub mod harness;
pub(crate) mod linalg;
pub mod metrics;
pub mod oracle;
pub mod power;
pub mod rng;
pub mod selection;
pub mod topology;

pub use config::SystemConfig;
pub use metrics::{MetricsReport, ModeAssignment, PowerAllocation};
pub use topology::NetworkRealization;
