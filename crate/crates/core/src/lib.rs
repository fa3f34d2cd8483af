//! Control-energy centralities for weighted directed networks.
//!
//! A network with adjacency matrix `A` is read as the discrete-time linear
//! system `x(t+1) = A x(t) + B u(t)`, where `A[(j, i)]` is the weight of the
//! edge from node `i` to node `j` and the columns of `B` select the driver
//! nodes. From the controllability and observability Gramians of that system
//! the crate derives per-node energy centralities (`p`, `q`, `q_tilde`), the
//! driver rankings `r_diff = p - q` and `r_quot = p / q`, minimum-energy
//! control inputs and the random-network experiment harness.
//!
//! Node indices are zero-based throughout the library. The CLI and the CSV
//! exports use one-based node ids.

pub mod centrality;
pub mod control;
pub mod error;
pub mod expharness;
pub mod gramian;
pub mod io;
pub mod netgraph;
pub mod rng;

pub use centrality::{CentralityTable, DriverSet, RankCriterion, Strategy};
pub use control::{ControlPlan, CtrlMetrics};
pub use error::{Error, Result};
pub use expharness::{ExperimentConfig, ExperimentResult};
pub use gramian::{Gramian, GramianEngine, GramianKind, GramianSpec, Horizon};
pub use netgraph::{GeneratorKind, GeneratorParams, Network};

/// Version string echoed into experiment outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
