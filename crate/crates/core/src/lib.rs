//! Sparse planted-partition models and the tools to study them.
//!
//! * [`graph`], [`sample`]: labeled sparse graphs, the planted bisection
//!   sampler and its Erdős–Rényi null, neighborhood balls.
//! * [`cycles`]: exact and non-backtracking short-cycle census, Poisson laws.
//! * [`estimation`]: cycle-based estimators of `(a, b)` and the two-model test.
//! * [`broadcast`]: the two-type broadcast process on Galton–Watson trees and
//!   exact root reconstruction.
//! * [`coupling`]: measurements of how closely graph balls follow that process.
//! * [`moments`]: exact small-n checks of the likelihood-ratio moment identities.

// Parameter checks are written as `!(x > y)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod broadcast;
pub mod coupling;
pub mod cycles;
pub mod error;
pub mod estimation;
pub mod graph;
pub mod moments;
pub mod rng;
pub mod sample;
pub mod stats;

pub use cycles::{count_cycles_exact, count_cycles_nb, CycleCensus, Model, PoissonPrediction};
pub use error::{Error, Result};
pub use graph::{ball, Ball, Graph, Label, LabeledGraph, ModelParams};
pub use rng::RngStream;
pub use sample::{sample_er, sample_sbm};
pub use broadcast::{
    root_posterior, sample_broadcast, BroadcastTree, Observation, ReconstructionCurve, ThresholdQuery,
};
pub use coupling::{tree_likeness, CouplingReport};
pub use estimation::{distinguish, estimate_params, Decision, DistinguishResult, Estimate};
pub use moments::{exact_y, EdgeWeightSpec, MomentReport};
