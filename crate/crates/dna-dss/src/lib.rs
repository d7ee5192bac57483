//! Erasure-coded DNA distributed storage containers: encode data across M
//! simulated containers with MDS scalar and array codes, simulate uniform
//! random strand sequencing to measure how long recovering a failed container
//! takes, and compare the measurements against closed-form expectations, upper
//! bounds, Gumbel limit laws, and exact small-instance oracles.
//!
//! The crate is organized along the pipeline:
//!
//! - [`field`]: exact GF(q) arithmetic and linear algebra;
//! - [`code`]: scalar and array-code encoders plus erasure decoding;
//! - [`analysis`]: bad-blocks configurations of a code with one failed
//!   container, and the classification bitset the simulator consumes;
//! - [`sim`]: deterministic parallel Monte Carlo of the recovery processes;
//! - [`exact`]: absorbing-chain and tail-sum oracles for tiny instances;
//! - [`predict`]: closed-form expectations, bounds, and Gumbel parameters.

pub mod analysis;
pub mod code;
pub mod exact;
pub mod field;
pub mod predict;
pub mod sim;

pub use analysis::{analyze, brute_force_analyze, is_recoverable, Analysis, BadBlockReport, Classification};
pub use code::{ArrayCodeSpec, CodeError, CodeSpecFile, DecodeOutcome, EncodedState, Observation};
pub use exact::{exact_ccp_l_mean, exact_ccp_mean, exact_max_ccp_mean, exact_process_mean, ExactResult, ProcessRule};
pub use field::{Fe, FieldMatrix, FieldSpec, FiniteField};
pub use predict::{gumbel_cdf, predict_ccp_max, predict_corollary, predict_regen_bound, predict_scalar, Prediction};
pub use sim::{ks_distance, sim_array, sim_ccp_max, sim_scalar_mds, sim_scalar_mds_naive, SimAggregate, SimConfig};
