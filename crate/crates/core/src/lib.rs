//! Decentralized multi-agent collision avoidance: a kinematic disk-agent simulator, an LSTM
//! actor-critic policy with hand-written backpropagation, supervised and asynchronous RL
//! training, and a benchmark evaluation harness.
//!
//! Modules, in pipeline order: [`sim`] and [`obs`] produce observations, [`net`] maps them to
//! action distributions, [`trainer`] fits the network, [`eval`] compares policies and [`cli`]
//! drives everything from the command line.

// `!(x > 0.0)` style checks are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod eval;
pub mod geom;
pub mod net;
pub mod obs;
pub mod sim;
pub mod trainer;
