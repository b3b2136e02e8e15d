//! NB-IoT auto link-configuration workbench.
//!
//! Three stages share one crate:
//!
//! 1. [`mod@sim`] + [`mod@mab`]: an ε-greedy bandit selects
//!    MCS-repetition-PRB configurations against the present SINR inside a
//!    subframe-level scheduling loop, emitting a time-stamped training
//!    dataset.
//! 2. [`mod@gan`]: an adversarial temporal point process (generator and
//!    discriminator RNNs) is trained on those traces and samples future
//!    scheduling events by Ogata thinning.
//! 3. [`mod@sim`] again: the trained model drives the `smartcon` policy in
//!    the same closed loop against static, threshold and bandit baselines.
//!
//! The `smartcon` binary (see [`mod@cli`]) wires the stages to files:
//! `gen-dataset`, `train`, `eval`, `sweep` and `check-grads`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod gan;
pub mod link;
pub mod mab;
pub mod persist;
pub mod retrain;
pub mod rng;
pub mod sim;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::{load_config, parse_config, RunConfig};
pub use dataset::{read_dataset, write_dataset, DatasetRecord, DATASET_HEADER};
pub use error::{Error, Result};
pub use gan::{
    check_gradients, train, DiscriminatorParams, EventHistory, EventRecord, GanConfig,
    GeneratorParams, TrainOptions,
};
pub use link::{ChannelModelParams, Direction, LinkConfig, RepetitionSet};
pub use mab::{
    epsilon, reward, select_arm, ArmSpace, ArmUniverse, MabEngine, MabParams, StatTable,
};
pub use retrain::{pearson, should_retrain};
pub use sim::{
    generate_dataset, metrics_csv, run_policy, run_sim, run_sweep, run_sweep_serial, MetricsReport,
    PolicyKind, SimConfig,
};
