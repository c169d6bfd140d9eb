//! Incremental auto-encoders: denoising auto-encoders whose hidden
//! features are refined by reverse diffusion over an adaptive
//! neighborhood graph.

pub mod dataset;
pub mod diffusion;
pub mod error;
pub mod graph;
pub mod idx;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod trainer;

pub use dataset::{corrupt, gen_two_moons, CorruptionKind, CorruptionSpec, Dataset, MinMaxScaler};
pub use diffusion::{phi, verify_equivalence, DiffusionState};
pub use error::{InaeError, Result};
pub use graph::{build_graph, expand_to_copies, Expansion, GraphConfig, Kernel, NeighborGraph, Strategy};
pub use metrics::{c_ratio, fisher_eig, linear_svm, n_ratio, MetricsReport};
pub use model::{decode, encode, LossKind, ModelParams};
pub use trainer::{stack, stack_with_traces, train, train_ae, train_dae, train_inae, Method, TrainConfig, TrainTrace};
