//! Dense kernels, reverse-mode differentiation, HGT and GraphSAGE networks
//! and the Adam optimizer.

mod adam;
mod array;
mod model;
mod params;
mod tape;

pub use adam::{AdamConfig, OptimState};
pub use array::DenseArray;
pub use model::{
    count_parameters, hgt_layer, sage_layer, update_running_stats, uses_null_embedding, Activation,
    Attention, Forward, Mode, Network, NetworkConfig,
};
pub use params::{Init, ParamBuilder, ParamStore};
pub use tape::{BatchStats, Tape, Var};
