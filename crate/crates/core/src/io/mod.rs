//! Dataset archives, checkpoints and run configuration files.

mod archive;
mod binary;
mod checkpoint;
mod config;

pub use archive::{decode_dataset, encode_dataset, load_dataset, save_dataset, DATASET_MAGIC, DATASET_VERSION};
pub use binary::{read_file, write_atomic, Reader, Writer};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, read_checkpoint, save_checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use config::{load_config, parse_config, DataConfig, ExperimentConfig, RunConfig};
