//! Two-stage toric-code decoding: a local neural classifier removes
//! short-range errors around defects, and a union-find decoder resolves
//! whatever syndrome remains.

pub mod bits;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod neural;
pub mod noise;
pub mod oracle;
pub mod pipeline;
pub mod uf;

pub use bits::BitPlane;
pub use error::{Error, Result};
pub use lattice::{
    compute_syndrome, decode_succeeded, logical_class, LogicalClass, Orientation, Pauli, PauliFrame, Plane,
    Syndrome, ToricLattice,
};
pub use neural::{load_model, save_model, MlpConfig, MlpModel};
pub use noise::{instance_noise, sample_depolarizing, NoiseSpec};
pub use pipeline::{decode_two_stage, measure_effective_rate, ml_preprocess, Decoder, DecoderKind, QubitClassifier};
pub use uf::{uf_decode, uf_decode_plane, UnionFindDecoder};
