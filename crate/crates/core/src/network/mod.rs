//! Latent-variable network models: the random dot product graph (spectral
//! embedding) and the sparse latent space model (projected gradient MLE).

pub mod lsm;
pub mod rdpg;
pub mod select;
pub mod usvt;

pub use lsm::{bernoulli_loglik, lsm_fit, lsm_simulate, EdgeCovariates, LsmFit, LsmOptions, LsmParams};
pub use rdpg::{rdpg_simulate, spectral_embed, spectral_embed_matrix, RdpgDraw, RdpgFit};
pub use select::{select_dimension, DimensionSelection};
pub use usvt::{usvt_init, UsvtInit, UsvtOptions};
