//! Augmentation-free proxy-label semi-supervised learning.

pub mod classifier;
pub mod cli;
mod error;
pub mod dataset;
pub mod numerics;
pub mod protocol;
pub mod ssl;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/classifier.md")]
    mod classifier {}
    #[doc = include_str!("../../../book/src/self-training.md")]
    mod self_training {}
    #[doc = include_str!("../../../book/src/multi-model.md")]
    mod multi_model {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
