//! A small CPU engine for convolutional classifiers.
//!
//! Layers implement an explicit forward/backward pair over NCHW `f32`
//! activations. A [`Network`] is a chain of named blocks; blocks are the
//! unit of freezing, activation capture and state-dict naming, which keeps
//! parameter names compatible with the usual `layer4.2.conv1.weight` style.

pub mod activation;
pub mod container;
pub mod conv;
pub mod error;
pub mod init;
pub mod io;
pub mod layer;
pub mod linear;
pub mod network;
pub mod norm;
pub mod optim;
pub mod param;
pub mod pool;

#[cfg(test)]
mod testutil;

pub use activation::{Dropout, Relu};
pub use container::{Concat, Residual, Sequential};
pub use conv::{Conv2d, Conv2dConfig};
pub use error::{NnError, Result};
pub use layer::{BackwardCtx, ForwardCtx, Layer};
pub use linear::{Flatten, Linear};
pub use network::{Block, ForwardOut, Network, Pass};
pub use norm::BatchNorm2d;
pub use optim::{Adam, AdamConfig};
pub use param::{Param, Slot, SlotMut};
pub use pool::{AdaptiveAvgPool2d, AvgPool2d, MaxPool2d};
