//! Simulation, training, and matching core for MR-fingerprinting
//! reconstruction with a compact fully-connected network.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function
//! of its inputs: file formats, timing, threading, and the command line live
//! in the `drone` companion crate.
//!
//! Pipeline overview:
//!
//! 1. [`schedule::Schedule`] describes the acquisition (flip angles, TRs,
//!    inversion preparation, echo time).
//! 2. [`epg::simulate`] produces one [`epg::Fingerprint`] per tissue with the
//!    Extended Phase Graph formalism.
//! 3. [`dictionary::build`] tabulates fingerprints over a (T1, T2) grid.
//! 4. [`train::train`] fits an [`net::Mlp`] mapping fingerprints to (T1, T2)
//!    with ADAM and per-epoch noise augmentation.
//! 5. [`matcher`] is the conventional normalized inner-product baseline.
//! 6. [`phantom`], [`metrics`] and [`study`] drive the evaluation experiments.

#![no_std]

extern crate alloc;

pub mod adam;
pub mod dictionary;
pub mod epg;
pub mod error;
pub mod image;
mod linalg;
pub mod matcher;
pub mod metrics;
pub mod net;
pub mod noise;
pub mod phantom;
pub mod schedule;
pub mod study;
pub mod train;

pub use dictionary::{Dictionary, Exclusion, GridAxis, GridSpec};
pub use epg::{EpgState, Fingerprint, TissueParams};
pub use error::{Error, Result};
pub use image::{ImageStack, Mask, ParamMap};
pub use metrics::Metrics;
pub use net::{Activation, InputNormalization, Layer, Mlp, OutputScaler};
pub use noise::{NoiseModel, NoiseScale};
pub use schedule::{Frame, Schedule};
pub use train::{TrainConfig, TrainTrace};
