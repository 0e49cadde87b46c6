//! Asynchronous event-by-event blob tracking for event cameras.
//!
//! Each tracked blob is an extended Kalman filter over position,
//! velocity, orientation, angular rate and shape, updated once per
//! associated event. The [`synth`] module samples the same generative
//! model to produce event streams with ground truth.

pub mod analytics;
pub mod assoc;
pub mod bench;
pub mod config;
pub mod ekf;
pub mod error;
pub mod io;
pub mod model;
pub mod par;
pub mod pipeline;
pub mod pseudo_meas;
pub mod synth;

pub use error::{Error, Result};
