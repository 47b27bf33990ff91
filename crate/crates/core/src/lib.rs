//! Breathing-gesture recognition from thoracic bio-impedance.
//!
//! The crate covers the whole offline pipeline:
//!
//! * [`signal`] synthesizes labeled magnitude/phase series for regular
//!   breathing and four breath gestures, and implements the AFE ratio
//!   measurement.
//! * [`augment`] holds the shift / scale / Gaussian transforms used to
//!   expand training sets fivefold.
//! * [`dataset`] turns series into labeled 100-sample windows, computes class
//!   weights and builds leave-one-out splits.
//! * [`breathnet`] is the CNN → self-attention → LSTM classifier with a
//!   hand-written backward pass, weighted cross-entropy and Adam.
//! * [`postproc`] corrects time-step predictions (low-pass, front-follows-back
//!   and majority rule) and emits gesture events, in batch and streaming form.
//! * [`eval`] scores time-step and event predictions and runs LOPO / LOSO
//!   cross-validation.

pub mod augment;
pub mod breathnet;
pub mod dataset;
pub mod error;
pub mod eval;
mod format;
pub mod postproc;
pub mod seed;
pub mod signal;

pub use error::{Error, Result};
pub use signal::{GestureKind, LabeledSeries, Scenario};
