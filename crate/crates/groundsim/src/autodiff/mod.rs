//! Reverse-mode differentiation engine and optimizer.
//!
//! Ops sufficient for LSTM encoder-decoders with attention, in double
//! precision throughout. The tape is rebuilt per step (define-by-run).

mod check;
mod lstm;
mod optim;
mod tape;
mod tensor;

pub use check::{grad_check, GradCheckFailure, GradCheckReport};
pub use lstm::{lstm_cell, LstmVars};
pub use optim::{AdamHyper, Bindings, ParamStore};
pub use tape::{Tape, Var};
pub use tensor::Tensor;
