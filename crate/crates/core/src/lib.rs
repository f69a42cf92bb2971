#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Implicit action functions of contact Hamiltonian systems on flat tori.

pub mod action;
pub mod catalog;
pub mod cli;
pub mod error;
pub mod flow;
pub mod harness;
pub mod modification;
pub mod par;
pub mod torus;

pub use error::{Error, Result};
