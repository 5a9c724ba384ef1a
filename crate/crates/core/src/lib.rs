//! Centre and chord representations of open quantum dynamics in one degree
//! of freedom.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod fock;
pub mod husimi;
pub mod io;
pub mod lwc;
pub mod phase_space;
pub mod states;

pub use error::{Checked, Error, Result, Warning};
