//! Nonlocal operators with variable jump kernels, Littlewood–Paley tools,
//! jump SDE simulation and density diagnostics on periodic grids.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod besov;
pub mod config;
pub mod density;
pub mod error;
pub mod fokker_planck;
pub mod grid;
pub mod io;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use grid::{GridFunction, TorusGrid};
pub mod jump;
pub mod kernels;
pub mod nonlocal;
pub mod quadrature;
pub mod resolvent;
pub mod runner;
