//! Design-space model for LLM prefill and decode on a grid of weight-stationary
//! systolic arrays with a two-level SRAM hierarchy.
//!
//! Everything here is pure arithmetic over plain data and builds without `std`.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod dataflow;
pub mod energy;
mod error;
pub mod eval;
pub mod memory;
pub mod workload;

pub use error::Error;

pub const KIB: u64 = 1024;
pub const MIB: u64 = 1024 * 1024;

pub(crate) fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}
