//! Buffer-aided two-way relaying with energy-harvesting decode-and-forward
//! relays.
//!
//! A source `S` and a destination `D` exchange data through one of `K`
//! half-duplex relays. Every unit slot is split into three subslots: the
//! selected relay first harvests RF energy radiated by both endpoints
//! (time switching, fraction `alpha`), then receives from both endpoints at
//! once (multiple access), then broadcasts one network-coded packet. Each
//! relay keeps two finite data buffers (one per direction) and one finite
//! battery.
//!
//! Modules:
//!
//! - [`fading`]: seeded Rayleigh block-fading gain tables and SNR arithmetic.
//! - [`queues`]: finite buffer and battery state machines.
//! - [`rates`]: link rates, one-way DF/AF capacities, the three-subslot
//!   two-way model and slot-structure baselines, harvested energy.
//! - [`allocator`]: per-slot joint relay selection, time switching and power
//!   allocation via binary relaxation + perspective decoupling + KKT, an
//!   exhaustive grid oracle, and a horizon-coupled variant.
//! - [`engine`]: episode simulation, baseline policies, parameter sweeps.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod allocator;
pub mod engine;
mod error;
pub mod fading;
pub(crate) mod math;
pub mod queues;
pub mod rates;

pub use error::{Error, Result};
