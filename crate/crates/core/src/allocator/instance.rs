use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::{RelayInput, SlotParams, SlotProblem};
use crate::error::Result;
use crate::fading::{sample_gain_table, unit_uniform};
use crate::queues::{Battery, DataBuffer, RelayState};

/// Random single-slot instance: gains from slot 0 of
/// `sample_gain_table(seed, 1, relays)`, buffer and battery levels uniform on
/// `[0, B_max]` and `[0, E_max]` drawn from ChaCha8 stream `u64::MAX - 1`
/// (order per relay: `Q_a`, `Q_b`, `E`).
pub fn random_problem(
    seed: u64,
    relays: usize,
    params: SlotParams,
    buffer_capacity: f64,
    battery_capacity: f64,
) -> Result<SlotProblem> {
    let table = sample_gain_table(seed, 1, relays)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX - 1);
    let inputs = (0..relays)
        .map(|k| {
            let qa = buffer_capacity * unit_uniform(rng.next_u64());
            let qb = buffer_capacity * unit_uniform(rng.next_u64());
            let e = battery_capacity * unit_uniform(rng.next_u64());
            Ok(RelayInput {
                gains: table.gain(0, k),
                state: RelayState {
                    buf_a: DataBuffer::with_level(qa, buffer_capacity)?,
                    buf_b: DataBuffer::with_level(qb, buffer_capacity)?,
                    battery: Battery::with_level(e, battery_capacity)?,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SlotProblem::new(inputs, params)
}
