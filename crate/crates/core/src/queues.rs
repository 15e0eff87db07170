//! Finite data buffers and batteries.
//!
//! Fluid model: buffer levels are in bits per channel use, battery levels in
//! joules (unit slot duration, so one watt for one slot is one joule).
//! Operations take `self` by value and return the next state together with
//! what actually moved, so callers can keep exact ledgers.
//!
//! Arrivals above the free room are dropped, harvested energy above the free
//! capacity is spilled, and departures never exceed the current level.

use crate::error::{non_negative, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataBuffer {
    level: f64,
    capacity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enqueued {
    pub buffer: DataBuffer,
    pub admitted: f64,
    pub dropped: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dequeued {
    pub buffer: DataBuffer,
    pub departed: f64,
}

impl DataBuffer {
    pub fn new(capacity: f64) -> Result<Self> {
        Self::with_level(0.0, capacity)
    }

    pub fn with_level(level: f64, capacity: f64) -> Result<Self> {
        if !(capacity > 0.0 && capacity.is_finite()) {
            return Err(Error::Domain { what: "buffer capacity", value: capacity });
        }
        if !(0.0..=capacity).contains(&level) {
            return Err(Error::Domain { what: "buffer level", value: level });
        }
        Ok(Self { level, capacity })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn room(&self) -> f64 {
        self.capacity - self.level
    }

    /// `Q(n) = Q(n-1) + admitted`, `admitted = min(arrival, B_max - Q(n-1))`.
    pub fn enqueue(self, arrival: f64) -> Result<Enqueued> {
        non_negative("arrival", arrival)?;
        let room = self.room();
        let (level, admitted) = if arrival >= room {
            (self.capacity, room)
        } else {
            ((self.level + arrival).min(self.capacity), arrival)
        };
        Ok(Enqueued {
            buffer: Self { level, ..self },
            admitted,
            dropped: arrival - admitted,
        })
    }

    /// Serves `min(rate, Q)` and removes it from the buffer.
    pub fn dequeue(self, rate: f64) -> Result<Dequeued> {
        non_negative("service rate", rate)?;
        let departed = rate.min(self.level);
        Ok(Dequeued { buffer: Self { level: self.level - departed, ..self }, departed })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Battery {
    level: f64,
    capacity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Charged {
    pub battery: Battery,
    pub stored: f64,
    pub spilled: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discharged {
    pub battery: Battery,
    pub drawn: f64,
}

impl Battery {
    pub fn new(capacity: f64) -> Result<Self> {
        Self::with_level(0.0, capacity)
    }

    pub fn with_level(level: f64, capacity: f64) -> Result<Self> {
        if !(capacity > 0.0 && capacity.is_finite()) {
            return Err(Error::Domain { what: "battery capacity", value: capacity });
        }
        if !(0.0..=capacity).contains(&level) {
            return Err(Error::Domain { what: "battery level", value: level });
        }
        Ok(Self { level, capacity })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn charge(self, harvested: f64) -> Result<Charged> {
        non_negative("harvested energy", harvested)?;
        let room = self.capacity - self.level;
        let (level, stored) = if harvested >= room {
            (self.capacity, room)
        } else {
            ((self.level + harvested).min(self.capacity), harvested)
        };
        Ok(Charged { battery: Self { level, ..self }, stored, spilled: harvested - stored })
    }

    /// Draws `min(demand, E)`. A caller that needs the full demand must
    /// compare `drawn` against it.
    pub fn discharge(self, demand: f64) -> Result<Discharged> {
        non_negative("energy demand", demand)?;
        let drawn = demand.min(self.level);
        Ok(Discharged { battery: Self { level: self.level - drawn, ..self }, drawn })
    }
}

/// Two directional buffers and one battery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayState {
    /// S -> D traffic waiting at the relay.
    pub buf_a: DataBuffer,
    /// D -> S traffic waiting at the relay.
    pub buf_b: DataBuffer,
    pub battery: Battery,
}

impl RelayState {
    /// Empty buffers, battery at `battery_level`.
    pub fn new(buffer_capacity: f64, battery_capacity: f64, battery_level: f64) -> Result<Self> {
        Ok(Self {
            buf_a: DataBuffer::new(buffer_capacity)?,
            buf_b: DataBuffer::new(buffer_capacity)?,
            battery: Battery::with_level(battery_level, battery_capacity)?,
        })
    }
}
