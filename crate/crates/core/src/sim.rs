//! Slot-level Monte-Carlo simulation of the status-update MAC protocols.
//!
//! Time is slotted; one packet transmission fills one slot and control frames
//! (polling, ACK/NACK) take no time. Each slot runs one Bernoulli decode trial
//! with the success probability of the hop in use. A packet is generated at
//! the start of its first-hop slot and delivered at the end of its last
//! second-hop slot, so a delivery leaves the destination with age `τ` equal to
//! the number of slots the delivered packet spent in flight.
//!
//! The average AoI is estimated by renewal reward: the area under the age
//! sawtooth between deliveries, summed over cycles, divided by elapsed time.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::LinkParams;
use crate::error::{Error, Result};
use crate::scheme::Scheme;

/// Generator behind every simulation, recorded in emitted artifacts.
pub const RNG_ID: &str = "ChaCha8Rng(rand_chacha 0.9, seed_from_u64)";

/// Cycles discarded after the structural first cycle before measuring.
pub const DEFAULT_WARMUP: usize = 100;

const MAX_BATCHES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scheme: Scheme,
    /// Single-hop schemes use `params.q()`.
    pub params: LinkParams,
    /// Slots to simulate.
    pub horizon: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(scheme: Scheme, params: LinkParams, horizon: u64, seed: u64) -> Result<Self> {
        let config = Self {
            scheme,
            params,
            horizon,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least one slot".into()));
        }
        Ok(())
    }
}

/// One interval between consecutive deliveries, closed by a delivery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenewalCycle {
    /// Slots since the previous delivery (or since time 0 for the first cycle).
    pub z: u64,
    /// Age of the destination right after this cycle's delivery.
    pub tau: u64,
    /// Slots spent on the first hop; all slots for single-hop schemes.
    pub first_hop_slots: u64,
    pub second_hop_slots: u64,
    /// Area under the age curve over the cycle, `τ_prev · z + z² / 2`, where
    /// `τ_prev` is the previous cycle's `tau` (0 before the first delivery).
    pub area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    /// Σ area / Σ z over the measured cycles, slots.
    pub average_aoi: f64,
    pub cycle_count: usize,
    pub emp_e_z: f64,
    pub emp_e_z2: f64,
    /// Sample mean of `τ_prev · z`.
    pub emp_e_tau_z: f64,
    /// Batch-means standard error of `average_aoi`; infinite with fewer than two batches.
    pub std_error: f64,
    pub batches: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Hop {
    First,
    Second,
}

#[derive(Debug, Clone, Copy)]
enum Stage {
    /// Waiting for the source to get a packet through (or, single-hop, to the destination).
    Source { generated_at: Option<u64> },
    /// The relay holds a packet generated at the given slot.
    Relay { generated_at: u64 },
}

#[derive(Debug, Clone, Copy)]
struct SlotOutcome {
    hop: Hop,
    /// Age left at the destination if this slot completed a delivery.
    delivered: Option<u64>,
}

/// Protocol state machine driven one slot at a time.
struct Link {
    scheme: Scheme,
    p1: f64,
    p2: f64,
    rng: ChaCha8Rng,
    slot: u64,
    stage: Stage,
}

impl Link {
    fn new(config: &SimConfig) -> Self {
        Self {
            scheme: config.scheme,
            p1: config.params.p1(),
            p2: config.params.p2(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            slot: 0,
            stage: Stage::Source { generated_at: None },
        }
    }

    /// Uniform on [0, 1) from the top 53 bits of one 64-bit draw.
    fn decoded(&mut self, p: f64) -> bool {
        let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        u < p
    }

    fn step(&mut self) -> SlotOutcome {
        let now = self.slot;
        let end = now + 1;
        self.slot = end;

        match self.stage {
            Stage::Source { generated_at } => {
                // Without ARQ at the source every attempt samples a fresh packet.
                let generated_at = match (self.scheme, generated_at) {
                    (Scheme::SingleArq, Some(g)) => g,
                    _ => now,
                };
                let ok = self.decoded(self.p1);
                let delivered = match (self.scheme.is_two_hop(), ok) {
                    (true, true) => {
                        self.stage = Stage::Relay { generated_at };
                        None
                    }
                    (true, false) | (false, true) => {
                        self.stage = Stage::Source { generated_at: None };
                        ok.then_some(end - generated_at)
                    }
                    (false, false) => {
                        self.stage = Stage::Source {
                            generated_at: Some(generated_at),
                        };
                        None
                    }
                };
                SlotOutcome {
                    hop: Hop::First,
                    delivered,
                }
            }
            Stage::Relay { generated_at } => {
                let delivered = if self.decoded(self.p2) {
                    self.stage = Stage::Source { generated_at: None };
                    Some(end - generated_at)
                } else {
                    if self.scheme == Scheme::TwoNonArq {
                        self.stage = Stage::Source { generated_at: None };
                    }
                    None
                };
                SlotOutcome {
                    hop: Hop::Second,
                    delivered,
                }
            }
        }
    }
}

/// Runs `config.horizon` slots and returns every completed cycle in order.
///
/// The first cycle runs from time 0 to the first delivery. A trailing partial
/// cycle is dropped.
pub fn simulate(config: &SimConfig) -> Result<Vec<RenewalCycle>> {
    config.validate()?;
    let mut link = Link::new(config);
    let mut cycles = Vec::new();
    let mut tau_prev = 0u64;
    let (mut first, mut second) = (0u64, 0u64);

    for _ in 0..config.horizon {
        let slot = link.step();
        match slot.hop {
            Hop::First => first += 1,
            Hop::Second => second += 1,
        }
        if let Some(tau) = slot.delivered {
            let z = first + second;
            let zf = z as f64;
            cycles.push(RenewalCycle {
                z,
                tau,
                first_hop_slots: first,
                second_hop_slots: second,
                area: tau_prev as f64 * zf + zf * zf / 2.0,
            });
            tau_prev = tau;
            first = 0;
            second = 0;
        }
    }

    if cycles.is_empty() {
        return Err(Error::NoCompletedCycles {
            horizon: config.horizon,
        });
    }
    Ok(cycles)
}

/// Renewal-reward statistics over `cycles`, skipping the first cycle (it has
/// no preceding delivery age) and then `warmup_cycles` more.
pub fn stats(cycles: &[RenewalCycle], warmup_cycles: usize) -> Result<SimStats> {
    let skip = warmup_cycles.saturating_add(1);
    if cycles.len() <= skip {
        return Err(Error::EmptyAfterWarmup {
            available: cycles.len(),
            discarded: skip,
        });
    }
    let retained = &cycles[skip..];
    let n = retained.len() as f64;

    let mut area = 0.0;
    let mut slots = 0.0;
    let mut z2 = 0.0;
    let mut tau_z = 0.0;
    for pair in cycles[skip - 1..].windows(2) {
        let (prev, cur) = (pair[0], pair[1]);
        let z = cur.z as f64;
        area += cur.area;
        slots += z;
        z2 += z * z;
        tau_z += prev.tau as f64 * z;
    }

    let (std_error, batches) = batch_means(retained);
    Ok(SimStats {
        average_aoi: area / slots,
        cycle_count: retained.len(),
        emp_e_z: slots / n,
        emp_e_z2: z2 / n,
        emp_e_tau_z: tau_z / n,
        std_error,
        batches,
    })
}

/// Standard error of the area/time ratio from up to 32 equal batches of
/// consecutive cycles. Leftover cycles beyond a whole batch are left out.
fn batch_means(cycles: &[RenewalCycle]) -> (f64, usize) {
    let batches = if cycles.len() >= 2 * MAX_BATCHES {
        MAX_BATCHES
    } else {
        cycles.len() / 2
    };
    if batches < 2 {
        return (f64::INFINITY, batches);
    }
    let size = cycles.len() / batches;
    let ratios: Vec<f64> = cycles
        .chunks_exact(size)
        .take(batches)
        .map(|batch| {
            let area: f64 = batch.iter().map(|c| c.area).sum();
            let slots: f64 = batch.iter().map(|c| c.z as f64).sum();
            area / slots
        })
        .collect();
    let b = batches as f64;
    let mean = ratios.iter().sum::<f64>() / b;
    let ss: f64 = ratios.iter().map(|r| (r - mean) * (r - mean)).sum();
    ((ss / (b * (b - 1.0))).sqrt(), batches)
}

/// Simulates and summarizes in one call.
pub fn run(config: &SimConfig, warmup_cycles: usize) -> Result<SimStats> {
    stats(&simulate(config)?, warmup_cycles)
}

/// Destination age sampled at the end of each of the first `max_slots` slots.
///
/// Uses the same random stream as [`simulate`] for the same configuration.
/// Before the first delivery the age counts from time 0. End-of-slot samples
/// sit half a slot below the continuous sawtooth on average; use
/// [`sawtooth_area`] to integrate the continuous curve.
pub fn instantaneous_trace(config: &SimConfig, max_slots: u64) -> Vec<u64> {
    let mut link = Link::new(config);
    let mut age = 0u64;
    (0..max_slots)
        .map(|_| {
            age = link.step().delivered.unwrap_or(age + 1);
            age
        })
        .collect()
}

/// Integral of the continuous age curve reconstructed from an end-of-slot trace.
///
/// Within a slot the age rises linearly from the previous sample, so each
/// slot contributes the previous sample plus one half.
pub fn sawtooth_area(trace: &[u64]) -> f64 {
    let mut prev = 0u64;
    trace
        .iter()
        .map(|&age| {
            let slot = prev as f64 + 0.5;
            prev = age;
            slot
        })
        .sum()
}
