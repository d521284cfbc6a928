//! Deterministic in-process network simulator.
//!
//! A run is fully determined by its [`SimConfig`]: keys, committees, the
//! corrupted set and every protocol coin come from one seeded ChaCha stream.

mod adversary;
mod broadcast_run;
mod checkpoint_run;
mod config;
mod dkg_run;
mod report;

use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

pub use adversary::{Adversary, Behavior, PolicyKind, DEFAULT_WITHHOLD_FRACTION};
pub use config::{Scenario, SimConfig};
pub use report::{BroadcastDetail, CheckpointDetail, Detail, DkgDetail, Record, Report, TraceRecord, Traffic};

use crate::error::Result;

/// Committee size used when `s_expected` is unset in forced mode.
pub const DEFAULT_FORCED_SIZE: u64 = 20;

pub fn run(cfg: &SimConfig) -> Result<Report> {
    cfg.validate()?;
    match cfg.scenario {
        Scenario::Dkg => dkg_run::run(cfg),
        Scenario::Broadcast => broadcast_run::run(cfg),
        Scenario::Checkpoint { epochs } => checkpoint_run::run(cfg, epochs),
    }
}

fn keyword(sid: &[u8; 32], tag: &str) -> Vec<u8> {
    let mut kw = sid.to_vec();
    kw.extend_from_slice(tag.as_bytes());
    kw
}

/// `size` distinct nodes of `1..=n`, in seeded order.
fn pick<R: Rng + ?Sized>(n: usize, size: usize, rng: &mut R) -> Vec<u32> {
    let mut all: Vec<u32> = (1..=n as u32).collect();
    all.shuffle(rng);
    all.truncate(size.min(n));
    all
}

/// Wall-clock phase timer; records nothing unless enabled.
struct Clock {
    enabled: bool,
    start: Instant,
}

impl Clock {
    fn new(enabled: bool) -> Self {
        Clock { enabled, start: Instant::now() }
    }

    fn lap(&mut self) -> Option<u64> {
        let ms = self.start.elapsed().as_millis() as u64;
        self.start = Instant::now();
        self.enabled.then_some(ms)
    }
}

fn to_set(v: &[u32]) -> BTreeSet<u32> {
    v.iter().copied().collect()
}
