use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::Value;

use crate::checkpoint::TxId;
use crate::dkg::DkgOutput;
use crate::weights::Allocation;

use super::config::SimConfig;

/// One line of the JSON-lines report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub scenario: String,
    pub n: usize,
    pub t: usize,
    pub seed: u64,
    pub phase: String,
    pub metric: String,
    pub value: Value,
}

/// One delivered message. `to` is absent for board posts and DDN fetches.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub round: u8,
    pub from: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<u32>,
    pub channel: &'static str,
    pub bytes: usize,
    #[serde(rename = "type")]
    pub kind: &'static str,
}

/// Byte counters per channel, plus the optional message trace.
#[derive(Clone, Debug, Default)]
pub struct Traffic {
    bytes: BTreeMap<&'static str, usize>,
    trace: Option<Vec<TraceRecord>>,
}

impl Traffic {
    pub fn new(trace: bool) -> Self {
        Traffic { bytes: BTreeMap::new(), trace: trace.then(Vec::new) }
    }

    pub fn bytes(&self, channel: &str) -> usize {
        self.bytes.get(channel).copied().unwrap_or(0)
    }

    pub fn record(&mut self, round: u8, from: u32, to: Option<u32>, channel: &'static str, bytes: usize, kind: &'static str) {
        *self.bytes.entry(channel).or_default() += bytes;
        if let Some(t) = &mut self.trace {
            t.push(TraceRecord { round, from, to, channel, bytes, kind });
        }
    }

    pub fn into_trace(self) -> Vec<TraceRecord> {
        self.trace.unwrap_or_default()
    }
}

/// Per-node results of a DKG run.
#[derive(Clone, Debug, Default)]
pub struct DkgDetail {
    pub dealers: BTreeSet<u32>,
    pub corrupted: BTreeSet<u32>,
    /// Outputs of the nodes that stayed honest throughout.
    pub outputs: BTreeMap<u32, DkgOutput>,
    /// Total EXP per node over all rounds.
    pub exp: BTreeMap<u32, u64>,
    pub d1: BTreeMap<u32, BTreeSet<u32>>,
}

#[derive(Clone, Debug, Default)]
pub struct BroadcastDetail {
    pub senders: Vec<u32>,
    pub corrupted: BTreeSet<u32>,
    pub values: BTreeMap<u32, Vec<u8>>,
    /// Delivered value per sender, at each honest receiver.
    pub outputs: BTreeMap<u32, BTreeMap<u32, Option<Vec<u8>>>>,
}

#[derive(Clone, Debug)]
pub struct CheckpointDetail {
    pub allocation: Allocation,
    /// Genesis first, then one transaction per epoch.
    pub txs: Vec<TxId>,
    pub checkpoints: Vec<[u8; 32]>,
    pub bootstrapped: [u8; 32],
}

#[derive(Clone, Debug)]
pub enum Detail {
    Dkg(DkgDetail),
    Broadcast(BroadcastDetail),
    Checkpoint(CheckpointDetail),
}

#[derive(Clone, Debug)]
pub struct Report {
    pub records: Vec<Record>,
    pub trace: Vec<TraceRecord>,
    pub detail: Detail,
}

impl Report {
    pub fn metric(&self, phase: &str, metric: &str) -> Option<&Value> {
        self.records.iter().find(|r| r.phase == phase && r.metric == metric).map(|r| &r.value)
    }

    pub fn metric_u64(&self, phase: &str, metric: &str) -> Option<u64> {
        self.metric(phase, metric).and_then(Value::as_u64)
    }

    pub fn metric_bool(&self, phase: &str, metric: &str) -> Option<bool> {
        self.metric(phase, metric).and_then(Value::as_bool)
    }

    pub fn dkg(&self) -> Option<&DkgDetail> {
        match &self.detail {
            Detail::Dkg(d) => Some(d),
            _ => None,
        }
    }

    pub fn broadcast(&self) -> Option<&BroadcastDetail> {
        match &self.detail {
            Detail::Broadcast(d) => Some(d),
            _ => None,
        }
    }

    pub fn checkpoint(&self) -> Option<&CheckpointDetail> {
        match &self.detail {
            Detail::Checkpoint(d) => Some(d),
            _ => None,
        }
    }

    pub fn to_jsonl(&self) -> String {
        lines(&self.records)
    }

    pub fn trace_jsonl(&self) -> String {
        lines(&self.trace)
    }
}

fn lines<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|r| serde_json::to_string(r).expect("plain records serialize") + "\n")
        .collect()
}

/// Accumulates records that share the run's identifying fields.
pub(super) struct Recorder {
    scenario: &'static str,
    n: usize,
    t: usize,
    seed: u64,
    records: Vec<Record>,
}

impl Recorder {
    pub fn new(cfg: &SimConfig, n: usize, t: usize) -> Self {
        Recorder { scenario: cfg.scenario.name(), n, t, seed: cfg.seed, records: Vec::new() }
    }

    pub fn put(&mut self, phase: &str, metric: &str, value: impl Into<Value>) {
        self.records.push(Record {
            scenario: self.scenario.to_string(),
            n: self.n,
            t: self.t,
            seed: self.seed,
            phase: phase.to_string(),
            metric: metric.to_string(),
            value: value.into(),
        });
    }

    pub fn finish(self, traffic: Traffic, detail: Detail) -> Report {
        Report { records: self.records, trace: traffic.into_trace(), detail }
    }
}
