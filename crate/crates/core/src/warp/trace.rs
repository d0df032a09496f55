use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use super::MemorySpace;

/// Which part of a kernel a step belongs to. Reports aggregate by phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    /// Per-lane fetch of the remnant columns of theta.
    ThetaRemnant,
    /// Transposed fetch of the `W`-wide theta blocks.
    ThetaBlocks,
    /// Building the partial-sum table for one word.
    TableBuild,
    Search,
    Writeback,
    Other,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::ThetaRemnant => "theta_remnant",
            Phase::ThetaBlocks => "theta_blocks",
            Phase::TableBuild => "table_build",
            Phase::Search => "search",
            Phase::Writeback => "writeback",
            Phase::Other => "other",
        }
    }

    pub fn is_theta_cache(self) -> bool {
        matches!(self, Phase::ThetaRemnant | Phase::ThetaBlocks)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AccessKind {
    Read,
    Write,
}

impl AccessKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AccessKind::Read => "read",
            AccessKind::Write => "write",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    Shuffle,
    ShuffleXor,
    Vote,
    /// Additions inside the butterfly exchange.
    Add,
    /// Running-sum additions (`sum = sum + x`).
    Accumulate,
    Mul,
}

/// One warp-wide memory access.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryEvent {
    pub step: u64,
    pub phase: Phase,
    pub space: MemorySpace,
    pub array: &'static str,
    pub kind: AccessKind,
    pub active_lanes: usize,
    /// Distinct line-aligned segments touched.
    pub transactions: usize,
    /// More transactions than the active lanes strictly need.
    pub scattered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TraceKey {
    pub phase: Phase,
    pub space: MemorySpace,
    pub array: &'static str,
    pub kind: AccessKind,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraceTotals {
    /// Warp-wide access events.
    pub accesses: u64,
    pub transactions: u64,
    pub scattered: u64,
    pub lane_accesses: u64,
}

impl TraceTotals {
    fn add(&mut self, other: &TraceTotals) {
        self.accesses += other.accesses;
        self.transactions += other.transactions;
        self.scattered += other.scattered;
        self.lane_accesses += other.lane_accesses;
    }
}

/// Memory events and instruction counts of one or more warps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    keep_events: bool,
    events: Vec<MemoryEvent>,
    totals: BTreeMap<TraceKey, TraceTotals>,
    ops: BTreeMap<(Phase, OpKind), u64>,
    steps: u64,
}

impl Trace {
    pub(crate) fn keep_events(&mut self, keep: bool) {
        self.keep_events = keep;
    }

    pub(crate) fn record(&mut self, e: MemoryEvent) {
        let key = TraceKey {
            phase: e.phase,
            space: e.space,
            array: e.array,
            kind: e.kind,
        };
        let t = self.totals.entry(key).or_default();
        t.accesses += 1;
        t.transactions += e.transactions as u64;
        t.scattered += e.scattered as u64;
        t.lane_accesses += e.active_lanes as u64;
        self.steps = self.steps.max(e.step + 1);
        if self.keep_events {
            self.events.push(e);
        }
    }

    pub(crate) fn count(&mut self, phase: Phase, op: OpKind, n: u64) {
        *self.ops.entry((phase, op)).or_default() += n;
    }

    pub(crate) fn set_steps(&mut self, steps: u64) {
        self.steps = self.steps.max(steps);
    }

    /// Empty trace that will keep its event log when merged into.
    pub fn with_events() -> Self {
        Trace {
            keep_events: true,
            ..Trace::default()
        }
    }

    /// Appends `other` after this trace; its steps are renumbered to follow.
    pub fn merge(&mut self, other: Trace) {
        let offset = self.steps;
        if self.keep_events {
            self.events.extend(other.events.into_iter().map(|mut e| {
                e.step += offset;
                e
            }));
        }
        for (k, t) in other.totals {
            self.totals.entry(k).or_default().add(&t);
        }
        for (k, n) in other.ops {
            *self.ops.entry(k).or_default() += n;
        }
        self.steps = offset + other.steps;
    }

    pub fn events(&self) -> &[MemoryEvent] {
        &self.events
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn totals(&self) -> &BTreeMap<TraceKey, TraceTotals> {
        &self.totals
    }

    /// Sum of totals over keys accepted by `filter`.
    pub fn sum(&self, filter: impl Fn(&TraceKey) -> bool) -> TraceTotals {
        let mut acc = TraceTotals::default();
        for (k, t) in &self.totals {
            if filter(k) {
                acc.add(t);
            }
        }
        acc
    }

    pub fn ops(&self, filter: impl Fn(Phase, OpKind) -> bool) -> u64 {
        self.ops
            .iter()
            .filter(|((p, o), _)| filter(*p, *o))
            .map(|(_, n)| *n)
            .sum()
    }

    pub fn op_count(&self, phase: Phase, op: OpKind) -> u64 {
        self.ops.get(&(phase, op)).copied().unwrap_or(0)
    }

    /// `step,space,kind,active_lanes,transactions`, one row per event.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "step,space,kind,active_lanes,transactions")?;
        for e in &self.events {
            writeln!(
                out,
                "{},{},{},{},{}",
                e.step,
                e.space.as_str(),
                e.kind.as_str(),
                e.active_lanes,
                e.transactions
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warp::{Lanes, Warp, WarpConfig};

    fn run(seed: usize) -> Trace {
        let mut w = Warp::new(WarpConfig::with_lanes(8, 4).unwrap()).with_event_log();
        w.set_phase(Phase::Search);
        let v = Lanes::from_fn(8, |r| r * seed);
        let v = w.shuffle_xor(&v, 3).unwrap();
        let addrs: Vec<Option<u64>> = v.iter().map(|&x| Some(x as u64 * 64)).collect();
        w.traced_access(MemorySpace::Local, "p", AccessKind::Read, &addrs);
        w.into_trace()
    }

    #[test]
    fn identical_programs_give_identical_traces() {
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(0));
    }

    #[test]
    fn merge_renumbers_steps_and_sums_totals() {
        let a = run(1);
        let b = run(2);
        let mut m = Trace::with_events();
        m.merge(a.clone());
        m.merge(b.clone());
        assert_eq!(m.events().len(), 2);
        assert!(m.events()[1].step > m.events()[0].step);
        assert_eq!(m.op_count(Phase::Search, OpKind::ShuffleXor), 2);
        let t = m.sum(|k| k.array == "p");
        assert_eq!(t.accesses, 2);
        assert_eq!(
            t.transactions,
            (a.events()[0].transactions + b.events()[0].transactions) as u64
        );
    }

    #[test]
    fn csv_has_declared_columns() {
        let mut buf = Vec::new();
        run(3).write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(
            lines.next().unwrap(),
            "step,space,kind,active_lanes,transactions"
        );
        assert_eq!(lines.next().unwrap().split(',').count(), 5);
    }
}
