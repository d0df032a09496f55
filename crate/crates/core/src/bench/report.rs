//! Per-array summaries of a kernel trace.

use std::collections::BTreeMap;
use std::fmt;

use crate::butterfly::Kernel;
use crate::warp::{MemorySpace, OpKind, Trace, TraceTotals};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayReport {
    pub space: MemorySpace,
    pub array: &'static str,
    pub totals: TraceTotals,
}

/// Memory totals per array and warp-instruction counts for one kernel run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceReport {
    pub kernel: Kernel,
    pub arrays: Vec<ArrayReport>,
    pub shuffles: u64,
    pub shuffle_xors: u64,
    pub adds: u64,
    pub accumulates: u64,
    pub steps: u64,
}

impl TraceReport {
    pub fn new(kernel: Kernel, trace: &Trace) -> Self {
        let mut arrays: BTreeMap<(MemorySpace, &'static str), TraceTotals> = BTreeMap::new();
        for (key, t) in trace.totals() {
            let e = arrays.entry((key.space, key.array)).or_default();
            e.accesses += t.accesses;
            e.transactions += t.transactions;
            e.scattered += t.scattered;
            e.lane_accesses += t.lane_accesses;
        }
        let op = |k: OpKind| trace.ops(|_, o| o == k);
        TraceReport {
            kernel,
            arrays: arrays
                .into_iter()
                .map(|((space, array), totals)| ArrayReport {
                    space,
                    array,
                    totals,
                })
                .collect(),
            shuffles: op(OpKind::Shuffle),
            shuffle_xors: op(OpKind::ShuffleXor),
            adds: op(OpKind::Add),
            accumulates: op(OpKind::Accumulate),
            steps: trace.steps(),
        }
    }
}

impl fmt::Display for TraceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kernel {} ({} warp steps)", self.kernel, self.steps)?;
        writeln!(
            f,
            "  {:<7} {:<12} {:>10} {:>12} {:>10}",
            "space", "array", "accesses", "transactions", "scattered"
        )?;
        for a in &self.arrays {
            writeln!(
                f,
                "  {:<7} {:<12} {:>10} {:>12} {:>10}",
                a.space.as_str(),
                a.array,
                a.totals.accesses,
                a.totals.transactions,
                a.totals.scattered
            )?;
        }
        write!(
            f,
            "  shuffles {}  shuffle_xor {}  butterfly adds {}  running-sum adds {}",
            self.shuffles, self.shuffle_xors, self.adds, self.accumulates
        )
    }
}
