//! Deterministic lockstep emulator of one SIMD warp.
//!
//! Lane programs are written as host code over [`Lanes`] values: every
//! method on [`Warp`] is one emulator step executed by all lanes together.
//! Memory accesses issued in the same step are checked for coalescing and
//! recorded.

mod lanes;
mod memory;
mod trace;

pub use lanes::Lanes;
pub use memory::{AddressSpace, GlobalArray2D, GlobalLayout, LocalArray, MemorySpace};
pub use trace::{AccessKind, MemoryEvent, OpKind, Phase, Trace, TraceKey, TraceTotals};

use crate::{Error, Result};

/// Lane count and memory-transaction geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WarpConfig {
    lanes: usize,
    elem_size: usize,
    line_size: usize,
}

impl Default for WarpConfig {
    fn default() -> Self {
        WarpConfig {
            lanes: 32,
            elem_size: 8,
            line_size: 128,
        }
    }
}

impl WarpConfig {
    pub fn new(lanes: usize, elem_size: usize, line_size: usize) -> Result<Self> {
        if !lanes.is_power_of_two() || !(2..=64).contains(&lanes) {
            return Err(Error::Config(format!(
                "warp width {lanes} must be a power of 2 in 2..=64"
            )));
        }
        if elem_size != 4 && elem_size != 8 {
            return Err(Error::Config(format!(
                "element size {elem_size} must be 4 or 8 bytes"
            )));
        }
        if line_size < elem_size
            || !line_size.is_multiple_of(elem_size)
            || !(line_size / elem_size).is_power_of_two()
        {
            return Err(Error::Config(format!(
                "line size {line_size} must be a power-of-2 multiple of {elem_size}"
            )));
        }
        Ok(WarpConfig {
            lanes,
            elem_size,
            line_size,
        })
    }

    /// `lanes` wide with the default 128-byte line.
    pub fn with_lanes(lanes: usize, elem_size: usize) -> Result<Self> {
        WarpConfig::new(lanes, elem_size, 128)
    }

    pub fn lanes(&self) -> usize {
        self.lanes
    }

    pub fn log2_lanes(&self) -> u32 {
        self.lanes.trailing_zeros()
    }

    pub fn elem_size(&self) -> usize {
        self.elem_size
    }

    pub fn line_size(&self) -> usize {
        self.line_size
    }

    /// Fewest transactions `active` lanes can possibly need.
    pub fn min_transactions(&self, active: usize) -> usize {
        (active * self.elem_size).div_ceil(self.line_size)
    }
}

/// One warp: a config, an active-lane mask, a step counter and a trace.
#[derive(Debug)]
pub struct Warp {
    config: WarpConfig,
    active: Vec<bool>,
    step: u64,
    phase: Phase,
    trace: Trace,
    local_space: AddressSpace,
}

impl Warp {
    pub fn new(config: WarpConfig) -> Self {
        Warp {
            config,
            active: vec![true; config.lanes],
            step: 0,
            phase: Phase::Other,
            trace: Trace::default(),
            local_space: AddressSpace::new(config.line_size),
        }
    }

    /// Keep the full per-event log, not just the totals.
    pub fn with_event_log(mut self) -> Self {
        self.trace.keep_events(true);
        self
    }

    pub fn config(&self) -> &WarpConfig {
        &self.config
    }

    pub fn lanes(&self) -> usize {
        self.config.lanes
    }

    pub fn lane_ids(&self) -> Lanes<usize> {
        Lanes::from_fn(self.lanes(), |r| r)
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(mut self) -> Trace {
        self.trace.set_steps(self.step);
        self.trace
    }

    pub fn is_active(&self, lane: usize) -> bool {
        self.active[lane]
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    /// Predicate lanes on or off for subsequent steps.
    pub fn set_active(&mut self, mask: &Lanes<bool>) {
        assert_eq!(mask.len(), self.lanes());
        self.active.copy_from_slice(mask.as_slice());
    }

    pub fn activate_all(&mut self) {
        self.active.fill(true);
    }

    fn tick(&mut self) -> u64 {
        let s = self.step;
        self.step += 1;
        s
    }

    pub(crate) fn alloc_local_base(&mut self, bytes: usize) -> u64 {
        self.local_space.alloc(bytes)
    }

    /// Every lane receives the value held by lane `src[r]`.
    ///
    /// A predicated-off source lane still supplies its current value.
    pub fn shuffle<T: Copy>(&mut self, v: &Lanes<T>, src: &Lanes<usize>) -> Result<Lanes<T>> {
        let w = self.lanes();
        for (lane, &s) in src.iter().enumerate() {
            if s >= w {
                return Err(Error::LaneOutOfRange {
                    lane,
                    src: s,
                    lanes: w,
                });
            }
        }
        self.tick();
        self.trace.count(self.phase, OpKind::Shuffle, 1);
        Ok(Lanes::from_fn(w, |r| v[src[r]]))
    }

    /// Broadcast lane `src` to all lanes.
    pub fn shuffle_uniform<T: Copy>(&mut self, v: &Lanes<T>, src: usize) -> Result<Lanes<T>> {
        let src = Lanes::splat(self.lanes(), src);
        self.shuffle(v, &src)
    }

    /// Lane `r` receives the value held by lane `r ^ mask`.
    pub fn shuffle_xor<T: Copy>(&mut self, v: &Lanes<T>, mask: usize) -> Result<Lanes<T>> {
        let w = self.lanes();
        if mask >= w {
            return Err(Error::MaskOutOfRange { mask, lanes: w });
        }
        self.tick();
        self.trace.count(self.phase, OpKind::ShuffleXor, 1);
        Ok(Lanes::from_fn(w, |r| v[r ^ mask]))
    }

    /// `shuffle_xor` with a per-lane mask.
    pub fn shuffle_xor_lanes<T: Copy>(
        &mut self,
        v: &Lanes<T>,
        masks: &Lanes<usize>,
    ) -> Result<Lanes<T>> {
        let w = self.lanes();
        if let Some(&mask) = masks.iter().find(|&&m| m >= w) {
            return Err(Error::MaskOutOfRange { mask, lanes: w });
        }
        self.tick();
        self.trace.count(self.phase, OpKind::ShuffleXor, 1);
        Ok(Lanes::from_fn(w, |r| v[r ^ masks[r]]))
    }

    /// True iff some active lane's predicate holds.
    pub fn any(&mut self, pred: &Lanes<bool>) -> bool {
        self.tick();
        self.trace.count(self.phase, OpKind::Vote, 1);
        pred.iter()
            .zip(&self.active)
            .any(|(&p, &active)| p && active)
    }

    /// Lane-wise binary operation, counted as one instruction of `kind`.
    pub fn alu<T: Copy, U: Copy, V>(
        &mut self,
        kind: OpKind,
        a: &Lanes<T>,
        b: &Lanes<U>,
        f: impl Fn(T, U) -> V,
    ) -> Lanes<V> {
        self.tick();
        self.trace.count(self.phase, kind, 1);
        Lanes::from_fn(self.lanes(), |r| f(a[r], b[r]))
    }

    /// Records one warp-wide access at the given per-lane byte addresses.
    /// `None` marks a lane that does not participate (predicated off).
    pub fn traced_access(
        &mut self,
        space: MemorySpace,
        array: &'static str,
        kind: AccessKind,
        addresses: &[Option<u64>],
    ) -> MemoryEvent {
        let elem_size = self.config.elem_size;
        self.traced_access_sized(space, array, kind, elem_size, addresses)
    }

    /// `traced_access` for elements of `elem_size` bytes, which sets how
    /// few transactions the access could have needed.
    pub fn traced_access_sized(
        &mut self,
        space: MemorySpace,
        array: &'static str,
        kind: AccessKind,
        elem_size: usize,
        addresses: &[Option<u64>],
    ) -> MemoryEvent {
        let step = self.tick();
        let line = self.config.line_size as u64;
        let mut lines: Vec<u64> = addresses
            .iter()
            .zip(&self.active)
            .filter_map(|(a, &on)| if on { a.map(|a| a / line) } else { None })
            .collect();
        let active_lanes = lines.len();
        lines.sort_unstable();
        lines.dedup();
        let transactions = lines.len();
        let event = MemoryEvent {
            step,
            phase: self.phase,
            space,
            array,
            kind,
            active_lanes,
            transactions,
            scattered: transactions > (active_lanes * elem_size).div_ceil(self.config.line_size),
        };
        self.trace.record(event.clone());
        event
    }
}
