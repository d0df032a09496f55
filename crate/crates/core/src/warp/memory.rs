use crate::{Error, Matrix, Result};

use super::{AccessKind, Lanes, Warp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MemorySpace {
    Global,
    Local,
}

impl MemorySpace {
    pub fn as_str(self) -> &'static str {
        match self {
            MemorySpace::Global => "global",
            MemorySpace::Local => "local",
        }
    }
}

/// Bump allocator handing out line-aligned, non-overlapping base addresses.
#[derive(Debug, Clone)]
pub struct AddressSpace {
    line: u64,
    next: u64,
}

impl AddressSpace {
    pub fn new(line_size: usize) -> Self {
        let line = line_size as u64;
        AddressSpace { line, next: line }
    }

    pub fn alloc(&mut self, bytes: usize) -> u64 {
        let base = self.next;
        self.next = (base + bytes as u64).div_ceil(self.line) * self.line + self.line;
        base
    }
}

/// Row pitch and leading pad of a global 2-D array, in elements:
/// `address(i, j) = base + (i * pitch + lead + j) * elem_size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GlobalLayout {
    pub pitch: usize,
    pub lead: usize,
}

impl GlobalLayout {
    /// Plain row-major: `pitch = cols`, no pad.
    pub fn row_major(cols: usize) -> Self {
        GlobalLayout {
            pitch: cols,
            lead: 0,
        }
    }

    /// Pitched layout in which column `first_aligned` of every row starts
    /// a memory line, the way a pitched device allocation would place a
    /// matrix whose `W`-wide column blocks start after a remnant.
    pub fn line_aligned(cols: usize, first_aligned: usize, line_elems: usize) -> Self {
        let lead = (line_elems - first_aligned % line_elems) % line_elems;
        let pitch = (lead + cols).div_ceil(line_elems) * line_elems;
        GlobalLayout { pitch, lead }
    }
}

/// Row-major array in simulated global memory.
#[derive(Debug, Clone)]
pub struct GlobalArray2D<T> {
    name: &'static str,
    data: Matrix<T>,
    layout: GlobalLayout,
    base: u64,
    elem_size: usize,
}

impl<T: Copy + Default> GlobalArray2D<T> {
    pub fn new(
        name: &'static str,
        data: Matrix<T>,
        layout: GlobalLayout,
        elem_size: usize,
        space: &mut AddressSpace,
    ) -> Self {
        assert!(layout.pitch >= layout.lead + data.cols());
        let base = space.alloc(data.rows() * layout.pitch * elem_size);
        GlobalArray2D {
            name,
            data,
            layout,
            base,
            elem_size,
        }
    }

    pub fn row_major(
        name: &'static str,
        data: Matrix<T>,
        elem_size: usize,
        space: &mut AddressSpace,
    ) -> Self {
        let layout = GlobalLayout::row_major(data.cols());
        GlobalArray2D::new(name, data, layout, elem_size, space)
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn rows(&self) -> usize {
        self.data.rows()
    }

    pub fn cols(&self) -> usize {
        self.data.cols()
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn layout(&self) -> GlobalLayout {
        self.layout
    }

    pub fn address(&self, i: usize, j: usize) -> u64 {
        self.base + ((i * self.layout.pitch + self.layout.lead + j) * self.elem_size) as u64
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data.get(i, j)
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.data
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.data
    }

    fn addresses(&self, idx: &Lanes<Option<(usize, usize)>>) -> Result<Vec<Option<u64>>> {
        idx.iter()
            .enumerate()
            .map(|(lane, ix)| match *ix {
                None => Ok(None),
                Some((i, j)) if i < self.rows() && j < self.cols() => Ok(Some(self.address(i, j))),
                Some((i, j)) => Err(Error::OutOfBounds {
                    lane,
                    array: self.name,
                    index: format!("{i}, {j}"),
                }),
            })
            .collect()
    }

    /// Traced gather; lanes with `None` (or predicated off) read `T::default()`.
    pub fn load(&self, warp: &mut Warp, idx: &Lanes<Option<(usize, usize)>>) -> Result<Lanes<T>> {
        let addrs = self.addresses(idx)?;
        warp.traced_access_sized(
            super::MemorySpace::Global,
            self.name,
            AccessKind::Read,
            self.elem_size,
            &addrs,
        );
        Ok(Lanes::from_fn(idx.len(), |r| match idx[r] {
            Some((i, j)) if warp.is_active(r) => self.data.get(i, j),
            _ => T::default(),
        }))
    }

    /// Traced scatter; lanes with `None` (or predicated off) write nothing.
    pub fn store(
        &mut self,
        warp: &mut Warp,
        idx: &Lanes<Option<(usize, usize)>>,
        values: &Lanes<T>,
    ) -> Result<()> {
        let addrs = self.addresses(idx)?;
        warp.traced_access_sized(
            super::MemorySpace::Global,
            self.name,
            AccessKind::Write,
            self.elem_size,
            &addrs,
        );
        for r in 0..idx.len() {
            if let Some((i, j)) = idx[r] {
                if warp.is_active(r) {
                    self.data.set(i, j, values[r]);
                }
            }
        }
        Ok(())
    }
}

impl<T: Copy> GlobalArray2D<T> {
    /// Records a write at `idx` without touching the data. Lets several
    /// warps running on different threads trace stores into one layout
    /// while each keeps its results elsewhere.
    pub fn record_store(&self, warp: &mut Warp, idx: &Lanes<Option<(usize, usize)>>) -> Result<()> {
        let addrs = idx
            .iter()
            .enumerate()
            .map(|(lane, ix)| match *ix {
                None => Ok(None),
                Some((i, j)) if i < self.data.rows() && j < self.data.cols() => Ok(Some(
                    self.base
                        + ((i * self.layout.pitch + self.layout.lead + j) * self.elem_size) as u64,
                )),
                Some((i, j)) => Err(Error::OutOfBounds {
                    lane,
                    array: self.name,
                    index: format!("{i}, {j}"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        warp.traced_access_sized(
            super::MemorySpace::Global,
            self.name,
            AccessKind::Write,
            self.elem_size,
            &addrs,
        );
        Ok(())
    }
}

/// Per-lane array in simulated local memory. Storage is interleaved by
/// lane: `address(lane r, index j) = base + (j * W + r) * elem_size`, so a
/// lane-uniform index touches `W` consecutive elements.
#[derive(Debug, Clone)]
pub struct LocalArray<T> {
    name: &'static str,
    len: usize,
    lanes: usize,
    base: u64,
    elem_size: usize,
    data: Vec<T>,
}

impl<T: Copy + Default> LocalArray<T> {
    pub fn new(warp: &mut Warp, name: &'static str, len: usize, elem_size: usize) -> Self {
        let lanes = warp.lanes();
        let base = warp.alloc_local_base(len * lanes * elem_size);
        LocalArray {
            name,
            len,
            lanes,
            base,
            elem_size,
            data: vec![T::default(); len * lanes],
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn address(&self, lane: usize, j: usize) -> u64 {
        self.base + ((j * self.lanes + lane) * self.elem_size) as u64
    }

    /// Untraced read, for inspection outside lane programs.
    pub fn get(&self, lane: usize, j: usize) -> T {
        self.data[j * self.lanes + lane]
    }

    /// One lane's whole array, untraced.
    pub fn lane_values(&self, lane: usize) -> Vec<T> {
        (0..self.len).map(|j| self.get(lane, j)).collect()
    }

    fn addresses(&self, idx: &Lanes<Option<(usize, usize)>>) -> Result<Vec<Option<u64>>> {
        idx.iter()
            .enumerate()
            .map(|(lane, ix)| match *ix {
                None => Ok(None),
                Some((owner, j)) if owner < self.lanes && j < self.len => {
                    Ok(Some(self.address(owner, j)))
                }
                Some((owner, j)) => Err(Error::OutOfBounds {
                    lane,
                    array: self.name,
                    index: format!("lane {owner}, {j}"),
                }),
            })
            .collect()
    }

    /// Traced gather of `(owner lane, index)` pairs. Reading another
    /// lane's slot is how transposed local access is modelled.
    pub fn load_at(
        &self,
        warp: &mut Warp,
        idx: &Lanes<Option<(usize, usize)>>,
    ) -> Result<Lanes<T>> {
        let addrs = self.addresses(idx)?;
        warp.traced_access_sized(
            super::MemorySpace::Local,
            self.name,
            AccessKind::Read,
            self.elem_size,
            &addrs,
        );
        Ok(Lanes::from_fn(idx.len(), |r| match idx[r] {
            Some((owner, j)) if warp.is_active(r) => self.get(owner, j),
            _ => T::default(),
        }))
    }

    /// Each lane reads its own element `idx[r]`.
    pub fn load(&self, warp: &mut Warp, idx: &Lanes<Option<usize>>) -> Result<Lanes<T>> {
        let at = Lanes::from_fn(idx.len(), |r| idx[r].map(|j| (r, j)));
        self.load_at(warp, &at)
    }

    /// Each lane reads its own element `j`.
    pub fn load_uniform(&self, warp: &mut Warp, j: usize) -> Result<Lanes<T>> {
        let at = Lanes::from_fn(self.lanes, |r| Some((r, j)));
        self.load_at(warp, &at)
    }

    pub fn store_at(
        &mut self,
        warp: &mut Warp,
        idx: &Lanes<Option<(usize, usize)>>,
        values: &Lanes<T>,
    ) -> Result<()> {
        let addrs = self.addresses(idx)?;
        warp.traced_access_sized(
            super::MemorySpace::Local,
            self.name,
            AccessKind::Write,
            self.elem_size,
            &addrs,
        );
        for r in 0..idx.len() {
            if let Some((owner, j)) = idx[r] {
                if warp.is_active(r) {
                    self.data[j * self.lanes + owner] = values[r];
                }
            }
        }
        Ok(())
    }

    pub fn store_uniform(&mut self, warp: &mut Warp, j: usize, values: &Lanes<T>) -> Result<()> {
        let at = Lanes::from_fn(self.lanes, |r| Some((r, j)));
        self.store_at(warp, &at, values)
    }
}
