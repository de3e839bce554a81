//! Real difference operators on the grid, expressed as per-row entry
//! generators so the same code path feeds forward products, transpose
//! products, and Gram-matrix assembly.
//!
//! First differences are forward, scaled 1/h, with zero rows where the
//! forward neighbor leaves the grid. Second differences are scaled 1/h² and
//! extend the field by edge replication, realized by clamping neighbor
//! indices and merging coincident entries; the mixed difference is
//! forward–forward, so its clamped rows on the far edges merge to nothing.

use crate::grid::Grid2D;
use crate::scalar::Scalar;
use crate::{Result, WiprError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffKind {
    Dx,
    Dz,
    Dxx,
    Dzz,
    Dxz,
}

#[derive(Debug, Clone, Copy)]
pub struct DiffOp<T: Scalar> {
    grid: Grid2D<T>,
    kind: DiffKind,
}

impl<T: Scalar> DiffOp<T> {
    pub fn new(grid: Grid2D<T>, kind: DiffKind) -> Self {
        Self { grid, kind }
    }

    pub fn grid(&self) -> Grid2D<T> {
        self.grid
    }

    pub fn kind(&self) -> DiffKind {
        self.kind
    }

    /// Largest column spread of any row, used to size band storage.
    pub fn row_spread(&self) -> usize {
        let nz = self.grid.nz();
        match self.kind {
            DiffKind::Dx => nz,
            DiffKind::Dz => 1,
            DiffKind::Dxx => 2 * nz,
            DiffKind::Dzz => 2,
            DiffKind::Dxz => nz + 1,
        }
    }

    /// Writes the merged (column, coefficient) entries of row i into `buf`.
    /// Rows may be empty; merged coefficients that cancel are dropped.
    pub fn row(&self, i: usize, buf: &mut Vec<(usize, T)>) {
        buf.clear();
        let g = self.grid;
        let (nx, nz) = (g.nx(), g.nz());
        let (ix, iz) = g.coords(i);
        let inv_h = g.h().recip();
        let inv_h2 = inv_h * inv_h;
        let one = T::one();
        let two = T::real(2.0);
        match self.kind {
            DiffKind::Dx => {
                if ix + 1 < nx {
                    buf.push((g.idx(ix + 1, iz), inv_h));
                    buf.push((i, -inv_h));
                }
            }
            DiffKind::Dz => {
                if iz + 1 < nz {
                    buf.push((g.idx(ix, iz + 1), inv_h));
                    buf.push((i, -inv_h));
                }
            }
            DiffKind::Dxx => {
                let xp = (ix + 1).min(nx - 1);
                let xm = ix.saturating_sub(1);
                buf.push((g.idx(xp, iz), inv_h2));
                buf.push((i, -two * inv_h2));
                buf.push((g.idx(xm, iz), inv_h2));
                merge_entries(buf);
            }
            DiffKind::Dzz => {
                let zp = (iz + 1).min(nz - 1);
                let zm = iz.saturating_sub(1);
                buf.push((g.idx(ix, zp), inv_h2));
                buf.push((i, -two * inv_h2));
                buf.push((g.idx(ix, zm), inv_h2));
                merge_entries(buf);
            }
            DiffKind::Dxz => {
                let xp = (ix + 1).min(nx - 1);
                let zp = (iz + 1).min(nz - 1);
                buf.push((g.idx(xp, zp), one * inv_h2));
                buf.push((g.idx(xp, iz), -inv_h2));
                buf.push((g.idx(ix, zp), -inv_h2));
                buf.push((i, inv_h2));
                merge_entries(buf);
            }
        }
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        let n = self.grid.n();
        if x.len() != n {
            return Err(WiprError::DimensionMismatch { expected: n, got: x.len() });
        }
        let mut out = vec![T::zero(); n];
        let mut buf = Vec::with_capacity(4);
        for i in 0..n {
            self.row(i, &mut buf);
            let mut s = T::zero();
            for &(j, c) in &buf {
                s += c * x[j];
            }
            out[i] = s;
        }
        Ok(out)
    }

    /// out += scale · Dᵀ v.
    pub fn apply_transpose_accumulate(&self, v: &[T], scale: T, out: &mut [T]) {
        let n = self.grid.n();
        debug_assert_eq!(v.len(), n);
        debug_assert_eq!(out.len(), n);
        let mut buf = Vec::with_capacity(4);
        for i in 0..n {
            self.row(i, &mut buf);
            let s = scale * v[i];
            for &(j, c) in &buf {
                out[j] += c * s;
            }
        }
    }
}

fn merge_entries<T: Scalar>(buf: &mut Vec<(usize, T)>) {
    let mut merged: Vec<(usize, T)> = Vec::with_capacity(buf.len());
    for &(j, c) in buf.iter() {
        if let Some(slot) = merged.iter_mut().find(|(k, _)| *k == j) {
            slot.1 += c;
        } else {
            merged.push((j, c));
        }
    }
    merged.retain(|&(_, c)| c != T::zero());
    *buf = merged;
}
