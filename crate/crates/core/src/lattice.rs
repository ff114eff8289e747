//! Periodic hypercubic lattice geometry.
//!
//! Vertices are flattened row-major: the last coordinate varies fastest, so
//! `x = (x_1, ..., x_d)` maps to `sum_i x_i * n^(d-1-i)`. Snapshot CSV rows
//! follow the same order.

use crate::error::{invalid, Error, Result};

/// Hard cap on the number of state amplitudes (2dN) a lattice may require.
pub const MAX_AMPLITUDES: usize = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeConfig {
    dim: usize,
    side: usize,
    marked: Vec<usize>,
}

impl LatticeConfig {
    /// Lattice with the marked vertex at the centre, `floor(n/2)` on every axis.
    pub fn new(dim: usize, side: usize) -> Result<Self> {
        Self::with_marked(dim, side, vec![side / 2; dim])
    }

    pub fn with_marked(dim: usize, side: usize, marked: Vec<usize>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if side < 2 {
            return Err(invalid("side length must be at least 2"));
        }
        if marked.len() != dim {
            return Err(invalid(format!("marked vertex has {} coordinates, lattice dimension is {dim}", marked.len())));
        }
        if let Some(c) = marked.iter().find(|&&c| c >= side) {
            return Err(invalid(format!("marked coordinate {c} outside [0, {}]", side - 1)));
        }
        let n_vertices = u32::try_from(dim)
            .ok()
            .and_then(|d| side.checked_pow(d))
            .ok_or_else(|| Error::SizeLimit(format!("{side}^{dim} vertices overflow")))?;
        let amps = n_vertices
            .checked_mul(2 * dim)
            .filter(|&a| a <= MAX_AMPLITUDES)
            .ok_or_else(|| Error::SizeLimit(format!("2*{dim}*{side}^{dim} amplitudes exceed {MAX_AMPLITUDES}")))?;
        debug_assert!(amps > 0);
        Ok(Self { dim, side, marked })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn marked(&self) -> &[usize] {
        &self.marked
    }

    /// N = n^d.
    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    /// Coin-space dimension 2d.
    #[inline]
    pub fn num_directions(&self) -> usize {
        2 * self.dim
    }

    #[inline]
    pub fn state_len(&self) -> usize {
        self.num_directions() * self.num_vertices()
    }

    /// Flat-index stride of axis `axis` (0-based).
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.side.pow((self.dim - 1 - axis) as u32)
    }

    pub fn flat_index(&self, x: &[usize]) -> Result<usize> {
        if x.len() != self.dim {
            return Err(invalid(format!("vertex has {} coordinates, lattice dimension is {}", x.len(), self.dim)));
        }
        let mut idx = 0;
        for &c in x {
            if c >= self.side {
                return Err(invalid(format!("coordinate {c} outside [0, {}]", self.side - 1)));
            }
            idx = idx * self.side + c;
        }
        Ok(idx)
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn coords(&self, mut idx: usize) -> Vec<usize> {
        let mut x = vec![0; self.dim];
        for c in x.iter_mut().rev() {
            *c = idx % self.side;
            idx /= self.side;
        }
        x
    }

    pub fn marked_index(&self) -> usize {
        self.marked.iter().fold(0, |acc, &c| acc * self.side + c)
    }

    /// Flat indices of the 2d nearest neighbours of vertex `idx`, in the
    /// order +e_1, -e_1, +e_2, -e_2, ...
    pub fn neighbours(&self, idx: usize) -> Vec<usize> {
        let x = self.coords(idx);
        let n = self.side;
        let mut out = Vec::with_capacity(2 * self.dim);
        for (axis, &xi) in x.iter().enumerate() {
            let s = self.stride(axis);
            let base = idx - xi * s;
            out.push(base + ((xi + 1) % n) * s);
            out.push(base + ((xi + n - 1) % n) * s);
        }
        out
    }
}
