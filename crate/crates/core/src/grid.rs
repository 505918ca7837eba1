//! Regular lattices over a box and functions sampled on them.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform lattice `origin + h·i` with `counts[k]` nodes along axis `k`.
/// Node indices are flattened with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    origin: Vec<T>,
    step: T,
    counts: Vec<usize>,
}

impl<T: Scalar> Grid<T> {
    /// Smallest lattice of step `h` anchored at `lo` that reaches `hi`.
    pub fn covering(lo: &[T], hi: &[T], h: T) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "grid step",
                reason: format!("must be positive, got {h}"),
            });
        }
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        let counts = lo
            .iter()
            .zip(hi)
            .map(|(&l, &u)| ((u - l) / h).ceil().to_usize().unwrap_or(0) + 1)
            .collect();
        Ok(Self {
            origin: lo.to_vec(),
            step: h,
            counts,
        })
    }

    /// Lattice with explicit node counts per axis.
    pub fn with_counts(origin: Vec<T>, h: T, counts: Vec<usize>) -> Result<Self> {
        if !(h > T::zero()) || counts.contains(&0) || counts.len() != origin.len() {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("need positive step and node counts, got h = {h}, counts = {counts:?}"),
            });
        }
        Ok(Self { origin, step: h, counts })
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn origin(&self) -> &[T] {
        &self.origin
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Upper corner of the lattice.
    pub fn upper(&self) -> Vec<T> {
        self.origin
            .iter()
            .zip(&self.counts)
            .map(|(&o, &c)| o + self.step * T::from_count(c - 1))
            .collect()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            idx[k] = flat % self.counts[k];
            flat /= self.counts[k];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.counts).fold(0, |acc, (&i, &c)| acc * c + i)
    }

    pub fn node_at(&self, idx: &[usize]) -> Vec<T> {
        idx.iter()
            .zip(&self.origin)
            .map(|(&i, &o)| o + self.step * T::from_count(i))
            .collect()
    }

    pub fn node(&self, flat: usize) -> Vec<T> {
        self.node_at(&self.multi_index(flat))
    }

    pub fn contains(&self, x: &[T]) -> bool {
        let up = self.upper();
        x.iter()
            .zip(&self.origin)
            .zip(&up)
            .all(|((&v, &lo), &hi)| v >= lo && v <= hi)
    }

    /// Inclusive index range of nodes within `radius` of `x` along axis `k`,
    /// clipped to the lattice; `None` when empty.
    pub fn axis_window(&self, k: usize, x: T, radius: T) -> Option<(usize, usize)> {
        let lo = ((x - radius - self.origin[k]) / self.step).ceil();
        let hi = ((x + radius - self.origin[k]) / self.step).floor();
        let last = T::from_count(self.counts[k] - 1);
        let lo = lo.max(T::zero());
        let hi = hi.min(last);
        if lo > hi {
            return None;
        }
        Some((lo.to_usize()?, hi.to_usize()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    Linear,
    #[default]
    Cubic,
}

/// Node values on a [`Grid`]; evaluates to the tensor Lagrange interpolant
/// inside the box and to 0 outside.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction<T> {
    grid: Grid<T>,
    values: Vec<T>,
    interpolation: Interpolation,
}

impl<T: Scalar> SampledFunction<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: format!("non-finite value at node {i}"),
            });
        }
        Ok(Self {
            grid,
            values,
            interpolation: Interpolation::Cubic,
        })
    }

    pub fn zeros(grid: Grid<T>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![T::zero(); n],
            interpolation: Interpolation::Cubic,
        }
    }

    /// Samples `f` at every node, in parallel.
    pub fn from_fn(grid: Grid<T>, f: impl Fn(&[T]) -> T + Sync) -> Result<Self> {
        let values: Vec<T> = (0..grid.len()).into_par_iter().map(|i| f(&grid.node(i))).collect();
        Self::new(grid, values)
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest `|value|` over nodes where `keep` holds.
    pub fn sup_norm_where(&self, keep: impl Fn(&[T]) -> bool) -> T {
        (0..self.grid.len())
            .filter(|&i| keep(&self.grid.node(i)))
            .fold(T::zero(), |m, i| m.max(self.values[i].abs()))
    }

    pub fn eval(&self, x: &[T]) -> T {
        if !self.grid.contains(x) {
            return T::zero();
        }
        let (stencil, width) = match self.interpolation {
            Interpolation::Linear => (2usize, 0usize),
            Interpolation::Cubic => (4, 1),
        };
        let n = self.grid.dim();
        let h = self.grid.step;
        // per-axis first node and weights
        let mut starts = Vec::with_capacity(n);
        let mut weights: Vec<Vec<T>> = Vec::with_capacity(n);
        for k in 0..n {
            let count = self.grid.counts[k];
            let s = (x[k] - self.grid.origin[k]) / h;
            let cell = s.floor().to_usize().unwrap_or(0).min(count.saturating_sub(2));
            let size = stencil.min(count);
            let start = cell.saturating_sub(width).min(count - size);
            let nodes: Vec<T> = (0..size).map(|j| T::from_count(start + j)).collect();
            weights.push(lagrange_weights(&nodes, s));
            starts.push(start);
        }
        let mut acc = T::zero();
        let mut idx = vec![0usize; n];
        let total: usize = weights.iter().map(Vec::len).product();
        for m in 0..total {
            let mut rem = m;
            let mut w = T::one();
            for k in (0..n).rev() {
                let len = weights[k].len();
                let j = rem % len;
                rem /= len;
                idx[k] = starts[k] + j;
                w = w * weights[k][j];
            }
            acc = acc + w * self.values[self.grid.flat_index(&idx)];
        }
        acc
    }
}

fn lagrange_weights<T: Scalar>(nodes: &[T], s: T) -> Vec<T> {
    (0..nodes.len())
        .map(|j| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != j)
                .fold(T::one(), |acc, (_, &xm)| acc * (s - xm) / (nodes[j] - xm))
        })
        .collect()
}
