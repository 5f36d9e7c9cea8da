//! Contiguity graph over tessellation cells and k-order neighbourhoods.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Symmetric, irreflexive adjacency stored in compressed sparse rows.
/// Neighbour lists are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContiguityGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl ContiguityGraph {
    /// Builds the graph from undirected pairs. Self-loops and duplicates are
    /// dropped and every pair is stored in both directions.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut lists: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
        for (a, b) in edges {
            if a >= n {
                return Err(Error::UnknownCell(a));
            }
            if b >= n {
                return Err(Error::UnknownCell(b));
            }
            if a != b {
                lists[a].push(b);
                lists[b].push(a);
            }
        }
        Ok(Self::from_lists(lists))
    }

    fn from_lists(mut lists: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for list in lists.iter_mut() {
            list.sort_unstable();
            list.dedup();
            targets.extend_from_slice(list);
            offsets.push(targets.len());
        }
        Self { offsets, targets }
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn neighbors(&self, cell: usize) -> &[usize] {
        &self.targets[self.offsets[cell]..self.offsets[cell + 1]]
    }

    #[inline]
    pub fn degree(&self, cell: usize) -> usize {
        self.offsets[cell + 1] - self.offsets[cell]
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Undirected edges `(i, j)` with `i < j`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len())
            .flat_map(move |i| self.neighbors(i).iter().copied().filter(move |&j| j > i).map(move |j| (i, j)))
    }

    /// All cells within `k` contiguity steps of `cell`, including `cell`,
    /// sorted ascending.
    ///
    /// With `blocks`, traversal only enters cells carrying the same block
    /// label as `cell`. `None` labels (cells outside every block) form a
    /// group of their own.
    pub fn k_order_neighbourhood(&self, cell: usize, k: usize, blocks: Option<&[Option<usize>]>) -> Result<Vec<usize>> {
        if cell >= self.len() {
            return Err(Error::UnknownCell(cell));
        }
        if let Some(b) = blocks {
            if b.len() != self.len() {
                return Err(Error::DimensionMismatch { expected: self.len(), found: b.len(), what: "block labels" });
            }
        }
        Ok(self.ball(cell, k, blocks))
    }

    pub(crate) fn ball(&self, cell: usize, k: usize, blocks: Option<&[Option<usize>]>) -> Vec<usize> {
        let home = blocks.map(|b| b[cell]);
        let mut visited: Vec<usize> = alloc::vec![cell];
        let mut frontier: Vec<usize> = alloc::vec![cell];
        for _ in 0..k {
            let mut next = Vec::new();
            for &c in &frontier {
                for &n in self.neighbors(c) {
                    if let (Some(b), Some(h)) = (blocks, home) {
                        if b[n] != h {
                            continue;
                        }
                    }
                    if let Err(pos) = visited.binary_search(&n) {
                        visited.insert(pos, n);
                        next.push(n);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        visited
    }

    /// Balls of radius `k` around every cell.
    pub fn all_balls(&self, k: usize, blocks: Option<&[Option<usize>]>) -> Result<Vec<Vec<usize>>> {
        if let Some(b) = blocks {
            if b.len() != self.len() {
                return Err(Error::DimensionMismatch { expected: self.len(), found: b.len(), what: "block labels" });
            }
        }
        Ok(crate::par::map_range(self.len(), |i| self.ball(i, k, blocks)))
    }

    /// Checks symmetry and irreflexivity.
    pub fn is_consistent(&self) -> bool {
        (0..self.len())
            .all(|i| self.neighbors(i).iter().all(|&j| j != i && self.neighbors(j).binary_search(&i).is_ok()))
    }
}
