//! Hierarchical taxonomy of urban form types: centroids, Ward linkage,
//! cophenetic distances, dendrogram cuts and pooled multi-city trees.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::clustering::Standardization;
use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::table::Matrix;

/// Stored with every taxonomy so heights can be compared with other tools.
pub const HEIGHT_CONVENTION: &str = "ward: height = sqrt(2 * increase in within-cluster sum of squares)";

/// Per-label column means.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids {
    /// Labels that had at least one row, ascending.
    pub labels: Vec<usize>,
    /// One row per entry of `labels`.
    pub matrix: Matrix,
    /// Labels in `0..k` without rows.
    pub empty: Vec<usize>,
}

/// Means of the rows of `x` grouped by `labels` (values in `0..k`).
/// Labels without rows are dropped and listed in [`Centroids::empty`].
pub fn cluster_centroids(x: &Matrix, labels: &[usize], k: usize) -> Result<Centroids> {
    if labels.len() != x.rows() {
        return Err(Error::DimensionMismatch { expected: x.rows(), found: labels.len(), what: "label count" });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::InvalidArgument(format!("label {bad} outside 0..{k}")));
    }
    let d = x.cols();
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, v) in sums[l * d..(l + 1) * d].iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    let mut kept = Vec::new();
    let mut empty = Vec::new();
    let mut data = Vec::new();
    for l in 0..k {
        if counts[l] == 0 {
            empty.push(l);
            continue;
        }
        kept.push(l);
        data.extend(sums[l * d..(l + 1) * d].iter().map(|s| s / counts[l] as f64));
    }
    let matrix = Matrix::from_vec(kept.len(), d, data)?;
    Ok(Centroids { labels: kept, matrix, empty })
}

/// A dendrogram leaf: one urban form type, optionally tagged by city.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Leaf {
    pub type_id: usize,
    pub city: Option<String>,
}

impl Leaf {
    pub fn name(&self) -> String {
        match &self.city {
            Some(c) => format!("{c}_{}", self.type_id),
            None => self.type_id.to_string(),
        }
    }
}

/// One agglomeration. Leaves are clusters `0..n`; the `m`-th merge creates
/// cluster `n + m`. `left < right`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    /// Number of leaves under the new cluster.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Taxonomy {
    pub leaves: Vec<Leaf>,
    pub merges: Vec<Merge>,
    /// Leaf centroids in the space the linkage was computed in.
    pub centroids: Matrix,
    pub height_convention: String,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Ward agglomeration over Euclidean distances with the Lance-Williams
/// update. Among equally close pairs the lexicographically smallest pair of
/// cluster ids merges first.
pub fn ward_linkage(centroids: &Matrix, leaves: Vec<Leaf>) -> Result<Taxonomy> {
    let n = centroids.rows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("ward linkage needs at least 2 centroids, got {n}")));
    }
    if leaves.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: leaves.len(), what: "leaf count" });
    }
    let total = 2 * n - 1;
    // Squared Ward distances between active clusters, indexed by cluster id.
    let mut dist = vec![0.0; total * total];
    for i in 0..n {
        for j in 0..i {
            let v = squared_distance(centroids.row(i), centroids.row(j));
            dist[i * total + j] = v;
            dist[j * total + i] = v;
        }
    }
    let mut size = vec![0usize; total];
    size[..n].iter_mut().for_each(|s| *s = 1);
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);
    for m in 0..n - 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for (a, &i) in active.iter().enumerate() {
            for &j in &active[a + 1..] {
                let v = dist[i * total + j];
                if best.is_none_or(|(bv, _, _)| v < bv) {
                    best = Some((v, i, j));
                }
            }
        }
        let (v, i, j) = best.expect("at least two active clusters");
        let new = n + m;
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for &k in &active {
            if k == i || k == j {
                continue;
            }
            let nk = size[k] as f64;
            let updated = ((ni + nk) * dist[i * total + k] + (nj + nk) * dist[j * total + k] - nk * v) / (ni + nj + nk);
            let updated = updated.max(0.0);
            dist[new * total + k] = updated;
            dist[k * total + new] = updated;
        }
        size[new] = size[i] + size[j];
        active.retain(|&k| k != i && k != j);
        active.push(new);
        merges.push(Merge { left: i, right: j, height: sqrt(v), size: size[new] });
    }
    Ok(Taxonomy { leaves, merges, centroids: centroids.clone(), height_convention: HEIGHT_CONVENTION.into() })
}

impl Taxonomy {
    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Leaves under every cluster id, leaves first then merges.
    fn members(&self) -> Vec<Vec<usize>> {
        let n = self.leaf_count();
        let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for m in &self.merges {
            let mut joined = members[m.left].clone();
            joined.extend_from_slice(&members[m.right]);
            joined.sort_unstable();
            members.push(joined);
        }
        members
    }

    /// Height of the lowest merge joining each pair of leaves.
    pub fn cophenetic(&self) -> Matrix {
        let n = self.leaf_count();
        let members = self.members();
        let mut out = Matrix::zeros(n, n);
        for m in &self.merges {
            for &a in &members[m.left] {
                for &b in &members[m.right] {
                    out.set(a, b, m.height);
                    out.set(b, a, m.height);
                }
            }
        }
        out
    }

    /// Pearson correlation between cophenetic and centroid distances over
    /// all leaf pairs. `None` when either has no variance.
    pub fn cophenetic_correlation(&self) -> Option<f64> {
        let n = self.leaf_count();
        let coph = self.cophenetic();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..n {
            for j in 0..i {
                a.push(coph.get(i, j));
                b.push(sqrt(squared_distance(self.centroids.row(i), self.centroids.row(j))));
            }
        }
        let len = a.len() as f64;
        let ma = a.iter().sum::<f64>() / len;
        let mb = b.iter().sum::<f64>() / len;
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
        (va > 0.0 && vb > 0.0).then(|| cov / sqrt(va * vb))
    }

    /// Leaf-to-branch map with exactly `branches` groups, obtained by
    /// applying the first `leaves - branches` merges. Branches are numbered
    /// by their first leaf.
    pub fn cut(&self, branches: usize) -> Result<Vec<usize>> {
        let n = self.leaf_count();
        if branches == 0 || branches > n {
            return Err(Error::InvalidArgument(format!("cannot cut {n} leaves into {branches} branches")));
        }
        let mut parent: Vec<usize> = (0..2 * n - 1).collect();
        for (m, merge) in self.merges.iter().take(n - branches).enumerate() {
            parent[merge.left] = n + m;
            parent[merge.right] = n + m;
        }
        let root = |mut c: usize| {
            while parent[c] != c {
                c = parent[c];
            }
            c
        };
        let roots: Vec<usize> = (0..n).map(root).collect();
        let mut seen: Vec<usize> = Vec::new();
        Ok(roots
            .iter()
            .map(|r| match seen.iter().position(|s| s == r) {
                Some(p) => p,
                None => {
                    seen.push(*r);
                    seen.len() - 1
                }
            })
            .collect())
    }

    /// Newick string with branch lengths equal to the height difference
    /// between parent and child.
    pub fn newick(&self) -> String {
        let n = self.leaf_count();
        let heights: Vec<f64> = (0..n).map(|_| 0.0).chain(self.merges.iter().map(|m| m.height)).collect();
        let root = 2 * n - 2;
        let mut out = String::new();
        self.write_newick(root, &heights, &mut out);
        out.push(';');
        out
    }

    fn write_newick(&self, node: usize, heights: &[f64], out: &mut String) {
        let n = self.leaf_count();
        if node < n {
            out.push_str(&newick_label(&self.leaves[node].name()));
            return;
        }
        let m = &self.merges[node - n];
        out.push('(');
        for (i, child) in [m.left, m.right].into_iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            self.write_newick(child, heights, out);
            out.push_str(&format!(":{}", heights[node] - heights[child]));
        }
        out.push(')');
    }
}

fn newick_label(name: &str) -> String {
    if name.chars().any(|c| matches!(c, ' ' | '(' | ')' | ',' | ':' | ';' | '\'' | '[' | ']')) {
        format!("'{}'", name.replace('\'', "''"))
    } else {
        name.into()
    }
}

/// One city's contribution to a pooled taxonomy.
#[derive(Debug, Clone, PartialEq)]
pub struct CityPool {
    pub city: String,
    pub columns: Vec<String>,
    /// Type ids, one per centroid row.
    pub type_ids: Vec<usize>,
    /// Raw (unstandardised) centroids.
    pub centroids: Matrix,
}

/// How pooled centroids are brought onto a common scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoolScaling {
    /// One z-score over the union of all cities' centroids.
    #[default]
    Pooled,
    /// Each city standardised on its own centroids.
    PerCity,
}

/// Ward taxonomy over the union of several cities' types. All cities must
/// share the same column schema.
pub fn combine_pools(pools: &[CityPool], scaling: PoolScaling) -> Result<Taxonomy> {
    let first = pools.first().ok_or(Error::EmptyInput("no city pools"))?;
    let mut differing: Vec<String> = Vec::new();
    for pool in &pools[1..] {
        for c in pool.columns.iter().filter(|c| !first.columns.contains(c)) {
            differing.push(format!("{}: {c}", pool.city));
        }
        for c in first.columns.iter().filter(|c| !pool.columns.contains(c)) {
            differing.push(format!("{}: {c}", first.city));
        }
        if differing.is_empty() && pool.columns != first.columns {
            differing.push(format!("{}: column order differs", pool.city));
        }
    }
    if !differing.is_empty() {
        differing.sort();
        differing.dedup();
        return Err(Error::SchemaMismatch { differing });
    }
    for pool in pools {
        if pool.centroids.cols() != first.columns.len() {
            return Err(Error::DimensionMismatch {
                expected: first.columns.len(),
                found: pool.centroids.cols(),
                what: "centroid columns",
            });
        }
        if pool.type_ids.len() != pool.centroids.rows() {
            return Err(Error::DimensionMismatch {
                expected: pool.centroids.rows(),
                found: pool.type_ids.len(),
                what: "type ids",
            });
        }
    }
    let stack = |mats: &[Matrix]| -> Result<Matrix> {
        let rows: usize = mats.iter().map(Matrix::rows).sum();
        let data: Vec<f64> = mats.iter().flat_map(|m| m.as_slice().iter().copied()).collect();
        Matrix::from_vec(rows, first.columns.len(), data)
    };
    let raw: Vec<Matrix> = pools.iter().map(|p| p.centroids.clone()).collect();
    let scaled = match scaling {
        PoolScaling::Pooled => {
            let all = stack(&raw)?;
            Standardization::fit(&all).apply(&all)
        }
        PoolScaling::PerCity => {
            let per: Vec<Matrix> = raw.iter().map(|m| Standardization::fit(m).apply(m)).collect();
            stack(&per)?
        }
    };
    let leaves = pools
        .iter()
        .flat_map(|p| p.type_ids.iter().map(|&t| Leaf { type_id: t, city: Some(p.city.clone()) }))
        .collect();
    ward_linkage(&scaled, leaves)
}

/// Leaves `0..n` without city tags.
pub fn plain_leaves(type_ids: &[usize]) -> Vec<Leaf> {
    type_ids.iter().map(|&t| Leaf { type_id: t, city: None }).collect()
}
