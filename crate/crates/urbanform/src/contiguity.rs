//! Contiguity between tessellation cells.

use std::collections::BTreeMap;

use geo::{Coord, Polygon};
use rayon::prelude::*;
use rstar::primitives::{GeomWithData, Rectangle};
use rstar::RTree;
use serde::{Deserialize, Serialize};
use urbanform_core::ContiguityGraph;

use crate::error::Result;
use crate::geometry::{dist, intersect_segments, segment_distance, SegmentIntersection};
use crate::network::aabb;

/// Boundaries closer than this touch.
pub const TOUCH_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContiguityRule {
    /// Any shared boundary point.
    #[default]
    Queen,
    /// A shared boundary of positive length.
    Rook,
}

type EdgeEntry = GeomWithData<Rectangle<[f64; 2]>, (usize, Coord, Coord)>;

fn boundary_edges(i: usize, p: &Polygon) -> impl Iterator<Item = (usize, Coord, Coord)> + '_ {
    std::iter::once(p.exterior()).chain(p.interiors()).flat_map(move |r| r.0.windows(2).map(move |w| (i, w[0], w[1])))
}

/// Adjacency of cells whose boundaries meet within [`TOUCH_TOLERANCE`].
pub fn build_contiguity(cells: &[Polygon], rule: ContiguityRule) -> Result<ContiguityGraph> {
    let tree: RTree<EdgeEntry> = RTree::bulk_load(
        cells
            .iter()
            .enumerate()
            .flat_map(|(i, p)| boundary_edges(i, p))
            .map(|(i, a, b)| {
                let env = aabb(a, b, TOUCH_TOLERANCE);
                GeomWithData::new(Rectangle::from_corners(env.lower(), env.upper()), (i, a, b))
            })
            .collect(),
    );
    let per_cell: Vec<Vec<usize>> = cells
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            // Shared length per higher-numbered neighbour.
            let mut shared: BTreeMap<usize, f64> = BTreeMap::new();
            for (_, a, b) in boundary_edges(i, p) {
                for e in tree.locate_in_envelope_intersecting(&aabb(a, b, TOUCH_TOLERANCE)) {
                    let (j, c, d) = e.data;
                    if j <= i {
                        continue;
                    }
                    match rule {
                        ContiguityRule::Queen => {
                            if !shared.contains_key(&j) && segment_distance(a, b, c, d) <= TOUCH_TOLERANCE {
                                shared.insert(j, 0.0);
                            }
                        }
                        ContiguityRule::Rook => {
                            if let SegmentIntersection::Overlap { t, .. } =
                                intersect_segments(a, b, c, d, TOUCH_TOLERANCE)
                            {
                                *shared.entry(j).or_default() += (t.1 - t.0) * dist(a, b);
                            }
                        }
                    }
                }
            }
            shared
                .into_iter()
                .filter(|&(_, len)| rule == ContiguityRule::Queen || len > TOUCH_TOLERANCE)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let edges = per_cell.into_iter().enumerate().flat_map(|(i, js)| js.into_iter().map(move |j| (i, j)));
    Ok(ContiguityGraph::from_edges(cells.len(), edges)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use geo::polygon;

    fn square(x: f64, y: f64) -> Polygon {
        polygon![(x: x, y: y), (x: x + 1.0, y: y), (x: x + 1.0, y: y + 1.0), (x: x, y: y + 1.0)]
    }

    fn grid() -> Vec<Polygon> {
        (0..9).map(|i| square((i % 3) as f64, (i / 3) as f64)).collect()
    }

    #[test]
    fn queen_center_has_eight() {
        let g = build_contiguity(&grid(), ContiguityRule::Queen).unwrap();
        assert_eq!(g.degree(4), 8);
        assert_eq!(g.degree(0), 3);
    }

    #[test]
    fn rook_center_has_four() {
        let g = build_contiguity(&grid(), ContiguityRule::Rook).unwrap();
        assert_eq!(g.degree(4), 4);
        assert_eq!(g.degree(0), 2);
    }

    #[test]
    fn distant_cells_are_isolated() {
        let g = build_contiguity(&[square(0.0, 0.0), square(10.0, 0.0)], ContiguityRule::Queen).unwrap();
        assert_eq!((g.degree(0), g.degree(1)), (0, 0));
    }
}
