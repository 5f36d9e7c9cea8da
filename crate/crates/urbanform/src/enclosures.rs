//! Street-bounded enclosures (blocks) and the cell to block assignment.

use geo::{Area, BooleanOps, BoundingRect, Contains, Coord, LineString, Point, Polygon};
use rayon::prelude::*;
use rstar::primitives::{GeomWithData, Rectangle};
use rstar::RTree;

use crate::geometry::{normalize_polygon, point_segment_distance, ring_signed_area};
use crate::network::{aabb, StreetNetwork};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockSet {
    /// Block id is the index.
    pub blocks: Vec<Polygon>,
    pub warnings: Vec<String>,
}

impl BlockSet {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

fn on_or_inside(extent: &Polygon, p: Coord, tol: f64) -> bool {
    extent.contains(&Point(p))
        || std::iter::once(extent.exterior())
            .chain(extent.interiors())
            .any(|r| r.0.windows(2).any(|w| point_segment_distance(p, w[0], w[1]) <= tol))
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Faces of the street network noded with the extent boundary. Streets
/// outside the extent and dangling ends are ignored; street components
/// floating inside a face become holes of that face.
pub fn generate_enclosures(streets: &StreetNetwork, extent: &Polygon, tol: f64) -> BlockSet {
    let extent = normalize_polygon(extent);
    let mut lines: Vec<Vec<Coord>> = streets.segments.iter().map(|s| s.coords.clone()).collect();
    lines.push(extent.exterior().0.clone());
    lines.extend(extent.interiors().iter().map(|r| r.0.clone()));
    let net = StreetNetwork::planarize(&lines, tol);

    let mut alive: Vec<bool> = net
        .segments
        .iter()
        .map(|s| on_or_inside(&extent, s.coords[0] + (s.coords[1] - s.coords[0]) * 0.5, tol))
        .collect();
    loop {
        let mut degree = vec![0usize; net.nodes.len()];
        for s in net.segments.iter().filter(|s| alive[s.id]) {
            degree[s.start] += 1;
            degree[s.end] += 1;
        }
        let mut changed = false;
        for s in &net.segments {
            if alive[s.id] && (degree[s.start] == 1 || degree[s.end] == 1) {
                alive[s.id] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Half-edge 2s runs start to end, 2s + 1 back.
    let half_coords = |h: usize| -> Vec<Coord> {
        let c = &net.segments[h / 2].coords;
        if h.is_multiple_of(2) {
            c.clone()
        } else {
            c.iter().rev().copied().collect()
        }
    };
    let tail = |h: usize| if h.is_multiple_of(2) { net.segments[h / 2].start } else { net.segments[h / 2].end };
    let head = |h: usize| tail(h ^ 1);
    let mut outgoing: Vec<Vec<(f64, usize)>> = vec![Vec::new(); net.nodes.len()];
    for s in net.segments.iter().filter(|s| alive[s.id]) {
        for h in [2 * s.id, 2 * s.id + 1] {
            let c = half_coords(h);
            let d = c[1] - c[0];
            outgoing[tail(h)].push((d.y.atan2(d.x), h));
        }
    }
    for o in &mut outgoing {
        o.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    }
    let next = |h: usize| {
        let out = &outgoing[head(h)];
        let i = out.iter().position(|&(_, e)| e == h ^ 1).expect("twin leaves the head node");
        out[(i + out.len() - 1) % out.len()].1
    };

    let mut parent: Vec<usize> = (0..net.nodes.len()).collect();
    for s in net.segments.iter().filter(|s| alive[s.id]) {
        let (a, b) = (find(&mut parent, s.start), find(&mut parent, s.end));
        parent[a.max(b)] = a.min(b);
    }

    let mut visited = vec![false; 2 * net.segments.len()];
    let mut faces: Vec<(f64, Vec<Coord>, usize)> = Vec::new();
    let mut outlines: Vec<(f64, Vec<Coord>, usize)> = Vec::new();
    for s in net.segments.iter().filter(|s| alive[s.id]) {
        for start in [2 * s.id, 2 * s.id + 1] {
            if visited[start] {
                continue;
            }
            let mut ring = Vec::new();
            let mut h = start;
            while !visited[h] {
                visited[h] = true;
                let c = half_coords(h);
                ring.extend_from_slice(&c[..c.len() - 1]);
                h = next(h);
            }
            ring.push(ring[0]);
            let area = ring_signed_area(&ring);
            let component = find(&mut parent, tail(start));
            if area > 0.0 {
                faces.push((area, ring, component));
            } else if area < 0.0 {
                outlines.push((-area, ring, component));
            }
        }
    }

    let mut warnings = Vec::new();
    if streets.is_empty() {
        warnings.push("empty street network; the extent is the only block".to_string());
        log::warn!("{}", warnings[warnings.len() - 1]);
    }
    if faces.is_empty() {
        warnings.push("street network encloses no faces; the extent is the only block".to_string());
        log::warn!("{}", warnings[warnings.len() - 1]);
        return BlockSet { blocks: vec![extent], warnings };
    }
    // The largest outline is the extent itself; the others float in faces.
    outlines.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut holes: Vec<Vec<LineString>> = vec![Vec::new(); faces.len()];
    let shells: Vec<Polygon> =
        faces.iter().map(|(_, r, _)| Polygon::new(LineString::from(r.clone()), vec![])).collect();
    for (_, ring, component) in outlines.into_iter().skip(1) {
        let probe = Point(ring[0]);
        let host = (0..faces.len())
            .filter(|&f| faces[f].2 != component && shells[f].contains(&probe))
            .min_by(|&a, &b| faces[a].0.total_cmp(&faces[b].0));
        if let Some(f) = host {
            holes[f].push(LineString::from(ring));
        }
    }
    let blocks = faces
        .into_iter()
        .zip(holes)
        .map(|((_, ring, _), h)| normalize_polygon(&Polygon::new(LineString::from(ring), h)))
        .collect();
    BlockSet { blocks, warnings }
}

/// Each cell goes to the block it overlaps most; ties go to the lower id
/// and cells overlapping no block get `None`.
pub fn assign_cells_to_blocks(cells: &[Polygon], blocks: &BlockSet) -> Vec<Option<usize>> {
    let tree: RTree<GeomWithData<Rectangle<[f64; 2]>, usize>> = RTree::bulk_load(
        blocks
            .blocks
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.bounding_rect().map(|r| (i, r)))
            .map(|(i, r)| GeomWithData::new(Rectangle::from_corners([r.min().x, r.min().y], [r.max().x, r.max().y]), i))
            .collect(),
    );
    cells
        .par_iter()
        .map(|cell| {
            let r = cell.bounding_rect()?;
            let mut candidates: Vec<usize> =
                tree.locate_in_envelope_intersecting(&aabb(r.min(), r.max(), 0.0)).map(|e| e.data).collect();
            candidates.sort_unstable();
            let mut best: Option<(f64, usize)> = None;
            for b in candidates {
                let area = cell.intersection(&blocks.blocks[b]).unsigned_area();
                if area > 0.0 && best.is_none_or(|(a, _)| area > a) {
                    best = Some((area, b));
                }
            }
            best.map(|(_, b)| b)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use geo::polygon;

    fn square(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
        polygon![(x: x0, y: y0), (x: x1, y: y0), (x: x1, y: y1), (x: x0, y: y1)]
    }

    fn grid_lines(skip_interior: bool) -> Vec<Vec<Coord>> {
        let mut lines = Vec::new();
        for i in 0..4 {
            let v = i as f64 * 10.0;
            lines.push(vec![Coord { x: v, y: 0.0 }, Coord { x: v, y: 30.0 }]);
            for j in 0..3 {
                // Horizontal lines in unit pieces so one interior piece can go.
                if skip_interior && i == 1 && j == 1 {
                    continue;
                }
                lines.push(vec![Coord { x: j as f64 * 10.0, y: v }, Coord { x: (j + 1) as f64 * 10.0, y: v }]);
            }
        }
        lines
    }

    #[test]
    fn grid_has_nine_blocks() {
        let net = StreetNetwork::planarize(&grid_lines(false), 0.1);
        let blocks = generate_enclosures(&net, &square(0.0, 0.0, 30.0, 30.0), 0.1);
        assert_eq!(blocks.len(), 9);
        let total: f64 = blocks.blocks.iter().map(|b| b.unsigned_area()).sum();
        assert!((total - 900.0).abs() < 1e-9);
    }

    #[test]
    fn missing_segment_merges_two_blocks() {
        let net = StreetNetwork::planarize(&grid_lines(true), 0.1);
        let blocks = generate_enclosures(&net, &square(0.0, 0.0, 30.0, 30.0), 0.1);
        assert_eq!(blocks.len(), 8);
    }

    #[test]
    fn empty_network_gives_extent() {
        let blocks = generate_enclosures(&StreetNetwork::default(), &square(0.0, 0.0, 5.0, 5.0), 0.1);
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks.warnings.len(), 1);
        assert!((blocks.blocks[0].unsigned_area() - 25.0).abs() < 1e-12);
    }

    #[test]
    fn streets_outside_and_dangles_are_ignored() {
        let lines = vec![
            vec![Coord { x: 5.0, y: -10.0 }, Coord { x: 5.0, y: 20.0 }],
            vec![Coord { x: 2.0, y: 3.0 }, Coord { x: 4.0, y: 3.0 }],
        ];
        let net = StreetNetwork::planarize(&lines, 0.1);
        let blocks = generate_enclosures(&net, &square(0.0, 0.0, 10.0, 10.0), 0.1);
        assert_eq!(blocks.len(), 2);
    }

    #[test]
    fn floating_loop_is_a_hole() {
        let ring = vec![
            Coord { x: 4.0, y: 4.0 },
            Coord { x: 6.0, y: 4.0 },
            Coord { x: 6.0, y: 6.0 },
            Coord { x: 4.0, y: 6.0 },
            Coord { x: 4.0, y: 4.0 },
        ];
        let net = StreetNetwork::planarize(&[ring], 0.1);
        let blocks = generate_enclosures(&net, &square(0.0, 0.0, 10.0, 10.0), 0.1);
        assert_eq!(blocks.len(), 2);
        let areas: Vec<f64> = blocks.blocks.iter().map(|b| b.unsigned_area()).collect();
        assert!(areas.iter().any(|a| (a - 96.0).abs() < 1e-9), "{areas:?}");
    }

    #[test]
    fn assignment_by_largest_overlap() {
        let blocks =
            BlockSet { blocks: vec![square(0.0, 0.0, 7.0, 10.0), square(7.0, 0.0, 10.0, 10.0)], warnings: vec![] };
        let cells = vec![square(0.0, 0.0, 10.0, 1.0), square(8.0, 2.0, 9.0, 3.0), square(20.0, 20.0, 21.0, 21.0)];
        assert_eq!(assign_cells_to_blocks(&cells, &blocks), vec![Some(0), Some(1), None]);
        // Even split goes to the lower id.
        let even = vec![square(5.0, 0.0, 9.0, 1.0)];
        assert_eq!(assign_cells_to_blocks(&even, &blocks), vec![Some(0)]);
    }
}
