//! Planar street network and the links from cells and buildings to it.

use std::collections::HashMap;

use geo::Coord;
use rstar::primitives::{GeomWithData, Line, Rectangle};
use rstar::{RTree, AABB};

use crate::geometry::{direction_mod90, dist, intersect_segments, point_segment_distance, SegmentIntersection};

pub const DEFAULT_SNAP_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: usize,
    pub coords: Vec<Coord>,
    pub start: usize,
    pub end: usize,
    pub length: f64,
}

impl Segment {
    /// Azimuth of the chord between the end nodes, modulo 90 degrees.
    pub fn azimuth_mod90(&self) -> f64 {
        direction_mod90(self.coords[0], self.coords[self.coords.len() - 1])
    }

    /// Straight-line distance between the ends over the length.
    pub fn linearity(&self) -> f64 {
        dist(self.coords[0], self.coords[self.coords.len() - 1]) / self.length
    }

    pub fn other_end(&self, node: usize) -> usize {
        if self.start == node {
            self.end
        } else {
            self.start
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StreetNetwork {
    pub nodes: Vec<Coord>,
    pub segments: Vec<Segment>,
}

type Envelope = GeomWithData<Rectangle<[f64; 2]>, usize>;

fn envelope(a: Coord, b: Coord, pad: f64, data: usize) -> Envelope {
    GeomWithData::new(
        Rectangle::from_corners([a.x.min(b.x) - pad, a.y.min(b.y) - pad], [a.x.max(b.x) + pad, a.y.max(b.y) + pad]),
        data,
    )
}

/// Greedy snapping: a point joins the first node within `tol`, otherwise it
/// becomes a node. Nodes are therefore pairwise more than `tol` apart.
struct Snapper {
    tol: f64,
    grid: HashMap<(i64, i64), Vec<usize>>,
    nodes: Vec<Coord>,
}

impl Snapper {
    fn new(tol: f64) -> Self {
        Self { tol: tol.max(1e-9), grid: HashMap::new(), nodes: Vec::new() }
    }

    fn cell(&self, p: Coord) -> (i64, i64) {
        ((p.x / self.tol).floor() as i64, (p.y / self.tol).floor() as i64)
    }

    fn snap(&mut self, p: Coord) -> usize {
        let (cx, cy) = self.cell(p);
        let mut best: Option<usize> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for &n in self.grid.get(&(cx + dx, cy + dy)).into_iter().flatten() {
                    if dist(self.nodes[n], p) <= self.tol && best.is_none_or(|b| n < b) {
                        best = Some(n);
                    }
                }
            }
        }
        best.unwrap_or_else(|| {
            self.nodes.push(p);
            let id = self.nodes.len() - 1;
            self.grid.entry((cx, cy)).or_default().push(id);
            id
        })
    }
}

fn polyline_length(coords: &[Coord]) -> f64 {
    coords.windows(2).map(|w| dist(w[0], w[1])).sum()
}

fn near_polyline(p: Coord, line: &[Coord], tol: f64) -> bool {
    line.windows(2).any(|w| point_segment_distance(p, w[0], w[1]) <= tol)
}

fn same_geometry(a: &[Coord], b: &[Coord], tol: f64) -> bool {
    a.iter().all(|&p| near_polyline(p, b, tol)) && b.iter().all(|&p| near_polyline(p, a, tol))
}

impl StreetNetwork {
    /// Splits lines at crossings, T-junctions and overlap ends, snaps
    /// endpoints within `tol`, drops zero-length pieces, splits self-loops
    /// and removes geometric duplicates. Degree-2 nodes are kept.
    pub fn planarize(lines: &[Vec<Coord>], tol: f64) -> Self {
        let lines: Vec<Vec<Coord>> = lines
            .iter()
            .map(|l| {
                let mut c = l.clone();
                c.dedup();
                c
            })
            .filter(|l| l.len() >= 2)
            .collect();
        // (line, vertex index) of every piece.
        let pieces: Vec<(usize, usize)> =
            lines.iter().enumerate().flat_map(|(li, l)| (0..l.len() - 1).map(move |k| (li, k))).collect();
        let ends = |i: usize| {
            let (li, k) = pieces[i];
            (lines[li][k], lines[li][k + 1])
        };
        let tree = RTree::bulk_load(
            (0..pieces.len())
                .map(|i| {
                    let (a, b) = ends(i);
                    envelope(a, b, tol, i)
                })
                .collect(),
        );

        // Cut positions per line as (piece index within line, t, point).
        let mut cuts: Vec<Vec<(usize, f64, Coord)>> = vec![Vec::new(); lines.len()];
        for i in 0..pieces.len() {
            let (a, b) = ends(i);
            let (li, ki) = pieces[i];
            let mut candidates: Vec<usize> =
                tree.locate_in_envelope_intersecting(&aabb(a, b, tol)).map(|e| e.data).filter(|&j| j > i).collect();
            candidates.sort_unstable();
            for j in candidates {
                let (lj, kj) = pieces[j];
                if li == lj {
                    let last = lines[li].len() - 2;
                    let closed = lines[li][0] == lines[li][last + 1];
                    if kj == ki + 1 || (closed && ki == 0 && kj == last) {
                        continue;
                    }
                }
                let (c, d) = ends(j);
                match intersect_segments(a, b, c, d, tol) {
                    SegmentIntersection::None => {}
                    SegmentIntersection::Point { point, t, u } => {
                        cuts[li].push((ki, t, point));
                        cuts[lj].push((kj, u, point));
                    }
                    SegmentIntersection::Overlap { t, u } => {
                        for tt in [t.0, t.1] {
                            cuts[li].push((ki, tt, a + (b - a) * tt));
                        }
                        for uu in [u.0, u.1] {
                            cuts[lj].push((kj, uu, c + (d - c) * uu));
                        }
                    }
                }
            }
        }

        let mut raw: Vec<Vec<Coord>> = Vec::new();
        for (li, line) in lines.iter().enumerate() {
            let mut vertex_cut = vec![false; line.len()];
            vertex_cut[0] = true;
            vertex_cut[line.len() - 1] = true;
            let mut interior: Vec<Vec<(f64, Coord)>> = vec![Vec::new(); line.len() - 1];
            for &(k, t, p) in &cuts[li] {
                let len = dist(line[k], line[k + 1]);
                if t * len <= 1e-9 {
                    vertex_cut[k] = true;
                } else if (1.0 - t) * len <= 1e-9 {
                    vertex_cut[k + 1] = true;
                } else {
                    interior[k].push((t, p));
                }
            }
            let mut current = vec![line[0]];
            let mut flush = |current: &mut Vec<Coord>, p: Coord| {
                current.push(p);
                raw.push(std::mem::replace(current, vec![p]));
            };
            for k in 0..line.len() - 1 {
                interior[k].sort_by(|x, y| x.0.total_cmp(&y.0));
                interior[k].dedup_by(|x, y| x.0 == y.0);
                for &(_, p) in &interior[k] {
                    flush(&mut current, p);
                }
                if vertex_cut[k + 1] {
                    flush(&mut current, line[k + 1]);
                } else {
                    current.push(line[k + 1]);
                }
            }
        }

        let mut snapper = Snapper::new(tol);
        let mut segments: Vec<Segment> = Vec::new();
        let push = |coords: Vec<Coord>, start: usize, end: usize, segments: &mut Vec<Segment>| {
            let length = polyline_length(&coords);
            segments.push(Segment { id: 0, coords, start, end, length });
        };
        for mut coords in raw {
            let start = snapper.snap(coords[0]);
            let end = snapper.snap(coords[coords.len() - 1]);
            coords[0] = snapper.nodes[start];
            let last = coords.len() - 1;
            coords[last] = snapper.nodes[end];
            coords.dedup();
            if coords.len() < 2 {
                continue;
            }
            if start != end {
                push(coords, start, end, &mut segments);
                continue;
            }
            if coords.len() < 3 || polyline_length(&coords) <= snapper.tol {
                continue;
            }
            let mid = coords.len() / 2;
            let m = snapper.snap(coords[mid]);
            if m == start {
                continue;
            }
            let mut first = coords[..=mid].to_vec();
            let mut second = coords[mid..].to_vec();
            first[mid] = snapper.nodes[m];
            second[0] = snapper.nodes[m];
            push(first, start, m, &mut segments);
            push(second, m, end, &mut segments);
        }

        let mut kept: Vec<Segment> = Vec::new();
        let mut by_ends: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for s in segments {
            let key = (s.start.min(s.end), s.start.max(s.end));
            let slot = by_ends.entry(key).or_default();
            if slot.iter().any(|&k| same_geometry(&kept[k].coords, &s.coords, snapper.tol)) {
                continue;
            }
            slot.push(kept.len());
            kept.push(s);
        }

        // Compact nodes to those still in use, in order of first use.
        let mut remap: Vec<Option<usize>> = vec![None; snapper.nodes.len()];
        let mut nodes = Vec::new();
        let mut id_of = |n: usize| {
            *remap[n].get_or_insert_with(|| {
                nodes.push(snapper.nodes[n]);
                nodes.len() - 1
            })
        };
        for (id, s) in kept.iter_mut().enumerate() {
            s.id = id;
            s.start = id_of(s.start);
            s.end = id_of(s.end);
        }
        Self { nodes, segments: kept }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Per node: (neighbour node, segment id), in segment order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for s in &self.segments {
            adj[s.start].push((s.end, s.id));
            adj[s.end].push((s.start, s.id));
        }
        adj
    }

    /// Number of segment ends at each node; a loop counts twice.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for s in &self.segments {
            deg[s.start] += 1;
            deg[s.end] += 1;
        }
        deg
    }

    /// Nodes within `k` steps of `node` and the segments between them.
    pub fn subgraph(&self, adjacency: &[Vec<(usize, usize)>], node: usize, k: usize) -> (Vec<usize>, Vec<usize>) {
        let mut depth: HashMap<usize, usize> = HashMap::from([(node, 0)]);
        let mut frontier = vec![node];
        for step in 1..=k {
            let mut next = Vec::new();
            for &n in &frontier {
                for &(m, _) in &adjacency[n] {
                    if let std::collections::hash_map::Entry::Vacant(e) = depth.entry(m) {
                        e.insert(step);
                        next.push(m);
                    }
                }
            }
            frontier = next;
        }
        let mut nodes: Vec<usize> = depth.keys().copied().collect();
        nodes.sort_unstable();
        let mut edges: Vec<usize> = nodes
            .iter()
            .flat_map(|&n| adjacency[n].iter().filter(|(m, _)| depth.contains_key(m)).map(|&(_, s)| s))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        (nodes, edges)
    }
}

/// A street network with every cell linked to its nearest node and every
/// building to its nearest segment. `None` links mean the network is empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkGraph {
    pub network: StreetNetwork,
    pub cell_node: Vec<Option<usize>>,
    pub building_segment: Vec<Option<usize>>,
}

/// Euclidean links from cell centroids to nodes and building centroids to
/// segments. Equidistant candidates resolve to the lower id.
pub fn build_street_graph(network: StreetNetwork, cell_points: &[Coord], building_points: &[Coord]) -> NetworkGraph {
    let cell_node = nearest_nodes(&network, cell_points);
    let building_segment = nearest_segments(&network, building_points);
    NetworkGraph { network, cell_node, building_segment }
}

fn nearest_nodes(network: &StreetNetwork, points: &[Coord]) -> Vec<Option<usize>> {
    let tree: RTree<GeomWithData<[f64; 2], usize>> =
        RTree::bulk_load(network.nodes.iter().enumerate().map(|(i, c)| GeomWithData::new([c.x, c.y], i)).collect());
    points
        .iter()
        .map(|p| {
            let mut best: Option<(f64, usize)> = None;
            for (node, d2) in tree.nearest_neighbor_iter_with_distance_2(&[p.x, p.y]) {
                match best {
                    Some((bd, _)) if d2 > bd => break,
                    Some((_, bi)) if node.data >= bi => {}
                    _ => best = Some((d2, node.data)),
                }
            }
            best.map(|(_, i)| i)
        })
        .collect()
}

fn nearest_segments(network: &StreetNetwork, points: &[Coord]) -> Vec<Option<usize>> {
    let tree: RTree<GeomWithData<Line<[f64; 2]>, usize>> = RTree::bulk_load(
        network
            .segments
            .iter()
            .flat_map(|s| {
                s.coords.windows(2).map(move |w| GeomWithData::new(Line::new([w[0].x, w[0].y], [w[1].x, w[1].y]), s.id))
            })
            .collect(),
    );
    points
        .iter()
        .map(|p| {
            let mut best: Option<(f64, usize)> = None;
            for (piece, d2) in tree.nearest_neighbor_iter_with_distance_2(&[p.x, p.y]) {
                match best {
                    Some((bd, _)) if d2 > bd => break,
                    Some((_, bi)) if piece.data >= bi => {}
                    _ => best = Some((d2, piece.data)),
                }
            }
            best.map(|(_, i)| i)
        })
        .collect()
}

/// Envelope helper for other modules.
pub(crate) fn aabb(a: Coord, b: Coord, pad: f64) -> AABB<[f64; 2]> {
    AABB::from_corners([a.x.min(b.x) - pad, a.y.min(b.y) - pad], [a.x.max(b.x) + pad, a.y.max(b.y) + pad])
}
