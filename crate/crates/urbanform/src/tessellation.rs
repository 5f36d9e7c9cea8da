//! Morphological tessellation: one cell per building, the land closer to
//! that building than to any other and within `limit` of it.
//!
//! Footprint boundaries are sampled densely, the Voronoi diagram of all
//! samples is computed once, and each building's cell is assembled as the
//! union of its samples' Voronoi regions clipped to a disc of radius
//! `limit`. That union is traced directly: Voronoi edges towards samples of
//! other buildings, plus the arcs of each sample's disc that bound the
//! region. Edges between samples of the same building are never emitted.
//!
//! Sample spacing along an edge never exceeds the gap to the nearest other
//! footprint, which keeps every footprint inside its own cell. Buildings
//! closer than [`TOUCH_GAP`] are resolved with polygon overlay afterwards.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::TAU;

use geo::{Area, BooleanOps, BoundingRect, Buffer, Coord, LineString, MultiPolygon, Polygon, Rect};
use rayon::prelude::*;
use rstar::primitives::{GeomWithData, Rectangle};
use rstar::RTree;
use serde::{Deserialize, Serialize};
use spade::handles::{FixedVertexHandle, VertexHandle};
use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::geometry::{dist, normalize_polygon, ring_signed_area, segment_distance};
use crate::ingest::BuildingSet;
use crate::network::aabb;

/// Footprints closer than this are treated as touching.
pub const TOUCH_GAP: f64 = 0.05;
/// Parts of a cell smaller than this are dropped.
pub const SLIVER_AREA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TessellationOptions {
    pub limit: f64,
    /// Maximum spacing of boundary samples.
    pub densify: f64,
    /// Inward erosion of footprints before sampling.
    pub erosion: f64,
    /// Samples sit this far inside their footprint.
    pub separation: f64,
    /// Maximum gap between a limit arc and its chords.
    pub arc_tolerance: f64,
}

impl Default for TessellationOptions {
    fn default() -> Self {
        Self { limit: 100.0, densify: 0.5, erosion: 0.0, separation: 1e-4, arc_tolerance: 0.01 }
    }
}

impl TessellationOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!("tessellation.{name} must be positive")))
            }
        };
        positive(self.limit, "limit")?;
        positive(self.densify, "densify")?;
        positive(self.separation, "separation")?;
        positive(self.arc_tolerance, "arc_tolerance")?;
        if !(self.erosion.is_finite() && self.erosion >= 0.0) {
            return Err(Error::config("tessellation.erosion must be zero or positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub building_id: String,
    pub polygon: Polygon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSet {
    /// In the order of the input buildings.
    pub cells: Vec<Cell>,
    pub limit: f64,
}

impl CellSet {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn polygons(&self) -> Vec<Polygon> {
        self.cells.iter().map(|c| c.polygon.clone()).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TessellationReport {
    pub sites: usize,
    /// Buildings that vanished under erosion and were used uneroded.
    pub erosion_fallback: Vec<String>,
    /// Pairs of footprints closer than the touch gap.
    pub touching_pairs: Vec<(String, String)>,
    pub dropped_parts: usize,
    pub dropped_area: f64,
}

#[derive(Debug, Clone, Copy)]
struct Site {
    position: Point2<f64>,
    /// Building index, or `usize::MAX` for frame sites.
    owner: usize,
}

impl HasPosition for Site {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.position
    }
}

const FRAME: usize = usize::MAX;

type Dt = DelaunayTriangulation<Site>;
type Vertex<'a> = VertexHandle<'a, Site>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Vertex(usize),
    Cross(usize, u8),
    Circle(usize),
}

struct Piece {
    from: Key,
    to: Key,
    points: Vec<Coord>,
}

/// Per-face circumcentre and whether it lies within `limit` of the face's
/// sites. Computed once so every site sees the same answer.
struct Faces {
    center: Vec<Coord>,
    inside: Vec<bool>,
}

fn coord(p: Point2<f64>) -> Coord {
    Coord { x: p.x, y: p.y }
}

fn largest_part(mp: MultiPolygon) -> (Option<Polygon>, usize, f64) {
    let mut parts: Vec<Polygon> = mp.0;
    parts.sort_by(|a, b| b.unsigned_area().total_cmp(&a.unsigned_area()));
    let mut it = parts.into_iter();
    let first = it.next();
    let (mut n, mut area) = (0, 0.0);
    for p in it {
        n += 1;
        area += p.unsigned_area();
    }
    (first, n, area)
}

fn eroded(footprints: &[Polygon], ids: &[String], erosion: f64, report: &mut TessellationReport) -> Vec<Polygon> {
    if erosion <= 0.0 {
        return footprints.to_vec();
    }
    footprints
        .iter()
        .zip(ids)
        .map(|(f, id)| match largest_part(f.buffer(-erosion)).0 {
            Some(p) if p.unsigned_area() > SLIVER_AREA => normalize_polygon(&p),
            _ => {
                log::warn!("building {id} vanishes under erosion {erosion}; using it uneroded");
                report.erosion_fallback.push(id.clone());
                f.clone()
            }
        })
        .collect()
}

type EdgeEntry = GeomWithData<Rectangle<[f64; 2]>, (usize, Coord, Coord)>;

fn rings(p: &Polygon) -> impl Iterator<Item = &LineString> {
    std::iter::once(p.exterior()).chain(p.interiors())
}

fn check_overlaps(footprints: &[Polygon], ids: &[String]) -> Result<()> {
    let boxes: Vec<Rect> = footprints.iter().map(|f| f.bounding_rect().expect("non-empty footprint")).collect();
    let tree: RTree<GeomWithData<Rectangle<[f64; 2]>, usize>> = RTree::bulk_load(
        boxes
            .iter()
            .enumerate()
            .map(|(i, r)| GeomWithData::new(Rectangle::from_corners([r.min().x, r.min().y], [r.max().x, r.max().y]), i))
            .collect(),
    );
    let found: Option<(usize, usize, f64)> = (0..footprints.len()).into_par_iter().find_map_first(|i| {
        let mut others: Vec<usize> = tree
            .locate_in_envelope_intersecting(&aabb(boxes[i].min(), boxes[i].max(), 0.0))
            .map(|e| e.data)
            .filter(|&j| j > i)
            .collect();
        others.sort_unstable();
        others.into_iter().find_map(|j| {
            let area = footprints[i].intersection(&footprints[j]).unsigned_area();
            (area > SLIVER_AREA).then_some((i, j, area))
        })
    });
    match found {
        Some((i, j, area)) => Err(Error::data(format!(
            "buildings {} and {} overlap by {area:.6} m²; raise tessellation.erosion or fix the footprints",
            ids[i], ids[j]
        ))),
        None => Ok(()),
    }
}

/// Boundary samples of every footprint and the touching pairs.
fn sample(footprints: &[Polygon], options: &TessellationOptions) -> (Vec<Site>, BTreeSet<(usize, usize)>) {
    let tree: RTree<EdgeEntry> = RTree::bulk_load(
        footprints
            .iter()
            .enumerate()
            .flat_map(|(b, f)| {
                rings(f).flat_map(move |r| {
                    r.0.windows(2).map(move |w| {
                        let env = aabb(w[0], w[1], 0.0);
                        GeomWithData::new(Rectangle::from_corners(env.lower(), env.upper()), (b, w[0], w[1]))
                    })
                })
            })
            .collect(),
    );
    let h = options.densify;
    let per_building: Vec<(Vec<Site>, Vec<usize>)> = footprints
        .par_iter()
        .enumerate()
        .map(|(b, f)| {
            let mut sites = Vec::new();
            let mut touching = Vec::new();
            for ring in rings(f) {
                let pts = &ring.0[..ring.0.len() - 1];
                let n = pts.len();
                let normal = |a: Coord, c: Coord| {
                    let d = c - a;
                    let len = d.x.hypot(d.y);
                    Coord { x: -d.y / len, y: d.x / len }
                };
                for i in 0..n {
                    let (a, c) = (pts[i], pts[(i + 1) % n]);
                    let prev = pts[(i + n - 1) % n];
                    let mut gap = f64::INFINITY;
                    for e in tree.locate_in_envelope_intersecting(&aabb(a, c, h)) {
                        let (other, p, q) = e.data;
                        if other != b {
                            let d = segment_distance(a, c, p, q);
                            if d < TOUCH_GAP {
                                touching.push(other);
                            }
                            gap = gap.min(d);
                        }
                    }
                    let spacing = if gap < TOUCH_GAP { h } else { h.min(gap) };
                    let len = dist(a, c);
                    let m = (len / spacing).ceil().max(1.0) as usize;
                    let nrm = normal(a, c);
                    let bis = normal(prev, a) + nrm;
                    let bl = bis.x.hypot(bis.y);
                    let corner = if bl > 1e-12 { bis / bl } else { nrm };
                    for k in 0..m {
                        let t = k as f64 / m as f64;
                        let p = a + (c - a) * t;
                        let inward = if k == 0 { corner } else { nrm };
                        let s = p + inward * options.separation;
                        sites.push(Site { position: Point2::new(s.x, s.y), owner: b });
                    }
                }
            }
            (sites, touching)
        })
        .collect();
    let mut sites = Vec::new();
    let mut pairs = BTreeSet::new();
    for (b, (s, t)) in per_building.into_iter().enumerate() {
        sites.extend(s);
        pairs.extend(t.into_iter().map(|o| (b.min(o), b.max(o))));
    }
    (sites, pairs)
}

/// Frame of sites far enough out that no building's clipped region sees it.
fn frame(footprints: &[Polygon], limit: f64) -> Vec<Site> {
    let mut min = Coord { x: f64::INFINITY, y: f64::INFINITY };
    let mut max = Coord { x: f64::NEG_INFINITY, y: f64::NEG_INFINITY };
    for r in footprints.iter().filter_map(|f| f.bounding_rect()) {
        min = Coord { x: min.x.min(r.min().x), y: min.y.min(r.min().y) };
        max = Coord { x: max.x.max(r.max().x), y: max.y.max(r.max().y) };
    }
    let pad = 3.0 * limit;
    let (x0, y0, x1, y1) = (min.x - pad, min.y - pad, max.x + pad, max.y + pad);
    let step = limit / 2.0;
    let nx = ((x1 - x0) / step).ceil() as usize;
    let ny = ((y1 - y0) / step).ceil() as usize;
    let mut out = Vec::with_capacity(2 * (nx + ny));
    let mut push = |x: f64, y: f64| out.push(Site { position: Point2::new(x, y), owner: FRAME });
    for i in 0..nx {
        let x = x0 + (x1 - x0) * i as f64 / nx as f64;
        push(x, y0);
        push(x1 + x0 - x, y1);
    }
    for j in 0..ny {
        let y = y0 + (y1 - y0) * j as f64 / ny as f64;
        push(x1, y);
        push(x0, y1 + y0 - y);
    }
    out
}

fn faces(dt: &Dt, limit: f64) -> Faces {
    let n = dt.num_all_faces();
    let mut center = vec![Coord { x: f64::NAN, y: f64::NAN }; n];
    let mut inside = vec![false; n];
    let l2 = limit * limit;
    for f in dt.inner_faces() {
        let (c, r2) = f.circumcircle();
        let i = f.fix().index();
        center[i] = coord(c);
        inside[i] = r2 <= l2;
    }
    Faces { center, inside }
}

struct Assembler<'a> {
    dt: &'a Dt,
    faces: &'a Faces,
    limit: f64,
    arc_step: f64,
}

impl Assembler<'_> {
    /// Crossings of a Voronoi edge with the limit circle, ordered from the
    /// edge's lower-index vertex. Both sites of the edge get the same points.
    fn crossings(&self, e: spade::handles::DirectedEdgeHandle<'_, Site, (), (), ()>) -> Vec<(Key, Coord)> {
        let canonical = if e.from().fix().index() < e.to().fix().index() { e } else { e.rev() };
        let fr = canonical.rev().face().fix().index();
        let fl = canonical.face().fix().index();
        let (a, b) = (self.faces.center[fr], self.faces.center[fl]);
        let (ain, bin) = (self.faces.inside[fr], self.faces.inside[fl]);
        if ain && bin {
            return Vec::new();
        }
        let s = coord(canonical.from().position());
        let edge = canonical.as_undirected().index();
        let d = b - a;
        let w = a - s;
        let qa = d.x * d.x + d.y * d.y;
        let qb = 2.0 * (w.x * d.x + w.y * d.y);
        let qc = w.x * w.x + w.y * w.y - self.limit * self.limit;
        let disc = qb * qb - 4.0 * qa * qc;
        let at = |t: f64| a + d * t;
        let mut out = Vec::new();
        if ain != bin {
            let t = if qa == 0.0 {
                0.0
            } else {
                let root = disc.max(0.0).sqrt();
                if ain {
                    (-qb + root) / (2.0 * qa)
                } else {
                    (-qb - root) / (2.0 * qa)
                }
            };
            out.push((Key::Cross(edge, 0), at(t.clamp(0.0, 1.0))));
        } else if qa > 0.0 && disc > 0.0 {
            let root = disc.sqrt();
            let t1 = (-qb - root) / (2.0 * qa);
            let t2 = (-qb + root) / (2.0 * qa);
            if t1 > 0.0 && t2 < 1.0 && t1 < t2 {
                out.push((Key::Cross(edge, 0), at(t1)));
                out.push((Key::Cross(edge, 1), at(t2)));
            }
        }
        if canonical != e {
            out.reverse();
        }
        out
    }

    fn arc(&self, center: Coord, from: Coord, to: Coord) -> Vec<Coord> {
        let a0 = (from.y - center.y).atan2(from.x - center.x);
        let a1 = (to.y - center.y).atan2(to.x - center.x);
        let mut sweep = (a1 - a0).rem_euclid(TAU);
        if sweep > TAU - 1e-12 {
            sweep = 0.0;
        }
        let m = (sweep / self.arc_step).ceil() as usize;
        let mut pts = vec![from];
        for k in 1..m {
            let a = a0 + sweep * k as f64 / m as f64;
            pts.push(Coord { x: center.x + self.limit * a.cos(), y: center.y + self.limit * a.sin() });
        }
        pts.push(to);
        pts
    }

    fn site_pieces(&self, v: Vertex<'_>, pieces: &mut Vec<Piece>) -> Result<()> {
        let owner = v.data().owner;
        let p = coord(v.position());
        // (key, point, inside after the event)
        let mut events: Vec<(Key, Coord, bool)> = Vec::new();
        let mut any_inside = false;
        for e in v.out_edges() {
            let (fr, fl) = (e.rev().face(), e.face());
            if fr.is_outer() || fl.is_outer() {
                return Err(Error::data("tessellation frame does not enclose a building sample"));
            }
            let (fr, fl) = (fr.fix().index(), fl.fix().index());
            let (ain, bin) = (self.faces.inside[fr], self.faces.inside[fl]);
            any_inside |= ain;
            let crossings = self.crossings(e);
            let mut state = ain;
            for &(key, point) in &crossings {
                state = !state;
                events.push((key, point, state));
            }
            if e.to().data().owner == owner {
                continue;
            }
            let (a, b) = (self.faces.center[fr], self.faces.center[fl]);
            let piece = match (ain, bin, crossings.as_slice()) {
                (true, true, _) => Piece { from: Key::Vertex(fr), to: Key::Vertex(fl), points: vec![a, b] },
                (true, false, [(k, x)]) => Piece { from: Key::Vertex(fr), to: *k, points: vec![a, *x] },
                (false, true, [(k, x)]) => Piece { from: *k, to: Key::Vertex(fl), points: vec![*x, b] },
                (false, false, [(k0, x0), (k1, x1)]) => Piece { from: *k0, to: *k1, points: vec![*x0, *x1] },
                _ => continue,
            };
            pieces.push(piece);
        }
        if events.is_empty() {
            if !any_inside {
                let idx = v.fix().index();
                let n = (TAU / self.arc_step).ceil().max(8.0) as usize;
                let mut pts: Vec<Coord> = (0..n)
                    .map(|k| {
                        let a = TAU * k as f64 / n as f64;
                        Coord { x: p.x + self.limit * a.cos(), y: p.y + self.limit * a.sin() }
                    })
                    .collect();
                pts.push(pts[0]);
                pieces.push(Piece { from: Key::Circle(idx), to: Key::Circle(idx), points: pts });
            }
            return Ok(());
        }
        let n = events.len();
        for i in 0..n {
            let (k0, x0, inside_after) = events[i];
            if inside_after {
                continue;
            }
            let (k1, x1, entering) = events[(i + 1) % n];
            if !entering {
                return Err(Error::data("inconsistent limit crossings while assembling a cell"));
            }
            pieces.push(Piece { from: k0, to: k1, points: self.arc(p, x0, x1) });
        }
        Ok(())
    }

    /// Chains pieces into rings; keeps the largest outer ring and the holes
    /// inside it.
    fn assemble(&self, sites: &[FixedVertexHandle], report: &mut (usize, f64)) -> Result<Option<Polygon>> {
        let mut pieces = Vec::new();
        for &s in sites {
            self.site_pieces(self.dt.vertex(s), &mut pieces)?;
        }
        let by_start: HashMap<Key, usize> = pieces.iter().enumerate().map(|(i, p)| (p.from, i)).collect();
        let mut used = vec![false; pieces.len()];
        let mut outers: Vec<(f64, Vec<Coord>)> = Vec::new();
        let mut holes: Vec<Vec<Coord>> = Vec::new();
        for start in 0..pieces.len() {
            if used[start] {
                continue;
            }
            let mut ring: Vec<Coord> = Vec::new();
            let mut i = start;
            loop {
                used[i] = true;
                let piece = &pieces[i];
                ring.extend_from_slice(&piece.points[..piece.points.len() - 1]);
                match by_start.get(&piece.to) {
                    Some(&next) if next == start => break,
                    Some(&next) if !used[next] => i = next,
                    _ => return Err(Error::data("open boundary while assembling a cell")),
                }
            }
            ring.dedup();
            if ring.len() < 3 {
                continue;
            }
            ring.push(ring[0]);
            let area = ring_signed_area(&ring);
            if area > 0.0 {
                outers.push((area, ring));
            } else if area < 0.0 {
                holes.push(ring);
            }
        }
        outers.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut outers = outers.into_iter();
        let Some((_, exterior)) = outers.next() else { return Ok(None) };
        for (area, _) in outers {
            report.0 += 1;
            report.1 += area;
        }
        let exterior = LineString::from(exterior);
        let shell = Polygon::new(exterior.clone(), vec![]);
        let mut kept = Vec::new();
        for h in holes {
            let area = -ring_signed_area(&h);
            if area >= SLIVER_AREA && geo::Contains::contains(&shell, &geo::Point(h[0])) {
                kept.push(LineString::from(h));
            } else {
                report.0 += 1;
            }
        }
        Ok(Some(Polygon::new(exterior, kept)))
    }
}

/// Computes one cell per building, returned in input order.
///
/// The result does not depend on input order or thread count: buildings
/// are processed in id order and every cell is assembled independently.
pub fn morphological_tessellation(
    buildings: &BuildingSet,
    options: &TessellationOptions,
) -> Result<(CellSet, TessellationReport)> {
    options.validate()?;
    let mut report = TessellationReport::default();
    if buildings.is_empty() {
        return Ok((CellSet { cells: Vec::new(), limit: options.limit }, report));
    }
    let mut order: Vec<usize> = (0..buildings.len()).collect();
    order.sort_by(|&a, &b| buildings.buildings[a].id.cmp(&buildings.buildings[b].id));
    let ids: Vec<String> = order.iter().map(|&i| buildings.buildings[i].id.clone()).collect();
    let originals: Vec<Polygon> = order.iter().map(|&i| normalize_polygon(&buildings.buildings[i].footprint)).collect();
    let footprints = eroded(&originals, &ids, options.erosion, &mut report);
    check_overlaps(&footprints, &ids)?;

    let (mut sites, touching) = sample(&footprints, options);
    report.sites = sites.len();
    report.touching_pairs = touching.iter().map(|&(a, b)| (ids[a].clone(), ids[b].clone())).collect();
    sites.extend(frame(&footprints, options.limit));
    let dt = Dt::bulk_load(sites).map_err(|e| Error::data(format!("triangulation failed: {e}")))?;
    let faces = faces(&dt, options.limit);

    let mut by_building: Vec<Vec<FixedVertexHandle>> = vec![Vec::new(); footprints.len()];
    for v in dt.vertices() {
        let owner = v.data().owner;
        if owner != FRAME {
            by_building[owner].push(v.fix());
        }
    }
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); footprints.len()];
    for &(a, b) in &touching {
        neighbours[a].push(b);
        neighbours[b].push(a);
    }

    let sagitta = options.arc_tolerance.min(options.limit);
    let arc_step = (2.0 * (1.0 - sagitta / options.limit).acos()).clamp(1e-4, std::f64::consts::FRAC_PI_2);
    let assembler = Assembler { dt: &dt, faces: &faces, limit: options.limit, arc_step };
    let cells: Vec<Result<(Polygon, (usize, f64))>> = (0..footprints.len())
        .into_par_iter()
        .map(|b| {
            let mut dropped = (0, 0.0);
            let cell = assembler
                .assemble(&by_building[b], &mut dropped)?
                .ok_or_else(|| Error::data(format!("building {} produced an empty cell", ids[b])))?;
            let cell = if neighbours[b].is_empty() {
                cell
            } else {
                let mut merged = cell.union(&footprints[b]);
                for &o in &neighbours[b] {
                    merged = merged.difference(&footprints[o]);
                }
                let (main, parts, area) = largest_part(merged);
                dropped.0 += parts;
                dropped.1 += area;
                main.ok_or_else(|| Error::data(format!("building {} lost its cell to its neighbours", ids[b])))?
            };
            Ok((normalize_polygon(&cell), dropped))
        })
        .collect();

    let mut polygons: Vec<Option<Polygon>> = vec![None; footprints.len()];
    for (b, r) in cells.into_iter().enumerate() {
        let (polygon, (parts, area)) = r?;
        report.dropped_parts += parts;
        report.dropped_area += area;
        polygons[order[b]] = Some(polygon);
    }
    let cells = buildings
        .buildings
        .iter()
        .zip(polygons)
        .map(|(b, p)| Cell { building_id: b.id.clone(), polygon: p.expect("every building assembled") })
        .collect();
    Ok((CellSet { cells, limit: options.limit }, report))
}
