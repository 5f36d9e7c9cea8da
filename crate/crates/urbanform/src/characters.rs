//! Primary morphometric characters of every cell.
//!
//! Row `i` describes cell `i` and the building it was grown from. Street
//! characters reach cells through the building's nearest segment and the
//! cell's nearest node.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use geo::{Area, Centroid, ConvexHull, Coord, Polygon};
use rayon::prelude::*;
use rstar::primitives::{GeomWithData, Rectangle};
use rstar::RTree;
use serde::{Deserialize, Serialize};
use urbanform_core::stats::theil;
use urbanform_core::{ContiguityGraph, Table};

use crate::error::{Error, Result};
use crate::geometry::{deviation_mod90, dist, min_enclosing_circle, perimeter, point_segment_distance, rotated_rect};
use crate::ingest::BuildingSet;
use crate::network::{aabb, NetworkGraph};
use crate::tessellation::CellSet;

/// Wall pieces closer than this count as shared.
pub const SHARED_WALL_TOLERANCE: f64 = 0.05;
/// Storey height used to derive floors from building height.
pub const STOREY_HEIGHT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Element {
    Building,
    Cell,
    Segment,
    Node,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Dimension,
    Shape,
    Distribution,
    Intensity,
    Connectivity,
    Diversity,
}

/// Small: the element alone. Medium: with its order-1 neighbours. Large:
/// order-3 neighbourhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Small,
    Medium,
    Large,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterDescriptor {
    pub name: String,
    pub element: Element,
    pub category: Category,
    pub scale: Scale,
    pub definition: String,
}

const CORE: [(&str, Element, Category, Scale, &str); 22] = {
    use Category::*;
    use Element::*;
    use Scale::*;
    [
        ("building_area", Building, Dimension, Small, "footprint area"),
        ("building_perimeter", Building, Dimension, Small, "footprint perimeter including courtyards"),
        ("building_height", Building, Dimension, Small, "height attribute"),
        ("cell_area", Cell, Dimension, Small, "cell area"),
        ("segment_length", Segment, Dimension, Small, "length of the building's nearest segment"),
        ("circular_compactness", Building, Shape, Small, "area / area of the minimum enclosing circle"),
        ("convexity", Building, Shape, Small, "area / convex hull area"),
        ("rectangularity", Building, Shape, Small, "area / minimum rotated rectangle area"),
        ("elongation", Building, Shape, Small, "short / long side of the minimum rotated rectangle"),
        ("cell_compactness", Cell, Shape, Small, "4 pi area / perimeter^2 of the cell"),
        ("segment_linearity", Segment, Shape, Small, "end-to-end distance / length of the nearest segment"),
        ("shared_walls_ratio", Building, Distribution, Small, "perimeter shared with other buildings / perimeter"),
        ("neighbour_distance", Building, Distribution, Medium, "mean centroid distance to buildings of adjacent cells"),
        (
            "cell_alignment",
            Building,
            Distribution,
            Medium,
            "mean orientation deviation (mod 90, in [0, 45]) from buildings of adjacent cells",
        ),
        (
            "street_alignment",
            Building,
            Distribution,
            Small,
            "orientation deviation (mod 90, in [0, 45]) from the nearest segment",
        ),
        ("coverage_area_ratio", Cell, Intensity, Small, "building area / cell area"),
        ("floor_area_ratio", Cell, Intensity, Small, "building area * max(1, round(height / 3)) / cell area"),
        ("neighbour_density", Cell, Intensity, Large, "cells in the order-3 ball / their total area"),
        ("node_degree", Node, Connectivity, Small, "degree of the cell's nearest node"),
        (
            "local_meshedness",
            Node,
            Connectivity,
            Large,
            "(e - v + 1) / (2v - 5) within 3 steps of the nearest node, 0 if v < 3",
        ),
        ("mean_segment_length", Node, Connectivity, Large, "mean segment length within 3 steps of the nearest node"),
        ("area_diversity", Cell, Diversity, Medium, "Theil index of cell areas over the order-1 ball"),
    ]
};

/// The 22 core characters in output order.
pub fn core_registry() -> Vec<CharacterDescriptor> {
    CORE.iter()
        .map(|&(name, element, category, scale, definition)| CharacterDescriptor {
            name: name.into(),
            element,
            category,
            scale,
            definition: definition.into(),
        })
        .collect()
}

/// Per-column missing counts and the height report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CharacterReport {
    pub missing: Vec<(String, usize)>,
    pub buildings_without_height: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimaryCharacters {
    pub table: Table,
    pub report: CharacterReport,
}

struct BuildingShape {
    area: f64,
    perimeter: f64,
    centroid: Coord,
    orientation: Option<f64>,
    circular_compactness: Option<f64>,
    convexity: Option<f64>,
    rectangularity: Option<f64>,
    elongation: Option<f64>,
}

/// Ratios closer to 1 than this are rounding noise around 1.
const UNIT_RATIO_TOLERANCE: f64 = 1e-12;

/// `num / den` for ratios bounded by 1. Two measures that agree
/// mathematically (a rectangle and its hull) give exactly 1, so dispersion
/// statistics of such columns are exactly 0 instead of noise.
fn unit_ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| {
        let r = num / den;
        if r >= 1.0 - UNIT_RATIO_TOLERANCE {
            1.0
        } else {
            r
        }
    })
}

fn building_shape(p: &Polygon) -> BuildingShape {
    let area = p.unsigned_area();
    let ratio = |den: f64| unit_ratio(area, den);
    let (_, radius) = min_enclosing_circle(&p.exterior().0);
    let mrr = rotated_rect(p);
    BuildingShape {
        area,
        perimeter: perimeter(p),
        centroid: p.centroid().map_or(p.exterior().0[0], |c| c.0),
        orientation: mrr.map(|m| m.2),
        circular_compactness: ratio(PI * radius * radius),
        convexity: ratio(p.convex_hull().unsigned_area()),
        rectangularity: mrr.and_then(|(l, s, _)| ratio(l * s)),
        elongation: mrr.and_then(|(l, s, _)| unit_ratio(s, l)),
    }
}

/// Length of `ab` lying within `tol` of `cd` when the two are collinear.
fn shared_length(a: Coord, b: Coord, c: Coord, d: Coord, tol: f64) -> f64 {
    let len = dist(a, b);
    if len == 0.0 {
        return 0.0;
    }
    let r = (b - a) / len;
    let off = |p: Coord| ((p - a).x * r.y - (p - a).y * r.x).abs();
    if off(c) > tol || off(d) > tol {
        return 0.0;
    }
    let t = |p: Coord| (p - a).x * r.x + (p - a).y * r.y;
    let (lo, hi) = if t(c) <= t(d) { (t(c), t(d)) } else { (t(d), t(c)) };
    (hi.min(len) - lo.max(0.0)).max(0.0)
}

fn edges(p: &Polygon) -> impl Iterator<Item = (Coord, Coord)> + '_ {
    std::iter::once(p.exterior()).chain(p.interiors()).flat_map(|r| r.0.windows(2).map(|w| (w[0], w[1])))
}

/// A footprint edge boxed for the R-tree, tagged with its building.
type EdgeEntry = GeomWithData<Rectangle<[f64; 2]>, (usize, Coord, Coord)>;

fn shared_walls(footprints: &[&Polygon], perimeters: &[f64]) -> Vec<f64> {
    let tree: RTree<EdgeEntry> = RTree::bulk_load(
        footprints
            .iter()
            .enumerate()
            .flat_map(|(i, p)| edges(p).map(move |(a, b)| (i, a, b)))
            .map(|(i, a, b)| {
                let env = aabb(a, b, SHARED_WALL_TOLERANCE);
                GeomWithData::new(Rectangle::from_corners(env.lower(), env.upper()), (i, a, b))
            })
            .collect(),
    );
    footprints
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let shared: f64 = edges(p)
                .map(|(a, b)| {
                    tree.locate_in_envelope_intersecting(&aabb(a, b, SHARED_WALL_TOLERANCE))
                        .filter(|e| e.data.0 != i)
                        .map(|e| shared_length(a, b, e.data.1, e.data.2, SHARED_WALL_TOLERANCE))
                        .sum::<f64>()
                        .min(dist(a, b))
                })
                .sum();
            unit_ratio(shared, perimeters[i]).unwrap_or(0.0)
        })
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for v in values {
        s += v;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

/// Computes the registry's columns. `buildings` and `cells` must be in
/// the same order and match the contiguity graph.
pub fn compute_primary_characters(
    buildings: &BuildingSet,
    cells: &CellSet,
    graph: &ContiguityGraph,
    network: &NetworkGraph,
    registry: &[CharacterDescriptor],
) -> Result<PrimaryCharacters> {
    let n = cells.len();
    if buildings.len() != n || graph.len() != n {
        return Err(Error::data(format!(
            "inconsistent inputs: {} buildings, {} cells, {} graph nodes",
            buildings.len(),
            n,
            graph.len()
        )));
    }
    for (b, c) in buildings.buildings.iter().zip(&cells.cells) {
        if b.id != c.building_id {
            return Err(Error::data(format!("cell of {} is paired with building {}", c.building_id, b.id)));
        }
    }
    let mut seen = BTreeSet::new();
    for d in registry {
        if !seen.insert(d.name.as_str()) {
            return Err(Error::config(format!("character name collision: {}", d.name)));
        }
        if !CORE.iter().any(|c| c.0 == d.name) {
            return Err(Error::config(format!("no implementation for character {}", d.name)));
        }
    }
    if network.cell_node.len() != n || network.building_segment.len() != n {
        return Err(Error::data("street links do not cover every cell and building"));
    }

    let shapes: Vec<BuildingShape> = buildings.buildings.par_iter().map(|b| building_shape(&b.footprint)).collect();
    let footprints: Vec<&Polygon> = buildings.buildings.iter().map(|b| &b.footprint).collect();
    let perimeters: Vec<f64> = shapes.iter().map(|s| s.perimeter).collect();
    let walls = shared_walls(&footprints, &perimeters);
    let cell_area: Vec<f64> = cells.cells.iter().map(|c| c.polygon.unsigned_area()).collect();
    let cell_perimeter: Vec<f64> = cells.cells.iter().map(|c| perimeter(&c.polygon)).collect();
    let heights: Vec<Option<f64>> = buildings.buildings.iter().map(|b| b.height).collect();
    let without_height = heights.iter().filter(|h| h.is_none()).count();
    if without_height > 0 {
        log::warn!("{without_height} buildings lack a height; height characters are missing for them");
    }
    let balls3 = graph.all_balls(3, None)?;
    let net = &network.network;
    let adjacency = net.adjacency();
    let degrees = net.degrees();
    // Order-3 network neighbourhood of every node, computed once per node.
    let node_context: Vec<(f64, Option<f64>)> = (0..net.nodes.len())
        .into_par_iter()
        .map(|node| {
            let (nodes, segs) = net.subgraph(&adjacency, node, 3);
            let (v, e) = (nodes.len() as f64, segs.len() as f64);
            let meshedness = if nodes.len() < 3 { 0.0 } else { (e - v + 1.0) / (2.0 * v - 5.0) };
            (meshedness, mean(segs.iter().map(|&s| net.segments[s].length)))
        })
        .collect();

    let value = |name: &str, i: usize| -> Option<f64> {
        let s = &shapes[i];
        let segment = network.building_segment[i].map(|id| &net.segments[id]);
        let node = network.cell_node[i];
        let neighbours = graph.neighbors(i);
        match name {
            "building_area" => Some(s.area),
            "building_perimeter" => Some(s.perimeter),
            "building_height" => heights[i],
            "cell_area" => Some(cell_area[i]),
            "segment_length" => segment.map(|g| g.length),
            "circular_compactness" => s.circular_compactness,
            "convexity" => s.convexity,
            "rectangularity" => s.rectangularity,
            "elongation" => s.elongation,
            "cell_compactness" => unit_ratio(4.0 * PI * cell_area[i], cell_perimeter[i] * cell_perimeter[i]),
            "segment_linearity" => segment.and_then(|g| unit_ratio(g.linearity(), 1.0)),
            "shared_walls_ratio" => Some(walls[i]),
            "neighbour_distance" => mean(neighbours.iter().map(|&j| dist(s.centroid, shapes[j].centroid))),
            "cell_alignment" => {
                let o = s.orientation?;
                mean(neighbours.iter().filter_map(|&j| shapes[j].orientation).map(|oj| deviation_mod90(o, oj)))
            }
            "street_alignment" => Some(deviation_mod90(s.orientation?, segment?.azimuth_mod90())),
            "coverage_area_ratio" => (cell_area[i] > 0.0).then(|| s.area / cell_area[i]),
            "floor_area_ratio" => {
                let floors = (heights[i]? / STOREY_HEIGHT).round().max(1.0);
                (cell_area[i] > 0.0).then(|| s.area * floors / cell_area[i])
            }
            "neighbour_density" => {
                let ball = &balls3[i];
                let area: f64 = ball.iter().map(|&j| cell_area[j]).sum();
                (area > 0.0).then(|| ball.len() as f64 / area)
            }
            "node_degree" => node.map(|v| degrees[v] as f64),
            "local_meshedness" => node.map(|v| node_context[v].0),
            "mean_segment_length" => node.and_then(|v| node_context[v].1),
            "area_diversity" => {
                let areas: Vec<f64> =
                    std::iter::once(i).chain(neighbours.iter().copied()).map(|j| cell_area[j]).collect();
                theil(&areas)
            }
            _ => unreachable!("registry names are checked above"),
        }
    };

    let columns: Vec<(String, Vec<Option<f64>>)> = registry
        .iter()
        .map(|d| {
            let col: Vec<Option<f64>> =
                (0..n).into_par_iter().map(|i| value(&d.name, i).filter(|v| v.is_finite())).collect();
            (d.name.clone(), col)
        })
        .collect();
    let missing = columns.iter().map(|(name, c)| (name.clone(), c.iter().filter(|v| v.is_none()).count())).collect();
    let table = Table::from_columns(columns)?;
    Ok(PrimaryCharacters { table, report: CharacterReport { missing, buildings_without_height: without_height } })
}

/// Distance from `p` to the nearest point of `polygon`'s boundary.
pub fn boundary_distance(p: Coord, polygon: &Polygon) -> f64 {
    edges(polygon).map(|(a, b)| point_segment_distance(p, a, b)).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contiguity::{build_contiguity, ContiguityRule};
    use crate::ingest::Building;
    use crate::network::{build_street_graph, StreetNetwork};
    use crate::tessellation::{morphological_tessellation, TessellationOptions};
    use geo::{polygon, LineString};

    fn square(id: &str, x: f64, y: f64, s: f64, h: Option<f64>) -> Building {
        Building {
            id: id.into(),
            footprint: polygon![(x: x, y: y), (x: x + s, y: y), (x: x + s, y: y + s), (x: x, y: y + s)],
            height: h,
        }
    }

    #[test]
    fn registry_covers_all_categories_and_scales() {
        let reg = core_registry();
        assert_eq!(reg.len(), 22);
        for c in [
            Category::Dimension,
            Category::Shape,
            Category::Distribution,
            Category::Intensity,
            Category::Connectivity,
            Category::Diversity,
        ] {
            assert!(reg.iter().any(|d| d.category == c));
        }
        for s in [Scale::Small, Scale::Medium, Scale::Large] {
            assert!(reg.iter().any(|d| d.scale == s));
        }
    }

    #[test]
    fn square_and_disc_compactness() {
        let sq = building_shape(&square("a", 0.0, 0.0, 3.0, None).footprint);
        assert!((sq.circular_compactness.unwrap() - 2.0 / PI).abs() < 1e-12);
        assert_eq!(sq.elongation, Some(1.0));
        let disc: Vec<Coord> = (0..=720)
            .map(|k| {
                let a = 2.0 * PI * (k % 720) as f64 / 720.0;
                Coord { x: 5.0 * a.cos(), y: 5.0 * a.sin() }
            })
            .collect();
        let d = building_shape(&Polygon::new(LineString::from(disc), vec![]));
        assert!((d.circular_compactness.unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn shared_walls_of_rowhouse() {
        let b =
            [square("a", 0.0, 0.0, 10.0, None), square("b", 10.0, 0.0, 10.0, None), square("c", 40.0, 0.0, 10.0, None)];
        let fps: Vec<&Polygon> = b.iter().map(|x| &x.footprint).collect();
        let w = shared_walls(&fps, &[40.0, 40.0, 40.0]);
        assert_eq!(w, vec![0.25, 0.25, 0.0]);
    }

    #[test]
    fn toy_scene_ratios() {
        let set =
            BuildingSet { buildings: vec![square("a", 0.0, 0.0, 10.0, Some(9.0)), square("b", 30.0, 0.0, 10.0, None)] };
        let (cells, _) = morphological_tessellation(&set, &TessellationOptions::default()).unwrap();
        let graph = build_contiguity(&cells.polygons(), ContiguityRule::Queen).unwrap();
        let centroids: Vec<Coord> = cells.cells.iter().map(|c| c.polygon.centroid().unwrap().0).collect();
        let bcent: Vec<Coord> = set.buildings.iter().map(|b| b.footprint.centroid().unwrap().0).collect();
        let net = StreetNetwork::planarize(&[vec![Coord { x: -50.0, y: -20.0 }, Coord { x: 90.0, y: -20.0 }]], 0.1);
        let ng = build_street_graph(net, &centroids, &bcent);
        let out = compute_primary_characters(&set, &cells, &graph, &ng, &core_registry()).unwrap();
        let t = &out.table;
        let col = |name: &str| t.column_index(name).unwrap();
        let cov = t.get(0, col("coverage_area_ratio")).unwrap();
        assert!((cov - 100.0 / t.get(0, col("cell_area")).unwrap()).abs() < 1e-12);
        // Height 9 m is three floors.
        assert!((t.get(0, col("floor_area_ratio")).unwrap() - 3.0 * cov).abs() < 1e-12);
        assert_eq!(t.get(1, col("building_height")), None);
        assert_eq!(t.get(1, col("floor_area_ratio")), None);
        assert_eq!(out.report.buildings_without_height, 1);
        assert_eq!(t.get(0, col("street_alignment")), Some(0.0));
        assert!((t.get(0, col("neighbour_distance")).unwrap() - 30.0).abs() < 1e-9);
        // A single segment: two nodes, one edge, a tree.
        assert_eq!(t.get(0, col("local_meshedness")), Some(0.0));
        assert_eq!(t.get(0, col("node_degree")), Some(1.0));
    }

    #[test]
    fn name_collision_is_a_config_error() {
        let mut reg = core_registry();
        reg.push(reg[0].clone());
        let set = BuildingSet { buildings: vec![square("a", 0.0, 0.0, 10.0, None)] };
        let (cells, _) = morphological_tessellation(&set, &TessellationOptions::default()).unwrap();
        let graph = build_contiguity(&cells.polygons(), ContiguityRule::Queen).unwrap();
        let ng = build_street_graph(StreetNetwork::default(), &[Coord::zero()], &[Coord::zero()]);
        let err = compute_primary_characters(&set, &cells, &graph, &ng, &reg).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
