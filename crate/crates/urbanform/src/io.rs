//! Artifact reading and writing. Floats are written in their shortest
//! round-trip form, so reading an artifact back gives identical values.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use geo::{Coord, LineString, Polygon};
use geojson::{Feature, FeatureCollection, Geometry, GeometryValue, JsonObject, JsonValue, Position};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use urbanform_core::{ContiguityGraph, Table};

use crate::enclosures::BlockSet;
use crate::error::{Error, Result};
use crate::ingest::{Building, BuildingSet};
use crate::network::{NetworkGraph, Segment, StreetNetwork};
use crate::tessellation::{Cell, CellSet};

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads an artifact produced by `stage`; absence names the stage.
pub fn read_artifact(path: &Path, stage: &'static str) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingArtifact { stage, path: path.to_path_buf() });
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path, stage: &'static str) -> Result<T> {
    let text = read_artifact(path, stage)?;
    serde_json::from_str(&text).map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

fn ring_positions(r: &LineString) -> Vec<Position> {
    r.0.iter().map(|c| Position::from([c.x, c.y])).collect()
}

pub fn polygon_geometry(p: &Polygon) -> Geometry {
    let rings = std::iter::once(p.exterior()).chain(p.interiors()).map(ring_positions).collect();
    Geometry::new(GeometryValue::Polygon { coordinates: rings })
}

fn coords(ps: &[Position]) -> Vec<Coord> {
    ps.iter().map(|p| Coord { x: p.as_slice()[0], y: p.as_slice()[1] }).collect()
}

fn polygon_from(feature: &Feature, path: &Path) -> Result<Polygon> {
    match feature.geometry.as_ref().map(|g| &g.value) {
        Some(GeometryValue::Polygon { coordinates }) if !coordinates.is_empty() => {
            let mut rings = coordinates.iter().map(|r| LineString::from(coords(r)));
            let exterior = rings.next().expect("non-empty");
            Ok(Polygon::new(exterior, rings.collect()))
        }
        _ => Err(Error::data(format!("{}: expected Polygon features", path.display()))),
    }
}

fn feature(geometry: Geometry, properties: JsonObject) -> Feature {
    Feature { bbox: None, geometry: Some(geometry), id: None, properties: Some(properties), foreign_members: None }
}

fn write_collection(path: &Path, features: Vec<Feature>) -> Result<()> {
    let fc = FeatureCollection { bbox: None, features, foreign_members: None };
    let mut text = serde_json::to_string(&fc).map_err(|e| Error::data(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn read_collection(path: &Path, stage: &'static str) -> Result<FeatureCollection> {
    let text = read_artifact(path, stage)?;
    text.parse::<FeatureCollection>().map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

fn props(pairs: impl IntoIterator<Item = (&'static str, JsonValue)>) -> JsonObject {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn string_prop(f: &Feature, key: &str, path: &Path) -> Result<String> {
    f.property(key)
        .and_then(JsonValue::as_str)
        .map(str::to_string)
        .ok_or_else(|| Error::data(format!("{}: feature without `{key}`", path.display())))
}

pub fn write_buildings(path: &Path, set: &BuildingSet) -> Result<()> {
    let features = set
        .buildings
        .iter()
        .map(|b| {
            let height = b.height.map_or(JsonValue::Null, JsonValue::from);
            feature(polygon_geometry(&b.footprint), props([("id", b.id.clone().into()), ("height", height)]))
        })
        .collect();
    write_collection(path, features)
}

/// Reads repaired buildings back without touching their geometry.
pub fn read_buildings(path: &Path) -> Result<BuildingSet> {
    let fc = read_collection(path, "tessellate")?;
    let buildings = fc
        .features
        .iter()
        .map(|f| {
            Ok(Building {
                id: string_prop(f, "id", path)?,
                footprint: polygon_from(f, path)?,
                height: f.property("height").and_then(JsonValue::as_f64),
            })
        })
        .collect::<Result<_>>()?;
    Ok(BuildingSet { buildings })
}

/// Extra per-cell properties for labelled exports.
pub type CellProperties = Vec<(&'static str, JsonValue)>;

pub fn write_cells(path: &Path, cells: &CellSet, extra: Option<&[CellProperties]>) -> Result<()> {
    let features = cells
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut p = props([("building_id", c.building_id.clone().into())]);
            if let Some(extra) = extra {
                p.extend(extra[i].iter().map(|(k, v)| (k.to_string(), v.clone())));
            }
            feature(polygon_geometry(&c.polygon), p)
        })
        .collect();
    let mut fc = FeatureCollection { bbox: None, features, foreign_members: None };
    let mut members = JsonObject::new();
    members.insert("limit".into(), cells.limit.into());
    fc.foreign_members = Some(members);
    let mut text = serde_json::to_string(&fc).map_err(|e| Error::data(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_cells(path: &Path) -> Result<CellSet> {
    let fc = read_collection(path, "tessellate")?;
    let limit = fc.foreign_members.as_ref().and_then(|m| m.get("limit")).and_then(JsonValue::as_f64).unwrap_or(100.0);
    let cells = fc
        .features
        .iter()
        .map(|f| Ok(Cell { building_id: string_prop(f, "building_id", path)?, polygon: polygon_from(f, path)? }))
        .collect::<Result<_>>()?;
    Ok(CellSet { cells, limit })
}

pub fn write_blocks(path: &Path, blocks: &BlockSet) -> Result<()> {
    let features = blocks
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| feature(polygon_geometry(b), props([("block_id", i.into())])))
        .collect();
    write_collection(path, features)
}

pub fn write_streets(path: &Path, net: &StreetNetwork) -> Result<()> {
    let features = net
        .segments
        .iter()
        .map(|s| {
            let line = Geometry::new(GeometryValue::LineString {
                coordinates: s.coords.iter().map(|c| Position::from([c.x, c.y])).collect(),
            });
            feature(
                line,
                props([
                    ("segment_id", s.id.into()),
                    ("start", s.start.into()),
                    ("end", s.end.into()),
                    ("length", s.length.into()),
                ]),
            )
        })
        .collect();
    write_collection(path, features)
}

/// Raw polylines, e.g. for the `generate` subcommand.
pub fn write_lines(path: &Path, lines: &[Vec<Coord>]) -> Result<()> {
    let features = lines
        .iter()
        .map(|l| {
            let g = Geometry::new(GeometryValue::LineString {
                coordinates: l.iter().map(|c| Position::from([c.x, c.y])).collect(),
            });
            feature(g, JsonObject::new())
        })
        .collect();
    write_collection(path, features)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SegmentRecord {
    id: usize,
    start: usize,
    end: usize,
    length: f64,
    coords: Vec<[f64; 2]>,
}

/// The street graph, its links and the cell to block assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkArtifact {
    nodes: Vec<[f64; 2]>,
    segments: Vec<SegmentRecord>,
    pub cell_node: Vec<Option<usize>>,
    pub building_segment: Vec<Option<usize>>,
    pub block_count: usize,
    pub cell_block: Vec<Option<usize>>,
}

impl NetworkArtifact {
    pub fn new(graph: &NetworkGraph, block_count: usize, cell_block: Vec<Option<usize>>) -> Self {
        let net = &graph.network;
        Self {
            nodes: net.nodes.iter().map(|c| [c.x, c.y]).collect(),
            segments: net
                .segments
                .iter()
                .map(|s| SegmentRecord {
                    id: s.id,
                    start: s.start,
                    end: s.end,
                    length: s.length,
                    coords: s.coords.iter().map(|c| [c.x, c.y]).collect(),
                })
                .collect(),
            cell_node: graph.cell_node.clone(),
            building_segment: graph.building_segment.clone(),
            block_count,
            cell_block,
        }
    }

    pub fn graph(&self) -> NetworkGraph {
        let c = |p: &[f64; 2]| Coord { x: p[0], y: p[1] };
        NetworkGraph {
            network: StreetNetwork {
                nodes: self.nodes.iter().map(c).collect(),
                segments: self
                    .segments
                    .iter()
                    .map(|s| Segment {
                        id: s.id,
                        start: s.start,
                        end: s.end,
                        length: s.length,
                        coords: s.coords.iter().map(c).collect(),
                    })
                    .collect(),
            },
            cell_node: self.cell_node.clone(),
            building_segment: self.building_segment.clone(),
        }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::data(format!("{}: {e}", path.display()))
}

fn format_value(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Writes a table with a leading `id` column.
pub fn write_table(path: &Path, ids: &[String], table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = std::iter::once("id").chain(table.columns().iter().map(String::as_str));
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for (r, id) in ids.iter().enumerate() {
        let row = std::iter::once(id.clone()).chain(table.row(r).iter().map(|v| format_value(*v)));
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_table(path: &Path, stage: &'static str) -> Result<(Vec<String>, Table)> {
    let text = read_artifact(path, stage)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let columns: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut ids = Vec::new();
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        ids.push(rec.get(0).unwrap_or_default().to_string());
        let row = rec
            .iter()
            .skip(1)
            .map(|s| {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<f64>().map(Some).map_err(|_| Error::data(format!("{}: bad number `{s}`", path.display())))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let mut table = Table::new(columns, rows.len());
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            table.set(i, j, *v);
        }
    }
    Ok((ids, table))
}

/// Writes any rows of strings under a header.
pub fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a CSV into its header and string rows.
pub fn read_rows(path: &Path, stage: &'static str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = read_artifact(path, stage)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| csv_error(path, e))?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()).map_err(|e| csv_error(path, e)))
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

pub fn write_contiguity(path: &Path, ids: &[String], graph: &ContiguityGraph) -> Result<()> {
    write_rows(
        path,
        &["source", "target"],
        graph.edges().filter(|(a, b)| a < b).map(|(a, b)| [ids[a].clone(), ids[b].clone()]),
    )
}

pub fn read_contiguity(path: &Path, ids: &[String]) -> Result<ContiguityGraph> {
    let (_, rows) = read_rows(path, "graph")?;
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let lookup =
        |id: &str| index.get(id).copied().ok_or_else(|| Error::data(format!("{}: unknown cell {id}", path.display())));
    let edges = rows.iter().map(|r| Ok((lookup(&r[0])?, lookup(&r[1])?))).collect::<Result<Vec<_>>>()?;
    Ok(ContiguityGraph::from_edges(ids.len(), edges)?)
}
