//! Loading and repairing building footprints and street centerlines.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use geo::{Area, BoundingRect, Coord, LineString, MakeValid, Polygon, Validation};
use geojson::{Feature, FeatureCollection, GeometryValue, JsonValue};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::normalize_polygon;
use crate::network::StreetNetwork;

#[derive(Debug, Clone, PartialEq)]
pub struct Building {
    pub id: String,
    pub footprint: Polygon,
    pub height: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildingSet {
    pub buildings: Vec<Building>,
}

impl BuildingSet {
    pub fn len(&self) -> usize {
        self.buildings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buildings.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.buildings.iter().map(|b| b.id.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    /// Feature property holding the building id; sequential ids otherwise.
    pub id_property: Option<String>,
    /// Feature property holding the height in metres.
    pub height_property: Option<String>,
    /// Coordinates are metric. Must be true; the engine never reprojects.
    pub assume_projected: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self { id_property: None, height_property: Some("height".into()), assume_projected: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub loaded: usize,
    pub repaired: usize,
    pub skipped: usize,
    pub details: Vec<String>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_collection(text: &str, what: &str) -> Result<FeatureCollection> {
    FeatureCollection::from_str(text).map_err(|e| Error::data(format!("{what}: not a GeoJSON FeatureCollection: {e}")))
}

pub fn load_buildings(path: &Path, config: &IngestConfig) -> Result<(BuildingSet, IngestReport)> {
    parse_buildings(&read(path)?, config).map_err(|e| match e {
        Error::Data(msg) => Error::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn to_ring(positions: &[geojson::Position]) -> Option<LineString> {
    let coords: Option<Vec<Coord>> = positions
        .iter()
        .map(|p| {
            let s = p.as_slice();
            (s.len() >= 2 && s[0].is_finite() && s[1].is_finite()).then(|| Coord { x: s[0], y: s[1] })
        })
        .collect();
    let mut ring = LineString::from(coords?);
    ring.close();
    Some(ring)
}

fn to_polygon(rings: &[Vec<geojson::Position>]) -> Option<Polygon> {
    let mut it = rings.iter();
    let exterior = to_ring(it.next()?)?;
    let interiors: Option<Vec<LineString>> = it.map(|r| to_ring(r)).collect();
    Some(Polygon::new(exterior, interiors?))
}

fn largest(parts: impl IntoIterator<Item = Polygon>) -> Option<(Polygon, usize)> {
    let mut best: Option<Polygon> = None;
    let mut count = 0;
    for p in parts {
        count += 1;
        if best.as_ref().is_none_or(|b| p.unsigned_area() > b.unsigned_area()) {
            best = Some(p);
        }
    }
    best.map(|b| (b, count))
}

fn property_string(v: &JsonValue) -> Option<String> {
    match v {
        JsonValue::String(s) => Some(s.clone()),
        JsonValue::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn declared_geographic(fc: &FeatureCollection) -> bool {
    let Some(crs) = fc.foreign_members.as_ref().and_then(|m| m.get("crs")) else {
        return false;
    };
    let name = crs.pointer("/properties/name").and_then(JsonValue::as_str).unwrap_or_default().to_ascii_uppercase();
    name.contains("CRS84") || name.contains("4326") || name.contains("4258")
}

/// Degree coordinates: everything inside lon/lat bounds and footprints
/// whose median extent is far below a metre.
fn looks_geographic(polygons: &[Polygon]) -> bool {
    if polygons.is_empty() {
        return false;
    }
    let mut extents = Vec::with_capacity(polygons.len());
    for p in polygons {
        let Some(r) = p.bounding_rect() else { continue };
        if r.min().x < -180.0 || r.max().x > 180.0 || r.min().y < -90.0 || r.max().y > 90.0 {
            return false;
        }
        extents.push(r.width().max(r.height()));
    }
    extents.sort_by(f64::total_cmp);
    extents.get(extents.len() / 2).is_some_and(|m| *m < 0.01)
}

pub fn parse_buildings(text: &str, config: &IngestConfig) -> Result<(BuildingSet, IngestReport)> {
    if !config.assume_projected {
        return Err(Error::config("assume_projected must be true: inputs have to be in a projected metric CRS"));
    }
    let fc = parse_collection(text, "buildings")?;
    if declared_geographic(&fc) {
        return Err(Error::data("buildings use a geographic CRS (degrees); reproject to a metric CRS first"));
    }
    let mut report = IngestReport::default();
    let mut buildings = Vec::new();
    for (index, feature) in fc.features.iter().enumerate() {
        let id = match &config.id_property {
            Some(key) => match feature.property(key).and_then(property_string) {
                Some(id) => id,
                None => return Err(Error::data(format!("feature {index} has no `{key}` property"))),
            },
            None => index.to_string(),
        };
        match building_geometry(feature, &id, &mut report) {
            Some(footprint) => {
                let height = config
                    .height_property
                    .as_ref()
                    .and_then(|k| feature.property(k))
                    .and_then(JsonValue::as_f64)
                    .filter(|h| h.is_finite() && *h > 0.0);
                buildings.push(Building { id, footprint, height });
            }
            None => report.skipped += 1,
        }
    }
    let footprints: Vec<Polygon> = buildings.iter().map(|b| b.footprint.clone()).collect();
    if looks_geographic(&footprints) {
        return Err(Error::data(
            "building coordinates look like degrees (all within lon/lat bounds, sub-centimetre footprints); reproject to a metric CRS first",
        ));
    }
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for b in &buildings {
        *seen.entry(&b.id).or_default() += 1;
    }
    let duplicates: Vec<&str> = seen.iter().filter(|(_, c)| **c > 1).map(|(id, _)| *id).collect();
    if !duplicates.is_empty() {
        return Err(Error::data(format!("duplicate building ids: {}", duplicates.join(", "))));
    }
    report.loaded = buildings.len();
    Ok((BuildingSet { buildings }, report))
}

fn building_geometry(feature: &Feature, id: &str, report: &mut IngestReport) -> Option<Polygon> {
    let Some(geometry) = &feature.geometry else {
        report.details.push(format!("{id}: no geometry, skipped"));
        return None;
    };
    let polygon = match &geometry.value {
        GeometryValue::Polygon { coordinates } => to_polygon(coordinates),
        GeometryValue::MultiPolygon { coordinates } => {
            let parts: Option<Vec<Polygon>> = coordinates.iter().map(|p| to_polygon(p)).collect();
            parts.and_then(largest).map(|(p, n)| {
                if n > 1 {
                    log::warn!("building {id}: MultiPolygon with {n} parts, keeping the largest");
                    report.details.push(format!("{id}: kept largest of {n} parts"));
                }
                p
            })
        }
        other => {
            report.details.push(format!("{id}: {} geometry skipped", other.type_name()));
            return None;
        }
    };
    let Some(polygon) = polygon else {
        report.details.push(format!("{id}: empty or non-finite coordinates, skipped"));
        return None;
    };
    repair(polygon, id, report)
}

/// Valid polygons are only cleaned (repeated points, ring orientation);
/// invalid ones are rebuilt and reduced to their largest part.
fn repair(polygon: Polygon, id: &str, report: &mut IngestReport) -> Option<Polygon> {
    let cleaned = normalize_polygon(&polygon);
    if cleaned.is_valid() && cleaned.unsigned_area() > 0.0 {
        return Some(cleaned);
    }
    let rebuilt = match polygon.make_valid() {
        Ok(mp) => largest(mp.0.into_iter().filter(|p| p.unsigned_area() > 0.0)),
        Err(e) => {
            report.details.push(format!("{id}: unrepairable ({e}), skipped"));
            return None;
        }
    };
    match rebuilt {
        Some((p, parts)) => {
            report.repaired += 1;
            report.details.push(format!("{id}: repaired invalid geometry ({parts} part(s), kept largest)"));
            Some(normalize_polygon(&p))
        }
        None => {
            report.details.push(format!("{id}: zero area after repair, skipped"));
            None
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StreetReport {
    pub lines: usize,
    pub skipped: usize,
    pub segments: usize,
    pub nodes: usize,
    pub details: Vec<String>,
}

pub fn load_streets(path: &Path, snap_tolerance: f64) -> Result<(StreetNetwork, StreetReport)> {
    parse_streets(&read(path)?, snap_tolerance)
}

pub fn parse_streets(text: &str, snap_tolerance: f64) -> Result<(StreetNetwork, StreetReport)> {
    let fc = parse_collection(text, "streets")?;
    if declared_geographic(&fc) {
        return Err(Error::data("streets use a geographic CRS (degrees); reproject to a metric CRS first"));
    }
    let mut report = StreetReport::default();
    let mut lines: Vec<Vec<Coord>> = Vec::new();
    for (index, feature) in fc.features.iter().enumerate() {
        let coords = |ps: &[geojson::Position]| {
            to_ring(ps).map(|mut r| {
                // to_ring closes rings; undo that for open lines.
                if ps.first() != ps.last() {
                    r.0.pop();
                }
                r.0
            })
        };
        match feature.geometry.as_ref().map(|g| &g.value) {
            Some(GeometryValue::LineString { coordinates }) => lines.extend(coords(coordinates)),
            Some(GeometryValue::MultiLineString { coordinates }) => {
                lines.extend(coordinates.iter().filter_map(|c| coords(c)))
            }
            Some(other) => {
                report.skipped += 1;
                report.details.push(format!("feature {index}: {} geometry skipped", other.type_name()));
            }
            None => {
                report.skipped += 1;
                report.details.push(format!("feature {index}: no geometry, skipped"));
            }
        }
    }
    if lines.is_empty() {
        return Err(Error::data("street collection contains no line geometry"));
    }
    report.lines = lines.len();
    let network = StreetNetwork::planarize(&lines, snap_tolerance);
    report.segments = network.segments.len();
    report.nodes = network.nodes.len();
    Ok((network, report))
}
