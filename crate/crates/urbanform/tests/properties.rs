//! Invariants of the geometric stages under random scenes.

use geo::{Area, BooleanOps, Centroid, Coord, MapCoords, Polygon};
use proptest::prelude::*;
use urbanform::characters::{compute_primary_characters, core_registry};
use urbanform::contiguity::{build_contiguity, ContiguityRule};
use urbanform::ingest::{Building, BuildingSet};
use urbanform::network::{build_street_graph, StreetNetwork};
use urbanform::synthetic::random_rectangles;
use urbanform::tessellation::{morphological_tessellation, TessellationOptions};
use urbanform_core::Table;

/// Rotation about the origin followed by a translation.
#[derive(Debug, Clone, Copy)]
struct Motion {
    angle: f64,
    dx: f64,
    dy: f64,
}

impl Motion {
    fn apply(self, c: Coord) -> Coord {
        let (s, k) = self.angle.sin_cos();
        Coord { x: c.x * k - c.y * s + self.dx, y: c.x * s + c.y * k + self.dy }
    }
}

fn streets_for(buildings: &BuildingSet) -> Vec<Vec<Coord>> {
    // A street along every 25 m grid line of the generator.
    let extent = 25.0 * (buildings.len() as f64).sqrt().ceil();
    (0..=((extent / 25.0) as usize))
        .flat_map(|i| {
            let t = i as f64 * 25.0;
            [
                vec![Coord { x: t, y: 0.0 }, Coord { x: t, y: extent }],
                vec![Coord { x: 0.0, y: t }, Coord { x: extent, y: t }],
            ]
        })
        .collect()
}

fn characters(buildings: &BuildingSet, streets: &[Vec<Coord>]) -> Table {
    let (cells, _) = morphological_tessellation(buildings, &TessellationOptions::default()).unwrap();
    let graph = build_contiguity(&cells.polygons(), ContiguityRule::Queen).unwrap();
    let cell_points: Vec<Coord> = cells.cells.iter().map(|c| c.polygon.centroid().unwrap().0).collect();
    let building_points: Vec<Coord> = buildings.buildings.iter().map(|b| b.footprint.centroid().unwrap().0).collect();
    let network = build_street_graph(StreetNetwork::planarize(streets, 0.1), &cell_points, &building_points);
    compute_primary_characters(buildings, &cells, &graph, &network, &core_registry()).unwrap().table
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn characters_survive_rigid_motion(
        seed in 0u64..10_000,
        angle in 0.0..std::f64::consts::TAU,
        dx in -5e4..5e4f64,
        dy in -5e4..5e4f64,
    ) {
        let buildings = random_rectangles(16, seed);
        let streets = streets_for(&buildings);
        let motion = Motion { angle, dx, dy };
        let moved = BuildingSet {
            buildings: buildings
                .buildings
                .iter()
                .map(|b| Building { footprint: b.footprint.map_coords(|c| motion.apply(c)), ..b.clone() })
                .collect(),
        };
        let moved_streets: Vec<Vec<Coord>> =
            streets.iter().map(|l| l.iter().map(|c| motion.apply(*c)).collect()).collect();
        let a = characters(&buildings, &streets);
        let b = characters(&moved, &moved_streets);
        for c in 0..a.cols() {
            for r in 0..a.rows() {
                match (a.get(r, c), b.get(r, c)) {
                    (Some(x), Some(y)) => prop_assert!(
                        (x - y).abs() <= 1e-6 * x.abs().max(1.0),
                        "{} of cell {r}: {x} vs {y}", a.columns()[c]
                    ),
                    (x, y) => prop_assert_eq!(x, y, "{} of cell {}", a.columns()[c], r),
                }
            }
        }
    }

    #[test]
    fn cells_partition_and_contiguity_is_symmetric(seed in 0u64..10_000, n in 2usize..40) {
        let buildings = random_rectangles(n, seed);
        let (cells, _) = morphological_tessellation(&buildings, &TessellationOptions::default()).unwrap();
        prop_assert_eq!(cells.len(), n);
        let polygons: Vec<Polygon> = cells.polygons();
        let mut overlap = 0.0;
        for i in 0..n {
            let footprint = &buildings.buildings[i].footprint;
            prop_assert_eq!(&cells.cells[i].building_id, &buildings.buildings[i].id);
            prop_assert!(footprint.difference(&polygons[i]).unsigned_area() < 1e-6);
            for j in i + 1..n {
                overlap += polygons[i].intersection(&polygons[j]).unsigned_area();
            }
        }
        prop_assert!(overlap < 1e-6, "overlap {}", overlap);

        let graph = build_contiguity(&polygons, ContiguityRule::Queen).unwrap();
        let rook = build_contiguity(&polygons, ContiguityRule::Rook).unwrap();
        for i in 0..n {
            for &j in graph.neighbors(i) {
                prop_assert!(graph.neighbors(j).contains(&i));
            }
            for &j in rook.neighbors(i) {
                prop_assert!(graph.neighbors(i).contains(&j), "rook neighbours are queen neighbours");
            }
        }
    }
}
