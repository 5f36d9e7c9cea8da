//! Generated layouts with known structure, used by tests, the acceptance
//! suite and the `generate` subcommand.

use geo::{Coord, LineString, Polygon};
use urbanform_core::rng::SeededRng;

use crate::ingest::{Building, BuildingSet};

fn rectangle(center: Coord, w: f64, h: f64, angle: f64) -> Polygon {
    let (s, c) = angle.sin_cos();
    let corner = |dx: f64, dy: f64| Coord { x: center.x + dx * c - dy * s, y: center.y + dx * s + dy * c };
    let (hw, hh) = (w / 2.0, h / 2.0);
    Polygon::new(
        LineString::from(vec![corner(-hw, -hh), corner(hw, -hh), corner(hw, hh), corner(-hw, hh), corner(-hw, -hh)]),
        vec![],
    )
}

fn axis_rect(x: f64, y: f64, w: f64, h: f64) -> Polygon {
    rectangle(Coord { x: x + w / 2.0, y: y + h / 2.0 }, w, h, 0.0)
}

/// `n` randomly sized and rotated rectangles, one per 25 m grid cell with
/// random placement inside it, so no two overlap. Gaps between neighbours
/// range from a few centimetres to tens of metres.
pub fn random_rectangles(n: usize, seed: u64) -> BuildingSet {
    const PITCH: f64 = 25.0;
    let mut rng = SeededRng::new(seed);
    let cols = (n as f64).sqrt().ceil() as usize;
    let buildings = (0..n)
        .map(|i| {
            let w = rng.range(5.0, 18.0);
            let h = rng.range(5.0, 12.0);
            let angle = rng.range(0.0, std::f64::consts::PI);
            let r = w.hypot(h) / 2.0 + 0.02;
            let x = (i % cols) as f64 * PITCH + rng.range(r, PITCH - r);
            let y = (i / cols) as f64 * PITCH + rng.range(r, PITCH - r);
            Building {
                id: format!("r{i:05}"),
                footprint: rectangle(Coord { x, y }, w, h, angle),
                height: Some(rng.range(3.0, 30.0)),
            }
        })
        .collect();
    BuildingSet { buildings }
}

/// A city of two tissues with street centrelines and the planted tissue of
/// every building (0 = detached houses, 1 = perimeter blocks).
#[derive(Debug, Clone)]
pub struct PlantedCity {
    pub buildings: BuildingSet,
    pub streets: Vec<Vec<Coord>>,
    pub labels: Vec<usize>,
}

impl PlantedCity {
    pub fn tissue_names(&self) -> Vec<&'static str> {
        self.labels.iter().map(|&l| if l == 0 { "houses" } else { "blocks" }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedLayout {
    /// Block buildings per row, in tens.
    pub block_columns: usize,
    /// Pairs of back-to-back rows.
    pub row_pairs: usize,
    /// House columns west of the blocks.
    pub house_columns: usize,
}

impl Default for PlantedLayout {
    /// 2,240 houses and 1,600 block buildings.
    fn default() -> Self {
        Self { block_columns: 4, row_pairs: 20, house_columns: 40 }
    }
}

/// Detached houses of about 8x8 m at 20 m pitch to the west; to the east,
/// paired rows of buildings of about 30x15 m with 2 m gaps, 10 m courtyards
/// and 16 m streets, cut by 18 m cross streets into blocks of 8 to 12
/// buildings. Sizes, positions, heights and street spacing vary at random so
/// that each tissue is a noisy but stationary pattern rather than a crystal.
pub fn planted_city(layout: PlantedLayout, seed: u64) -> PlantedCity {
    const HOUSE_PITCH: f64 = 20.0;
    const HOUSE: f64 = 8.0;
    const BW: f64 = 30.0;
    const BD: f64 = 15.0;
    const GAP: f64 = 2.0;
    const COURT: f64 = 10.0;
    const STREET: f64 = 16.0;
    const CROSS: f64 = 18.0;
    let mut rng = SeededRng::new(seed);
    let mut buildings = Vec::new();
    let mut labels = Vec::new();
    let mut streets: Vec<Vec<Coord>> = Vec::new();
    let line = |a: (f64, f64), b: (f64, f64)| vec![Coord { x: a.0, y: a.1 }, Coord { x: b.0, y: b.1 }];

    let pair_pitch = 2.0 * BD + COURT + STREET;
    let height = layout.row_pairs as f64 * pair_pitch;

    // Houses: x in [-house_columns * pitch, 0).
    let house_rows = (height / HOUSE_PITCH).floor() as usize;
    let west = -(layout.house_columns as f64) * HOUSE_PITCH;
    for r in 0..house_rows {
        for c in 0..layout.house_columns {
            let cx = west + (c as f64 + 0.5) * HOUSE_PITCH + rng.range(-1.5, 1.5);
            let cy = (r as f64 + 0.5) * HOUSE_PITCH + rng.range(-1.5, 1.5);
            let (w, h) = (HOUSE + rng.range(-1.0, 1.0), HOUSE + rng.range(-1.0, 1.0));
            buildings.push(Building {
                id: format!("h{r:03}_{c:03}"),
                footprint: rectangle(Coord { x: cx, y: cy }, w, h, rng.range(-0.15, 0.15)),
                height: Some(rng.range(4.0, 10.0)),
            });
            labels.push(0);
        }
    }
    // House streets in gaps every 3 to 5 houses; a fifth of the east-west
    // pieces are missing, leaving T junctions.
    let gaps = |count: usize, rng: &mut SeededRng| {
        let mut at = vec![0];
        while let Some(&last) = at.last() {
            if last >= count {
                break;
            }
            at.push((last + 3 + rng.below(3)).min(count));
        }
        at
    };
    let xs: Vec<f64> = gaps(layout.house_columns, &mut rng).iter().map(|&c| west + c as f64 * HOUSE_PITCH).collect();
    let ys: Vec<f64> = gaps(house_rows, &mut rng).iter().map(|&r| r as f64 * HOUSE_PITCH).collect();
    let top = house_rows as f64 * HOUSE_PITCH;
    for &x in &xs {
        streets.push(line((x, 0.0), (x, top)));
    }
    for (j, &y) in ys.iter().enumerate() {
        for w in xs.windows(2) {
            let edge = j == 0 || j + 1 == ys.len();
            if edge || rng.uniform() >= 0.2 {
                streets.push(line((w[0], y), (w[1], y)));
            }
        }
    }

    // Perimeter blocks: x from CROSS / 2; every row pair has its own blocks.
    let per_row = layout.block_columns * 10;
    let mut east_width = 0.0f64;
    for p in 0..layout.row_pairs {
        let mut sizes = Vec::new();
        let mut left = per_row;
        while left > 0 {
            let take = (8 + rng.below(5)).min(left);
            left -= take;
            if take < 5 && !sizes.is_empty() {
                *sizes.last_mut().expect("non-empty") += take;
            } else {
                sizes.push(take);
            }
        }
        let (y_low, y_high) = (p as f64 * pair_pitch, (p + 1) as f64 * pair_pitch);
        let y0 = y_low + STREET / 2.0;
        let mut x0 = CROSS / 2.0;
        streets.push(line((0.0, y_low), (0.0, y_high)));
        let mut k_total = 0;
        for (bc, &n) in sizes.iter().enumerate() {
            for k in 0..n {
                let x = x0 + k as f64 * (BW + GAP);
                for (side, y) in [(0, y0), (1, y0 + BD + COURT)] {
                    let w = BW - rng.range(0.0, 3.0);
                    let d = BD - rng.range(0.0, 2.0);
                    let cx = x + BW / 2.0 + rng.range(-0.5, 0.5);
                    let cy = y + BD / 2.0 + rng.range(-0.5, 0.5);
                    buildings.push(Building {
                        id: format!("b{p:03}_{side}_{bc:02}_{k:02}"),
                        footprint: rectangle(Coord { x: cx, y: cy }, w, d, rng.range(-0.02, 0.02)),
                        height: Some(rng.range(12.0, 24.0)),
                    });
                    labels.push(1);
                }
            }
            k_total += n;
            x0 += n as f64 * (BW + GAP) - GAP + CROSS;
            let x_street = x0 - CROSS / 2.0;
            streets.push(line((x_street, y_low), (x_street, y_high)));
        }
        debug_assert_eq!(k_total, per_row);
        east_width = east_width.max(x0 - CROSS / 2.0);
    }
    for p in 0..=layout.row_pairs {
        let y = p as f64 * pair_pitch;
        streets.push(line((0.0, y), (east_width, y)));
    }
    PlantedCity { buildings: BuildingSet { buildings }, streets, labels }
}

/// Two detached houses by a straight street: the smallest complete input.
pub fn toy() -> (BuildingSet, Vec<Vec<Coord>>) {
    let buildings = vec![
        Building { id: "a".into(), footprint: axis_rect(0.0, 0.0, 10.0, 8.0), height: Some(6.0) },
        Building { id: "b".into(), footprint: axis_rect(20.0, 0.0, 12.0, 9.0), height: Some(9.0) },
    ];
    let streets = vec![vec![Coord { x: -20.0, y: -10.0 }, Coord { x: 50.0, y: -10.0 }]];
    (BuildingSet { buildings }, streets)
}
