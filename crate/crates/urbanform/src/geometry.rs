//! Planar helpers shared by the geometry stages.

use geo::{Area, Coord, LineString, MinimumRotatedRect, Polygon, RemoveRepeatedPoints};

/// Shoelace area of a ring; positive for counter-clockwise rings. The ring
/// may or may not repeat its first point.
pub fn ring_signed_area(ring: &[Coord]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let o = ring[0];
    let mut twice = 0.0;
    for i in 1..n - 1 {
        let a = ring[i] - o;
        let b = ring[i + 1] - o;
        twice += a.x * b.y - a.y * b.x;
    }
    0.5 * twice
}

pub fn ring_length(ring: &LineString) -> f64 {
    ring.0.windows(2).map(|w| dist(w[0], w[1])).sum()
}

/// Length of all rings.
pub fn perimeter(p: &Polygon) -> f64 {
    ring_length(p.exterior()) + p.interiors().iter().map(ring_length).sum::<f64>()
}

pub fn dist(a: Coord, b: Coord) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

pub fn dist2(a: Coord, b: Coord) -> f64 {
    (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y)
}

fn cross(a: Coord, b: Coord) -> f64 {
    a.x * b.y - a.y * b.x
}

fn dot(a: Coord, b: Coord) -> f64 {
    a.x * b.x + a.y * b.y
}

/// Parameter of the point of segment `ab` closest to `p`, in `[0, 1]`.
pub fn project_on_segment(p: Coord, a: Coord, b: Coord) -> f64 {
    let d = b - a;
    let len2 = dot(d, d);
    if len2 == 0.0 {
        0.0
    } else {
        (dot(p - a, d) / len2).clamp(0.0, 1.0)
    }
}

pub fn point_segment_distance(p: Coord, a: Coord, b: Coord) -> f64 {
    let t = project_on_segment(p, a, b);
    dist(p, a + (b - a) * t)
}

fn segments_cross(a: Coord, b: Coord, c: Coord, d: Coord) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Euclidean distance between segments `ab` and `cd`.
pub fn segment_distance(a: Coord, b: Coord, c: Coord, d: Coord) -> f64 {
    if segments_cross(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// How two segments meet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentIntersection {
    None,
    /// Single point with parameters along the first and second segment.
    Point {
        point: Coord,
        t: f64,
        u: f64,
    },
    /// Collinear overlap, as parameter ranges along each segment.
    Overlap {
        t: (f64, f64),
        u: (f64, f64),
    },
}

/// Intersection of `ab` and `cd` with a distance tolerance for touching
/// and collinearity.
pub fn intersect_segments(a: Coord, b: Coord, c: Coord, d: Coord, tol: f64) -> SegmentIntersection {
    let r = b - a;
    let s = d - c;
    let rr = dot(r, r);
    let ss = dot(s, s);
    if rr == 0.0 || ss == 0.0 {
        return SegmentIntersection::None;
    }
    let denom = cross(r, s);
    let len_r = rr.sqrt();
    let len_s = ss.sqrt();
    let parallel = denom.abs() <= 1e-12 * len_r * len_s;
    if parallel {
        // Collinear only if cd lies on the line through ab.
        if (cross(r, c - a) / len_r).abs() > tol || (cross(r, d - a) / len_r).abs() > tol {
            return SegmentIntersection::None;
        }
        let tc = dot(c - a, r) / rr;
        let td = dot(d - a, r) / rr;
        let (lo, hi) = if tc <= td { (tc, td) } else { (td, tc) };
        let lo = lo.max(0.0);
        let hi = hi.min(1.0);
        if (hi - lo) * len_r > tol {
            let u_of = |t: f64| dot(a + r * t - c, s) / ss;
            return SegmentIntersection::Overlap { t: (lo, hi), u: (u_of(lo), u_of(hi)) };
        }
        if hi - lo >= -tol / len_r {
            let t = 0.5 * (lo + hi);
            let point = a + r * t.clamp(0.0, 1.0);
            return SegmentIntersection::Point { point, t: t.clamp(0.0, 1.0), u: project_on_segment(point, c, d) };
        }
        return SegmentIntersection::None;
    }
    let t = cross(c - a, s) / denom;
    let u = cross(c - a, r) / denom;
    let et = tol / len_r;
    let eu = tol / len_s;
    if t < -et || t > 1.0 + et || u < -eu || u > 1.0 + eu {
        // Endpoint within tolerance of the other segment still counts.
        let candidates = [
            (a, 0.0, project_on_segment(a, c, d), point_segment_distance(a, c, d)),
            (b, 1.0, project_on_segment(b, c, d), point_segment_distance(b, c, d)),
            (c, project_on_segment(c, a, b), 0.0, point_segment_distance(c, a, b)),
            (d, project_on_segment(d, a, b), 1.0, point_segment_distance(d, a, b)),
        ];
        if let Some(&(point, t, u, _)) = candidates.iter().find(|x| x.3 <= tol) {
            return SegmentIntersection::Point { point, t, u };
        }
        return SegmentIntersection::None;
    }
    let t = t.clamp(0.0, 1.0);
    let u = u.clamp(0.0, 1.0);
    SegmentIntersection::Point { point: a + r * t, t, u }
}

/// Smallest circle containing all points, as (center, radius).
pub fn min_enclosing_circle(points: &[Coord]) -> (Coord, f64) {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    // Deterministic shuffle keeps the expected running time linear.
    let n = pts.len();
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    for i in (1..n).rev() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        pts.swap(i, (state % (i as u64 + 1)) as usize);
    }
    let eps = 1e-12;
    let inside = |c: Coord, r: f64, p: Coord| dist(c, p) <= r * (1.0 + eps) + eps;
    let mut center = match pts.first() {
        Some(p) => *p,
        None => return (Coord { x: 0.0, y: 0.0 }, 0.0),
    };
    let mut radius = 0.0;
    for i in 1..n {
        if inside(center, radius, pts[i]) {
            continue;
        }
        center = pts[i];
        radius = 0.0;
        for j in 0..i {
            if inside(center, radius, pts[j]) {
                continue;
            }
            center = (pts[i] + pts[j]) * 0.5;
            radius = dist(pts[i], pts[j]) * 0.5;
            for k in 0..j {
                if inside(center, radius, pts[k]) {
                    continue;
                }
                if let Some((c, r)) = circumcircle(pts[i], pts[j], pts[k]) {
                    center = c;
                    radius = r;
                }
            }
        }
    }
    (center, radius)
}

fn circumcircle(a: Coord, b: Coord, c: Coord) -> Option<(Coord, f64)> {
    let b = b - a;
    let c = c - a;
    let d = 2.0 * cross(b, c);
    if d == 0.0 {
        return None;
    }
    let bb = dot(b, b);
    let cc = dot(c, c);
    let center = Coord { x: (c.y * bb - b.y * cc) / d, y: (b.x * cc - c.x * bb) / d };
    Some((center + a, (center.x * center.x + center.y * center.y).sqrt()))
}

/// Minimum rotated rectangle as (long side, short side, direction of the
/// long side in degrees modulo 90).
pub fn rotated_rect(p: &Polygon) -> Option<(f64, f64, f64)> {
    let rect = p.minimum_rotated_rect()?;
    let c = &rect.exterior().0;
    if c.len() < 4 {
        return None;
    }
    let s1 = dist(c[0], c[1]);
    let s2 = dist(c[1], c[2]);
    let (long, short, from, to) = if s1 >= s2 { (s1, s2, c[0], c[1]) } else { (s2, s1, c[1], c[2]) };
    Some((long, short, direction_mod90(from, to)))
}

/// Direction of `a -> b` in degrees, reduced modulo 90 to `[0, 90)`.
pub fn direction_mod90(a: Coord, b: Coord) -> f64 {
    let deg = (b.y - a.y).atan2(b.x - a.x).to_degrees();
    let m = deg.rem_euclid(90.0);
    if m >= 90.0 {
        0.0
    } else {
        m
    }
}

/// Orientation folded to `[0, 45]`.
pub fn fold45(mod90: f64) -> f64 {
    if mod90 > 45.0 {
        90.0 - mod90
    } else {
        mod90
    }
}

/// Angular distance between two directions taken modulo 90, in `[0, 45]`.
pub fn deviation_mod90(a: f64, b: f64) -> f64 {
    fold45((a - b).rem_euclid(90.0))
}

/// Drops repeated vertices and orients the exterior counter-clockwise and
/// holes clockwise.
pub fn normalize_polygon(p: &Polygon) -> Polygon {
    let fix = |ring: &LineString, ccw: bool| {
        let mut r = ring.remove_repeated_points();
        r.close();
        let positive = ring_signed_area(&r.0) > 0.0;
        if positive != ccw {
            r.0.reverse();
        }
        r
    };
    Polygon::new(fix(p.exterior(), true), p.interiors().iter().map(|r| fix(r, false)).collect())
}

pub fn polygon_area(p: &Polygon) -> f64 {
    p.unsigned_area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use geo::polygon;

    #[test]
    fn enclosing_circle_of_square() {
        let pts = [(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0), (1.0, 1.0)].map(|(x, y)| Coord { x, y });
        let (c, r) = min_enclosing_circle(&pts);
        assert!((c.x - 1.0).abs() < 1e-12 && (c.y - 1.0).abs() < 1e-12);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn enclosing_circle_of_obtuse_triangle_uses_long_side() {
        let pts = [(0.0, 0.0), (10.0, 0.0), (5.0, 1.0)].map(|(x, y)| Coord { x, y });
        let (c, r) = min_enclosing_circle(&pts);
        assert!((c.x - 5.0).abs() < 1e-12 && c.y.abs() < 1e-12);
        assert!((r - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rotated_rect_of_tilted_rectangle() {
        let a = 30f64.to_radians();
        let (u, v) = (Coord { x: a.cos(), y: a.sin() }, Coord { x: -a.sin(), y: a.cos() });
        let ring: Vec<Coord> =
            [(0.0, 0.0), (4.0, 0.0), (4.0, 1.0), (0.0, 1.0)].iter().map(|&(x, y)| u * x + v * y).collect();
        let p = Polygon::new(LineString::from(ring), vec![]);
        let (long, short, dir) = rotated_rect(&p).unwrap();
        assert!((long - 4.0).abs() < 1e-9 && (short - 1.0).abs() < 1e-9);
        assert!((dir - 30.0).abs() < 1e-9);
    }

    #[test]
    fn deviation_wraps() {
        assert!((deviation_mod90(89.0, 1.0) - 2.0).abs() < 1e-12);
        assert!((deviation_mod90(10.0, 40.0) - 30.0).abs() < 1e-12);
        assert!((deviation_mod90(0.0, 45.0) - 45.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_segments() {
        let c = |x, y| Coord { x, y };
        match intersect_segments(c(0.0, 0.0), c(2.0, 2.0), c(0.0, 2.0), c(2.0, 0.0), 1e-9) {
            SegmentIntersection::Point { point, t, u } => {
                assert!((point.x - 1.0).abs() < 1e-12 && (t - 0.5).abs() < 1e-12 && (u - 0.5).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            intersect_segments(c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(3.0, 0.0), 1e-9),
            SegmentIntersection::Overlap { .. }
        ));
        assert_eq!(
            intersect_segments(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0), 1e-9),
            SegmentIntersection::None
        );
    }

    #[test]
    fn normalisation_orients_rings() {
        let p = polygon![(x: 0.0, y: 0.0), (x: 0.0, y: 1.0), (x: 1.0, y: 1.0), (x: 1.0, y: 1.0), (x: 1.0, y: 0.0)];
        let n = normalize_polygon(&p);
        assert!(ring_signed_area(&n.exterior().0) > 0.0);
        assert_eq!(n.exterior().0.len(), 5);
    }
}
