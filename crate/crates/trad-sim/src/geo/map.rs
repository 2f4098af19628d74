use serde::{Deserialize, Serialize};

use super::vec::{distance, Vec2};

/// A road segment between two endpoints, carrying `lanes_per_direction`
/// lanes each way. Vehicles travel along the segment line itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
    pub lanes_per_direction: u32,
}

impl Segment {
    pub fn length(&self) -> f64 {
        distance(self.a, self.b)
    }
}

/// A building footprint. Generated maps produce axis-aligned rectangles;
/// loaded maps may carry any convex ring. Vertices are stored
/// counter-clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<Vec2>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Vec2,
    pub max: Vec2,
}

impl Bounds {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area_km2(&self) -> f64 {
        self.width() * self.height() / 1e6
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(
            (self.min.x + self.max.x) / 2.0,
            (self.min.y + self.max.y) / 2.0,
        )
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

/// True when `p` lies within the axis-aligned box spanned by `a` and `b`;
/// only meaningful for points already known collinear with a-b.
fn in_box(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test: shared endpoints, touching and
/// collinear overlap all count as intersecting.
pub fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);

    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && in_box(q1, q2, p1))
        || (d2 == 0.0 && in_box(q1, q2, p2))
        || (d3 == 0.0 && in_box(p1, p2, q1))
        || (d4 == 0.0 && in_box(p1, p2, q2))
}

impl Polygon {
    /// Builds a polygon from a vertex ring, normalizing to
    /// counter-clockwise order.
    pub fn new(mut vertices: Vec<Vec2>) -> Polygon {
        assert!(vertices.len() >= 3, "polygon needs at least 3 vertices");
        let signed_area: f64 = vertices
            .windows(2)
            .map(|w| w[0].cross(w[1]))
            .sum::<f64>()
            + vertices[vertices.len() - 1].cross(vertices[0]);
        if signed_area < 0.0 {
            vertices.reverse();
        }
        Polygon { vertices }
    }

    pub fn rectangle(min: Vec2, max: Vec2) -> Polygon {
        Polygon::new(vec![
            min,
            Vec2::new(max.x, min.y),
            max,
            Vec2::new(min.x, max.y),
        ])
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    fn bbox(&self) -> (Vec2, Vec2) {
        let mut min = self.vertices[0];
        let mut max = self.vertices[0];
        for v in &self.vertices[1..] {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        (min, max)
    }

    /// Point containment including the boundary (convex ring, CCW).
    pub fn contains(&self, p: Vec2) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            if orient(self.vertices[i], self.vertices[(i + 1) % n], p) < 0.0 {
                return false;
            }
        }
        true
    }

    /// True when segment a-b touches the polygon interior or boundary.
    pub fn blocks(&self, a: Vec2, b: Vec2) -> bool {
        // Cheap bounding-box reject before the edge tests.
        let (min, max) = self.bbox();
        if (a.x < min.x && b.x < min.x)
            || (a.x > max.x && b.x > max.x)
            || (a.y < min.y && b.y < min.y)
            || (a.y > max.y && b.y > max.y)
        {
            return false;
        }
        let n = self.vertices.len();
        for i in 0..n {
            if segments_intersect(a, b, self.vertices[i], self.vertices[(i + 1) % n]) {
                return true;
            }
        }
        // No edge crossing: the segment is either fully outside or fully
        // inside; one endpoint decides.
        self.contains(a)
    }
}

/// The geometric world: road segments, the preloaded intersection list,
/// and building obstacles. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadMap {
    pub segments: Vec<Segment>,
    pub intersections: Vec<Vec2>,
    pub buildings: Vec<Polygon>,
    pub bounds: Bounds,
}

impl RoadMap {
    /// True when the segment a-b crosses no building interior or
    /// boundary. Grazing a polygon vertex counts as blocked.
    pub fn line_of_sight(&self, a: Vec2, b: Vec2) -> bool {
        !self.buildings.iter().any(|poly| poly.blocks(a, b))
    }

    /// Minimum distance from `p` to any intersection; +infinity when the
    /// map has none (highway corridors).
    pub fn nearest_intersection_distance(&self, p: Vec2) -> f64 {
        self.intersections
            .iter()
            .map(|&i| distance(p, i))
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn empty_map() -> RoadMap {
        RoadMap {
            segments: vec![],
            intersections: vec![],
            buildings: vec![],
            bounds: Bounds {
                min: v(0.0, 0.0),
                max: v(100.0, 100.0),
            },
        }
    }

    #[test]
    fn no_buildings_means_clear_sight() {
        let map = empty_map();
        assert!(map.line_of_sight(v(0.0, 0.0), v(100.0, 100.0)));
    }

    #[test]
    fn building_between_endpoints_blocks() {
        let mut map = empty_map();
        map.buildings
            .push(Polygon::rectangle(v(40.0, 40.0), v(60.0, 60.0)));
        assert!(!map.line_of_sight(v(0.0, 50.0), v(100.0, 50.0)));
        assert!(map.line_of_sight(v(0.0, 10.0), v(100.0, 10.0)));
        // Symmetry of the endpoints.
        assert!(!map.line_of_sight(v(100.0, 50.0), v(0.0, 50.0)));
    }

    #[test]
    fn grazing_a_vertex_counts_as_blocked() {
        // Diamond with a vertex exactly at (50, 0); the segment along the
        // x axis passes through that single point.
        let mut map = empty_map();
        map.buildings.push(Polygon::new(vec![
            v(50.0, 0.0),
            v(60.0, 10.0),
            v(50.0, 20.0),
            v(40.0, 10.0),
        ]));
        assert!(!map.line_of_sight(v(0.0, 0.0), v(100.0, 0.0)));
    }

    #[test]
    fn segment_fully_inside_a_building_is_blocked() {
        let mut map = empty_map();
        map.buildings
            .push(Polygon::rectangle(v(0.0, 0.0), v(100.0, 100.0)));
        assert!(!map.line_of_sight(v(40.0, 40.0), v(60.0, 60.0)));
    }

    #[test]
    fn nearest_intersection() {
        let mut map = empty_map();
        assert!(map.nearest_intersection_distance(v(1.0, 2.0)).is_infinite());
        map.intersections = vec![v(0.0, 0.0), v(100.0, 0.0)];
        assert_eq!(map.nearest_intersection_distance(v(60.0, 0.0)), 40.0);
        assert_eq!(map.nearest_intersection_distance(v(0.0, 0.0)), 0.0);
    }

    #[test]
    fn segment_intersection_cases() {
        // Proper crossing.
        assert!(segments_intersect(
            v(0.0, 0.0),
            v(10.0, 10.0),
            v(0.0, 10.0),
            v(10.0, 0.0)
        ));
        // Disjoint.
        assert!(!segments_intersect(
            v(0.0, 0.0),
            v(1.0, 0.0),
            v(0.0, 1.0),
            v(1.0, 1.0)
        ));
        // Endpoint touch.
        assert!(segments_intersect(
            v(0.0, 0.0),
            v(5.0, 0.0),
            v(5.0, 0.0),
            v(5.0, 5.0)
        ));
        // Collinear overlap.
        assert!(segments_intersect(
            v(0.0, 0.0),
            v(5.0, 0.0),
            v(3.0, 0.0),
            v(8.0, 0.0)
        ));
        // Collinear but apart.
        assert!(!segments_intersect(
            v(0.0, 0.0),
            v(1.0, 0.0),
            v(2.0, 0.0),
            v(3.0, 0.0)
        ));
    }
}
