//! Two-dimensional convex polytopes in the (P, Q) plane.
//!
//! Halfspaces read `a_p·P + a_q·Q ≤ rhs`. Polygons are obtained by
//! successively clipping a bounding box, so unbounded feasible regions are
//! truncated at the box.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Vertices closer than this are merged; vertices this close to the line
/// through their neighbours are dropped.
pub const MERGE_TOL: f64 = 1e-9;
/// A halfspace is binding on an edge when both endpoints lie within this
/// distance of its boundary.
pub const BINDING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub p: f64,
    pub q: f64,
}

impl Point {
    pub const fn new(p: f64, q: f64) -> Self {
        Self { p, q }
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.p - o.p, self.q - o.q)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self.p - o.p).hypot(self.q - o.q)
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    let (u, v) = (a.sub(o), b.sub(o));
    u.p * v.q - u.q * v.p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Generator,
    Voltage,
    Branch,
    Box,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Generator => "generator",
            Family::Voltage => "voltage",
            Family::Branch => "branch",
            Family::Box => "box",
        })
    }
}

/// Where a halfspace came from: its constraint family, the bus / branch /
/// bound it belongs to, and which facet of that source it is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tag {
    pub family: Family,
    pub index: usize,
    pub facet: usize,
}

impl Tag {
    pub const fn new(family: Family, index: usize, facet: usize) -> Self {
        Self {
            family,
            index,
            facet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub a_p: f64,
    pub a_q: f64,
    pub rhs: f64,
    pub tag: Tag,
}

impl Halfspace {
    /// Returns `None` for a zero normal.
    pub fn new(a_p: f64, a_q: f64, rhs: f64, tag: Tag) -> Option<Self> {
        (a_p != 0.0 || a_q != 0.0).then_some(Self { a_p, a_q, rhs, tag })
    }

    fn norm(&self) -> f64 {
        self.a_p.hypot(self.a_q)
    }

    /// Signed distance of `x` beyond the boundary (positive = violated).
    pub fn excess(&self, x: Point) -> f64 {
        (self.a_p * x.p + self.a_q * x.q - self.rhs) / self.norm()
    }
}

/// An ordered list of halfspaces.
///
/// Rows whose coefficients vanish are not stored: a satisfied constant row
/// is dropped, a violated one is recorded in `contradictions` and makes
/// the set infeasible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceSet {
    pub items: Vec<Halfspace>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contradictions: Vec<Tag>,
}

impl HalfspaceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Adds `a_p·P + a_q·Q ≤ rhs`, handling the zero-normal case.
    pub fn push_row(&mut self, a_p: f64, a_q: f64, rhs: f64, tag: Tag) {
        let scale = a_p.abs().max(a_q.abs());
        if scale <= 1e-14 * rhs.abs().max(1.0) {
            if rhs < -BINDING_TOL {
                self.contradictions.push(tag);
            }
            return;
        }
        self.items.push(Halfspace { a_p, a_q, rhs, tag });
    }

    pub fn extend(&mut self, other: &HalfspaceSet) {
        self.items.extend_from_slice(&other.items);
        self.contradictions.extend_from_slice(&other.contradictions);
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Halfspace> {
        self.items.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

impl BoundingBox {
    /// Grows each side by `fraction` of the larger extent (at least of 1e-3).
    pub fn inflated(&self, fraction: f64) -> Self {
        let w = self.p_max - self.p_min;
        let h = self.q_max - self.q_min;
        let dp = fraction * w.max(1e-3 * h.max(1.0));
        let dq = fraction * h.max(1e-3 * w.max(1.0));
        Self {
            p_min: self.p_min - dp,
            p_max: self.p_max + dp,
            q_min: self.q_min - dq,
            q_max: self.q_max + dq,
        }
    }

    pub fn polygon(&self) -> ConvexPolygon {
        ConvexPolygon {
            vertices: vec![
                Point::new(self.p_min, self.q_min),
                Point::new(self.p_max, self.q_min),
                Point::new(self.p_max, self.q_max),
                Point::new(self.p_min, self.q_max),
            ],
        }
    }
}

/// Convex polygon with counter-clockwise vertices. No vertices is the
/// empty set; one or two vertices describe a degenerate (zero-area) set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    pub vertices: Vec<Point>,
}

impl ConvexPolygon {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Polygon from vertices already in counter-clockwise convex order.
    pub fn from_ccw(vertices: Vec<Point>) -> Self {
        Self {
            vertices: cleanup(vertices),
        }
    }

    pub fn area(&self) -> f64 {
        area(self)
    }

    /// Arithmetic mean of the vertices.
    pub fn vertex_centroid(&self) -> Option<Point> {
        let n = self.vertices.len();
        if n == 0 {
            return None;
        }
        let (sp, sq) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |(a, b), v| (a + v.p, b + v.q));
        Some(Point::new(sp / n as f64, sq / n as f64))
    }

    /// Area centroid; falls back to the vertex mean for degenerate sets.
    pub fn centroid(&self) -> Option<Point> {
        let a = self.area();
        if self.vertices.len() < 3 || a <= 0.0 {
            return self.vertex_centroid();
        }
        let n = self.vertices.len();
        let (mut cp, mut cq) = (0.0, 0.0);
        for i in 0..n {
            let (u, v) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let w = u.p * v.q - v.p * u.q;
            cp += (u.p + v.p) * w;
            cq += (u.q + v.q) * w;
        }
        Some(Point::new(cp / (6.0 * a), cq / (6.0 * a)))
    }

    /// Point-in-polygon test by edge orientation; `tol` is a distance.
    pub fn contains_point(&self, x: Point, tol: f64) -> bool {
        let n = self.vertices.len();
        match n {
            0 => false,
            1 => self.vertices[0].dist(x) <= tol,
            _ => {
                if n == 2 {
                    return segment_distance(self.vertices[0], self.vertices[1], x) <= tol;
                }
                (0..n).all(|i| {
                    let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                    let len = a.dist(b);
                    cross(a, b, x) / len >= -tol
                })
            }
        }
    }

    /// Outward halfspaces of the edges, tagged `Family::Box` with the edge
    /// index. Requires at least three vertices.
    pub fn edge_halfspaces(&self) -> HalfspaceSet {
        let mut set = HalfspaceSet::new();
        let n = self.vertices.len();
        if n < 3 {
            return set;
        }
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            // Interior is to the left of a→b.
            let (a_p, a_q) = (b.q - a.q, -(b.p - a.p));
            set.push_row(a_p, a_q, a_p * a.p + a_q * a.q, Tag::new(Family::Box, i, 0));
        }
        set
    }

    /// Applies `f` to every vertex; the map must preserve orientation.
    pub fn map(&self, f: impl Fn(Point) -> Point) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| f(v)).collect(),
        }
    }
}

fn segment_distance(a: Point, b: Point, x: Point) -> f64 {
    let d = b.sub(a);
    let len2 = d.p * d.p + d.q * d.q;
    if len2 == 0.0 {
        return a.dist(x);
    }
    let t = (((x.p - a.p) * d.p + (x.q - a.q) * d.q) / len2).clamp(0.0, 1.0);
    Point::new(a.p + t * d.p, a.q + t * d.q).dist(x)
}

/// Merges near-duplicate vertices and drops collinear ones.
fn cleanup(vertices: Vec<Point>) -> Vec<Point> {
    let mut pts: Vec<Point> = Vec::with_capacity(vertices.len());
    for v in vertices {
        if pts.last().is_none_or(|l| l.dist(v) > MERGE_TOL) {
            pts.push(v);
        }
    }
    while pts.len() > 1 && pts[0].dist(pts[pts.len() - 1]) <= MERGE_TOL {
        pts.pop();
    }
    loop {
        let n = pts.len();
        if n < 3 {
            return pts;
        }
        let drop = (0..n).find(|&i| {
            let prev = pts[(i + n - 1) % n];
            let next = pts[(i + 1) % n];
            let len = prev.dist(next);
            len > 0.0 && cross(prev, next, pts[i]).abs() / len <= MERGE_TOL
        });
        match drop {
            Some(i) => {
                pts.remove(i);
            }
            None => return pts,
        }
    }
}

/// Clips a convex vertex loop by one halfspace (Sutherland–Hodgman step).
fn clip(vertices: &[Point], h: &Halfspace) -> Vec<Point> {
    let n = vertices.len();
    if n == 0 {
        return Vec::new();
    }
    let norm = h.norm();
    let eps = 1e-12 * (1.0 + h.rhs.abs() / norm);
    let side = |x: Point| (h.a_p * x.p + h.a_q * x.q - h.rhs) / norm;
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let cur = vertices[i];
        let next = vertices[(i + 1) % n];
        let (dc, dn) = (side(cur), side(next));
        let (in_c, in_n) = (dc <= eps, dn <= eps);
        if in_c {
            out.push(cur);
        }
        if in_c != in_n && n > 1 {
            let t = dc / (dc - dn);
            if t.is_finite() {
                out.push(Point::new(
                    cur.p + t * (next.p - cur.p),
                    cur.q + t * (next.q - cur.q),
                ));
            }
        }
    }
    out
}

/// Intersects `bbox` with every halfspace of `hs`.
pub fn polygon_from_halfspaces(hs: &HalfspaceSet, bbox: &BoundingBox) -> ConvexPolygon {
    if !hs.contradictions.is_empty() {
        return ConvexPolygon::empty();
    }
    let mut vertices = bbox.polygon().vertices;
    for h in hs.iter() {
        vertices = cleanup(clip(&vertices, h));
        if vertices.is_empty() {
            break;
        }
    }
    ConvexPolygon { vertices }
}

/// Shoelace area; zero for empty and degenerate polygons.
pub fn area(poly: &ConvexPolygon) -> f64 {
    let v = &poly.vertices;
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a.p * b.q - b.p * a.q
        })
        .sum();
    (0.5 * twice).max(0.0)
}

/// Intersection of two convex polygons. Degenerate inputs yield the empty
/// polygon.
pub fn intersect(a: &ConvexPolygon, b: &ConvexPolygon) -> ConvexPolygon {
    if a.vertices.len() < 3 || b.vertices.len() < 3 {
        return ConvexPolygon::empty();
    }
    let mut vertices = a.vertices.clone();
    for h in b.edge_halfspaces().iter() {
        vertices = cleanup(clip(&vertices, h));
        if vertices.is_empty() {
            break;
        }
    }
    ConvexPolygon { vertices }
}

/// Binding subset of a halfspace set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reduced {
    pub set: HalfspaceSet,
    pub infeasible: bool,
}

/// Keeps only halfspaces whose boundary supports an edge of the polygon,
/// one per edge, in their original order. For degenerate polygons every
/// halfspace active at a vertex is kept.
pub fn minimal_representation(hs: &HalfspaceSet, bbox: &BoundingBox) -> Reduced {
    let poly = polygon_from_halfspaces(hs, bbox);
    let v = &poly.vertices;
    if v.is_empty() {
        return Reduced {
            set: HalfspaceSet::new(),
            infeasible: true,
        };
    }
    let scale = v.iter().fold(1.0f64, |m, x| m.max(x.p.abs()).max(x.q.abs()));
    let tol = BINDING_TOL * scale;
    let mut keep = vec![false; hs.len()];
    if v.len() >= 3 {
        for i in 0..v.len() {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            if let Some(k) = hs
                .iter()
                .position(|h| h.excess(a).abs() <= tol && h.excess(b).abs() <= tol)
            {
                keep[k] = true;
            }
        }
    } else {
        for (k, h) in hs.iter().enumerate() {
            keep[k] = v.iter().any(|&x| h.excess(x).abs() <= tol);
        }
    }
    let items = hs
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(h, _)| *h)
        .collect();
    Reduced {
        set: HalfspaceSet {
            items,
            contradictions: Vec::new(),
        },
        infeasible: false,
    }
}

/// True iff every inequality holds within `tol` (a distance).
pub fn contains(hs: &HalfspaceSet, x: Point, tol: f64) -> bool {
    hs.contradictions.is_empty() && hs.iter().all(|h| h.excess(x) <= tol)
}

/// Convex hull (Andrew's monotone chain), counter-clockwise.
pub fn convex_hull(points: &[Point]) -> ConvexPolygon {
    let mut pts: Vec<Point> = points
        .iter()
        .copied()
        .filter(|x| x.p.is_finite() && x.q.is_finite())
        .collect();
    pts.sort_by(|a, b| a.p.total_cmp(&b.p).then(a.q.total_cmp(&b.q)));
    pts.dedup_by(|a, b| a.dist(*b) <= MERGE_TOL);
    if pts.len() < 3 {
        return ConvexPolygon { vertices: pts };
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &x in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], x) <= 0.0 {
                hull.pop();
            }
            hull.push(x);
        }
        hull.pop();
    }
    ConvexPolygon::from_ccw(hull)
}
