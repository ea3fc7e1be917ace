//! Finite regions of the honeycomb lattice in brick-wall coordinates.
//!
//! Vertex `(p,q)`: row edges `(p,q)-(p,q+1)` always exist, with class NWSE when `p+q` is even
//! and NESW otherwise; the rung `(p,q)-(p+1,q)` exists iff `p+q` is even and is Horizontal.
//! The face with top-left corner `(r,q0)` (`r+q0` even) has corners
//! `(r,q0),(r,q0+1),(r,q0+2),(r+1,q0+2),(r+1,q0+1),(r+1,q0)`.
//!
//! Coordinates are doubled integers: vertex `(2q, 6p + 2[p+q even])`, face center
//! `(2(q0+1), 6r+4)`. This is an affine image of the regular honeycomb, so containment
//! and crossing tests are exact.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId {
    pub p: i32,
    pub q: i32,
}

impl VertexId {
    pub fn new(p: i32, q: i32) -> Self {
        VertexId { p, q }
    }
    fn even(self) -> bool {
        (self.p + self.q).rem_euclid(2) == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeClass {
    Horizontal,
    #[serde(rename = "NWSE")]
    Nwse,
    #[serde(rename = "NESW")]
    Nesw,
}

impl EdgeClass {
    pub const ALL: [EdgeClass; 3] = [EdgeClass::Horizontal, EdgeClass::Nwse, EdgeClass::Nesw];

    /// Position of this class in a vertex's incidence triple.
    pub fn slot(self) -> usize {
        match self {
            EdgeClass::Horizontal => 0,
            EdgeClass::Nwse => 1,
            EdgeClass::Nesw => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Planar,
    Cylinder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Box { k: u32, n: u32 },
    /// A box together with its two acute corner vertices (the full vertex grid).
    Grid { k: u32, n: u32 },
    Cylinder { n: u32, h: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    /// Endpoints in canonical order.
    pub ends: [VertexId; 2],
    pub class: EdgeClass,
    /// Vertex indices of the endpoints that lie in the region.
    pub inner: [Option<usize>; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.inner[0].is_none() || self.inner[1].is_none()
    }
    /// The endpoint inside the region (for boundary edges, the unique one).
    pub fn inside_vertex(&self) -> usize {
        self.inner[0].or(self.inner[1]).expect("edge touches the region")
    }
}

/// A hexagon of the lattice: a region face or a virtual face outside the region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    pub key: (i32, i32),
    pub corners: [VertexId; 6],
    pub vertices: [Option<usize>; 6],
    /// `edges[i]` joins corners `i` and `i+1`.
    pub edges: [Option<usize>; 6],
}

/// Vertex/face incidence: one node per vertex and per face (region faces first, then
/// virtual outer faces), one incidence edge per angle.
#[derive(Clone, Debug)]
pub struct IncidenceGraph {
    pub n_vertices: usize,
    pub n_region_faces: usize,
    /// `angle_face[v][s]`: face node of the angle at `v` opposite the edge in slot `s`.
    pub angle_face: Vec<[usize; 3]>,
    /// Corners of each face node: `(vertex, corner position)` for region vertices.
    pub face_corners: Vec<Vec<(usize, usize)>>,
    pub face_centers: Vec<(i64, i64)>,
}

impl IncidenceGraph {
    pub fn n_faces(&self) -> usize {
        self.face_centers.len()
    }
    pub fn is_virtual(&self, f: usize) -> bool {
        f >= self.n_region_faces
    }
    /// Incidence degree of a face node (number of region corners).
    pub fn face_degree(&self, f: usize) -> usize {
        self.face_corners[f].len()
    }
}

#[derive(Clone, Debug)]
pub struct HexGraph {
    pub region: Region,
    pub topology: Topology,
    pub vertices: Vec<VertexId>,
    pub edges: Vec<Edge>,
    pub internal: Vec<usize>,
    pub boundary: Vec<usize>,
    /// Edge indices by slot (Horizontal, NWSE, NESW).
    pub incident: Vec<[usize; 3]>,
    pub faces: Vec<Face>,
    pub outer_faces: Vec<Face>,
    vindex: HashMap<VertexId, usize>,
    eindex: HashMap<[VertexId; 2], usize>,
    internal_pos: Vec<Option<usize>>,
    incidence: IncidenceGraph,
}

/// Unwrapped neighbours of `v` by slot.
pub fn lattice_neighbours(v: VertexId) -> [VertexId; 3] {
    let (p, q) = (v.p, v.q);
    if v.even() {
        [VertexId::new(p + 1, q), VertexId::new(p, q + 1), VertexId::new(p, q - 1)]
    } else {
        [VertexId::new(p - 1, q), VertexId::new(p, q - 1), VertexId::new(p, q + 1)]
    }
}

pub fn face_corners(key: (i32, i32)) -> [VertexId; 6] {
    let (r, q) = key;
    [
        VertexId::new(r, q),
        VertexId::new(r, q + 1),
        VertexId::new(r, q + 2),
        VertexId::new(r + 1, q + 2),
        VertexId::new(r + 1, q + 1),
        VertexId::new(r + 1, q),
    ]
}

pub fn vertex_xy(v: VertexId) -> (i64, i64) {
    (2 * v.q as i64, 6 * v.p as i64 + if v.even() { 2 } else { 0 })
}

pub fn face_center(key: (i32, i32)) -> (i64, i64) {
    (2 * (key.1 as i64 + 1), 6 * key.0 as i64 + 4)
}

/// Keys of the three faces containing `v` (unwrapped).
pub fn faces_of_vertex(v: VertexId) -> [(i32, i32); 3] {
    let (p, q) = (v.p, v.q);
    if v.even() {
        [(p - 1, q - 1), (p, q - 2), (p, q)]
    } else {
        [(p - 1, q - 2), (p - 1, q), (p, q - 1)]
    }
}

impl HexGraph {
    fn wrap(&self, v: VertexId) -> VertexId {
        match self.region {
            Region::Cylinder { n, .. } => VertexId::new(v.p, v.q.rem_euclid(2 * n as i32)),
            Region::Box { .. } | Region::Grid { .. } => v,
        }
    }

    fn wrap_key(&self, k: (i32, i32)) -> (i32, i32) {
        let w = self.wrap(VertexId::new(k.0, k.1));
        (w.p, w.q)
    }

    /// Period of the doubled x-coordinate (cylinder only).
    pub fn x_period(&self) -> Option<i64> {
        match self.region {
            Region::Cylinder { n, .. } => Some(4 * n as i64),
            Region::Box { .. } | Region::Grid { .. } => None,
        }
    }

    fn build(region: Region, keys: Vec<(i32, i32)>, extra: &[VertexId]) -> HexGraph {
        let topology = match region {
            Region::Box { .. } | Region::Grid { .. } => Topology::Planar,
            Region::Cylinder { .. } => Topology::Cylinder,
        };
        let mut g = HexGraph {
            region,
            topology,
            vertices: Vec::new(),
            edges: Vec::new(),
            internal: Vec::new(),
            boundary: Vec::new(),
            incident: Vec::new(),
            faces: Vec::new(),
            outer_faces: Vec::new(),
            vindex: HashMap::new(),
            eindex: HashMap::new(),
            internal_pos: Vec::new(),
            incidence: IncidenceGraph {
                n_vertices: 0,
                n_region_faces: 0,
                angle_face: Vec::new(),
                face_corners: Vec::new(),
                face_centers: Vec::new(),
            },
        };
        let keys: Vec<(i32, i32)> = keys.into_iter().map(|k| g.wrap_key(k)).collect();
        let mut vs = BTreeSet::new();
        for &k in &keys {
            for c in face_corners(k) {
                vs.insert(g.wrap(c));
            }
        }
        vs.extend(extra.iter().map(|&v| g.wrap(v)));
        g.vertices = vs.into_iter().collect();
        g.vindex = g.vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();

        let mut es: BTreeSet<([VertexId; 2], EdgeClass)> = BTreeSet::new();
        for &v in &g.vertices {
            for (s, w) in lattice_neighbours(v).into_iter().enumerate() {
                let w = g.wrap(w);
                let class = EdgeClass::ALL[s];
                let mut ends = [v, w];
                ends.sort();
                es.insert((ends, class));
            }
        }
        for (ends, class) in es {
            let inner = [g.vindex.get(&ends[0]).copied(), g.vindex.get(&ends[1]).copied()];
            let id = g.edges.len();
            g.eindex.insert(ends, id);
            g.edges.push(Edge { ends, class, inner });
        }
        g.internal_pos = vec![None; g.edges.len()];
        for (i, e) in g.edges.iter().enumerate() {
            if e.is_boundary() {
                g.boundary.push(i);
            } else {
                g.internal_pos[i] = Some(g.internal.len());
                g.internal.push(i);
            }
        }
        g.incident = g
            .vertices
            .iter()
            .map(|&v| {
                let nb = lattice_neighbours(v);
                let mut t = [0usize; 3];
                for s in 0..3 {
                    t[s] = g.edge_between(v, g.wrap(nb[s])).expect("incident edge");
                }
                t
            })
            .collect();

        let mut sorted_keys = keys.clone();
        sorted_keys.sort();
        sorted_keys.dedup();
        g.faces = sorted_keys.iter().map(|&k| g.make_face(k)).collect();
        let region_keys: BTreeSet<(i32, i32)> = sorted_keys.iter().copied().collect();
        let mut outer = BTreeSet::new();
        for &v in &g.vertices {
            for k in faces_of_vertex(v) {
                let k = g.wrap_key(k);
                if !region_keys.contains(&k) {
                    outer.insert(k);
                }
            }
        }
        g.outer_faces = outer.into_iter().map(|k| g.make_face(k)).collect();
        g.incidence = g.make_incidence();
        g
    }

    fn make_face(&self, key: (i32, i32)) -> Face {
        let corners = face_corners(key).map(|c| self.wrap(c));
        let vertices = corners.map(|c| self.vindex.get(&c).copied());
        let mut edges = [None; 6];
        for i in 0..6 {
            edges[i] = self.edge_between(corners[i], corners[(i + 1) % 6]);
        }
        Face { key, corners, vertices, edges }
    }

    fn make_incidence(&self) -> IncidenceGraph {
        let nf = self.faces.len();
        let mut key_node: HashMap<(i32, i32), usize> = HashMap::new();
        let mut centers = Vec::new();
        let mut corners_of = Vec::new();
        for (i, f) in self.faces.iter().chain(self.outer_faces.iter()).enumerate() {
            key_node.insert(f.key, i);
            centers.push(face_center(f.key));
            let cs: Vec<(usize, usize)> = (0..6)
                .filter_map(|pos| f.vertices[pos].map(|v| (v, pos)))
                .collect();
            corners_of.push(cs);
        }
        let angle_face = self
            .vertices
            .iter()
            .map(|&v| {
                let nb = lattice_neighbours(v).map(|w| self.wrap(w));
                let fk = faces_of_vertex(v).map(|k| self.wrap_key(k));
                let mut t = [0usize; 3];
                for s in 0..3 {
                    let (a, b) = (nb[(s + 1) % 3], nb[(s + 2) % 3]);
                    let k = fk
                        .iter()
                        .copied()
                        .find(|&k| {
                            let cs = face_corners(k).map(|c| self.wrap(c));
                            cs.contains(&a) && cs.contains(&b) && cs.contains(&v)
                        })
                        .expect("angle face");
                    t[s] = key_node[&k];
                }
                t
            })
            .collect();
        IncidenceGraph {
            n_vertices: self.vertices.len(),
            n_region_faces: nf,
            angle_face,
            face_corners: corners_of,
            face_centers: centers,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_index(&self, v: VertexId) -> Result<usize> {
        self.vindex.get(&self.wrap(v)).copied().ok_or(Error::UnknownVertex(v.p, v.q))
    }

    pub fn edge_between(&self, a: VertexId, b: VertexId) -> Option<usize> {
        let (a, b) = (self.wrap(a), self.wrap(b));
        let ends = if a <= b { [a, b] } else { [b, a] };
        self.eindex.get(&ends).copied()
    }

    /// Position of an edge in `internal`, if internal.
    pub fn internal_position(&self, e: usize) -> Option<usize> {
        self.internal_pos[e]
    }

    pub fn is_internal(&self, e: usize) -> bool {
        self.internal_pos[e].is_some()
    }

    /// The incidence graph (built once at construction).
    pub fn incidence(&self) -> &IncidenceGraph {
        &self.incidence
    }

    /// All faces: region faces followed by virtual outer faces, matching face-node order.
    pub fn face_node(&self, f: usize) -> &Face {
        if f < self.faces.len() {
            &self.faces[f]
        } else {
            &self.outer_faces[f - self.faces.len()]
        }
    }

    /// The other endpoint of edge `e` seen from vertex `v` (wrapped coordinates).
    pub fn other_end(&self, e: usize, v: usize) -> VertexId {
        let ed = &self.edges[e];
        let vv = self.vertices[v];
        if ed.ends[0] == vv {
            ed.ends[1]
        } else {
            ed.ends[0]
        }
    }

    /// Slot of edge `e` at vertex `v`.
    pub fn slot_of(&self, v: usize, e: usize) -> Option<usize> {
        self.incident[v].iter().position(|&x| x == e)
    }

    /// Doubled coordinates of an edge midpoint, times two (to stay integral).
    pub fn edge_midpoint4(&self, e: usize) -> (i64, i64) {
        let ed = &self.edges[e];
        let (a, b) = (vertex_xy(ed.ends[0]), vertex_xy(ed.ends[1]));
        let (mut ax, bx) = (a.0, b.0);
        if let Some(per) = self.x_period() {
            if (bx - ax).abs() > per / 2 {
                ax += if bx > ax { per } else { -per };
            }
        }
        (ax + bx, a.1 + b.1)
    }

    /// Structural self-check used by tests.
    pub fn validate(&self) -> Result<()> {
        for (v, inc) in self.incident.iter().enumerate() {
            let mut classes: Vec<EdgeClass> = inc.iter().map(|&e| self.edges[e].class).collect();
            classes.dedup();
            if classes.len() != 3 {
                return Err(Error::Argument(format!("vertex {v} classes")));
            }
        }
        let mut count = vec![0usize; self.edges.len()];
        for f in &self.faces {
            let mut es: Vec<usize> = Vec::new();
            for i in 0..6 {
                let e = f.edges[i].ok_or_else(|| Error::Argument("open face".into()))?;
                let ed = &self.edges[e];
                if !(ed.ends.contains(&f.corners[i]) && ed.ends.contains(&f.corners[(i + 1) % 6])) {
                    return Err(Error::Argument("face walk".into()));
                }
                es.push(e);
                count[e] += 1;
            }
            let cls: Vec<usize> = es.iter().map(|&e| self.edges[e].class.slot()).collect();
            for i in 0..6 {
                if cls[i] != cls[(i + 3) % 6] || cls[i] == cls[(i + 1) % 6] {
                    return Err(Error::Argument("face classes".into()));
                }
            }
            es.sort();
            es.dedup();
            if es.len() != 6 {
                return Err(Error::Argument("face edges not distinct".into()));
            }
        }
        for &e in &self.internal {
            if count[e] > 2 {
                return Err(Error::Argument(format!("edge {e} in {} faces", count[e])));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let vertices: Vec<[i32; 2]> = self.vertices.iter().map(|v| [v.p, v.q]).collect();
        let edges: Vec<serde_json::Value> = self
            .edges
            .iter()
            .map(|e| {
                serde_json::json!({
                    "u": [e.ends[0].p, e.ends[0].q],
                    "v": [e.ends[1].p, e.ends[1].q],
                    "class": e.class,
                })
            })
            .collect();
        let faces: Vec<Vec<usize>> = self
            .faces
            .iter()
            .map(|f| f.edges.iter().map(|e| e.expect("region face")).collect())
            .collect();
        serde_json::json!({
            "vertices": vertices,
            "edges": edges,
            "faces": faces,
            "topology": self.topology,
            "boundary": self.boundary,
        })
    }
}

/// Rhombic region of `k` rows of `n` faces.
pub fn build_box(k: u32, n: u32) -> Result<HexGraph> {
    if k == 0 || n == 0 {
        return Err(Error::Dimensions(format!("box {k}x{n}")));
    }
    let mut keys = Vec::new();
    for r in 0..k as i32 {
        for j in 0..n as i32 {
            keys.push((r, 2 * j + r));
        }
    }
    Ok(HexGraph::build(Region::Box { k, n }, keys, &[]))
}

/// `build_box(k, n)` plus the corner vertices `(0,-1)` and `(k, 2n+k)`, each carrying two
/// boundary edges.
pub fn build_grid(k: u32, n: u32) -> Result<HexGraph> {
    if k == 0 || n == 0 {
        return Err(Error::Dimensions(format!("grid {k}x{n}")));
    }
    let mut keys = Vec::new();
    for r in 0..k as i32 {
        for j in 0..n as i32 {
            keys.push((r, 2 * j + r));
        }
    }
    let (k, n) = (k as i32, n as i32);
    let corners = [VertexId::new(0, -1), VertexId::new(k, 2 * n + k)];
    Ok(HexGraph::build(Region::Grid { k: k as u32, n: n as u32 }, keys, &corners))
}

pub fn build_square(n: u32) -> Result<HexGraph> {
    if n == 0 {
        return Err(Error::Dimensions("square 0".into()));
    }
    build_box(n, n)
}

/// `h` rows of `n` faces wrapped around a cylinder of circumference `n`; `h = 0` gives
/// the bare ring of `2n` vertices.
pub fn build_cylinder(n: u32, h: u32) -> Result<HexGraph> {
    if n < 2 {
        return Err(Error::Dimensions(format!("cylinder {n}x{h}")));
    }
    let mut keys = Vec::new();
    for r in 0..h as i32 {
        for j in 0..n as i32 {
            keys.push((r, 2 * j + r));
        }
    }
    let ring: Vec<VertexId> = if h == 0 { (0..2 * n as i32).map(|q| VertexId::new(0, q)).collect() } else { Vec::new() };
    Ok(HexGraph::build(Region::Cylinder { n, h }, keys, &ring))
}

pub fn incidence_graph(g: &HexGraph) -> IncidenceGraph {
    g.incidence().clone()
}

/// Lattice specification string: `box:k,n`, `grid:k,n`, `square:n` or `cylinder:n,h`
/// (`h = 0` is the bare vertex ring).
pub fn parse_lattice(spec: &str) -> Result<HexGraph> {
    let (kind, dims) = spec
        .split_once(':')
        .ok_or_else(|| Error::Argument(format!("lattice spec {spec}")))?;
    let nums: Vec<u32> = dims
        .split(',')
        .map(|s| s.trim().parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Argument(format!("lattice dims {dims}")))?;
    match (kind, nums.as_slice()) {
        ("box", [k, n]) => build_box(*k, *n),
        ("grid", [k, n]) => build_grid(*k, *n),
        ("square", [n]) => build_square(*n),
        ("cylinder", [n, h]) => build_cylinder(*n, *h),
        _ => Err(Error::Argument(format!("lattice spec {spec}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h1_counts() {
        let g = build_box(1, 1).unwrap();
        assert_eq!((g.n_vertices(), g.internal.len(), g.boundary.len(), g.faces.len()), (6, 6, 6, 1));
        g.validate().unwrap();
    }

    #[test]
    fn square_two_and_three() {
        let g = build_square(2).unwrap();
        assert_eq!((g.n_vertices(), g.internal.len(), g.faces.len()), (16, 19, 4));
        let g = build_square(3).unwrap();
        assert_eq!((g.n_vertices(), g.internal.len(), g.boundary.len(), g.faces.len()), (30, 38, 14, 9));
    }

    #[test]
    fn cylinder_counts() {
        let g = build_cylinder(3, 1).unwrap();
        assert_eq!((g.n_vertices(), g.internal.len(), g.boundary.len(), g.faces.len()), (12, 15, 6, 3));
        assert_eq!(build_cylinder(3, 2).unwrap().faces.len(), 6);
        assert!(build_cylinder(1, 1).is_err());
    }

    #[test]
    fn incidence_h1() {
        let g = build_box(1, 1).unwrap();
        let inc = g.incidence();
        assert_eq!(inc.face_degree(0), 6);
        assert_eq!(inc.n_faces(), 7);
        for f in 1..inc.n_faces() {
            assert_eq!(inc.face_degree(f), 2);
        }
    }

    #[test]
    fn grid_adds_corners() {
        let g = build_grid(2, 2).unwrap();
        let b = build_box(2, 2).unwrap();
        assert_eq!(g.n_vertices(), b.n_vertices() + 2);
        assert_eq!(g.faces.len(), 4);
        g.validate().unwrap();
        let v = g.vertex_index(VertexId::new(0, -1)).unwrap();
        assert_eq!(g.incident[v].iter().filter(|&&e| g.edges[e].is_boundary()).count(), 2);
    }

    #[test]
    fn vertex_ring() {
        let g = build_cylinder(3, 0).unwrap();
        assert_eq!((g.n_vertices(), g.internal.len(), g.boundary.len(), g.faces.len()), (6, 6, 6, 0));
        g.validate().unwrap();
    }

    #[test]
    fn rejects_zero() {
        assert!(build_box(0, 2).is_err());
        assert!(build_square(0).is_err());
    }
}
