//! Plane graphs, clockwise-odd orientations, Pfaffian matching counts and the gadget
//! graphs whose perfect matchings are the 1-2 configurations of a box.
//!
//! A 1-2 configuration selects at every vertex the angle whose two edges agree. Around a
//! face, the selected angles between two fixed edges (or around the whole face when no
//! edge is fixed) have a prescribed parity. Each such run of corners is replaced by a
//! gadget admitting exactly the selections of the right parity, one matching each.

use crate::hexlattice::{face_center, vertex_xy, EdgeClass, Face, HexGraph, Topology};
use crate::model::{BoundaryCondition, Weights};
use crate::numeric::Scalar;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

pub type Dense<T> = Vec<Vec<T>>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlainEdge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Straight-line plane graph with positive edge weights.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlainGraph {
    pub vertices: Vec<[f64; 2]>,
    pub edges: Vec<PlainEdge>,
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    fn orient(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    }
    fn on(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> bool {
        r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
    }
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && on(a, b, c)) || (o2 == 0.0 && on(a, b, d)) || (o3 == 0.0 && on(c, d, a)) || (o4 == 0.0 && on(c, d, b))
}

/// Boundary walk of a face: `(edge, forward)` steps, forward meaning `u -> v`.
#[derive(Clone, Debug)]
pub struct FaceWalk {
    pub steps: Vec<(usize, bool)>,
    pub area: f64,
    pub outer: bool,
}

impl PlainGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn add_vertex(&mut self, x: f64, y: f64) -> usize {
        self.vertices.push([x, y]);
        self.vertices.len() - 1
    }

    pub fn add_edge(&mut self, u: usize, v: usize, w: f64) -> usize {
        self.edges.push(PlainEdge { u, v, w });
        self.edges.len() - 1
    }

    /// Positive weights, no loops or parallel edges, no crossings.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.edges {
            if e.u >= self.n() || e.v >= self.n() || e.u == e.v {
                return Err(Error::Argument(format!("edge {}-{}", e.u, e.v)));
            }
            if !(e.w > 0.0 && e.w.is_finite()) {
                return Err(Error::Argument(format!("edge weight {}", e.w)));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::Argument(format!("parallel edge {}-{}", e.u, e.v)));
            }
        }
        let mut pos = HashSet::new();
        for p in &self.vertices {
            if !pos.insert((p[0].to_bits(), p[1].to_bits())) {
                return Err(Error::NonPlanar("coincident vertices".into()));
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            for f in &self.edges[i + 1..] {
                if e.u == f.u || e.u == f.v || e.v == f.u || e.v == f.v {
                    continue;
                }
                let (a, b, c, d) = (self.vertices[e.u], self.vertices[e.v], self.vertices[f.u], self.vertices[f.v]);
                if segments_cross(a, b, c, d) {
                    return Err(Error::NonPlanar(format!("edges {}-{} and {}-{} cross", e.u, e.v, f.u, f.v)));
                }
            }
        }
        Ok(())
    }

    /// Neighbours of each vertex as `(angle, other, edge)` in counterclockwise order.
    fn rotation(&self) -> Vec<Vec<(f64, usize, usize)>> {
        let mut rot = vec![Vec::new(); self.n()];
        for (i, e) in self.edges.iter().enumerate() {
            let (a, b) = (self.vertices[e.u], self.vertices[e.v]);
            rot[e.u].push(((b[1] - a[1]).atan2(b[0] - a[0]), e.v, i));
            rot[e.v].push(((a[1] - b[1]).atan2(a[0] - b[0]), e.u, i));
        }
        for r in &mut rot {
            r.sort_by(|x, y| x.0.total_cmp(&y.0));
        }
        rot
    }

    /// Connected component label of every vertex.
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n()];
        let mut adj = vec![Vec::new(); self.n()];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        let mut c = 0;
        for s in 0..self.n() {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = c;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = c;
                        stack.push(v);
                    }
                }
            }
            c += 1;
        }
        comp
    }

    /// Faces of every component; interior faces are traced counterclockwise and each
    /// component with an edge has exactly one outer face.
    pub fn faces(&self) -> Vec<FaceWalk> {
        let rot = self.rotation();
        let pos: HashMap<(usize, usize), usize> = rot
            .iter()
            .enumerate()
            .flat_map(|(v, r)| r.iter().enumerate().map(move |(i, &(_, _, e))| ((v, e), i)))
            .collect();
        let mut used = HashSet::new();
        let mut walks = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            for fwd in [true, false] {
                if used.contains(&(i, fwd)) {
                    continue;
                }
                let mut steps = Vec::new();
                let mut area = 0.0;
                let (mut cur, mut dir) = (i, fwd);
                loop {
                    used.insert((cur, dir));
                    steps.push((cur, dir));
                    let ed = &self.edges[cur];
                    let (a, b) = if dir { (ed.u, ed.v) } else { (ed.v, ed.u) };
                    let (pa, pb) = (self.vertices[a], self.vertices[b]);
                    area += pa[0] * pb[1] - pb[0] * pa[1];
                    let r = &rot[b];
                    let k = pos[&(b, cur)];
                    let (_, w, ne) = r[(k + r.len() - 1) % r.len()];
                    let ndir = self.edges[ne].u == b && self.edges[ne].v == w;
                    cur = ne;
                    dir = ndir;
                    if (cur, dir) == (i, fwd) {
                        break;
                    }
                }
                walks.push(FaceWalk { steps, area: area / 2.0, outer: false });
            }
            let _ = e;
        }
        let comp = self.components();
        let mut best: HashMap<usize, usize> = HashMap::new();
        for (k, w) in walks.iter().enumerate() {
            let c = comp[self.edges[w.steps[0].0].u];
            let b = best.entry(c).or_insert(k);
            if w.area < walks[*b].area {
                *b = k;
            }
        }
        for &k in best.values() {
            walks[k].outer = true;
        }
        walks
    }

    /// Skew matrix with `K[u][v] = w` for an edge oriented `u -> v`.
    pub fn skew_matrix<T: Scalar>(&self, orient: &[bool]) -> Dense<T> {
        let n = self.n();
        let mut k = vec![vec![T::zero(); n]; n];
        for (e, &fwd) in self.edges.iter().zip(orient) {
            let w = T::from_f64(e.w);
            let (a, b) = if fwd { (e.u, e.v) } else { (e.v, e.u) };
            k[a][b] = w.clone();
            k[b][a] = -w;
        }
        k
    }

    /// Weighted perfect matchings by exhaustive search.
    pub fn brute_force_count<T: Scalar>(&self) -> T {
        let n = self.n();
        if n % 2 == 1 {
            return T::zero();
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.u].push((e.v, e.w));
            adj[e.v].push((e.u, e.w));
        }
        fn rec<T: Scalar>(adj: &[Vec<(usize, f64)>], used: &mut [bool]) -> T {
            let Some(u) = used.iter().position(|&x| !x) else {
                return T::one();
            };
            used[u] = true;
            let mut total = T::zero();
            for &(v, w) in &adj[u] {
                if !used[v] {
                    used[v] = true;
                    total = total + T::from_f64(w) * rec::<T>(adj, used);
                    used[v] = false;
                }
            }
            used[u] = false;
            total
        }
        rec::<T>(&adj, &mut vec![false; n])
    }

    /// Subgraph induced by `keep` (in the given order).
    pub fn induced(&self, keep: &[usize]) -> (PlainGraph, Vec<usize>) {
        let mut map = vec![usize::MAX; self.n()];
        let mut g = PlainGraph::new();
        for &v in keep {
            map[v] = g.add_vertex(self.vertices[v][0], self.vertices[v][1]);
        }
        let mut emap = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if map[e.u] != usize::MAX && map[e.v] != usize::MAX {
                g.add_edge(map[e.u], map[e.v], e.w);
                emap.push(i);
            }
        }
        (g, emap)
    }
}

/// Number of steps of an interior face that run against the orientation, i.e. clockwise.
fn clockwise_count(pg: &PlainGraph, walk: &FaceWalk, orient: &[Option<bool>]) -> (usize, Vec<usize>) {
    let mut cw = 0;
    let mut open = Vec::new();
    for &(e, dir) in &walk.steps {
        match orient[e] {
            Some(o) => {
                if o != dir {
                    cw += 1;
                }
            }
            None => open.push(e),
        }
    }
    let _ = pg;
    (cw, open)
}

/// Clockwise-odd orientation (`true` means `u -> v`) by the spanning-tree method.
pub fn kasteleyn_orientation(pg: &PlainGraph) -> Result<Vec<bool>> {
    pg.validate()?;
    let n = pg.n();
    let mut orient: Vec<Option<bool>> = vec![None; pg.edges.len()];
    let mut adj = vec![Vec::new(); n];
    for (i, e) in pg.edges.iter().enumerate() {
        adj[e.u].push((e.v, i));
        adj[e.v].push((e.u, i));
    }
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &(v, e) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    orient[e] = Some(pg.edges[e].u < pg.edges[e].v);
                    queue.push_back(v);
                }
            }
        }
    }
    let walks: Vec<FaceWalk> = pg.faces().into_iter().filter(|w| !w.outer).collect();
    let mut done = vec![false; walks.len()];
    loop {
        let mut progress = false;
        for (k, w) in walks.iter().enumerate() {
            if done[k] {
                continue;
            }
            let (cw, open) = clockwise_count(pg, w, &orient);
            let mut distinct = open.clone();
            distinct.sort();
            distinct.dedup();
            match distinct.len() {
                0 => {
                    if cw % 2 == 0 {
                        return Err(Error::NonPlanar("face parity cannot be fixed".into()));
                    }
                    done[k] = true;
                    progress = true;
                }
                1 if open.len() == 1 => {
                    let e = open[0];
                    let dir = w.steps.iter().find(|s| s.0 == e).expect("open edge").1;
                    orient[e] = Some(if cw % 2 == 0 { !dir } else { dir });
                    done[k] = true;
                    progress = true;
                }
                _ => {}
            }
        }
        if done.iter().all(|&d| d) {
            break;
        }
        if !progress {
            return Err(Error::NonPlanar("no face with a single free edge".into()));
        }
    }
    if orient.iter().any(|o| o.is_none()) {
        return Err(Error::NonPlanar("unoriented edge".into()));
    }
    Ok(orient.into_iter().map(|o| o.unwrap()).collect())
}

/// True when every interior face has an odd number of clockwise edges.
pub fn is_clockwise_odd(pg: &PlainGraph, orient: &[bool]) -> bool {
    let o: Vec<Option<bool>> = orient.iter().map(|&x| Some(x)).collect();
    pg.faces().iter().filter(|w| !w.outer).all(|w| clockwise_count(pg, w, &o).0 % 2 == 1)
}

/// Pfaffian of a skew-symmetric matrix by pivoted elimination.
pub fn pfaffian<T: Scalar>(mut a: Dense<T>) -> T {
    let n = a.len();
    if n % 2 == 1 {
        return T::zero();
    }
    let mut pf = T::one();
    let mut k = 0;
    while k < n {
        let mut piv = None;
        for j in k + 1..n {
            if a[k][j].is_zero() {
                continue;
            }
            if T::EXACT {
                piv = Some(j);
                break;
            }
            if piv.is_none_or(|p: usize| a[k][j].abs() > a[k][p].abs()) {
                piv = Some(j);
            }
        }
        let Some(j) = piv else { return T::zero() };
        if j != k + 1 {
            a.swap(j, k + 1);
            for row in a.iter_mut() {
                row.swap(j, k + 1);
            }
            pf = -pf;
        }
        let p = a[k][k + 1].clone();
        pf = pf * p.clone();
        for i in k + 2..n {
            let (ki, k1i) = (a[k][i].clone(), a[k + 1][i].clone());
            if ki.is_zero() && k1i.is_zero() {
                continue;
            }
            for l in k + 2..n {
                let (kl, k1l) = (&a[k][l], &a[k + 1][l]);
                if kl.is_zero() && k1l.is_zero() {
                    continue;
                }
                let d = (k1i.clone() * kl.clone() - ki.clone() * k1l.clone()) / p.clone();
                a[i][l] = a[i][l].clone() + d;
            }
        }
        k += 2;
    }
    pf
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn determinant<T: Scalar>(mut a: Dense<T>) -> T {
    let n = a.len();
    let mut sign = T::one();
    let mut prev = T::one();
    for k in 0..n {
        let mut piv = None;
        for i in k..n {
            if a[i][k].is_zero() {
                continue;
            }
            if T::EXACT {
                piv = Some(i);
                break;
            }
            if piv.is_none_or(|p: usize| a[i][k].abs() > a[p][k].abs()) {
                piv = Some(i);
            }
        }
        let Some(p) = piv else { return T::zero() };
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j].clone() * a[k][k].clone() - a[i][k].clone() * a[k][j].clone()) / prev.clone();
            }
            a[i][k] = T::zero();
        }
        prev = a[k][k].clone();
    }
    if n == 0 {
        return T::one();
    }
    sign * a[n - 1][n - 1].clone()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PfCount<T> {
    pub value: T,
    /// Set when the vertex count is odd (no perfect matching).
    pub odd: bool,
}

/// Weighted perfect-matching count `|Pf K|` for a clockwise-odd orientation.
pub fn pfaffian_count<T: Scalar>(pg: &PlainGraph, orient: &[bool]) -> PfCount<T> {
    if pg.n() % 2 == 1 {
        return PfCount { value: T::zero(), odd: true };
    }
    PfCount { value: pfaffian(pg.skew_matrix::<T>(orient)).abs(), odd: false }
}

/// Orientation and count in one call.
pub fn count_matchings<T: Scalar>(pg: &PlainGraph) -> Result<T> {
    let o = kasteleyn_orientation(pg)?;
    Ok(pfaffian_count::<T>(pg, &o).value)
}

// ---------------------------------------------------------------------------------------
// Boundary hexagons and gadgets

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Positive,
    Negative,
}

/// A hexagon crossing the boundary of a box.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HexBoundaryClass {
    pub face: (i32, i32),
    /// 1: five corners outside, 2: four outside, 3: otherwise.
    pub kind: u8,
    pub outside: usize,
    pub parity: Parity,
}

/// Maximal run of region corners of one face joined by free edges.
#[derive(Clone, Debug)]
struct Group {
    face: Face,
    /// Corner positions in walk order.
    pos: Vec<usize>,
    closed: bool,
    /// Parity of the number of selected angles.
    target: bool,
}

fn face_groups(g: &HexGraph, face: &Face, free: &dyn Fn(usize) -> bool) -> Result<Vec<(Vec<usize>, bool)>> {
    let region: Vec<bool> = (0..6).map(|i| face.vertices[i].is_some()).collect();
    let joined = |i: usize| face.edges[i].is_some_and(free) && region[i] && region[(i + 1) % 6];
    if (0..6).all(|i| region[i] && joined(i)) {
        return Ok(vec![((0..6).collect(), true)]);
    }
    let mut out = Vec::new();
    for s in 0..6 {
        let prev = (s + 5) % 6;
        if !region[s] || (region[prev] && joined(prev)) {
            continue;
        }
        let mut run = vec![s];
        let mut i = s;
        while joined(i) {
            i = (i + 1) % 6;
            run.push(i);
        }
        out.push((run, false));
    }
    let _ = g;
    Ok(out)
}

fn angle_slot(g: &HexGraph, face: &Face, pos: usize) -> usize {
    let v = face.vertices[pos].expect("region corner");
    let a = face.edges[(pos + 5) % 6].expect("corner edge");
    let b = face.edges[pos].expect("corner edge");
    (0..3).find(|&s| g.incident[v][s] != a && g.incident[v][s] != b).expect("third slot")
}

fn all_faces(g: &HexGraph) -> impl Iterator<Item = (&Face, bool)> {
    g.faces.iter().map(|f| (f, true)).chain(g.outer_faces.iter().map(|f| (f, false)))
}

fn require_box(g: &HexGraph) -> Result<()> {
    if g.topology != Topology::Planar {
        return Err(Error::Argument("boxes only".into()));
    }
    Ok(())
}

/// Run target from the states of the two fixed edges that bound it.
fn open_target(face: &Face, run: &[usize], state: &dyn Fn(usize) -> bool) -> bool {
    let first = face.edges[(run[0] + 5) % 6].expect("bounding edge");
    let last = face.edges[*run.last().unwrap()].expect("bounding edge");
    (run.len() % 2 == 1) ^ (state(first) != state(last))
}

fn groups_with(g: &HexGraph, fixed: &[Option<bool>]) -> Result<Vec<Group>> {
    let free = |e: usize| fixed[e].is_none();
    let state = |e: usize| fixed[e].expect("fixed edge");
    let mut out = Vec::new();
    for (face, _) in all_faces(g) {
        for (pos, closed) in face_groups(g, face, &free)? {
            let target = if closed { false } else { open_target(face, &pos, &state) };
            out.push(Group { face: face.clone(), pos, closed, target });
        }
    }
    Ok(out)
}

/// Boundary hexagons with type and parity; the parity of a hexagon is that of the
/// selected angles at its corners outside the box, which equals that of its inside
/// corners in any extension to the whole lattice.
pub fn classify_boundary(g: &HexGraph, tau: &BoundaryCondition) -> Result<Vec<HexBoundaryClass>> {
    require_box(g)?;
    if tau.states.len() != g.boundary.len() {
        return Err(Error::Mismatch("boundary length".into()));
    }
    let fixed = fixed_states(g, tau, &[])?;
    let mut out = Vec::new();
    for face in &g.outer_faces {
        let inside = face.vertices.iter().filter(|v| v.is_some()).count();
        if inside == 0 {
            continue;
        }
        let groups = face_groups(g, face, &|e| fixed[e].is_none())?;
        if groups.len() != 1 {
            return Err(Error::Argument(format!("hexagon {:?} meets the box twice", face.key)));
        }
        let target = open_target(face, &groups[0].0, &|e| fixed[e].unwrap());
        let outside = 6 - inside;
        let kind = match outside {
            5 => 1,
            4 => 2,
            _ => 3,
        };
        out.push(HexBoundaryClass {
            face: face.key,
            kind,
            outside,
            parity: if target { Parity::Negative } else { Parity::Positive },
        });
    }
    Ok(out)
}

fn fixed_states(g: &HexGraph, tau: &BoundaryCondition, pins: &[(usize, bool)]) -> Result<Vec<Option<bool>>> {
    let mut fixed = vec![None; g.n_edges()];
    for (&e, &s) in g.boundary.iter().zip(&tau.states) {
        fixed[e] = Some(s);
    }
    for &(e, s) in pins {
        if e >= g.n_edges() {
            return Err(Error::Argument(format!("edge {e}")));
        }
        fixed[e] = Some(s);
    }
    Ok(fixed)
}

fn pt(v: (i64, i64)) -> [f64; 2] {
    [v.0 as f64, v.1 as f64]
}

fn lerp(a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Builder for gadget graphs on top of the lattice vertices.
struct Assembler<'a> {
    g: &'a HexGraph,
    w: &'a Weights,
    pg: PlainGraph,
    /// Plain vertex carrying lattice vertex `v`.
    vnode: Vec<usize>,
}

impl<'a> Assembler<'a> {
    fn new(g: &'a HexGraph, w: &'a Weights) -> Self {
        let mut pg = PlainGraph::new();
        let vnode = g.vertices.iter().map(|&v| {
            let p = pt(vertex_xy(v));
            pg.add_vertex(p[0], p[1])
        }).collect();
        Assembler { g, w, pg, vnode }
    }

    fn inner(&mut self, face: &Face, target: [f64; 2], t: f64) -> usize {
        let c = pt(face_center(face.key));
        let p = lerp(c, target, t);
        self.pg.add_vertex(p[0], p[1])
    }

    fn corner(&self, face: &Face, pos: usize) -> [f64; 2] {
        pt(vertex_xy(face.corners[pos % 6]))
    }

    fn angle_weight(&self, face: &Face, pos: usize) -> f64 {
        self.w.param(EdgeClass::ALL[angle_slot(self.g, face, pos)])
    }

    /// Path gadget: corner `i` attaches to path nodes `2i, 2i+1`; a trailing dummy slot
    /// flips the admitted parity. Returns the dummy node, if any.
    fn path_gadget(&mut self, face: &Face, pos: &[usize], attach: &[usize], closed: bool, dummy: bool) -> (Vec<usize>, Option<usize>) {
        let mut path = Vec::new();
        for (i, &p) in pos.iter().enumerate() {
            let here = self.corner(face, p);
            let prev = self.corner(face, p + 5);
            let next = self.corner(face, p + 1);
            let a = self.inner(face, lerp(here, prev, 0.2), 0.3);
            let b = self.inner(face, lerp(here, next, 0.2), 0.3);
            let wt = self.angle_weight(face, p);
            self.pg.add_edge(attach[i], a, wt);
            self.pg.add_edge(attach[i], b, wt);
            path.push(a);
            path.push(b);
        }
        let mut d = None;
        if dummy {
            debug_assert!(!closed);
            let last = *pos.last().unwrap();
            let (here, next) = (self.corner(face, last), self.corner(face, last + 1));
            let a = self.inner(face, lerp(here, next, 0.4), 0.3);
            let b = self.inner(face, lerp(here, next, 0.6), 0.3);
            let x = self.inner(face, lerp(here, next, 0.5), 0.55);
            self.pg.add_edge(x, a, 1.0);
            self.pg.add_edge(x, b, 1.0);
            path.push(a);
            path.push(b);
            d = Some(x);
        }
        for i in 0..path.len() - 1 {
            self.pg.add_edge(path[i], path[i + 1], 1.0);
        }
        (path, d)
    }

    fn group(&mut self, gr: &Group) {
        let face = &gr.face;
        let vs: Vec<usize> = gr.pos.iter().map(|&p| self.vnode[face.vertices[p].unwrap()]).collect();
        match (gr.pos.len(), gr.target) {
            (1, false) => {}
            (1, true) => {
                let t = self.inner(face, self.corner(face, gr.pos[0]), 0.6);
                let wt = self.angle_weight(face, gr.pos[0]);
                self.pg.add_edge(vs[0], t, wt);
            }
            (2, par) => {
                let mut term = Vec::new();
                for (i, &p) in gr.pos.iter().enumerate() {
                    let t = self.inner(face, self.corner(face, p), 0.6);
                    let wt = self.angle_weight(face, p);
                    self.pg.add_edge(vs[i], t, wt);
                    term.push(t);
                }
                if par {
                    let mid = lerp(self.corner(face, gr.pos[0]), self.corner(face, gr.pos[1]), 0.5);
                    let x = self.inner(face, mid, 0.35);
                    self.pg.add_edge(x, term[0], 1.0);
                    self.pg.add_edge(x, term[1], 1.0);
                } else {
                    self.pg.add_edge(term[0], term[1], 1.0);
                }
            }
            _ => {
                self.path_gadget(face, &gr.pos, &vs, gr.closed, gr.target);
            }
        }
    }
}

/// Gadget graph for boundary `tau` with the listed edges pinned to given states.
pub fn gadget_transform_pinned(g: &HexGraph, w: &Weights, tau: &BoundaryCondition, pins: &[(usize, bool)]) -> Result<PlainGraph> {
    require_box(g)?;
    if tau.states.len() != g.boundary.len() {
        return Err(Error::Mismatch("boundary length".into()));
    }
    let fixed = fixed_states(g, tau, pins)?;
    let groups = groups_with(g, &fixed)?;
    let mut asm = Assembler::new(g, w);
    for gr in &groups {
        asm.group(gr);
    }
    Ok(asm.pg)
}

/// Gadget graph determined by the boundary parities alone; its weighted perfect
/// matchings are the configurations with boundary `tau`.
pub fn gadget_transform(g: &HexGraph, w: &Weights, tau: &BoundaryCondition) -> Result<PlainGraph> {
    let classes = classify_boundary(g, tau)?;
    gadget_from_parities(g, w, &classes.iter().map(|c| c.parity).collect::<Vec<_>>())
}

/// Gadget graph from a parity per boundary hexagon (in `classify_boundary` order).
pub fn gadget_from_parities(g: &HexGraph, w: &Weights, parities: &[Parity]) -> Result<PlainGraph> {
    require_box(g)?;
    let neg = parities.iter().filter(|&&p| p == Parity::Negative).count();
    if neg % 2 == 1 {
        return Err(Error::Inadmissible);
    }
    let interior = |e: usize| !g.edges[e].is_boundary();
    let mut asm = Assembler::new(g, w);
    let mut k = 0;
    for face in &g.faces {
        for (pos, closed) in face_groups(g, face, &interior)? {
            if !closed {
                return Err(Error::Argument("open interior face".into()));
            }
            asm.group(&Group { face: face.clone(), pos, closed, target: false });
        }
    }
    for face in &g.outer_faces {
        if face.vertices.iter().all(|v| v.is_none()) {
            continue;
        }
        let groups = face_groups(g, face, &interior)?;
        if groups.len() != 1 {
            return Err(Error::Argument(format!("hexagon {:?} meets the box twice", face.key)));
        }
        let p = *parities.get(k).ok_or_else(|| Error::Mismatch("parity vector length".into()))?;
        k += 1;
        let (pos, _) = groups.into_iter().next().unwrap();
        asm.group(&Group { face: face.clone(), pos, closed: false, target: p == Parity::Negative });
    }
    if k != parities.len() {
        return Err(Error::Mismatch("parity vector length".into()));
    }
    Ok(asm.pg)
}

/// Partition function with boundary `tau` and optional pinned edges, by Pfaffians.
pub fn pfaffian_partition<T: Scalar>(g: &HexGraph, w: &Weights, tau: &BoundaryCondition, pins: &[(usize, bool)]) -> Result<T> {
    let pg = gadget_transform_pinned(g, w, tau, pins)?;
    count_matchings::<T>(&pg)
}

/// Law of the restriction to `delta` (patterns in binary order, bit `i` = edge
/// `delta[i]`) computed from Pfaffian counts with the pattern pinned.
pub fn boundary_marginal(g: &HexGraph, w: &Weights, tau: &BoundaryCondition, delta: &[usize]) -> Result<Vec<f64>> {
    if delta.len() > 16 {
        return Err(Error::Guard(format!("{} pinned edges", delta.len())));
    }
    let mut counts = Vec::with_capacity(1 << delta.len());
    for mask in 0..1usize << delta.len() {
        let pins: Vec<(usize, bool)> = delta.iter().enumerate().map(|(i, &e)| (e, mask >> i & 1 == 1)).collect();
        let consistent = pins.iter().all(|&(e, s)| g.internal_position(e).is_some() || {
            let i = g.boundary.iter().position(|&b| b == e).unwrap();
            tau.states[i] == s
        });
        counts.push(if consistent { pfaffian_partition::<f64>(g, w, tau, &pins)? } else { 0.0 });
    }
    let z: f64 = counts.iter().sum();
    if z <= 0.0 {
        return Err(Error::Inadmissible);
    }
    Ok(counts.into_iter().map(|c| c / z).collect())
}

// ---------------------------------------------------------------------------------------
// Shared elimination for families of subgraphs

/// A fixed plane graph with a clockwise-odd orientation whose path nodes are eliminated
/// once; counts of subgraphs that keep every path node reduce to small Pfaffians.
pub struct SchurFamily {
    /// Kept-node indices (rows of `m`).
    pub nodes: Vec<usize>,
    m: Dense<f64>,
    log_pf_a: f64,
}

impl SchurFamily {
    /// `core` must induce a subgraph with a nonzero Pfaffian.
    pub fn new(pg: &PlainGraph, core: &[usize]) -> Result<Self> {
        let orient = kasteleyn_orientation(pg)?;
        let k = pg.skew_matrix::<f64>(&orient);
        let in_core: HashSet<usize> = core.iter().copied().collect();
        let nodes: Vec<usize> = (0..pg.n()).filter(|v| !in_core.contains(v)).collect();
        let nc = core.len();
        let a = nalgebra::DMatrix::from_fn(nc, nc, |i, j| k[core[i]][core[j]]);
        let pf_a = pfaffian(core.iter().map(|&i| core.iter().map(|&j| k[i][j]).collect()).collect());
        if pf_a == 0.0 {
            return Err(Error::Argument("singular core".into()));
        }
        let inv = a.try_inverse().ok_or_else(|| Error::Argument("singular core".into()))?;
        let b = nalgebra::DMatrix::from_fn(nc, nodes.len(), |i, j| k[core[i]][nodes[j]]);
        let d = nalgebra::DMatrix::from_fn(nodes.len(), nodes.len(), |i, j| k[nodes[i]][nodes[j]]);
        let m = d + b.transpose() * inv * b;
        let m = (0..nodes.len()).map(|i| (0..nodes.len()).map(|j| m[(i, j)]).collect()).collect();
        Ok(SchurFamily { nodes, m, log_pf_a: pf_a.abs().ln() })
    }

    /// Count of the subgraph keeping the core plus the listed rows of `nodes`.
    pub fn count(&self, rows: &[usize]) -> f64 {
        let sub: Dense<f64> = rows.iter().map(|&i| rows.iter().map(|&j| self.m[i][j]).collect()).collect();
        pfaffian(sub).abs() * self.log_pf_a.exp()
    }
}
