//! Bisector correspondence, disagreement cycles, distance and move paths.
//!
//! Everything lives on the vertex/face incidence graph: a vertex selects the angle whose
//! two sides share a state. Two configurations with a common boundary disagree on an edge
//! set `X`; every vertex touching `X` in one or two edges carries the minority edge, and the
//! disagreement cycles run through the two faces flanking it. At a face, corners are paired
//! along the runs of `X`, so each cycle is a contour around a component of `X`.

use crate::hexlattice::{vertex_xy, HexGraph, Topology};
use crate::model::{distinguished_slot, is_valid, Configuration, EnumGuard};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet, VecDeque};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BisectorConfig {
    /// Per vertex, the slot of the edge opposite the selected angle.
    pub sel: Vec<u8>,
    /// A known edge state tying the bisectors to one of the two lifts.
    pub anchor: (usize, bool),
}

impl BisectorConfig {
    /// Selected face node at each vertex.
    pub fn selected_face(&self, g: &HexGraph, v: usize) -> usize {
        g.incidence().angle_face[v][self.sel[v] as usize]
    }
}

pub fn to_bisector(g: &HexGraph, cfg: &Configuration) -> Result<BisectorConfig> {
    let mut sel = Vec::with_capacity(g.n_vertices());
    for v in 0..g.n_vertices() {
        let s = distinguished_slot(g, cfg, v)
            .ok_or_else(|| Error::InvalidConfiguration(format!("vertex {v} has degree 0 or 3")))?;
        sel.push(s as u8);
    }
    let e = g.boundary.first().copied().unwrap_or(0);
    Ok(BisectorConfig { sel, anchor: (e, cfg.get(e)) })
}

/// The unique configuration with bisectors `bis` and the given edge state.
pub fn from_bisector(g: &HexGraph, bis: &BisectorConfig, anchor: (usize, bool)) -> Result<Configuration> {
    let m = g.n_edges();
    let mut state: Vec<Option<bool>> = vec![None; m];
    let (e0, s0) = anchor;
    if e0 >= m {
        return Err(Error::Argument(format!("anchor edge {e0}")));
    }
    state[e0] = Some(s0);
    let mut queue = VecDeque::from([e0]);
    while let Some(e) = queue.pop_front() {
        let se = state[e].unwrap();
        for v in g.edges[e].inner.iter().flatten().copied() {
            let d = bis.sel[v] as usize;
            let slot_e = g.slot_of(v, e).expect("incident");
            for (t, &f) in g.incident[v].iter().enumerate() {
                if f == e {
                    continue;
                }
                let equal = slot_e != d && t != d;
                let want = if equal { se } else { !se };
                match state[f] {
                    None => {
                        state[f] = Some(want);
                        queue.push_back(f);
                    }
                    Some(x) if x != want => {
                        return Err(Error::InconsistentBisector(format!("edge {f} at vertex {v}")));
                    }
                    _ => {}
                }
            }
        }
    }
    let mut cfg = Configuration::empty(m);
    for (e, s) in state.into_iter().enumerate() {
        match s {
            Some(x) => cfg.set(e, x),
            None => return Err(Error::InconsistentBisector(format!("edge {e} unreached"))),
        }
    }
    Ok(cfg)
}

/// Node of the incidence graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QNode {
    Vertex(usize),
    Face(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientCycle {
    /// Alternating vertex and face nodes; the last node connects back to the first.
    pub nodes: Vec<QNode>,
    /// Doubled coordinates of the nodes, unrolled across the cylinder seam.
    pub polygon: Vec<(i64, i64)>,
    /// Net horizontal displacement after one traversal (non-zero: wraps the cylinder).
    pub wrap: i64,
}

impl QuotientCycle {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn vertices(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| if let QNode::Vertex(v) = n { Some(*v) } else { None })
            .collect()
    }
    pub fn faces(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| if let QNode::Face(f) = n { Some(*f) } else { None })
            .collect()
    }
}

fn node_xy(g: &HexGraph, n: QNode) -> (i64, i64) {
    match n {
        QNode::Vertex(v) => vertex_xy(g.vertices[v]),
        QNode::Face(f) => g.incidence().face_centers[f],
    }
}

/// Decomposition of the disagreement between two configurations with a common boundary.
pub fn cycles_between(g: &HexGraph, w1: &Configuration, w2: &Configuration) -> Result<Vec<QuotientCycle>> {
    if w1.len() != g.n_edges() || w2.len() != g.n_edges() {
        return Err(Error::Mismatch("configuration length".into()));
    }
    if g.boundary.iter().any(|&e| w1.get(e) != w2.get(e)) {
        return Err(Error::Mismatch("boundary states differ".into()));
    }
    let inc = g.incidence();
    let x: Vec<bool> = (0..g.n_edges()).map(|e| w1.get(e) != w2.get(e)).collect();
    // faces flanking the minority edge at each disagreeing vertex
    let mut flank: HashMap<usize, [usize; 2]> = HashMap::new();
    for v in 0..g.n_vertices() {
        let xs = g.incident[v].map(|e| x[e]);
        let k = xs.iter().filter(|&&b| b).count();
        let minority = match k {
            1 => xs.iter().position(|&b| b).unwrap(),
            2 => xs.iter().position(|&b| !b).unwrap(),
            _ => continue,
        };
        let a = inc.angle_face[v][(minority + 1) % 3];
        let b = inc.angle_face[v][(minority + 2) % 3];
        flank.insert(v, [a, b]);
    }
    // corner pairing along X-runs at every face touched
    let mut partner: HashMap<(usize, usize), usize> = HashMap::new();
    let mut faces: Vec<usize> = flank.values().flat_map(|p| p.iter().copied()).collect();
    faces.sort();
    faces.dedup();
    for &f in &faces {
        let face = g.face_node(f);
        let inx = |i: usize| face.edges[i % 6].is_some_and(|e| x[e]);
        let changes: Vec<usize> = (0..6).filter(|&i| inx(i + 5) != inx(i)).collect();
        for (j, &c) in changes.iter().enumerate() {
            if inx(c) {
                let d = changes[(j + 1) % changes.len()];
                let (vc, vd) = (face.vertices[c], face.vertices[d]);
                match (vc, vd) {
                    (Some(vc), Some(vd)) => {
                        partner.insert((f, vc), vd);
                        partner.insert((f, vd), vc);
                    }
                    _ => return Err(Error::Argument("disagreement reaches outside the region".into())),
                }
            }
        }
    }
    let mut seen: HashSet<usize> = HashSet::new();
    let mut starts: Vec<usize> = flank.keys().copied().collect();
    starts.sort();
    let mut out = Vec::new();
    for v0 in starts {
        if seen.contains(&v0) {
            continue;
        }
        let mut nodes = Vec::new();
        let mut v = v0;
        let mut f = flank[&v0][0];
        loop {
            seen.insert(v);
            nodes.push(QNode::Vertex(v));
            nodes.push(QNode::Face(f));
            let w = *partner
                .get(&(f, v))
                .ok_or_else(|| Error::Argument(format!("unpaired corner {v} at face {f}")))?;
            let [a, b] = flank[&w];
            f = if a == f { b } else { a };
            v = w;
            if v == v0 {
                break;
            }
        }
        out.push(make_cycle(g, nodes));
    }
    Ok(out)
}

fn make_cycle(g: &HexGraph, nodes: Vec<QNode>) -> QuotientCycle {
    let per = g.x_period();
    let mut poly: Vec<(i64, i64)> = Vec::with_capacity(nodes.len());
    for &n in &nodes {
        let (mut x, y) = node_xy(g, n);
        if let (Some(p), Some(&(px, _))) = (per, poly.last()) {
            while x - px > p / 2 {
                x -= p;
            }
            while px - x > p / 2 {
                x += p;
            }
        }
        poly.push((x, y));
    }
    let mut wrap = 0;
    if let (Some(p), Some(&(lx, _)), Some(&(fx, _))) = (per, poly.last(), poly.first()) {
        let mut x = fx;
        while x - lx > p / 2 {
            x -= p;
        }
        while lx - x > p / 2 {
            x += p;
        }
        wrap = x - fx;
    }
    QuotientCycle { nodes, polygon: poly, wrap }
}

/// Cycles between two bisector configurations sharing an anchor.
pub fn symmetric_difference_cycles(
    g: &HexGraph,
    b1: &BisectorConfig,
    b2: &BisectorConfig,
) -> Result<Vec<QuotientCycle>> {
    if b1.sel.len() != g.n_vertices() || b2.sel.len() != g.n_vertices() {
        return Err(Error::Mismatch("bisector length".into()));
    }
    if b1.anchor != b2.anchor {
        return Err(Error::Mismatch("anchors differ".into()));
    }
    let w1 = from_bisector(g, b1, b1.anchor)?;
    let w2 = from_bisector(g, b2, b2.anchor)?;
    cycles_between(g, &w1, &w2)
}

/// Winding number of `pt` around a closed polygon; `pt` must not lie on it.
fn winding(poly: &[(i64, i64)], pt: (i64, i64)) -> i64 {
    let mut wn = 0;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let cross = (b.0 - a.0) * (pt.1 - a.1) - (pt.0 - a.0) * (b.1 - a.1);
        if a.1 <= pt.1 {
            if b.1 > pt.1 && cross > 0 {
                wn += 1;
            }
        } else if b.1 <= pt.1 && cross < 0 {
            wn -= 1;
        }
    }
    wn
}

fn on_segment(a: (i64, i64), b: (i64, i64), p: (i64, i64)) -> bool {
    let cross = (b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1);
    cross == 0
        && p.0 >= a.0.min(b.0)
        && p.0 <= a.0.max(b.0)
        && p.1 >= a.1.min(b.1)
        && p.1 <= a.1.max(b.1)
}

/// Edges whose midpoint lies inside the cycle.
pub fn enclosed_edges(g: &HexGraph, c: &QuotientCycle) -> Result<Vec<usize>> {
    if c.wrap != 0 {
        return Err(Error::NonContractible);
    }
    if c.polygon.len() < 3 {
        return Ok(Vec::new());
    }
    let poly: Vec<(i64, i64)> = c.polygon.iter().map(|&(x, y)| (2 * x, 2 * y)).collect();
    let (minx, maxx) = poly.iter().fold((i64::MAX, i64::MIN), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let per = g.x_period().map(|p| 2 * p);
    let mut out = Vec::new();
    for e in 0..g.n_edges() {
        let m = g.edge_midpoint4(e);
        let shifts: Vec<i64> = match per {
            None => vec![0],
            Some(p) => {
                let lo = (minx - m.0).div_euclid(p) - 1;
                let hi = (maxx - m.0).div_euclid(p) + 1;
                (lo..=hi).map(|k| k * p).collect()
            }
        };
        for s in shifts {
            let pt = (m.0 + s, m.1);
            let n = poly.len();
            if (0..n).any(|i| on_segment(poly[i], poly[(i + 1) % n], pt)) {
                return Err(Error::Argument("edge midpoint on a cycle".into()));
            }
            if winding(&poly, pt) != 0 {
                out.push(e);
                break;
            }
        }
    }
    Ok(out)
}

pub fn enclosed_edge_count(g: &HexGraph, c: &QuotientCycle) -> Result<usize> {
    Ok(enclosed_edges(g, c)?.len())
}

pub fn distance_cfg(g: &HexGraph, w1: &Configuration, w2: &Configuration) -> Result<usize> {
    let mut d = 0;
    for c in cycles_between(g, w1, w2)? {
        d += enclosed_edge_count(g, &c)?;
    }
    Ok(d)
}

pub fn distance(g: &HexGraph, b1: &BisectorConfig, b2: &BisectorConfig) -> Result<usize> {
    let mut d = 0;
    for c in symmetric_difference_cycles(g, b1, b2)? {
        d += enclosed_edge_count(g, &c)?;
    }
    Ok(d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "lowercase")]
pub enum Move {
    #[serde(rename = "edge")]
    EdgeFlip(usize),
    #[serde(rename = "face")]
    FaceRotate(usize),
}

/// The third edge at each corner of face `f`.
pub fn external_edges(g: &HexGraph, f: usize) -> [usize; 6] {
    let face = &g.faces[f];
    let mut out = [0; 6];
    for i in 0..6 {
        let v = face.vertices[i].expect("region face");
        let (a, b) = (face.edges[(i + 5) % 6].unwrap(), face.edges[i].unwrap());
        out[i] = *g.incident[v].iter().find(|&&e| e != a && e != b).unwrap();
    }
    out
}

pub fn edge_flip_legal(g: &HexGraph, cfg: &Configuration, e: usize) -> bool {
    if !g.is_internal(e) {
        return false;
    }
    g.edges[e].inner.iter().flatten().all(|&v| {
        g.incident[v].iter().filter(|&&f| f != e && cfg.get(f)).count() == 1
    })
}

pub fn face_rotate_legal(g: &HexGraph, cfg: &Configuration, f: usize) -> bool {
    if f >= g.faces.len() {
        return false;
    }
    let es = g.faces[f].edges.map(|e| cfg.get(e.unwrap()));
    let gs = external_edges(g, f).map(|e| cfg.get(e));
    (0..6).all(|i| es[i] != es[(i + 1) % 6] && gs[i] != gs[(i + 1) % 6])
}

pub fn is_legal(g: &HexGraph, cfg: &Configuration, m: Move) -> bool {
    match m {
        Move::EdgeFlip(e) => edge_flip_legal(g, cfg, e),
        Move::FaceRotate(f) => face_rotate_legal(g, cfg, f),
    }
}

pub fn apply_move(g: &HexGraph, cfg: &Configuration, m: Move) -> Result<Configuration> {
    if !is_legal(g, cfg, m) {
        return Err(Error::IllegalMove(format!("{m:?}")));
    }
    let mut out = cfg.clone();
    match m {
        Move::EdgeFlip(e) => out.toggle(e),
        Move::FaceRotate(f) => {
            for e in g.faces[f].edges {
                out.toggle(e.unwrap());
            }
        }
    }
    Ok(out)
}

/// All legal moves in canonical order: edge flips by edge index, then face rotations.
pub fn legal_moves(g: &HexGraph, cfg: &Configuration) -> Vec<Move> {
    let mut out: Vec<Move> = g
        .internal
        .iter()
        .copied()
        .filter(|&e| edge_flip_legal(g, cfg, e))
        .map(Move::EdgeFlip)
        .collect();
    out.extend((0..g.faces.len()).filter(|&f| face_rotate_legal(g, cfg, f)).map(Move::FaceRotate));
    out
}

fn touches(g: &HexGraph, m: Move, set: &[bool]) -> bool {
    match m {
        Move::EdgeFlip(e) => set[e],
        Move::FaceRotate(f) => g.faces[f].edges.iter().any(|e| set[e.unwrap()]),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathReport {
    pub moves: Vec<Move>,
    /// Distance between the two search fronts after each round, starting with the initial one.
    pub round_distances: Vec<usize>,
}

#[derive(Clone, Copy, Debug)]
pub struct PathOptions {
    pub max_lookahead: usize,
    pub cylinder_guard: EnumGuard,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions { max_lookahead: 4, cylinder_guard: EnumGuard::default() }
    }
}

pub fn build_path(g: &HexGraph, src: &Configuration, dst: &Configuration) -> Result<Vec<Move>> {
    Ok(build_path_report(g, src, dst, PathOptions::default())?.moves)
}

/// Moves from `src` to `dst`. On planar regions, rounds of distance descent: each round
/// applies the shortest sequence of legal moves, to either end, whose total distance
/// decrease is at least its length (single moves preferred, larger decrease first,
/// canonical order on ties). On cylinders, breadth-first exploration.
pub fn build_path_report(
    g: &HexGraph,
    src: &Configuration,
    dst: &Configuration,
    opts: PathOptions,
) -> Result<PathReport> {
    if !is_valid(g, src) || !is_valid(g, dst) {
        return Err(Error::InvalidConfiguration("path endpoint".into()));
    }
    if g.boundary.iter().any(|&e| src.get(e) != dst.get(e)) {
        return Err(Error::Mismatch("boundary states differ".into()));
    }
    if g.topology == Topology::Cylinder {
        return explore(g, src, dst, opts.cylinder_guard);
    }
    let mut a = src.clone();
    let mut b = dst.clone();
    let mut fwd: Vec<Move> = Vec::new();
    let mut bwd: Vec<Move> = Vec::new();
    let mut d = distance_cfg(g, &a, &b)?;
    let mut rounds = vec![d];
    while d > 0 {
        let (side_moves, nd) = descend(g, &a, &b, d, opts.max_lookahead)?
            .ok_or_else(|| Error::Argument(format!("path search stalled at distance {d}")))?;
        for (side, m) in side_moves {
            if side == 0 {
                a = apply_move(g, &a, m)?;
                fwd.push(m);
            } else {
                b = apply_move(g, &b, m)?;
                bwd.push(m);
            }
        }
        d = nd;
        rounds.push(d);
    }
    debug_assert_eq!(a, b);
    bwd.reverse();
    fwd.extend(bwd);
    Ok(PathReport { moves: fwd, round_distances: rounds })
}

type SideMove = (u8, Move);

fn candidates(g: &HexGraph, cfg: &Configuration, near: &[bool]) -> Vec<Move> {
    legal_moves(g, cfg).into_iter().filter(|&m| touches(g, m, near)).collect()
}

fn descend(
    g: &HexGraph,
    a: &Configuration,
    b: &Configuration,
    d: usize,
    max_depth: usize,
) -> Result<Option<(Vec<SideMove>, usize)>> {
    let mut near = vec![false; g.n_edges()];
    for c in cycles_between(g, a, b)? {
        for e in enclosed_edges(g, &c)? {
            near[e] = true;
        }
    }
    // single moves: largest decrease, ties by side then canonical order
    let mut best: Option<(SideMove, usize)> = None;
    for side in 0..2u8 {
        let (cur, other) = if side == 0 { (a, b) } else { (b, a) };
        for m in candidates(g, cur, &near) {
            let next = apply_move(g, cur, m)?;
            let nd = distance_cfg(g, &next, other)?;
            if nd < d && best.as_ref().is_none_or(|(_, bd)| nd < *bd) {
                best = Some(((side, m), nd));
            }
        }
    }
    if let Some((sm, nd)) = best {
        return Ok(Some((vec![sm], nd)));
    }
    for depth in 2..=max_depth {
        let mut seq = Vec::new();
        if let Some(found) = lookahead(g, a.clone(), b.clone(), d, depth, &near, &mut seq)? {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

fn lookahead(
    g: &HexGraph,
    a: Configuration,
    b: Configuration,
    d0: usize,
    depth: usize,
    near: &[bool],
    seq: &mut Vec<SideMove>,
) -> Result<Option<(Vec<SideMove>, usize)>> {
    if seq.len() == depth {
        let nd = distance_cfg(g, &a, &b)?;
        if nd + depth <= d0 {
            return Ok(Some((seq.clone(), nd)));
        }
        return Ok(None);
    }
    for side in 0..2u8 {
        let cur = if side == 0 { &a } else { &b };
        for m in candidates(g, cur, near) {
            if let Some(&(ls, lm)) = seq.last() {
                if ls == side && lm == m {
                    continue;
                }
            }
            let next = apply_move(g, cur, m)?;
            seq.push((side, m));
            let r = if side == 0 {
                lookahead(g, next, b.clone(), d0, depth, near, seq)?
            } else {
                lookahead(g, a.clone(), next, d0, depth, near, seq)?
            };
            seq.pop();
            if r.is_some() {
                return Ok(r);
            }
        }
    }
    Ok(None)
}

fn explore(g: &HexGraph, src: &Configuration, dst: &Configuration, guard: EnumGuard) -> Result<PathReport> {
    let mut prev: HashMap<Configuration, Option<(Configuration, Move)>> = HashMap::new();
    prev.insert(src.clone(), None);
    let mut queue = VecDeque::from([src.clone()]);
    while let Some(c) = queue.pop_front() {
        if &c == dst {
            let mut moves = Vec::new();
            let mut cur = c;
            while let Some(Some((p, m))) = prev.get(&cur).cloned() {
                moves.push(m);
                cur = p;
            }
            moves.reverse();
            let rounds = vec![moves.len()];
            return Ok(PathReport { moves, round_distances: rounds });
        }
        for m in legal_moves(g, &c) {
            let n = apply_move(g, &c, m)?;
            if !prev.contains_key(&n) {
                if prev.len() >= guard.max_states {
                    return Err(Error::Guard("exploration size".into()));
                }
                prev.insert(n.clone(), Some((c.clone(), m)));
                queue.push_back(n);
            }
        }
    }
    Err(Error::NoPath)
}

/// Replays a path; every intermediate configuration must be valid and every move legal.
pub fn replay(g: &HexGraph, src: &Configuration, moves: &[Move]) -> Result<Configuration> {
    let mut c = src.clone();
    for &m in moves {
        c = apply_move(g, &c, m)?;
        if !is_valid(g, &c) {
            return Err(Error::InvalidConfiguration("intermediate".into()));
        }
    }
    Ok(c)
}

/// Classification of a disagreement cycle by its enclosed edge set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycleType {
    /// Encloses exactly one edge.
    TypeI(usize),
    /// Encloses exactly the six edges of one region face.
    TypeII(usize),
    Other,
}

pub fn cycle_type(g: &HexGraph, c: &QuotientCycle) -> Result<CycleType> {
    let mut es = enclosed_edges(g, c)?;
    es.sort();
    if es.len() == 1 {
        return Ok(CycleType::TypeI(es[0]));
    }
    if es.len() == 6 {
        for (f, face) in g.faces.iter().enumerate() {
            let mut fe: Vec<usize> = face.edges.iter().map(|e| e.unwrap()).collect();
            fe.sort();
            if fe == es {
                return Ok(CycleType::TypeII(f));
            }
        }
    }
    Ok(CycleType::Other)
}
