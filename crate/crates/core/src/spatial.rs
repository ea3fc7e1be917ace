//! Spin formulation, Gibbs measures, boundary influence, condition F and
//! self-avoiding walks on the 16-neighbour graph.

use crate::hexlattice::{build_square, face_center, vertex_xy, EdgeClass, HexGraph, Region};
use crate::model::{
    enumerate_states, is_admissible, local_weight_s, measure, BoundaryCondition, Configuration, StateSpace, Weights,
};
use crate::numeric::Scalar;
use crate::par::{self, Exec};
use crate::pfaffian::{self, classify_boundary, Parity, PlainGraph, SchurFamily};
use crate::{Error, Result};
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Coefficients of the three-spin potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialCoeffs {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl PotentialCoeffs {
    pub fn new(w: &Weights) -> Self {
        let s = w.a + w.b + w.c;
        let pc = PotentialCoeffs { a: (w.a - w.b - w.c) / s, b: (w.b - w.a - w.c) / s, c: (w.c - w.a - w.b) / s };
        debug_assert!((pc.a + pc.b + pc.c + 1.0).abs() < 1e-12);
        pc
    }

    /// Exact coefficients `(A, B, C)`.
    pub fn exact<T: Scalar>(w: &Weights) -> (T, T, T) {
        let (a, b, c) = (T::from_f64(w.a), T::from_f64(w.b), T::from_f64(w.c));
        let s = a.clone() + b.clone() + c.clone();
        (
            (a.clone() - b.clone() - c.clone()) / s.clone(),
            (b.clone() - a.clone() - c.clone()) / s.clone(),
            (c - a - b) / s,
        )
    }
}

/// `-log(1 + A s1 s2 + B s1 s3 + C s2 s3)`, infinite on the forbidden patterns.
pub fn potential_u(pc: &PotentialCoeffs, s1: i8, s2: i8, s3: i8) -> f64 {
    assert!([s1, s2, s3].iter().all(|s| s.abs() == 1), "spins are +-1");
    let (s1, s2, s3) = (s1 as f64, s2 as f64, s3 as f64);
    let arg = 1.0 + pc.a * s1 * s2 + pc.b * s1 * s3 + pc.c * s2 * s3;
    assert!(arg > -1e-12, "negative potential argument {arg}");
    if arg <= 1e-12 {
        f64::INFINITY
    } else {
        -arg.ln()
    }
}

/// Spins `(s1, s2, s3)` at vertex `v`: NESW, NWSE and Horizontal edges, `+1` if present.
pub fn spins_at(g: &HexGraph, cfg: &Configuration, v: usize) -> (i8, i8, i8) {
    let s = |slot: usize| if cfg.get(g.incident[v][slot]) { 1 } else { -1 };
    (
        s(EdgeClass::Nesw.slot()),
        s(EdgeClass::Nwse.slot()),
        s(EdgeClass::Horizontal.slot()),
    )
}

/// Exact check that `(1 + A s1 s2 + B s1 s3 + C s2 s3)(a+b+c)/4` reproduces the local
/// weight for all eight spin patterns.
pub fn potential_identity_holds<T: Scalar>(w: &Weights) -> bool {
    let g = crate::hexlattice::build_box(1, 1).expect("single hexagon");
    let (a, b, c) = PotentialCoeffs::exact::<T>(w);
    let s = T::from_f64(w.a) + T::from_f64(w.b) + T::from_f64(w.c);
    let v = 0;
    (0..8u8).all(|mask| {
        let mut cfg = Configuration::empty(g.n_edges());
        let (e1, e2, e3) = (
            g.incident[v][EdgeClass::Nesw.slot()],
            g.incident[v][EdgeClass::Nwse.slot()],
            g.incident[v][EdgeClass::Horizontal.slot()],
        );
        cfg.set(e1, mask & 1 == 1);
        cfg.set(e2, mask & 2 == 2);
        cfg.set(e3, mask & 4 == 4);
        let (s1, s2, s3) = spins_at(&g, &cfg, v);
        let t = |x: i8| T::from_ratio(x as i64, 1);
        let lhs = (T::one() + a.clone() * t(s1 * s2) + b.clone() * t(s1 * s3) + c.clone() * t(s2 * s3)) * s.clone()
            / T::from_ratio(4, 1);
        lhs == local_weight_s::<T>(&g, w, &cfg, v)
    })
}

/// Energy: sum of vertex potentials.
pub fn hamiltonian(g: &HexGraph, w: &Weights, cfg: &Configuration) -> f64 {
    let pc = PotentialCoeffs::new(w);
    (0..g.n_vertices())
        .map(|v| {
            let (s1, s2, s3) = spins_at(g, cfg, v);
            potential_u(&pc, s1, s2, s3)
        })
        .sum()
}

#[derive(Clone, Debug)]
pub struct GibbsMeasure {
    pub space: StateSpace,
    pub probs: Vec<f64>,
    /// Largest pointwise gap to the product-weight measure.
    pub max_gap: f64,
}

/// `exp(-H)/Z` over the enumerated states; fails unless it matches the product-weight
/// measure within `1e-12`.
pub fn gibbs_measure(g: &HexGraph, w: &Weights, tau: &BoundaryCondition) -> Result<GibbsMeasure> {
    let space = enumerate_states(g, tau)?;
    if space.is_empty() {
        return Err(Error::Inadmissible);
    }
    let h: Vec<f64> = space.states.iter().map(|s| hamiltonian(g, w, s)).collect();
    let hmin = h.iter().cloned().fold(f64::INFINITY, f64::min);
    let un: Vec<f64> = h.iter().map(|x| (hmin - x).exp()).collect();
    let z: f64 = un.iter().sum();
    let probs: Vec<f64> = un.iter().map(|x| x / z).collect();
    let reference = measure(g, w, &space)?;
    let max_gap = probs.iter().zip(&reference).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    if max_gap > 1e-12 {
        return Err(Error::Mismatch(format!("Gibbs measure differs by {max_gap:e}")));
    }
    Ok(GibbsMeasure { space, probs, max_gap })
}

/// Law of the restriction to `delta`, keyed by the pattern.
pub fn marginal(space: &StateSpace, probs: &[f64], delta: &[usize]) -> BTreeMap<Vec<bool>, f64> {
    let mut m = BTreeMap::new();
    for (s, &p) in space.states.iter().zip(probs) {
        *m.entry(delta.iter().map(|&e| s.get(e)).collect()).or_insert(0.0) += p;
    }
    m
}

fn map_tv<K: Ord + Clone>(x: &BTreeMap<K, f64>, y: &BTreeMap<K, f64>) -> f64 {
    let mut keys: Vec<&K> = x.keys().chain(y.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys.iter().map(|k| (x.get(k).unwrap_or(&0.0) - y.get(k).unwrap_or(&0.0)).abs()).sum::<f64>()
}

fn law(g: &HexGraph, w: &Weights, tau: &BoundaryCondition) -> Result<(StateSpace, Vec<f64>)> {
    let space = enumerate_states(g, tau)?;
    if space.is_empty() {
        return Err(Error::Inadmissible);
    }
    let p = measure(g, w, &space)?;
    Ok((space, p))
}

/// Total variation between the laws of the `delta` restriction under two boundaries.
pub fn marginal_tv(g: &HexGraph, w: &Weights, delta: &[usize], tau: &BoundaryCondition, tau2: &BoundaryCondition) -> Result<f64> {
    let (s1, p1) = law(g, w, tau)?;
    let (s2, p2) = law(g, w, tau2)?;
    Ok(map_tv(&marginal(&s1, &p1, delta), &marginal(&s2, &p2, delta)))
}

/// Pattern with the first entry cleared by global complement.
fn canonical(mut pat: Vec<bool>) -> Vec<bool> {
    if pat.first() == Some(&true) {
        for x in &mut pat {
            *x = !*x;
        }
    }
    pat
}

/// Law of the `delta` restriction up to global complement.
pub fn marginal_mod_complement(space: &StateSpace, probs: &[f64], delta: &[usize]) -> BTreeMap<Vec<bool>, f64> {
    let mut m = BTreeMap::new();
    for (k, p) in marginal(space, probs, delta) {
        *m.entry(canonical(k)).or_insert(0.0) += p;
    }
    m
}

// ---------------------------------------------------------------------------------------
// Kagome view

/// Medial (Kagome) graph: one vertex per lattice edge, joined when the edges share a
/// region vertex. Kagome vertex `i` is lattice edge `i`.
#[derive(Clone, Debug)]
pub struct Kagome {
    /// Edge midpoints in quadrupled coordinates.
    pub midpoints: Vec<(i64, i64)>,
    pub adjacency: Vec<Vec<usize>>,
    index: HashMap<(i64, i64), usize>,
}

impl Kagome {
    pub fn len(&self) -> usize {
        self.midpoints.len()
    }
    pub fn is_empty(&self) -> bool {
        self.midpoints.is_empty()
    }
    pub fn vertex_at(&self, midpoint: (i64, i64)) -> Option<usize> {
        self.index.get(&midpoint).copied()
    }
    pub fn edge_of(&self, k: usize) -> usize {
        k
    }
    pub fn degree(&self, k: usize) -> usize {
        self.adjacency[k].len()
    }
}

pub fn kagome_index(g: &HexGraph) -> Kagome {
    let midpoints: Vec<(i64, i64)> = (0..g.n_edges()).map(|e| g.edge_midpoint4(e)).collect();
    let mut adjacency = vec![Vec::new(); g.n_edges()];
    for inc in &g.incident {
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    adjacency[inc[i]].push(inc[j]);
                }
            }
        }
    }
    for a in &mut adjacency {
        a.sort();
        a.dedup();
    }
    let index = midpoints.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    Kagome { midpoints, adjacency, index }
}

// ---------------------------------------------------------------------------------------
// Self-avoiding walks

/// Neighbour offsets of the 16-regular graph on the integer grid.
pub const SAW_OFFSETS: [(i32, i32); 16] = [
    (0, 2), (0, -2), (2, 0), (-2, 0),
    (2, 2), (2, -2), (-2, 2), (-2, -2),
    (1, 2), (1, -2), (-1, 2), (-1, -2),
    (2, 1), (2, -1), (-2, 1), (-2, -1),
];

pub const SAW_GUARD: usize = 8;

/// `nu_1 ..= nu_kmax`: self-avoiding walks from the origin, by depth-first search over
/// one first step per symmetry class.
pub fn saw_counts(kmax: usize, guard: usize, exec: Exec) -> Result<Vec<u64>> {
    if kmax > guard {
        return Err(Error::Guard(format!("walk length {kmax} exceeds {guard}")));
    }
    if kmax == 0 {
        return Ok(Vec::new());
    }
    let reps: [((i32, i32), u64); 3] = [((0, 2), 4), ((2, 2), 4), ((1, 2), 8)];
    let per = par::map_range(exec, reps.len(), |r| {
        let (first, mult) = reps[r];
        let radius = 2 * kmax as i32 + 1;
        let side = (2 * radius + 1) as usize;
        let idx = |x: i32, y: i32| ((y + radius) as usize) * side + (x + radius) as usize;
        let mut visited = vec![false; side * side];
        let mut counts = vec![0u64; kmax];
        visited[idx(0, 0)] = true;
        visited[idx(first.0, first.1)] = true;
        counts[0] = 1;
        fn rec(x: i32, y: i32, depth: usize, kmax: usize, visited: &mut [bool], counts: &mut [u64], idx: &dyn Fn(i32, i32) -> usize) {
            if depth == kmax {
                return;
            }
            if depth + 1 == kmax {
                counts[depth] += SAW_OFFSETS.iter().filter(|o| !visited[idx(x + o.0, y + o.1)]).count() as u64;
                return;
            }
            for o in SAW_OFFSETS {
                let (nx, ny) = (x + o.0, y + o.1);
                let i = idx(nx, ny);
                if !visited[i] {
                    visited[i] = true;
                    counts[depth] += 1;
                    rec(nx, ny, depth + 1, kmax, visited, counts, idx);
                    visited[i] = false;
                }
            }
        }
        rec(first.0, first.1, 1, kmax, &mut visited, &mut counts, &idx);
        counts.iter().map(|c| c * mult).collect::<Vec<u64>>()
    });
    Ok((0..kmax).map(|k| per.iter().map(|c| c[k]).sum()).collect())
}

/// `(max_k nu_2k^(1/2k), min_k nu_k^(1/k))`: heuristic lower and submultiplicative upper
/// anchors for the connective constant.
pub fn connective_estimate(counts: &[u64]) -> (f64, f64) {
    let root = |k: usize| (counts[k - 1] as f64).powf(1.0 / k as f64);
    let upper = (1..=counts.len()).map(root).fold(f64::INFINITY, f64::min);
    let lower = (1..=counts.len()).filter(|k| k % 2 == 0).map(root).fold(0.0, f64::max);
    (lower, upper)
}

/// Threshold used by the global mixing theorem for the single-site chain.
pub const EPSILON_PRESET: f64 = 1.0 / 15.0;

// ---------------------------------------------------------------------------------------
// Box geometry

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    NE,
    NW,
    SE,
    SW,
}

/// Side of a boundary edge. The box is drawn with its acute corners left and right: the
/// top row of faces is the NE side, the bottom row SW, and the slanted ends NW and SE.
pub fn boundary_side(g: &HexGraph, e: usize) -> Result<Side> {
    let k = match g.region {
        Region::Box { k, .. } | Region::Grid { k, .. } => k as i32,
        _ => return Err(Error::Argument("boxes only".into())),
    };
    let ed = &g.edges[e];
    let inside = g.vertices[ed.inside_vertex()];
    let out = if ed.ends[0] == inside { ed.ends[1] } else { ed.ends[0] };
    Ok(if out.p < 0 {
        Side::SW
    } else if out.p > k {
        Side::NE
    } else if out.q < inside.q {
        Side::NW
    } else {
        Side::SE
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CenterLine {
    /// Parallel to the NE side.
    M1,
    /// Parallel to the NW side.
    M2,
}

/// Internal edges crossed by the central line of the box.
pub fn center_line(g: &HexGraph, line: CenterLine) -> Vec<usize> {
    let n = g.faces.len() as f64;
    let (cx, cy) = g.faces.iter().fold((0.0, 0.0), |(x, y), f| {
        let c = face_center(f.key);
        (x + c.0 as f64 / n, y + c.1 as f64 / n)
    });
    let side = |p: (i64, i64)| -> f64 {
        let (x, y) = (p.0 as f64 - cx, p.1 as f64 - cy);
        match line {
            CenterLine::M1 => y,
            CenterLine::M2 => 2.0 * y - 6.0 * x,
        }
    };
    g.internal
        .iter()
        .copied()
        .filter(|&e| {
            let [a, b] = g.edges[e].ends.map(|v| side(vertex_xy(v)));
            a * b < 0.0
        })
        .collect()
}

/// Sides on which the two boundaries must agree for the term of `line`.
pub fn agreement_sides(line: CenterLine) -> [Side; 2] {
    match line {
        CenterLine::M1 => [Side::NW, Side::SE],
        CenterLine::M2 => [Side::NE, Side::SW],
    }
}

// ---------------------------------------------------------------------------------------
// Transfer-matrix table of boundary and window patterns

/// Weighted count of configurations by the joint pattern of the boundary edges (bits
/// `0..nb`, in `g.boundary` order) and the `delta` edges (bits `nb..`). Boundary edges are
/// treated as free, so entry `t | d << nb` is the partition function with boundary `t`
/// restricted to `delta = d`.
pub fn pattern_table(g: &HexGraph, w: &Weights, delta: &[usize], max_bits: usize) -> Result<Vec<f64>> {
    let nb = g.boundary.len();
    let nd = delta.len();
    if nb + nd > max_bits {
        return Err(Error::Guard(format!("{} recorded edges exceed {max_bits}", nb + nd)));
    }
    let mut out_bit: Vec<Option<u32>> = vec![None; g.n_edges()];
    for (i, &e) in g.boundary.iter().enumerate() {
        out_bit[e] = Some(i as u32);
    }
    for (j, &e) in delta.iter().enumerate() {
        if out_bit[e].is_some() {
            return Err(Error::Argument(format!("edge {e} listed twice")));
        }
        out_bit[e] = Some((nb + j) as u32);
    }
    let base = (nb + nd) as u32;
    let mut order: Vec<usize> = (0..g.n_vertices()).collect();
    order.sort_by_key(|&v| {
        let id = g.vertices[v];
        (id.q - id.p, id.p)
    });
    let mut done = vec![false; g.n_vertices()];
    let mut slot_of: Vec<Option<u32>> = vec![None; g.n_edges()];
    let mut free_slots: Vec<u32> = Vec::new();
    let mut next_slot = 0u32;
    let params: [f64; 3] = EdgeClass::ALL.map(|c| w.param(c));

    let mut table: FxHashMap<u64, f64> = FxHashMap::default();
    table.insert(0, 1.0);
    for &v in &order {
        // (slot in triple, bit) for known and new edges
        let mut known: Vec<(usize, u32)> = Vec::new();
        let mut fresh: Vec<(usize, u32)> = Vec::new();
        let mut clear: u64 = 0;
        let mut retire = Vec::new();
        for (s, &e) in g.incident[v].iter().enumerate() {
            let ed = &g.edges[e];
            let other_done = ed.inner.iter().flatten().any(|&u| u != v && done[u]);
            match (out_bit[e], other_done) {
                (Some(b), true) => known.push((s, b)),
                (Some(b), false) => fresh.push((s, b)),
                (None, true) => {
                    let sl = slot_of[e].expect("active edge");
                    known.push((s, base + sl));
                    clear |= 1u64 << (base + sl);
                    retire.push(e);
                }
                (None, false) => fresh.push((s, u32::MAX)),
            }
        }
        for e in retire {
            free_slots.push(slot_of[e].take().unwrap());
        }
        for f in fresh.iter_mut() {
            if f.1 == u32::MAX {
                let sl = free_slots.pop().unwrap_or_else(|| {
                    next_slot += 1;
                    next_slot - 1
                });
                if base + sl >= 64 {
                    return Err(Error::Guard("frontier too wide".into()));
                }
                slot_of[g.incident[v][f.0]] = Some(sl);
                f.1 = base + sl;
            }
        }
        done[v] = true;
        let mut next: FxHashMap<u64, f64> = FxHashMap::default();
        for (&key, &val) in &table {
            let mut st = [false; 3];
            for &(s, b) in &known {
                st[s] = key >> b & 1 == 1;
            }
            let cleared = key & !clear;
            for combo in 0..1u32 << fresh.len() {
                let mut k2 = cleared;
                for (i, &(s, b)) in fresh.iter().enumerate() {
                    let on = combo >> i & 1 == 1;
                    st[s] = on;
                    if on {
                        k2 |= 1u64 << b;
                    }
                }
                let cnt = st.iter().filter(|&&x| x).count();
                let dist = match cnt {
                    1 => st.iter().position(|&x| x),
                    2 => st.iter().position(|&x| !x),
                    _ => None,
                };
                if let Some(d) = dist {
                    *next.entry(k2).or_insert(0.0) += val * params[d];
                }
            }
        }
        table = next;
    }
    let mut out = vec![0.0; 1usize << (nb + nd)];
    for (k, v) in table {
        out[k as usize] += v;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------------------
// Condition F

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FRoute {
    Direct,
    Pfaffian,
}

#[derive(Clone, Copy, Debug)]
pub struct FOptions {
    pub route: FRoute,
    pub exec: Exec,
    /// Largest number of recorded edges in the transfer table.
    pub max_bits: usize,
    /// Largest inner box size.
    pub max_n: u32,
}

impl Default for FOptions {
    fn default() -> Self {
        FOptions { route: FRoute::Direct, exec: Exec::default(), max_bits: 24, max_n: 1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermReport {
    pub value: f64,
    /// Boundaries as bit masks over the boundary edges.
    pub argmax_pair: (u64, u64),
    pub boundaries: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FReport {
    pub n: u32,
    pub weights: Weights,
    pub route: FRoute,
    pub center: TermReport,
    pub m1: TermReport,
    pub m2: TermReport,
    pub value: f64,
    pub threshold: f64,
    pub holds: bool,
    pub argmax_pair: (u64, u64),
}

fn mask_boundary(nb: usize, mask: u64) -> BoundaryCondition {
    BoundaryCondition::new((0..nb).map(|i| mask >> i & 1 == 1).collect())
}

fn laws_max_tv(exec: Exec, laws: &[Vec<f64>], ok: &(dyn Fn(usize, usize) -> bool + Sync)) -> (f64, (usize, usize)) {
    let best = par::map_range(exec, laws.len(), |i| {
        let mut b = (0.0f64, (i, i));
        for j in i + 1..laws.len() {
            if !ok(i, j) {
                continue;
            }
            let t = 0.5 * laws[i].iter().zip(&laws[j]).map(|(x, y)| (x - y).abs()).sum::<f64>();
            if t > b.0 {
                b = (t, (i, j));
            }
        }
        b
    });
    best.into_iter().fold((0.0, (0, 0)), |acc, b| if b.0 > acc.0 { b } else { acc })
}

/// Inner box of `build_square(3n)` and its window edges.
pub fn inner_window(n: u32) -> Result<(HexGraph, Vec<usize>)> {
    let g = build_square(3 * n)?;
    let n = n as i32;
    let mut delta = Vec::new();
    for f in &g.faces {
        let (r, q0) = f.key;
        let j = (q0 - r) / 2;
        if (n..2 * n).contains(&r) && (n..2 * n).contains(&j) {
            delta.extend(f.edges.iter().map(|e| e.expect("region face edge")));
        }
    }
    delta.sort();
    delta.dedup();
    Ok((g, delta))
}

/// Per boundary class (first boundary edge absent), the law of the `delta` pattern up to
/// complement, indexed by the canonical pattern shifted right by one bit.
pub fn window_laws(g: &HexGraph, w: &Weights, delta: &[usize], opts: &FOptions) -> Result<Vec<(u64, Vec<f64>)>> {
    let nb = g.boundary.len();
    let nd = delta.len();
    if nd == 0 || nb == 0 {
        return Err(Error::Argument("empty window or boundary".into()));
    }
    let out = match opts.route {
        FRoute::Direct => {
            let table = pattern_table(g, w, delta, opts.max_bits)?;
            let full = (1u64 << nd) - 1;
            par::map_range(opts.exec, 1usize << (nb - 1), |t| {
                let tau = (t as u64) << 1;
                let mut law = vec![0.0; 1usize << (nd - 1)];
                for d in 0..1u64 << nd {
                    let z = table[(tau | d << nb) as usize];
                    let c = if d & 1 == 1 { full ^ d } else { d };
                    law[(c >> 1) as usize] += z;
                }
                (tau, law)
            })
        }
        FRoute::Pfaffian => {
            let fam = WindowFamily::new(g, w, delta)?;
            par::map_range(opts.exec, 1usize << (nb - 1), |t| {
                let tau = (t as u64) << 1;
                (tau, fam.law(g, &mask_boundary(nb, tau)).unwrap_or_default())
            })
        }
    };
    Ok(normalize_laws(out))
}

fn normalize_laws(laws: Vec<(u64, Vec<f64>)>) -> Vec<(u64, Vec<f64>)> {
    laws.into_iter()
        .filter_map(|(t, l)| {
            let z: f64 = l.iter().sum();
            (z > 0.0).then(|| (t, l.into_iter().map(|x| x / z).collect()))
        })
        .collect()
}

/// Gadget graph with one copy of each window vertex per admissible role.
struct WindowFamily {
    schur: SchurFamily,
    row: HashMap<usize, usize>,
    base_rows: Vec<usize>,
    /// Dummy node per boundary hexagon, in `classify_boundary` order.
    dummies: Vec<usize>,
    /// Per window vertex: (copy node, window edges forced equal (`Some`) or all unequal).
    copies: Vec<Vec<(usize, Option<(usize, usize)>)>>,
    /// Window edges incident to each window vertex.
    vertex_delta: Vec<Vec<usize>>,
    delta: Vec<usize>,
}

impl WindowFamily {
    fn new(g: &HexGraph, w: &Weights, delta: &[usize]) -> Result<Self> {
        let in_delta = |e: usize| delta.contains(&e);
        let window: Vec<usize> = (0..g.n_vertices())
            .filter(|&v| g.incident[v].iter().filter(|&&e| in_delta(e)).count() >= 2)
            .collect();
        let is_window = |v: usize| window.contains(&v);
        let mut pg = PlainGraph::new();
        let pt = |v: (i64, i64)| [v.0 as f64, v.1 as f64];
        let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        let mut vnode = vec![usize::MAX; g.n_vertices()];
        let mut base_nodes = Vec::new();
        for v in 0..g.n_vertices() {
            if !is_window(v) {
                let p = pt(vertex_xy(g.vertices[v]));
                vnode[v] = pg.add_vertex(p[0], p[1]);
                base_nodes.push(vnode[v]);
            }
        }
        // copies: one per inside angle, plus one for the remaining angles
        let mut copies: Vec<Vec<(usize, Option<(usize, usize)>)>> = Vec::new();
        let mut attach: HashMap<(usize, (i32, i32)), usize> = HashMap::new();
        let mut vertex_delta = Vec::new();
        for &v in &window {
            let p = pt(vertex_xy(g.vertices[v]));
            let mut cs = Vec::new();
            let mut outside_faces = Vec::new();
            for face in g.faces.iter().chain(g.outer_faces.iter()) {
                let Some(pos) = face.vertices.iter().position(|&x| x == Some(v)) else { continue };
                let a = face.edges[(pos + 5) % 6].unwrap();
                let b = face.edges[pos].unwrap();
                if in_delta(a) && in_delta(b) {
                    let c = lerp(p, pt(face_center(face.key)), 0.15);
                    let node = pg.add_vertex(c[0], c[1]);
                    attach.insert((v, face.key), node);
                    cs.push((node, Some((a, b))));
                } else {
                    outside_faces.push(face.key);
                }
            }
            if !outside_faces.is_empty() {
                let node = pg.add_vertex(p[0], p[1]);
                for k in outside_faces {
                    attach.insert((v, k), node);
                }
                cs.push((node, None));
            }
            copies.push(cs);
            vertex_delta.push(g.incident[v].iter().copied().filter(|&e| in_delta(e)).collect());
        }
        let node_for = |v: usize, key: (i32, i32)| -> usize { if vnode[v] != usize::MAX { vnode[v] } else { attach[&(v, key)] } };
        let mut core = Vec::new();
        let mut dummies = Vec::new();
        for (face, region) in g.faces.iter().map(|f| (f, true)).chain(g.outer_faces.iter().map(|f| (f, false))) {
            let present: Vec<usize> = (0..6).filter(|&i| face.vertices[i].is_some()).collect();
            if present.is_empty() {
                continue;
            }
            // corners in walk order starting after the first gap
            let pos: Vec<usize> = if region {
                (0..6).collect()
            } else {
                let start = (0..6).find(|&i| face.vertices[i].is_some() && face.vertices[(i + 5) % 6].is_none()).ok_or_else(|| Error::Argument("closed outer face".into()))?;
                (0..6).map(|i| (start + i) % 6).take_while(|&i| face.vertices[i].is_some()).collect()
            };
            if !region && pos.len() != present.len() {
                return Err(Error::Argument(format!("hexagon {:?} meets the box twice", face.key)));
            }
            let c = pt(face_center(face.key));
            let corner = |i: usize| pt(vertex_xy(face.corners[i % 6]));
            let mut path = Vec::new();
            for &i in &pos {
                let v = face.vertices[i].unwrap();
                let slot = (0..3)
                    .find(|&s| g.incident[v][s] != face.edges[(i + 5) % 6].unwrap() && g.incident[v][s] != face.edges[i].unwrap())
                    .unwrap();
                let wt = w.param(EdgeClass::ALL[slot]);
                let a = lerp(c, lerp(corner(i), corner(i + 5), 0.2), 0.3);
                let b = lerp(c, lerp(corner(i), corner(i + 1), 0.2), 0.3);
                let (na, nb) = (pg.add_vertex(a[0], a[1]), pg.add_vertex(b[0], b[1]));
                let att = node_for(v, face.key);
                pg.add_edge(att, na, wt);
                pg.add_edge(att, nb, wt);
                path.push(na);
                path.push(nb);
            }
            if !region {
                let last = *pos.last().unwrap();
                let a = lerp(c, lerp(corner(last), corner(last + 1), 0.4), 0.3);
                let b = lerp(c, lerp(corner(last), corner(last + 1), 0.6), 0.3);
                let x = lerp(c, lerp(corner(last), corner(last + 1), 0.5), 0.55);
                let (na, nb, nx) = (pg.add_vertex(a[0], a[1]), pg.add_vertex(b[0], b[1]), pg.add_vertex(x[0], x[1]));
                pg.add_edge(nx, na, 1.0);
                pg.add_edge(nx, nb, 1.0);
                path.push(na);
                path.push(nb);
                dummies.push(nx);
            }
            for i in 0..path.len() - 1 {
                pg.add_edge(path[i], path[i + 1], 1.0);
            }
            core.extend(path);
        }
        let schur = SchurFamily::new(&pg, &core)?;
        let row: HashMap<usize, usize> = schur.nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let base_rows = base_nodes.iter().map(|n| row[n]).collect();
        Ok(WindowFamily { schur, row, base_rows, dummies, copies, vertex_delta, delta: delta.to_vec() })
    }

    fn law(&self, g: &HexGraph, tau: &BoundaryCondition) -> Result<Vec<f64>> {
        let classes = classify_boundary(g, tau)?;
        let mut rows = self.base_rows.clone();
        for (c, &d) in classes.iter().zip(&self.dummies) {
            if c.parity == Parity::Negative {
                rows.push(self.row[&d]);
            }
        }
        let nd = self.delta.len();
        let full = (1u64 << nd) - 1;
        let pos: HashMap<usize, usize> = self.delta.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut law = vec![0.0; 1usize << (nd - 1)];
        let nw = self.copies.len();
        let mut choice = vec![0usize; nw];
        loop {
            if let Some(pattern) = self.pattern(&choice, &pos) {
                let mut r = rows.clone();
                for (i, &c) in choice.iter().enumerate() {
                    r.push(self.row[&self.copies[i][c].0]);
                }
                let cnt = self.schur.count(&r);
                let p = if pattern & 1 == 1 { full ^ pattern } else { pattern };
                law[(p >> 1) as usize] += cnt;
            }
            let mut i = 0;
            while i < nw {
                choice[i] += 1;
                if choice[i] < self.copies[i].len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == nw {
                break;
            }
        }
        Ok(law)
    }

    /// Window pattern (first edge absent) implied by a choice of copies, if consistent.
    fn pattern(&self, choice: &[usize], pos: &HashMap<usize, usize>) -> Option<u64> {
        let nd = self.delta.len();
        let mut rel: Vec<Vec<(usize, bool)>> = vec![Vec::new(); nd];
        for (i, &c) in choice.iter().enumerate() {
            let es = &self.vertex_delta[i];
            match self.copies[i][c].1 {
                Some((a, b)) => {
                    for &x in es {
                        for &y in es {
                            if x < y {
                                let same = (x == a || x == b) && (y == a || y == b);
                                rel[pos[&x]].push((pos[&y], !same));
                                rel[pos[&y]].push((pos[&x], !same));
                            }
                        }
                    }
                }
                None => {
                    for &x in es {
                        for &y in es {
                            if x < y {
                                rel[pos[&x]].push((pos[&y], true));
                                rel[pos[&y]].push((pos[&x], true));
                            }
                        }
                    }
                }
            }
        }
        let mut st: Vec<Option<bool>> = vec![None; nd];
        let mut pattern = 0u64;
        for s in 0..nd {
            if st[s].is_some() {
                continue;
            }
            if s != 0 {
                return None;
            }
            st[s] = Some(false);
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &(y, flip) in &rel[x] {
                    let want = st[x].unwrap() ^ flip;
                    match st[y] {
                        None => {
                            st[y] = Some(want);
                            stack.push(y);
                        }
                        Some(v) if v != want => return None,
                        _ => {}
                    }
                }
            }
        }
        for (i, s) in st.iter().enumerate() {
            if s.unwrap() {
                pattern |= 1 << i;
            }
        }
        Some(pattern)
    }
}

/// Line term on `build_square(n)`: for each boundary the law of the line pattern up to
/// complement, and the largest distance over pairs agreeing on the two given sides.
pub fn line_term(n: u32, w: &Weights, line: CenterLine, opts: &FOptions) -> Result<TermReport> {
    let g = build_square(n)?;
    let nb = g.boundary.len();
    if nb > 16 {
        return Err(Error::Guard(format!("{nb} boundary edges")));
    }
    let m = center_line(&g, line);
    let sides = agreement_sides(line);
    let mut side_mask = 0u64;
    for (i, &e) in g.boundary.iter().enumerate() {
        if sides.contains(&boundary_side(&g, e)?) {
            side_mask |= 1 << i;
        }
    }
    let taus: Vec<u64> = (0..1u64 << nb).filter(|&t| is_admissible(&g, &mask_boundary(nb, t))).collect();
    let nm = m.len();
    let laws = par::map_slice(opts.exec, &taus, |&t| -> Result<Vec<f64>> {
        let tau = mask_boundary(nb, t);
        let raw: Vec<f64> = match opts.route {
            FRoute::Direct => {
                let (space, p) = law(&g, w, &tau)?;
                let mut v = vec![0.0; 1 << nm];
                for (s, q) in space.states.iter().zip(&p) {
                    let idx = m.iter().enumerate().fold(0usize, |a, (i, &e)| a | (s.get(e) as usize) << i);
                    v[idx] += q;
                }
                v
            }
            FRoute::Pfaffian => pfaffian::boundary_marginal(&g, w, &tau, &m)?,
        };
        let full = (1usize << nm) - 1;
        let mut out = vec![0.0; 1 << nm.saturating_sub(1)];
        for (idx, q) in raw.into_iter().enumerate() {
            let c = if idx & 1 == 1 { full ^ idx } else { idx };
            out[c >> 1] += q;
        }
        Ok(out)
    });
    let laws: Vec<Vec<f64>> = laws.into_iter().collect::<Result<_>>()?;
    let ok = |i: usize, j: usize| (taus[i] ^ taus[j]) & side_mask == 0;
    let (value, (i, j)) = laws_max_tv(opts.exec, &laws, &ok);
    Ok(TermReport { value, argmax_pair: (taus[i], taus[j]), boundaries: taus.len() })
}

pub fn center_term(n: u32, w: &Weights, opts: &FOptions) -> Result<TermReport> {
    let (g, delta) = inner_window(n)?;
    let laws = window_laws(&g, w, &delta, opts)?;
    let ls: Vec<Vec<f64>> = laws.iter().map(|(_, l)| l.clone()).collect();
    let (value, (i, j)) = laws_max_tv(opts.exec, &ls, &|_, _| true);
    Ok(TermReport { value, argmax_pair: (laws[i].0, laws[j].0), boundaries: laws.len() })
}

/// Condition F(n, eps): center term plus twice each line term, compared with `eps`.
#[allow(non_snake_case)]
pub fn condition_F(n: u32, w: &Weights, eps: f64, opts: &FOptions) -> Result<FReport> {
    if n == 0 || n > opts.max_n {
        return Err(Error::Guard(format!("F level {n} exceeds {}", opts.max_n)));
    }
    let center = center_term(n, w, opts)?;
    let m1 = line_term(n, w, CenterLine::M1, opts)?;
    let m2 = line_term(n, w, CenterLine::M2, opts)?;
    let value = center.value + 2.0 * m1.value + 2.0 * m2.value;
    Ok(FReport {
        n,
        weights: *w,
        route: opts.route,
        argmax_pair: center.argmax_pair,
        center,
        m1,
        m2,
        value,
        threshold: eps,
        holds: value < eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hexlattice::build_box;
    use num_rational::BigRational;

    #[test]
    fn coefficients() {
        let pc = PotentialCoeffs::new(&Weights::uniform());
        assert!((pc.a + 1.0 / 3.0).abs() < 1e-15 && (pc.b - pc.c).abs() < 1e-15);
        assert_eq!(potential_u(&pc, 1, 1, 1), f64::INFINITY);
        assert!(potential_identity_holds::<BigRational>(&Weights::new(1.0, 2.0, 3.0).unwrap()));
    }

    #[test]
    fn saw_small() {
        let c = saw_counts(3, SAW_GUARD, Exec::Sequential).unwrap();
        assert_eq!(&c[..2], &[16, 240]);
    }

    #[test]
    fn table_matches_partition_functions() {
        let g = build_box(1, 2).unwrap();
        let w = Weights::new(1.0, 2.0, 3.0).unwrap();
        let t = pattern_table(&g, &w, &[], 24).unwrap();
        for mask in [0u64, 5, 77, 200] {
            let b = mask_boundary(g.boundary.len(), mask);
            let sp = enumerate_states(&g, &b).unwrap();
            let z: f64 = sp.states.iter().map(|s| crate::model::config_weight(&g, &w, s)).sum();
            assert!((t[mask as usize] - z).abs() <= 1e-9 * z.max(1.0));
        }
    }

    #[test]
    fn window_routes_agree() {
        let g = build_box(2, 2).unwrap();
        let w = Weights::new(1.0, 2.0, 3.0).unwrap();
        let delta: Vec<usize> = g.faces[0].edges.iter().map(|e| e.unwrap()).collect();
        let mut o = FOptions::default();
        let d = window_laws(&g, &w, &delta, &o).unwrap();
        o.route = FRoute::Pfaffian;
        let p = window_laws(&g, &w, &delta, &o).unwrap();
        assert_eq!(d.len(), p.len());
        for ((t1, l1), (t2, l2)) in d.iter().zip(&p) {
            assert_eq!(t1, t2);
            for (x, y) in l1.iter().zip(l2) {
                assert!((x - y).abs() < 1e-9, "{t1}: {x} vs {y}");
            }
        }
        // direct route against enumeration
        for (t, l) in d.iter().take(40) {
            let b = mask_boundary(g.boundary.len(), *t);
            let (sp, pr) = law(&g, &w, &b).unwrap();
            let m = marginal_mod_complement(&sp, &pr, &delta);
            for (k, q) in m {
                let idx = k.iter().enumerate().fold(0usize, |a, (i, &x)| a | (x as usize) << i);
                assert!((l[idx >> 1] - q).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn h1_lines() {
        let g = build_box(1, 1).unwrap();
        assert_eq!(center_line(&g, CenterLine::M1).len(), 2);
        assert_eq!(center_line(&g, CenterLine::M2).len(), 2);
        for e in center_line(&g, CenterLine::M1) {
            assert_eq!(g.edges[e].class, EdgeClass::Horizontal);
        }
    }
}
