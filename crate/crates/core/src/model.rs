//! Configurations, local weights, measures and exhaustive state spaces.

use crate::hexlattice::{EdgeClass, HexGraph, VertexId};
use crate::numeric::Scalar;
use crate::{Error, Result};
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Weights {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && c > 0.0) || !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::Argument(format!("weights must be positive: ({a},{b},{c})")));
        }
        Ok(Weights { a, b, c })
    }

    pub fn uniform() -> Self {
        Weights { a: 1.0, b: 1.0, c: 1.0 }
    }

    /// Parameter attached to a distinguished direction.
    pub fn param(&self, class: EdgeClass) -> f64 {
        match class {
            EdgeClass::Horizontal => self.a,
            EdgeClass::Nwse => self.b,
            EdgeClass::Nesw => self.c,
        }
    }

    pub fn min(&self) -> f64 {
        self.a.min(self.b).min(self.c)
    }

    pub fn max(&self) -> f64 {
        self.a.max(self.b).max(self.c)
    }

    pub fn scaled(&self, l: f64) -> Self {
        Weights { a: self.a * l, b: self.b * l, c: self.c * l }
    }

    /// `a,b,c` from a comma-separated string.
    pub fn parse(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Argument(format!("weights {s}")))?;
        match v.as_slice() {
            [a, b, c] => Weights::new(*a, *b, *c),
            _ => Err(Error::Argument(format!("weights {s}"))),
        }
    }
}

/// Present/absent assignment over the canonical edge order (internal and boundary edges).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    bits: Vec<u64>,
    len: usize,
}

impl Configuration {
    pub fn empty(len: usize) -> Self {
        Configuration { bits: vec![0; len.div_ceil(64)], len }
    }

    pub fn from_present(len: usize, present: &[usize]) -> Self {
        let mut c = Self::empty(len);
        for &e in present {
            c.set(e, true);
        }
        c
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, e: usize) -> bool {
        (self.bits[e >> 6] >> (e & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, e: usize, on: bool) {
        if on {
            self.bits[e >> 6] |= 1 << (e & 63);
        } else {
            self.bits[e >> 6] &= !(1 << (e & 63));
        }
    }

    #[inline]
    pub fn toggle(&mut self, e: usize) {
        self.bits[e >> 6] ^= 1 << (e & 63);
    }

    pub fn present(&self) -> Vec<usize> {
        (0..self.len).filter(|&e| self.get(e)).collect()
    }

    /// Edges on which the two configurations differ.
    pub fn diff(&self, other: &Configuration) -> Vec<usize> {
        (0..self.len).filter(|&e| self.get(e) != other.get(e)).collect()
    }

    pub fn complement(&self) -> Configuration {
        let mut c = self.clone();
        for e in 0..self.len {
            c.toggle(e);
        }
        c
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!(self.present())
    }
}

/// States of the boundary edges, indexed by position in `g.boundary`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub states: Vec<bool>,
}

impl BoundaryCondition {
    pub fn new(states: Vec<bool>) -> Self {
        BoundaryCondition { states }
    }

    /// Boundary condition with the listed canonical edge indices present.
    pub fn from_present_edges(g: &HexGraph, present: &[usize]) -> Result<Self> {
        let mut states = vec![false; g.boundary.len()];
        for &e in present {
            let pos = g
                .boundary
                .iter()
                .position(|&b| b == e)
                .ok_or_else(|| Error::Argument(format!("edge {e} is not a boundary edge")))?;
            states[pos] = true;
        }
        Ok(BoundaryCondition { states })
    }

    pub fn restrict(g: &HexGraph, cfg: &Configuration) -> Self {
        BoundaryCondition { states: g.boundary.iter().map(|&e| cfg.get(e)).collect() }
    }

    pub fn complement(&self) -> Self {
        BoundaryCondition { states: self.states.iter().map(|s| !s).collect() }
    }

    /// Present boundary edges as canonical edge indices.
    pub fn present_edges(&self, g: &HexGraph) -> Vec<usize> {
        g.boundary.iter().zip(&self.states).filter(|(_, &s)| s).map(|(&e, _)| e).collect()
    }

    /// Empty configuration carrying this boundary.
    pub fn base_configuration(&self, g: &HexGraph) -> Configuration {
        let mut c = Configuration::empty(g.n_edges());
        for (&e, &s) in g.boundary.iter().zip(&self.states) {
            c.set(e, s);
        }
        c
    }
}

/// Number of present edges at vertex `v`.
pub fn degree(g: &HexGraph, cfg: &Configuration, v: usize) -> usize {
    g.incident[v].iter().filter(|&&e| cfg.get(e)).count()
}

/// Slot of the edge whose state differs from the other two, if any.
pub fn distinguished_slot(g: &HexGraph, cfg: &Configuration, v: usize) -> Option<usize> {
    let s = g.incident[v].map(|e| cfg.get(e));
    let k = s.iter().filter(|&&x| x).count();
    match k {
        1 => s.iter().position(|&x| x),
        2 => s.iter().position(|&x| !x),
        _ => None,
    }
}

pub fn local_weight_at(g: &HexGraph, w: &Weights, cfg: &Configuration, v: usize) -> f64 {
    match distinguished_slot(g, cfg, v) {
        Some(s) => w.param(EdgeClass::ALL[s]),
        None => 0.0,
    }
}

pub fn local_weight(g: &HexGraph, w: &Weights, cfg: &Configuration, v: VertexId) -> Result<f64> {
    let i = g.vertex_index(v)?;
    Ok(local_weight_at(g, w, cfg, i))
}

pub fn local_weight_s<T: Scalar>(g: &HexGraph, w: &Weights, cfg: &Configuration, v: usize) -> T {
    match distinguished_slot(g, cfg, v) {
        Some(s) => T::from_f64(w.param(EdgeClass::ALL[s])),
        None => T::zero(),
    }
}

pub fn config_weight(g: &HexGraph, w: &Weights, cfg: &Configuration) -> f64 {
    (0..g.n_vertices()).map(|v| local_weight_at(g, w, cfg, v)).product()
}

pub fn config_weight_s<T: Scalar>(g: &HexGraph, w: &Weights, cfg: &Configuration) -> T {
    let mut acc = T::one();
    for v in 0..g.n_vertices() {
        acc = acc * local_weight_s::<T>(g, w, cfg, v);
    }
    acc
}

pub fn is_valid(g: &HexGraph, cfg: &Configuration) -> bool {
    (0..g.n_vertices()).all(|v| matches!(degree(g, cfg, v), 1 | 2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumGuard {
    pub max_free_edges: usize,
    pub max_states: usize,
}

impl Default for EnumGuard {
    fn default() -> Self {
        EnumGuard { max_free_edges: 26, max_states: 2_000_000 }
    }
}

impl EnumGuard {
    pub fn unbounded_edges(max_states: usize) -> Self {
        EnumGuard { max_free_edges: usize::MAX, max_states }
    }
}

#[derive(Clone, Debug)]
pub struct StateSpace {
    pub boundary: BoundaryCondition,
    pub states: Vec<Configuration>,
    index: HashMap<Configuration, usize>,
}

impl StateSpace {
    pub fn from_states(boundary: BoundaryCondition, states: Vec<Configuration>) -> Self {
        let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        StateSpace { boundary, states, index }
    }
    pub fn len(&self) -> usize {
        self.states.len()
    }
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
    pub fn index_of(&self, cfg: &Configuration) -> Option<usize> {
        self.index.get(cfg).copied()
    }
}

/// Depth-first search over internal edges in canonical order (absent before present)
/// with degree pruning; `visit` returns `false` to stop.
fn search(
    g: &HexGraph,
    b: &BoundaryCondition,
    mut visit: impl FnMut(&Configuration) -> bool,
) {
    let n = g.n_vertices();
    let mut cfg = b.base_configuration(g);
    // remaining undecided incident internal edges and present count per vertex
    let mut open = vec![0usize; n];
    let mut present = vec![0usize; n];
    for v in 0..n {
        for &e in &g.incident[v] {
            if g.is_internal(e) {
                open[v] += 1;
            } else if cfg.get(e) {
                present[v] += 1;
            }
        }
    }
    if (0..n).any(|v| present[v] > 2 || present[v] + open[v] == 0) {
        return;
    }
    let order = &g.internal;
    let ends: Vec<[usize; 2]> = order
        .iter()
        .map(|&e| [g.edges[e].inner[0].unwrap(), g.edges[e].inner[1].unwrap()])
        .collect();

    fn ok(v: usize, open: &[usize], present: &[usize]) -> bool {
        present[v] <= 2 && present[v] + open[v] >= 1
    }

    fn rec(
        i: usize,
        order: &[usize],
        ends: &[[usize; 2]],
        cfg: &mut Configuration,
        open: &mut [usize],
        present: &mut [usize],
        visit: &mut dyn FnMut(&Configuration) -> bool,
    ) -> bool {
        if i == order.len() {
            return visit(cfg);
        }
        let e = order[i];
        let [u, v] = ends[i];
        open[u] -= 1;
        open[v] -= 1;
        for on in [false, true] {
            if on {
                present[u] += 1;
                present[v] += 1;
                cfg.set(e, true);
            }
            if ok(u, open, present) && ok(v, open, present)
                && !rec(i + 1, order, ends, cfg, open, present, visit) {
                    if on {
                        present[u] -= 1;
                        present[v] -= 1;
                        cfg.set(e, false);
                    }
                    open[u] += 1;
                    open[v] += 1;
                    return false;
                }
            if on {
                present[u] -= 1;
                present[v] -= 1;
                cfg.set(e, false);
            }
        }
        open[u] += 1;
        open[v] += 1;
        true
    }
    rec(0, order, &ends, &mut cfg, &mut open, &mut present, &mut visit);
}

pub fn is_admissible(g: &HexGraph, b: &BoundaryCondition) -> bool {
    if b.states.len() != g.boundary.len() {
        return false;
    }
    let mut found = false;
    search(g, b, |_| {
        found = true;
        false
    });
    found
}

pub fn enumerate_states_guarded(
    g: &HexGraph,
    b: &BoundaryCondition,
    guard: EnumGuard,
) -> Result<StateSpace> {
    if b.states.len() != g.boundary.len() {
        return Err(Error::Mismatch("boundary length".into()));
    }
    if g.internal.len() > guard.max_free_edges {
        return Err(Error::Guard(format!(
            "{} free edges exceed the limit of {}",
            g.internal.len(),
            guard.max_free_edges
        )));
    }
    let mut states = Vec::new();
    let mut over = false;
    search(g, b, |c| {
        if states.len() >= guard.max_states {
            over = true;
            return false;
        }
        states.push(c.clone());
        true
    });
    if over {
        return Err(Error::Guard(format!("more than {} states", guard.max_states)));
    }
    Ok(StateSpace::from_states(b.clone(), states))
}

/// The lexicographically first valid configuration with boundary `b`, if any.
pub fn first_state(g: &HexGraph, b: &BoundaryCondition) -> Option<Configuration> {
    if b.states.len() != g.boundary.len() {
        return None;
    }
    let mut out = None;
    search(g, b, |c| {
        out = Some(c.clone());
        false
    });
    out
}

/// All valid configurations with boundary `b`, in lexicographic order; empty when
/// `b` is inadmissible.
pub fn enumerate_states(g: &HexGraph, b: &BoundaryCondition) -> Result<StateSpace> {
    enumerate_states_guarded(g, b, EnumGuard::default())
}

pub fn partition_function_s<T: Scalar>(g: &HexGraph, w: &Weights, space: &StateSpace) -> Result<T> {
    if space.is_empty() {
        return Err(Error::Inadmissible);
    }
    let mut z = T::zero();
    for s in &space.states {
        z = z + config_weight_s::<T>(g, w, s);
    }
    Ok(z)
}

pub fn partition_function(g: &HexGraph, w: &Weights, b: &BoundaryCondition) -> Result<f64> {
    let space = enumerate_states(g, b)?;
    partition_function_s::<f64>(g, w, &space)
}

pub fn measure_s<T: Scalar>(g: &HexGraph, w: &Weights, space: &StateSpace) -> Result<Vec<T>> {
    if space.is_empty() {
        return Err(Error::Inadmissible);
    }
    let ws: Vec<T> = space.states.iter().map(|s| config_weight_s::<T>(g, w, s)).collect();
    let z = ws.iter().cloned().fold(T::zero(), |a, x| a + x);
    Ok(ws.into_iter().map(|x| x / z.clone()).collect())
}

pub fn measure(g: &HexGraph, w: &Weights, space: &StateSpace) -> Result<Vec<f64>> {
    measure_s::<f64>(g, w, space)
}

/// A random valid configuration over all edges (boundary edges free), built by
/// randomized depth-first search; when the search exceeds its node budget, by
/// random valid single-edge flips from the all-horizontal configuration.
pub fn random_configuration(g: &HexGraph, rng: &mut crate::rng::Rng) -> Configuration {
    let n = g.n_vertices();
    let m = g.n_edges();
    let mut order: Vec<usize> = (0..m).collect();
    for i in (1..m).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let coins: Vec<bool> = (0..m).map(|_| rng.gen()).collect();
    let mut open = vec![3usize; n];
    let mut present = vec![0usize; n];
    let mut cfg = Configuration::empty(m);

    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        g: &HexGraph,
        order: &[usize],
        coins: &[bool],
        cfg: &mut Configuration,
        open: &mut [usize],
        present: &mut [usize],
        budget: &mut usize,
    ) -> bool {
        if i == order.len() {
            return true;
        }
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        let e = order[i];
        let vs: Vec<usize> = g.edges[e].inner.iter().flatten().copied().collect();
        for &v in &vs {
            open[v] -= 1;
        }
        for on in [coins[i], !coins[i]] {
            cfg.set(e, on);
            if on {
                for &v in &vs {
                    present[v] += 1;
                }
            }
            let fine = vs.iter().all(|&v| present[v] <= 2 && present[v] + open[v] >= 1);
            if fine && rec(i + 1, g, order, coins, cfg, open, present, budget) {
                return true;
            }
            if on {
                for &v in &vs {
                    present[v] -= 1;
                }
            }
            cfg.set(e, false);
        }
        for &v in &vs {
            open[v] += 1;
        }
        false
    }
    let mut budget = 64 * m + 1024;
    if rec(0, g, &order, &coins, &mut cfg, &mut open, &mut present, &mut budget) {
        return cfg;
    }
    flip_configuration(g, rng)
}

fn flip_configuration(g: &HexGraph, rng: &mut crate::rng::Rng) -> Configuration {
    let m = g.n_edges();
    let mut cfg = Configuration::empty(m);
    for inc in &g.incident {
        cfg.set(inc[0], true);
    }
    let mut deg: Vec<usize> = (0..g.n_vertices()).map(|v| degree(g, &cfg, v)).collect();
    for _ in 0..8 * m {
        let e = rng.gen_range(0..m);
        let on = !cfg.get(e);
        let ends = g.edges[e].inner.iter().flatten().copied();
        if ends.clone().all(|v| if on { deg[v] < 2 } else { deg[v] > 1 }) {
            for v in ends {
                if on {
                    deg[v] += 1;
                } else {
                    deg[v] -= 1;
                }
            }
            cfg.set(e, on);
        }
    }
    cfg
}

/// Boundary obtained by restricting a random valid configuration.
pub fn random_admissible_boundary(g: &HexGraph, rng: &mut crate::rng::Rng) -> BoundaryCondition {
    BoundaryCondition::restrict(g, &random_configuration(g, rng))
}
