#![allow(dead_code)]

use onetwo::dimer::external_edges;
use onetwo::hexlattice::{build_box, HexGraph};
use onetwo::model::{enumerate_states, random_admissible_boundary, BoundaryCondition, StateSpace, Weights};
use onetwo::pfaffian::PlainGraph;
use onetwo::rng;
use rand::seq::SliceRandom;
use rand::Rng;

pub const WEIGHTS: [(f64, f64, f64); 3] = [(1.0, 1.0, 1.0), (1.0, 2.0, 3.0), (9.0, 1.0, 1.0)];

pub fn weights(t: (f64, f64, f64)) -> Weights {
    Weights::new(t.0, t.1, t.2).unwrap()
}

/// Single hexagon with three alternate exterior edges present.
pub fn h1_bstar() -> (HexGraph, BoundaryCondition) {
    let g = build_box(1, 1).unwrap();
    let ext = external_edges(&g, 0);
    let b = BoundaryCondition::from_present_edges(&g, &[ext[0], ext[2], ext[4]]).unwrap();
    (g, b)
}

pub fn seeded(k: u32, n: u32, seed: u64) -> (HexGraph, BoundaryCondition) {
    let g = build_box(k, n).unwrap();
    let b = random_admissible_boundary(&g, &mut rng::from_seed(seed));
    (g, b)
}

/// Seeded box instance with the fewest states among seeds `0..tries`.
pub fn smallest(k: u32, n: u32, tries: u64) -> (HexGraph, BoundaryCondition, StateSpace) {
    let g = build_box(k, n).unwrap();
    let (b, s) = (0..tries)
        .map(|s| {
            let b = random_admissible_boundary(&g, &mut rng::from_seed(s));
            let sp = enumerate_states(&g, &b).unwrap();
            (b, sp)
        })
        .min_by_key(|(_, sp)| sp.len())
        .unwrap();
    (g, b, s)
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Segments meet anywhere other than at a shared endpoint.
fn conflict(p: (i64, i64), q: (i64, i64), r: (i64, i64), s: (i64, i64)) -> bool {
    let shared = [p, q].iter().filter(|x| **x == r || **x == s).count();
    let d1 = cross(r, s, p);
    let d2 = cross(r, s, q);
    let d3 = cross(p, q, r);
    let d4 = cross(p, q, s);
    if shared == 1 {
        // only collinear overlap matters
        return d1 == 0 && d2 == 0 && {
            let (o, a, b) = if p == r || p == s { (p, q, if p == r { s } else { r }) } else { (q, p, if q == r { s } else { r }) };
            (a.0 - o.0) * (b.0 - o.0) + (a.1 - o.1) * (b.1 - o.1) > 0
        };
    }
    let on = |a: (i64, i64), b: (i64, i64), c: (i64, i64)| {
        cross(a, b, c) == 0 && c.0 >= a.0.min(b.0) && c.0 <= a.0.max(b.0) && c.1 >= a.1.min(b.1) && c.1 <= a.1.max(b.1)
    };
    if ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)) {
        return true;
    }
    on(r, s, p) || on(r, s, q) || on(p, q, r) || on(p, q, s)
}

/// Random straight-line planar graph with `n` vertices on a small integer grid and
/// positive integer weights.
pub fn random_planar(seed: u64, n: usize) -> PlainGraph {
    let mut r = rng::from_seed(seed);
    let mut pts: Vec<(i64, i64)> = Vec::new();
    while pts.len() < n {
        let p = (r.gen_range(0..12), r.gen_range(0..12));
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    pairs.shuffle(&mut r);
    let keep = r.gen_range(0.5..1.0);
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    for (i, j) in pairs {
        if chosen.iter().any(|&(a, b)| conflict(pts[i], pts[j], pts[a], pts[b])) {
            continue;
        }
        // no vertex in the interior of the segment
        if (0..n).any(|k| k != i && k != j && conflict(pts[i], pts[j], pts[k], pts[k])) {
            continue;
        }
        chosen.push((i, j));
    }
    let mut g = PlainGraph::new();
    for p in &pts {
        g.add_vertex(p.0 as f64, p.1 as f64);
    }
    for (i, j) in chosen {
        if r.gen_bool(keep) {
            g.add_edge(i, j, r.gen_range(1..=4) as f64);
        }
    }
    g
}
