//! The lazy single-edge/single-face chain: move cases, exact transition probabilities,
//! an exact step sampler and dense transition matrices.

use crate::dimer::{edge_flip_legal, face_rotate_legal, Move};
use crate::hexlattice::{EdgeClass, HexGraph};
use crate::model::{BoundaryCondition, Configuration, StateSpace, Weights};
use crate::numeric::Scalar;
use crate::par::{map_range, Exec};
use crate::{Error, Result};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveCase {
    Same,
    None,
    FaceRotate,
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    I,
    J,
    K,
    L,
    M,
}

impl MoveCase {
    /// Rate multiplier relative to the probability scale.
    pub fn ratio(self, w: &Weights) -> f64 {
        let (a, b, c) = (w.a, w.b, w.c);
        match self {
            MoveCase::Same | MoveCase::None => 0.0,
            MoveCase::FaceRotate | MoveCase::A => 1.0,
            MoveCase::B | MoveCase::E => b / c,
            MoveCase::C | MoveCase::D => c / b,
            MoveCase::F | MoveCase::I => a / c,
            MoveCase::G | MoveCase::H => c / a,
            MoveCase::J | MoveCase::M => b / a,
            MoveCase::K | MoveCase::L => a / b,
        }
    }

    /// Exact rate multiplier.
    pub fn ratio_s<T: Scalar>(self, w: &Weights) -> T {
        let (a, b, c) = (T::from_f64(w.a), T::from_f64(w.b), T::from_f64(w.c));
        match self {
            MoveCase::Same | MoveCase::None => T::zero(),
            MoveCase::FaceRotate | MoveCase::A => T::one(),
            MoveCase::B | MoveCase::E => b / c,
            MoveCase::C | MoveCase::D => c / b,
            MoveCase::F | MoveCase::I => a / c,
            MoveCase::G | MoveCase::H => c / a,
            MoveCase::J | MoveCase::M => b / a,
            MoveCase::K | MoveCase::L => a / b,
        }
    }

    /// Case of the reverse transition.
    pub fn reverse(self) -> MoveCase {
        use MoveCase::*;
        match self {
            B => C,
            C => B,
            D => E,
            E => D,
            F => G,
            G => F,
            H => I,
            I => H,
            J => K,
            K => J,
            L => M,
            M => L,
            x => x,
        }
    }

    pub fn label(self) -> &'static str {
        use MoveCase::*;
        match self {
            Same => "same",
            None => "none",
            FaceRotate => "face",
            A => "2a",
            B => "2b",
            C => "2c",
            D => "2d",
            E => "2e",
            F => "2f",
            G => "2g",
            H => "2h",
            I => "2i",
            J => "2j",
            K => "2k",
            L => "2l",
            M => "2m",
        }
    }
}

/// The present edges other than `e` at each endpoint of `e`, when each endpoint has exactly one.
pub fn flankers(g: &HexGraph, cfg: &Configuration, e: usize) -> Option<[usize; 2]> {
    if !g.is_internal(e) {
        return None;
    }
    let mut out = [0; 2];
    for (i, v) in g.edges[e].inner.iter().enumerate() {
        let v = (*v)?;
        let others: Vec<usize> = g.incident[v].iter().copied().filter(|&f| f != e && cfg.get(f)).collect();
        if others.len() != 1 {
            return None;
        }
        out[i] = others[0];
    }
    Some(out)
}

/// Case of flipping the internal edge `e` at `cfg` (`cfg` is the source state).
pub fn edge_case(g: &HexGraph, cfg: &Configuration, e: usize) -> MoveCase {
    use EdgeClass::*;
    let Some([f1, f2]) = flankers(g, cfg, e) else {
        return MoveCase::None;
    };
    let (c1, c2) = (g.edges[f1].class, g.edges[f2].class);
    if c1 != c2 {
        return MoveCase::A;
    }
    let present = cfg.get(e);
    match (g.edges[e].class, c1, present) {
        (Horizontal, Nwse, true) => MoveCase::B,
        (Horizontal, Nwse, false) => MoveCase::C,
        (Horizontal, Nesw, true) => MoveCase::D,
        (Horizontal, Nesw, false) => MoveCase::E,
        (Nwse, Horizontal, true) => MoveCase::F,
        (Nwse, Horizontal, false) => MoveCase::G,
        (Nwse, Nesw, true) => MoveCase::H,
        (Nwse, Nesw, false) => MoveCase::I,
        (Nesw, Nwse, true) => MoveCase::J,
        (Nesw, Nwse, false) => MoveCase::K,
        (Nesw, Horizontal, true) => MoveCase::L,
        (Nesw, Horizontal, false) => MoveCase::M,
        _ => MoveCase::None,
    }
}

pub fn move_case(g: &HexGraph, cfg: &Configuration, m: Move) -> MoveCase {
    match m {
        Move::EdgeFlip(e) if edge_flip_legal(g, cfg, e) => edge_case(g, cfg, e),
        Move::FaceRotate(f) if face_rotate_legal(g, cfg, f) => MoveCase::FaceRotate,
        _ => MoveCase::None,
    }
}

pub fn classify_move(g: &HexGraph, w1: &Configuration, w2: &Configuration) -> Result<MoveCase> {
    if w1.len() != g.n_edges() || w2.len() != g.n_edges() {
        return Err(Error::Mismatch("configuration length".into()));
    }
    if g.boundary.iter().any(|&e| w1.get(e) != w2.get(e)) {
        return Err(Error::Mismatch("boundary states differ".into()));
    }
    let d = w1.diff(w2);
    match d.len() {
        0 => Ok(MoveCase::Same),
        1 => Ok(edge_case(g, w1, d[0])),
        6 => {
            for (f, face) in g.faces.iter().enumerate() {
                let mut fe: Vec<usize> = face.edges.iter().map(|e| e.unwrap()).collect();
                fe.sort();
                if fe == d {
                    return Ok(if face_rotate_legal(g, w1, f) { MoveCase::FaceRotate } else { MoveCase::None });
                }
            }
            Ok(MoveCase::None)
        }
        _ => Ok(MoveCase::None),
    }
}

/// min{a,b,c} / (2 (|E| + |F|) max{a,b,c}) over internal edges and region faces.
pub fn c_lambda(g: &HexGraph, w: &Weights) -> f64 {
    w.min() / (2.0 * (g.internal.len() + g.faces.len()) as f64 * w.max())
}

pub fn c_lambda_s<T: Scalar>(g: &HexGraph, w: &Weights) -> T {
    let sites = T::from_ratio(2 * (g.internal.len() + g.faces.len()) as i64, 1);
    T::from_f64(w.min()) / (sites * T::from_f64(w.max()))
}

#[derive(Clone, Debug)]
pub struct TransitionKernel<'a> {
    pub g: &'a HexGraph,
    pub w: Weights,
    pub boundary: BoundaryCondition,
    pub c: f64,
}

impl<'a> TransitionKernel<'a> {
    pub fn new(g: &'a HexGraph, w: Weights, boundary: BoundaryCondition) -> Result<Self> {
        if boundary.states.len() != g.boundary.len() {
            return Err(Error::Mismatch("boundary length".into()));
        }
        Ok(TransitionKernel { g, w, c: c_lambda(g, &w), boundary })
    }

    pub fn n_sites(&self) -> usize {
        self.g.internal.len() + self.g.faces.len()
    }

    /// Site `i`: internal edges in canonical order, then faces.
    pub fn site_move(&self, i: usize) -> Move {
        let ne = self.g.internal.len();
        if i < ne {
            Move::EdgeFlip(self.g.internal[i])
        } else {
            Move::FaceRotate(i - ne)
        }
    }

    /// Off-diagonal moves from `cfg` with their probabilities.
    pub fn row_moves<T: Scalar>(&self, cfg: &Configuration) -> Vec<(Move, T)> {
        let c = c_lambda_s::<T>(self.g, &self.w);
        (0..self.n_sites())
            .filter_map(|i| {
                let m = self.site_move(i);
                let case = move_case(self.g, cfg, m);
                (case != MoveCase::None).then(|| (m, c.clone() * case.ratio_s::<T>(&self.w)))
            })
            .collect()
    }
}

pub fn transition_prob<T: Scalar>(k: &TransitionKernel, w1: &Configuration, w2: &Configuration) -> Result<T> {
    for cfg in [w1, w2] {
        if k.g.boundary.iter().enumerate().any(|(i, &e)| cfg.get(e) != k.boundary.states[i]) {
            return Err(Error::Mismatch("state off the kernel's boundary".into()));
        }
    }
    let case = classify_move(k.g, w1, w2)?;
    if case == MoveCase::Same {
        let off = k.row_moves::<T>(w1).into_iter().fold(T::zero(), |acc, (_, p)| acc + p);
        return Ok(T::one() - off);
    }
    Ok(c_lambda_s::<T>(k.g, &k.w) * case.ratio_s::<T>(&k.w))
}

/// One step distributed exactly as the kernel's row at `cfg`.
pub fn step(k: &TransitionKernel, cfg: &Configuration, rng: &mut crate::rng::Rng) -> Configuration {
    let site = rng.gen_range(0..k.n_sites());
    let m = k.site_move(site);
    let case = move_case(k.g, cfg, m);
    if case == MoveCase::None {
        return cfg.clone();
    }
    let acc = case.ratio(&k.w) * k.w.min() / (2.0 * k.w.max());
    if rng.gen::<f64>() < acc {
        let mut out = cfg.clone();
        match m {
            Move::EdgeFlip(e) => out.toggle(e),
            Move::FaceRotate(f) => {
                for e in k.g.faces[f].edges {
                    out.toggle(e.unwrap());
                }
            }
        }
        out
    } else {
        cfg.clone()
    }
}

/// Runs `steps` steps and returns the visited state indices (including the start).
pub fn trajectory(
    k: &TransitionKernel,
    space: &StateSpace,
    start: &Configuration,
    steps: usize,
    rng: &mut crate::rng::Rng,
) -> Result<Vec<usize>> {
    let mut cur = start.clone();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(space.index_of(&cur).ok_or_else(|| Error::Argument("start state not in space".into()))?);
    for _ in 0..steps {
        cur = step(k, &cur, rng);
        out.push(space.index_of(&cur).expect("chain stays in its space"));
    }
    Ok(out)
}

pub const MATRIX_GUARD: usize = 20_000;

/// Dense row-major matrix.
pub type Dense<T> = Vec<Vec<T>>;

pub fn transition_matrix<T: Scalar>(k: &TransitionKernel, space: &StateSpace) -> Result<Dense<T>> {
    transition_matrix_with(k, space, Exec::default(), MATRIX_GUARD)
}

pub fn transition_matrix_with<T: Scalar>(
    k: &TransitionKernel,
    space: &StateSpace,
    exec: Exec,
    guard: usize,
) -> Result<Dense<T>> {
    let n = space.len();
    if n > guard {
        return Err(Error::Guard(format!("{n} states exceed the matrix limit of {guard}")));
    }
    if space.boundary != k.boundary {
        return Err(Error::Mismatch("space and kernel boundaries differ".into()));
    }
    let sparse = transition_rows::<T>(k, space, exec)?;
    Ok(sparse
        .into_iter()
        .map(|r| {
            let mut row = vec![T::zero(); n];
            for (j, p) in r {
                row[j] = p;
            }
            row
        })
        .collect())
}

/// Sparse rows `(column, probability)` sorted by column, diagonal included.
pub type SparseRows<T> = Vec<Vec<(usize, T)>>;

pub fn transition_rows<T: Scalar>(k: &TransitionKernel, space: &StateSpace, exec: Exec) -> Result<SparseRows<T>> {
    if space.boundary != k.boundary {
        return Err(Error::Mismatch("space and kernel boundaries differ".into()));
    }
    Ok(map_range(exec, space.len(), |i| {
        let cfg = &space.states[i];
        let mut row: Vec<(usize, T)> = Vec::new();
        let mut off = T::zero();
        for (m, p) in k.row_moves::<T>(cfg) {
            let mut next = cfg.clone();
            match m {
                Move::EdgeFlip(e) => next.toggle(e),
                Move::FaceRotate(f) => {
                    for e in k.g.faces[f].edges {
                        next.toggle(e.unwrap());
                    }
                }
            }
            let j = space.index_of(&next).expect("moves stay in the space");
            off = off + p.clone();
            row.push((j, p));
        }
        row.push((i, T::one() - off));
        row.sort_by_key(|x| x.0);
        let mut merged: Vec<(usize, T)> = Vec::with_capacity(row.len());
        for (j, p) in row {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 = last.1.clone() + p,
                _ => merged.push((j, p)),
            }
        }
        merged
    }))
}

pub fn to_f64(m: &Dense<impl Scalar>) -> Dense<f64> {
    m.iter().map(|r| r.iter().map(|x| x.to_f64()).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hexlattice::build_box;

    #[test]
    fn c_lambda_values() {
        let g = build_box(1, 1).unwrap();
        assert!((c_lambda(&g, &Weights::uniform()) - 1.0 / 14.0).abs() < 1e-15);
        assert!((c_lambda(&g, &Weights::new(1.0, 2.0, 3.0).unwrap()) - 1.0 / 42.0).abs() < 1e-15);
    }

    #[test]
    fn reverse_pairs() {
        for c in [MoveCase::B, MoveCase::D, MoveCase::F, MoveCase::H, MoveCase::J, MoveCase::L] {
            assert_eq!(c.reverse().reverse(), c);
            assert_ne!(c.reverse(), c);
        }
    }
}
