//! Block dynamics: block decompositions, exact conditional resampling, sequential
//! sub-block updates, maximal couplings and contraction estimates.
//!
//! Windows live on the vertex grid of a box: vertex `(p, q)` sits in row `p + 1` and
//! column `q - p + 2`, so `build_box(k, n)` spans `k + 1` rows and `2n + 2` columns. A
//! block's edge set is every internal edge with both endpoints in the block.

use crate::chain::Dense;
use crate::hexlattice::{HexGraph, Region};
use crate::model::{local_weight_at, local_weight_s, BoundaryCondition, Configuration, StateSpace, Weights};
use crate::numeric::Scalar;
use crate::par::{map_range, Exec};
use crate::{Error, Result};
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

pub const CANDIDATE_GUARD: u64 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    /// Ordered partition of `edges` for sequential updating.
    pub parts: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSet {
    pub blocks: Vec<Block>,
}

impl BlockSet {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }
    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
    /// Number of blocks containing each edge.
    pub fn multiplicity(&self, n_edges: usize) -> Vec<usize> {
        let mut m = vec![0; n_edges];
        for b in &self.blocks {
            for &e in &b.edges {
                m[e] += 1;
            }
        }
        m
    }
}

/// Vertex grid label `(P, Q)`, 1-based: `P = p + 1`, `Q = q - p + 2`.
pub fn grid_label(g: &HexGraph, v: usize) -> (u32, u32) {
    let id = g.vertices[v];
    ((id.p + 1) as u32, (id.q - id.p + 2) as u32)
}

/// Grid extent `(K, N)` of a box: `k + 1` rows and `2n + 2` columns.
pub fn grid_dims(g: &HexGraph) -> Result<(u32, u32)> {
    match g.region {
        Region::Box { k, n } | Region::Grid { k, n } => Ok((k + 1, 2 * n + 2)),
        _ => Err(Error::Argument("blocks need a box region".into())),
    }
}

/// Block from groups of grid cells; each group becomes one part.
fn block_from_groups(g: &HexGraph, groups: &[Vec<(u32, u32)>]) -> Block {
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    let cell: HashMap<(u32, u32), usize> = (0..g.n_vertices()).map(|v| (grid_label(g, v), v)).collect();
    for (gi, cells) in groups.iter().enumerate() {
        for c in cells {
            if let Some(&v) = cell.get(c) {
                owner.entry(v).or_insert(gi);
            }
        }
    }
    let mut parts = vec![Vec::new(); groups.len()];
    let mut edges = Vec::new();
    for &e in &g.internal {
        let [a, b] = g.edges[e].inner.map(|v| v.unwrap());
        if let (Some(&oa), Some(&ob)) = (owner.get(&a), owner.get(&b)) {
            edges.push(e);
            parts[oa.min(ob)].push(e);
        }
    }
    parts.retain(|p| !p.is_empty());
    Block { vertices: owner.keys().copied().collect(), edges, parts }
}

/// Column window (1-based, inclusive) of the `j`-th of `n` strip blocks of width `l`.
pub fn strip_window(n: u32, l: u32, j: u32) -> (u32, u32) {
    if j <= l / 2 {
        (1, 2 * j)
    } else if j <= n - l / 2 {
        (j - l / 2 + 1, j + l / 2)
    } else {
        (2 * j - n - 1, n)
    }
}

/// One block per grid column, of width `l`; parts are pairs of columns.
pub fn strip_blocks(g: &HexGraph, l: u32) -> Result<BlockSet> {
    let (k, n) = grid_dims(g)?;
    if !l.is_multiple_of(2) || l == 0 || l >= n {
        return Err(Error::Dimensions(format!("strip blocks need even 0 < l < {n}, got l={l}")));
    }
    let blocks = (1..=n)
        .map(|j| {
            let (lo, hi) = strip_window(n, l, j);
            let groups: Vec<Vec<(u32, u32)>> = (lo..=hi)
                .step_by(2)
                .map(|c0| (c0..=(c0 + 1).min(hi)).flat_map(|c| (1..=k).map(move |r| (r, c))).collect())
                .collect();
            block_from_groups(g, &groups)
        })
        .collect();
    Ok(BlockSet { blocks })
}

/// Window (1-based, inclusive) of block index `i` along an axis of length `n`.
pub fn square_window(n: u32, l: u32, i: u32) -> (u32, u32) {
    ((i + 1).saturating_sub(l).max(1), i.min(n))
}

/// Number of clamped windows of size `l` along an axis of length `n`.
pub fn window_count(n: u32, l: u32) -> u32 {
    n + l - 1
}

/// Clamped `l`×`l` window blocks over the grid: `(K+l-1)(N+l-1)` of them.
pub fn square_blocks(g: &HexGraph, l: u32) -> Result<BlockSet> {
    let (k, n) = grid_dims(g)?;
    if l < 2 || l > k.min(n) {
        return Err(Error::Dimensions(format!("square blocks need 2 <= l <= {}, got l={l}", k.min(n))));
    }
    let mut blocks = Vec::new();
    for i in 1..=window_count(k, l) {
        for j in 1..=window_count(n, l) {
            let (r0, r1) = square_window(k, l, i);
            let (c0, c1) = square_window(n, l, j);
            let cells: Vec<(u32, u32)> = (r0..=r1).flat_map(|r| (c0..=c1).map(move |c| (r, c))).collect();
            blocks.push(block_from_groups(g, &[cells]));
        }
    }
    Ok(BlockSet { blocks })
}

/// A single block holding every internal edge.
pub fn whole_block(g: &HexGraph) -> BlockSet {
    let edges = g.internal.clone();
    BlockSet {
        blocks: vec![Block { vertices: (0..g.n_vertices()).collect(), parts: vec![edges.clone()], edges }],
    }
}

/// Valid configurations agreeing with `base` off `free`, in lexicographic order of `free`.
pub fn enumerate_free(g: &HexGraph, base: &Configuration, free: &[usize], guard: u64) -> Result<Vec<Configuration>> {
    if free.len() < 64 && (1u64 << free.len()) > guard {
        return Err(Error::Guard(format!("{} free block edges", free.len())));
    }
    let mut cfg = base.clone();
    for &e in free {
        cfg.set(e, false);
    }
    let n = g.n_vertices();
    let mut open = vec![0usize; n];
    let mut present = vec![0usize; n];
    let free_set: BTreeSet<usize> = free.iter().copied().collect();
    for v in 0..n {
        for &e in &g.incident[v] {
            if free_set.contains(&e) {
                open[v] += 1;
            } else if cfg.get(e) {
                present[v] += 1;
            }
        }
    }
    let touched: Vec<usize> = (0..n).filter(|&v| open[v] > 0).collect();
    if touched.iter().any(|&v| present[v] > 2 || present[v] + open[v] == 0) {
        return Ok(Vec::new());
    }
    let ends: Vec<Vec<usize>> = free.iter().map(|&e| g.edges[e].inner.iter().flatten().copied().collect()).collect();
    let mut out = Vec::new();
    fn rec(
        i: usize,
        free: &[usize],
        ends: &[Vec<usize>],
        cfg: &mut Configuration,
        open: &mut [usize],
        present: &mut [usize],
        out: &mut Vec<Configuration>,
    ) {
        if i == free.len() {
            out.push(cfg.clone());
            return;
        }
        for &v in &ends[i] {
            open[v] -= 1;
        }
        for on in [false, true] {
            if on {
                for &v in &ends[i] {
                    present[v] += 1;
                }
                cfg.set(free[i], true);
            }
            if ends[i].iter().all(|&v| present[v] <= 2 && present[v] + open[v] >= 1) {
                rec(i + 1, free, ends, cfg, open, present, out);
            }
            if on {
                for &v in &ends[i] {
                    present[v] -= 1;
                }
                cfg.set(free[i], false);
            }
        }
        for &v in &ends[i] {
            open[v] += 1;
        }
    }
    rec(0, free, &ends, &mut cfg, &mut open, &mut present, &mut out);
    Ok(out)
}

/// Exact conditional law of the block given the configuration outside it.
#[derive(Clone, Debug)]
pub struct CondLaw<T> {
    pub states: Vec<Configuration>,
    pub probs: Vec<T>,
}

pub fn conditional_law<T: Scalar>(g: &HexGraph, w: &Weights, sigma: &Configuration, block: &Block) -> Result<CondLaw<T>> {
    let states = enumerate_free(g, sigma, &block.edges, CANDIDATE_GUARD)?;
    if states.is_empty() {
        return Err(Error::InvalidConfiguration("empty conditional space".into()));
    }
    let touched: BTreeSet<usize> =
        block.edges.iter().flat_map(|&e| g.edges[e].inner.iter().flatten().copied()).collect();
    let weights: Vec<T> = states
        .iter()
        .map(|s| touched.iter().fold(T::one(), |acc, &v| acc * local_weight_s::<T>(g, w, s, v)))
        .collect();
    let z = weights.iter().cloned().fold(T::zero(), |a, b| a + b);
    let probs = weights.into_iter().map(|x| x / z.clone()).collect();
    Ok(CondLaw { states, probs })
}

fn sample_index(probs: &[f64], rng: &mut crate::rng::Rng) -> usize {
    let u: f64 = rng.gen::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

pub fn conditional_sample(
    g: &HexGraph,
    w: &Weights,
    sigma: &Configuration,
    block: &Block,
    rng: &mut crate::rng::Rng,
) -> Result<Configuration> {
    if block.edges.is_empty() {
        return Ok(sigma.clone());
    }
    let law = conditional_law::<f64>(g, w, sigma, block)?;
    Ok(law.states[sample_index(&law.probs, rng)].clone())
}

fn restriction(cfg: &Configuration, edges: &[usize]) -> Vec<bool> {
    edges.iter().map(|&e| cfg.get(e)).collect()
}

/// Updates the block part by part, each part drawn from its law given the parts already
/// drawn and the exterior. The composite law is the block's conditional law.
pub fn sequential_update(
    g: &HexGraph,
    w: &Weights,
    sigma: &Configuration,
    block: &Block,
    rng: &mut crate::rng::Rng,
) -> Result<Configuration> {
    if block.edges.is_empty() {
        return Ok(sigma.clone());
    }
    let law = conditional_law::<f64>(g, w, sigma, block)?;
    let mut alive: Vec<usize> = (0..law.states.len()).collect();
    for part in &block.parts {
        let mut marg: BTreeMap<Vec<bool>, f64> = BTreeMap::new();
        for &i in &alive {
            *marg.entry(restriction(&law.states[i], part)).or_insert(0.0) += law.probs[i];
        }
        let keys: Vec<&Vec<bool>> = marg.keys().collect();
        let probs: Vec<f64> = marg.values().copied().collect();
        let pick = keys[sample_index(&probs, rng)].clone();
        alive.retain(|&i| restriction(&law.states[i], part) == pick);
    }
    Ok(law.states[alive[0]].clone())
}

/// Exact law of [`sequential_update`], as configurations with probabilities.
pub fn sequential_law(g: &HexGraph, w: &Weights, sigma: &Configuration, block: &Block) -> Result<Vec<(Configuration, f64)>> {
    let law = conditional_law::<f64>(g, w, sigma, block)?;
    let mut out = Vec::new();
    fn rec(law: &CondLaw<f64>, parts: &[Vec<usize>], alive: Vec<usize>, p: f64, out: &mut Vec<(Configuration, f64)>) {
        if parts.is_empty() {
            out.push((law.states[alive[0]].clone(), p));
            return;
        }
        let mut groups: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
        for &i in &alive {
            groups.entry(restriction(&law.states[i], &parts[0])).or_default().push(i);
        }
        let total: f64 = alive.iter().map(|&i| law.probs[i]).sum();
        for (_, members) in groups {
            let m: f64 = members.iter().map(|&i| law.probs[i]).sum();
            rec(law, &parts[1..], members, p * m / total, out);
        }
    }
    rec(&law, &block.parts, (0..law.states.len()).collect(), 1.0, &mut out);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingStyle {
    /// Maximal coupling part by part.
    Sequential,
    /// Maximal coupling of the whole-block laws.
    Whole,
}

#[derive(Clone, Debug)]
pub struct BlockKernel<'a> {
    pub g: &'a HexGraph,
    pub w: Weights,
    pub boundary: BoundaryCondition,
    pub blocks: BlockSet,
    pub style: CouplingStyle,
}

impl<'a> BlockKernel<'a> {
    pub fn new(g: &'a HexGraph, w: Weights, boundary: BoundaryCondition, blocks: BlockSet, style: CouplingStyle) -> Self {
        BlockKernel { g, w, boundary, blocks, style }
    }
}

pub fn block_step(k: &BlockKernel, sigma: &Configuration, rng: &mut crate::rng::Rng) -> Result<Configuration> {
    let i = rng.gen_range(0..k.blocks.len());
    conditional_sample(k.g, &k.w, sigma, &k.blocks.blocks[i], rng)
}

/// Per-block projection matrix.
pub fn block_projection<T: Scalar>(k: &BlockKernel, space: &StateSpace, b: usize) -> Result<Dense<T>> {
    let n = space.len();
    let block = &k.blocks.blocks[b];
    let rows = map_range(Exec::default(), n, |x| -> Result<Vec<T>> {
        let mut row = vec![T::zero(); n];
        let law = conditional_law::<T>(k.g, &k.w, &space.states[x], block)?;
        for (s, p) in law.states.iter().zip(law.probs) {
            let y = space.index_of(s).ok_or_else(|| Error::Mismatch("conditional state off the space".into()))?;
            row[y] = p;
        }
        Ok(row)
    });
    rows.into_iter().collect()
}

/// Average of the per-block projections.
pub fn block_matrix<T: Scalar>(k: &BlockKernel, space: &StateSpace) -> Result<Dense<T>> {
    let n = space.len();
    if n > crate::chain::MATRIX_GUARD {
        return Err(Error::Guard(format!("{n} states exceed the matrix limit")));
    }
    let nb = T::from_ratio(k.blocks.len() as i64, 1);
    let rows = map_range(Exec::default(), n, |x| -> Result<Vec<T>> {
        let mut row = vec![T::zero(); n];
        for block in &k.blocks.blocks {
            let law = conditional_law::<T>(k.g, &k.w, &space.states[x], block)?;
            for (s, p) in law.states.iter().zip(law.probs) {
                let y = space.index_of(s).ok_or_else(|| Error::Mismatch("conditional state off the space".into()))?;
                row[y] = row[y].clone() + p / nb.clone();
            }
        }
        Ok(row)
    });
    rows.into_iter().collect()
}

/// Maximal coupling of two laws keyed by a common type.
fn maximal_coupling<K: Ord + Clone>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> Vec<(K, K, f64)> {
    let mut out = Vec::new();
    let mut overlap = 0.0;
    let mut rp = Vec::new();
    let mut rq = Vec::new();
    let keys: BTreeSet<&K> = p.keys().chain(q.keys()).collect();
    for key in keys {
        let a = p.get(key).copied().unwrap_or(0.0);
        let b = q.get(key).copied().unwrap_or(0.0);
        let m = a.min(b);
        if m > 0.0 {
            out.push((key.clone(), key.clone(), m));
            overlap += m;
        }
        if a - m > 0.0 {
            rp.push((key.clone(), a - m));
        }
        if b - m > 0.0 {
            rq.push((key.clone(), b - m));
        }
    }
    let rest = 1.0 - overlap;
    if rest > 1e-15 {
        for (kp, a) in &rp {
            for (kq, b) in &rq {
                out.push((kp.clone(), kq.clone(), a * b / rest));
            }
        }
    }
    out
}

/// Exact joint law of one coupled update of block `b`.
pub fn coupled_block_law(
    k: &BlockKernel,
    sigma: &Configuration,
    tau: &Configuration,
    b: usize,
) -> Result<Vec<(Configuration, Configuration, f64)>> {
    let block = &k.blocks.blocks[b];
    if block.edges.is_empty() {
        return Ok(vec![(sigma.clone(), tau.clone(), 1.0)]);
    }
    let ls = conditional_law::<f64>(k.g, &k.w, sigma, block)?;
    let lt = conditional_law::<f64>(k.g, &k.w, tau, block)?;
    let same_exterior = (0..k.g.n_edges()).all(|e| block.edges.binary_search(&e).is_ok() || sigma.get(e) == tau.get(e));
    if same_exterior {
        return Ok(ls.states.iter().zip(&ls.probs).map(|(s, &p)| (s.clone(), s.clone(), p)).collect());
    }
    let parts: Vec<Vec<usize>> = match k.style {
        CouplingStyle::Whole => vec![block.edges.clone()],
        CouplingStyle::Sequential => {
            let mut parts = block.parts.clone();
            let diff: BTreeSet<usize> = sigma.diff(tau).into_iter().collect();
            let touches = |part: &Vec<usize>| {
                part.iter().any(|&e| {
                    k.g.edges[e].inner.iter().flatten().any(|&v| k.g.incident[v].iter().any(|f| diff.contains(f)))
                })
            };
            if parts.len() > 1 && !touches(&parts[0]) && touches(&parts[parts.len() - 1]) {
                parts.reverse();
            }
            parts
        }
    };
    let mut out = Vec::new();
    let all_s: Vec<usize> = (0..ls.states.len()).collect();
    let all_t: Vec<usize> = (0..lt.states.len()).collect();
    couple_rec(&ls, &lt, &parts, all_s, all_t, 1.0, &mut out);
    Ok(out)
}

fn couple_rec(
    ls: &CondLaw<f64>,
    lt: &CondLaw<f64>,
    parts: &[Vec<usize>],
    alive_s: Vec<usize>,
    alive_t: Vec<usize>,
    p: f64,
    out: &mut Vec<(Configuration, Configuration, f64)>,
) {
    if p <= 0.0 {
        return;
    }
    if parts.is_empty() {
        out.push((ls.states[alive_s[0]].clone(), lt.states[alive_t[0]].clone(), p));
        return;
    }
    let group = |law: &CondLaw<f64>, alive: &[usize]| {
        let total: f64 = alive.iter().map(|&i| law.probs[i]).sum();
        let mut members: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
        let mut marg: BTreeMap<Vec<bool>, f64> = BTreeMap::new();
        for &i in alive {
            let key = restriction(&law.states[i], &parts[0]);
            *marg.entry(key.clone()).or_insert(0.0) += law.probs[i] / total;
            members.entry(key).or_default().push(i);
        }
        (marg, members)
    };
    let (ms, gs) = group(ls, &alive_s);
    let (mt, gt) = group(lt, &alive_t);
    for (ks, kt, q) in maximal_coupling(&ms, &mt) {
        couple_rec(ls, lt, &parts[1..], gs[&ks].clone(), gt[&kt].clone(), p * q, out);
    }
}

/// Exact joint law of one coupled block-dynamics step.
pub fn coupled_step_law(k: &BlockKernel, sigma: &Configuration, tau: &Configuration) -> Result<Vec<(Configuration, Configuration, f64)>> {
    let nb = k.blocks.len() as f64;
    let mut acc: HashMap<(Configuration, Configuration), f64> = HashMap::new();
    for b in 0..k.blocks.len() {
        for (x, y, p) in coupled_block_law(k, sigma, tau, b)? {
            *acc.entry((x, y)).or_insert(0.0) += p / nb;
        }
    }
    let mut out: Vec<_> = acc.into_iter().map(|((x, y), p)| (x, y, p)).collect();
    out.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    Ok(out)
}

fn sample_joint(law: &[(Configuration, Configuration, f64)], rng: &mut crate::rng::Rng) -> (Configuration, Configuration) {
    let probs: Vec<f64> = law.iter().map(|t| t.2).collect();
    let i = sample_index(&probs, rng);
    (law[i].0.clone(), law[i].1.clone())
}

pub fn coupled_step(
    k: &BlockKernel,
    sigma: &Configuration,
    tau: &Configuration,
    rng: &mut crate::rng::Rng,
) -> Result<(Configuration, Configuration)> {
    let b = rng.gen_range(0..k.blocks.len());
    let law = coupled_block_law(k, sigma, tau, b)?;
    Ok(sample_joint(&law, rng))
}

pub fn hamming(x: &Configuration, y: &Configuration) -> usize {
    x.diff(y).len()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairEstimate {
    pub distance: usize,
    pub mean_ratio: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContractionReport {
    pub pairs: usize,
    pub trials: usize,
    pub mean_ratio: f64,
    pub stderr: f64,
    /// Largest per-pair mean ratio and its standard error.
    pub worst_ratio: f64,
    pub worst_stderr: f64,
    pub per_pair: Vec<PairEstimate>,
}

/// Monte Carlo estimate of E ρ(X₁,Y₁)/ρ(σ,τ) under the coupling, per pair and overall.
/// Trial `t` of pair `i` draws from the stream `(seed, i·trials + t)`.
pub fn contraction_estimate(
    k: &BlockKernel,
    pairs: &[(Configuration, Configuration)],
    seed: u64,
    trials: usize,
    exec: Exec,
) -> Result<ContractionReport> {
    let per: Vec<Result<PairEstimate>> = crate::par::map_range(exec, pairs.len(), |i| {
        let (s, t) = &pairs[i];
        let d0 = hamming(s, t);
        if d0 == 0 {
            return Err(Error::Argument("coupled pair is identical".into()));
        }
        let laws: Vec<_> = (0..k.blocks.len()).map(|b| coupled_block_law(k, s, t, b)).collect::<Result<_>>()?;
        let mut rng = crate::rng::stream(seed, i as u64);
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..trials {
            let b = rng.gen_range(0..laws.len());
            let (x, y) = sample_joint(&laws[b], &mut rng);
            let r = hamming(&x, &y) as f64 / d0 as f64;
            sum += r;
            sq += r * r;
        }
        let n = trials as f64;
        let mean = sum / n;
        let var = if trials > 1 { (sq - n * mean * mean).max(0.0) / (n - 1.0) } else { 0.0 };
        Ok(PairEstimate { distance: d0, mean_ratio: mean, stderr: (var / n).sqrt() })
    });
    let per: Vec<PairEstimate> = per.into_iter().collect::<Result<_>>()?;
    let m = per.len().max(1) as f64;
    let mean = per.iter().map(|p| p.mean_ratio).sum::<f64>() / m;
    let stderr = (per.iter().map(|p| p.stderr * p.stderr).sum::<f64>()).sqrt() / m;
    let worst = per
        .iter()
        .fold(None::<&PairEstimate>, |b, p| if b.is_none_or(|b| p.mean_ratio > b.mean_ratio) { Some(p) } else { b });
    Ok(ContractionReport {
        pairs: per.len(),
        trials,
        mean_ratio: mean,
        stderr,
        worst_ratio: worst.map_or(0.0, |p| p.mean_ratio),
        worst_stderr: worst.map_or(0.0, |p| p.stderr),
        per_pair: per,
    })
}

/// Exact expected ratio E ρ(X₁,Y₁)/ρ(σ,τ) under the coupling.
pub fn contraction_exact(k: &BlockKernel, sigma: &Configuration, tau: &Configuration) -> Result<f64> {
    let d0 = hamming(sigma, tau) as f64;
    Ok(coupled_step_law(k, sigma, tau)?.iter().map(|(x, y, p)| p * hamming(x, y) as f64).sum::<f64>() / d0)
}

/// Configuration weight restricted to the vertices of `block`.
pub fn block_weight(g: &HexGraph, w: &Weights, cfg: &Configuration, block: &Block) -> f64 {
    block.vertices.iter().map(|&v| local_weight_at(g, w, cfg, v)).product()
}
