//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use common::*;
use nalgebra::DMatrix;
use num_rational::BigRational;
use onetwo::analysis::{
    self, congestion_ratio, detailed_balance_sparse, diameter, mixing_time, relaxation_bounds, spectral_gap, to_matrix,
    PathFamily,
};
use onetwo::blocks::{self, block_matrix, coupled_step_law, strip_blocks, whole_block, BlockKernel, CouplingStyle};
use onetwo::chain::{self, step, transition_matrix, transition_rows, TransitionKernel};
use onetwo::dimer::{
    self, apply_move, build_path_report, cycle_type, distance_cfg, enclosed_edge_count, legal_moves,
    symmetric_difference_cycles, to_bisector, Move,
};
use onetwo::hexlattice::{build_box, build_cylinder, HexGraph};
use onetwo::model::{
    enumerate_states, is_admissible, measure, measure_s, BoundaryCondition, Configuration, StateSpace, Weights,
};
use onetwo::numeric::Scalar;
use onetwo::par::{map_range, Exec};
use onetwo::pfaffian::{
    self, boundary_marginal, count_matchings, determinant, kasteleyn_orientation,
};
use onetwo::rng;
use onetwo::spatial::{
    condition_F, connective_estimate, gibbs_measure, potential_identity_holds, saw_counts, FOptions, FRoute,
    SAW_GUARD, SAW_OFFSETS,
};
use rand::Rng;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn dense_pi(g: &HexGraph, w: &Weights, sp: &StateSpace) -> (DMatrix<f64>, Vec<f64>) {
    let k = TransitionKernel::new(g, *w, sp.boundary.clone()).unwrap();
    let p = to_matrix(&transition_matrix::<f64>(&k, sp).unwrap());
    (p, measure(g, w, sp).unwrap())
}

/// Small instances used by the spectral and mixing checks.
fn small_instances() -> Vec<(String, HexGraph, BoundaryCondition)> {
    let mut v = Vec::new();
    let (g, b) = h1_bstar();
    v.push(("H1/b*".to_string(), g, b));
    for s in 0..3 {
        let (g, b) = seeded(1, 1, s);
        v.push((format!("box(1,1)#{s}"), g, b));
    }
    for (k, n, s) in [(1, 2, 1), (2, 1, 2)] {
        let (g, b) = seeded(k, n, s);
        v.push((format!("box({k},{n})#{s}"), g, b));
    }
    v
}

// 1 ------------------------------------------------------------------------------------
fn detailed_balance() -> Outcome {
    let t0 = Instant::now();
    let (h, hb) = h1_bstar();
    let (g22, b22, _) = smallest(2, 2, 20);
    let mut checked = 0usize;
    for (g, b) in [(&h, &hb), (&g22, &b22)] {
        let sp = enumerate_states(g, b).map_err(err)?;
        for t in WEIGHTS {
            let w = weights(t);
            let k = TransitionKernel::new(g, w, b.clone()).map_err(err)?;
            let rows = transition_rows::<BigRational>(&k, &sp, Exec::default()).map_err(err)?;
            let pi = measure_s::<BigRational>(g, &w, &sp).map_err(err)?;
            ensure(detailed_balance_sparse(&rows, &pi), || format!("detailed balance fails for {t:?}"))?;
            for (x, r) in rows.iter().enumerate() {
                let s = r.iter().fold(BigRational::zero(), |a, (_, p)| a + p.clone());
                ensure(s == BigRational::one(), || format!("row {x} does not sum to 1"))?;
            }
            checked += sp.len();
        }
    }
    let el = t0.elapsed();
    ensure(el < Duration::from_secs(10), || format!("took {el:?}"))?;
    Ok(format!("{checked} rows over 2 instances x 3 weights, rational, {el:.2?}"))
}

// 2 ------------------------------------------------------------------------------------
fn laziness_spectrum() -> Outcome {
    let mut n = 0;
    let mut worst_ev = f64::INFINITY;
    let mut worst_gap = 0.0f64;
    for (name, g, b) in small_instances() {
        let sp = enumerate_states(&g, &b).map_err(err)?;
        for t in WEIGHTS {
            let w = weights(t);
            let (p, pi) = dense_pi(&g, &w, &sp);
            let dmin = (0..sp.len()).map(|i| p[(i, i)]).fold(f64::INFINITY, f64::min);
            ensure(dmin >= 0.5, || format!("{name} {t:?}: min diagonal {dmin}"))?;
            let s = spectral_gap(&p, &pi).map_err(err)?;
            let emin = *s.eigenvalues.last().unwrap();
            ensure(emin >= -1e-10, || format!("{name} {t:?}: eigenvalue {emin}"))?;
            ensure((s.gamma - s.gamma_star).abs() <= 1e-9, || format!("{name}: gamma != gamma*"))?;
            worst_ev = worst_ev.min(emin);
            worst_gap = worst_gap.max((s.gamma - s.gamma_star).abs());
            n += 1;
            if let Ok(bs) = strip_blocks(&g, 2) {
                let bk = BlockKernel::new(&g, w, b.clone(), bs, CouplingStyle::Sequential);
                let pb = to_matrix(&block_matrix::<f64>(&bk, &sp).map_err(err)?);
                let sb = spectral_gap(&pb, &pi).map_err(err)?;
                let eb = *sb.eigenvalues.last().unwrap();
                ensure(eb >= -1e-10, || format!("{name} {t:?}: block eigenvalue {eb}"))?;
                worst_ev = worst_ev.min(eb);
                n += 1;
            }
        }
    }
    Ok(format!("{n} kernels; min eigenvalue {worst_ev:.3e}; max |gamma-gamma*| {worst_gap:.1e}"))
}

// 3 ------------------------------------------------------------------------------------
fn components(rows: &chain::SparseRows<f64>) -> usize {
    let n = rows.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, r) in rows.iter().enumerate() {
        for &(j, ref q) in r {
            if *q > 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

fn irreducibility() -> Outcome {
    let t0 = Instant::now();
    let w = weights((1.0, 2.0, 3.0));
    let mut audited = 0;
    let mut largest = 0;
    for (k, n) in [(1, 1), (1, 2), (2, 1), (1, 3), (2, 2)] {
        for s in 0..5 {
            let (g, b) = seeded(k, n, 100 + s);
            let sp = enumerate_states(&g, &b).map_err(err)?;
            ensure(sp.len() <= 100_000, || "state space too large".into())?;
            let kern = TransitionKernel::new(&g, w, b).map_err(err)?;
            let rows = transition_rows::<f64>(&kern, &sp, Exec::default()).map_err(err)?;
            let c = components(&rows);
            ensure(c == 1, || format!("box({k},{n}) seed {}: {c} components", 100 + s))?;
            audited += 1;
            largest = largest.max(sp.len());
        }
    }
    let g = build_cylinder(3, 0).map_err(err)?;
    // exterior edges below the ring present, above absent
    let b = BoundaryCondition::new(g.boundary.iter().map(|&e| g.edges[e].ends.iter().any(|v| v.p < 0)).collect());
    let sp = enumerate_states(&g, &b).map_err(err)?;
    let kern = TransitionKernel::new(&g, w, b).map_err(err)?;
    let cyl = components(&transition_rows::<f64>(&kern, &sp, Exec::default()).map_err(err)?);
    ensure(cyl >= 2, || format!("cylinder instance has {cyl} component(s)"))?;
    let el = t0.elapsed();
    ensure(el < Duration::from_secs(120), || format!("took {el:?}"))?;
    Ok(format!("{audited} boundaries connected (largest |Omega| = {largest}); cylinder ring: {cyl} components; {el:.1?}"))
}

// 4 ------------------------------------------------------------------------------------
fn path_algorithm() -> Outcome {
    let mut total = 0usize;
    let mut longest = 0usize;
    let (h, hb) = h1_bstar();
    let mut inst = vec![(h, hb)];
    inst.push(seeded(1, 2, 0));
    inst.push(seeded(2, 1, 2));
    inst.push(seeded(1, 3, 3));
    for (g, b) in &inst {
        let sp = enumerate_states(g, b).map_err(err)?;
        ensure(sp.len() <= 2000, || "instance too large".into())?;
        let n = sp.len();
        let res: Vec<Result<usize, String>> = map_range(Exec::default(), n, |i| {
            let mut worst = 0;
            for j in 0..n {
                let (x, y) = (&sp.states[i], &sp.states[j]);
                let rep = build_path_report(g, x, y, Default::default()).map_err(err)?;
                let end = dimer::replay(g, x, &rep.moves).map_err(err)?;
                if &end != y {
                    return Err(format!("path {i}->{j} ends elsewhere"));
                }
                let d = distance_cfg(g, x, y).map_err(err)?;
                if rep.moves.len() > d {
                    return Err(format!("path {i}->{j}: {} moves > distance {d}", rep.moves.len()));
                }
                if rep.round_distances.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(format!("path {i}->{j}: rounds {:?}", rep.round_distances));
                }
                worst = worst.max(rep.moves.len());
            }
            Ok(worst)
        });
        for r in res {
            longest = longest.max(r?);
        }
        total += n * n;
    }
    Ok(format!("{total} ordered pairs on {} instances; longest path {longest}", inst.len()))
}

// 5 ------------------------------------------------------------------------------------
fn cycle_characterization() -> Outcome {
    let mut moves = 0usize;
    let mut others = 0usize;
    let mut violations: Vec<(String, String)> = Vec::new();
    let (h, hb) = h1_bstar();
    let (g12, b12) = seeded(1, 2, 1);
    let (g21, b21) = seeded(2, 1, 2);
    let inst = [("H1/b*", h, hb), ("box(1,2)#1", g12, b12), ("box(2,1)#2", g21, b21)];
    for (name, g, b) in &inst {
        let sp = enumerate_states(g, b).map_err(err)?;
        let n = sp.len();
        let bis: Vec<_> = sp.states.iter().map(|s| to_bisector(g, s).unwrap()).collect();
        let res: Vec<Result<(usize, usize, Vec<(String, String)>), String>> = map_range(Exec::default(), n, |i| {
            let x = &sp.states[i];
            let mut bad = Vec::new();
            let mut nbr: HashMap<usize, Move> = HashMap::new();
            for m in legal_moves(g, x) {
                let y = apply_move(g, x, m).map_err(err)?;
                nbr.insert(sp.index_of(&y).ok_or("move leaves the space")?, m);
            }
            let (mut a, mut o) = (0, 0);
            for j in 0..n {
                if i == j {
                    continue;
                }
                let cs = symmetric_difference_cycles(g, &bis[i], &bis[j]).map_err(err)?;
                match nbr.get(&j) {
                    Some(&m) => {
                        if cs.len() != 1 {
                            return Err(format!("move pair {i},{j}: {} cycles", cs.len()));
                        }
                        let nc = enclosed_edge_count(g, &cs[0]).map_err(err)?;
                        let want = match m {
                            Move::EdgeFlip(_) => 1,
                            Move::FaceRotate(_) => 6,
                        };
                        if nc != want {
                            return Err(format!("move pair {i},{j}: N(C) = {nc}, expected {want}"));
                        }
                        a += 1;
                    }
                    None => {
                        if cs.len() == 1 {
                            let nc = enclosed_edge_count(g, &cs[0]).map_err(err)?;
                            if nc == 1 || nc == 6 {
                                let t = cycle_type(g, &cs[0]).map_err(err)?;
                                let diff = x.diff(&sp.states[j]);
                                bad.push((format!("N(C)={nc} {t:?}"), format!("{name} {i}->{j} diff={diff:?}")));
                            }
                        }
                        o += 1;
                    }
                }
            }
            Ok((a, o, bad))
        });
        for r in res {
            let (a, o, b) = r?;
            moves += a;
            others += o;
            violations.extend(b);
        }
    }
    ensure(violations.is_empty(), || {
        let mut kinds: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (k, e) in &violations {
            kinds.entry(k.as_str()).or_insert((0, e.as_str())).0 += 1;
        }
        let list: Vec<String> = kinds.iter().map(|(k, (c, e))| format!("{k}: {c} (e.g. {e})")).collect();
        format!(
            "{moves} one-move pairs ok, but {} of {others} non-move pairs also form a single cycle with N(C) in {{1,6}}: {}",
            violations.len(),
            list.join("; ")
        )
    })?;
    Ok(format!("{moves} one-move pairs with a single cycle of N(C) in {{1,6}}; {others} other pairs without that signature"))
}

// 6 + 8 --------------------------------------------------------------------------------
fn sandwich() -> Outcome {
    let mut n = 0;
    let mut tightest = f64::INFINITY;
    for (name, g, b) in small_instances() {
        let sp = enumerate_states(&g, &b).map_err(err)?;
        for t in WEIGHTS {
            let (p, pi) = dense_pi(&g, &weights(t), &sp);
            let s = spectral_gap(&p, &pi).map_err(err)?;
            let tmix = mixing_time(&p, &pi, 0.25).map_err(err)? as f64;
            let pmin = pi.iter().copied().fold(f64::INFINITY, f64::min);
            let (lo, hi) = relaxation_bounds(s.t_rel(), pmin, 0.25);
            ensure(lo - 1e-9 <= tmix && tmix <= hi + 1e-9, || format!("{name} {t:?}: {tmix} outside [{lo}, {hi}]"))?;
            tightest = tightest.min(hi / tmix);
            n += 1;
        }
    }
    Ok(format!("{n} kernels; t_mix inside [(t_rel-1)log 2, log(4/pi_min) t_rel]; min upper/t_mix = {tightest:.2}"))
}

fn diameter_bound() -> Outcome {
    let mut n = 0;
    for (name, g, b) in small_instances() {
        let sp = enumerate_states(&g, &b).map_err(err)?;
        for t in WEIGHTS {
            let (p, pi) = dense_pi(&g, &weights(t), &sp);
            let l = diameter(&p).ok_or("disconnected support")?;
            for eps in [0.1, 0.25] {
                let tm = mixing_time(&p, &pi, eps).map_err(err)?;
                ensure(2 * tm >= l, || format!("{name} {t:?} eps {eps}: t_mix {tm} < L/2 = {}", l as f64 / 2.0))?;
            }
            n += 1;
        }
    }
    Ok(format!("{n} kernels, eps in {{0.1, 0.25}}"))
}

// 7 ------------------------------------------------------------------------------------
fn comparison() -> Outcome {
    let mut out = String::new();
    let w = weights((1.0, 2.0, 3.0));
    let (h, hb) = h1_bstar();
    let (g22, b22, _) = smallest(2, 2, 20);
    let (g12, b12, _) = smallest(1, 2, 20);
    let inst = [
        ("H1/b* whole", &h, &hb, whole_block(&h)),
        ("box(1,2) strips", &g12, &b12, strip_blocks(&g12, 2).map_err(err)?),
        ("box(2,2) strips", &g22, &b22, strip_blocks(&g22, 2).map_err(err)?),
    ];
    for (name, g, b, blocks) in inst {
        let sp = enumerate_states(g, b).map_err(err)?;
        let (p, pi) = dense_pi(g, &w, &sp);
        let bk = BlockKernel::new(g, w, b.clone(), blocks, CouplingStyle::Sequential);
        let pb = to_matrix(&block_matrix::<f64>(&bk, &sp).map_err(err)?);
        let n = sp.len();
        let paths: Vec<Result<Vec<((usize, usize), Vec<usize>)>, String>> = map_range(Exec::default(), n, |x| {
            let mut v = Vec::new();
            for y in 0..n {
                if x == y || pb[(x, y)] <= 0.0 {
                    continue;
                }
                let moves = dimer::build_path(g, &sp.states[x], &sp.states[y]).map_err(err)?;
                let mut cur = sp.states[x].clone();
                let mut idx = vec![x];
                for m in moves {
                    cur = apply_move(g, &cur, m).map_err(err)?;
                    idx.push(sp.index_of(&cur).ok_or("path leaves the space")?);
                }
                v.push(((x, y), idx));
            }
            Ok(v)
        });
        let mut fam = PathFamily::default();
        for p in paths {
            fam.paths.extend(p?);
        }
        let bcong = congestion_ratio(&p, &pi, &pb, &pi, &fam).map_err(err)?;
        let gs = spectral_gap(&p, &pi).map_err(err)?.gamma;
        let gb = spectral_gap(&pb, &pi).map_err(err)?.gamma;
        ensure(gb > 0.0, || format!("{name}: block dynamics has zero gap"))?;
        ensure(gb <= bcong * gs + 1e-9, || format!("{name}: gamma_block {gb} > B {bcong} x gamma {gs}"))?;
        let _ = write!(out, "{name}: gamma_block {gb:.4e} <= B*gamma {:.4e} (slack x{:.1}); ", bcong * gs, bcong * gs / gb);
    }
    Ok(out.trim_end_matches("; ").to_string())
}

// 9 ------------------------------------------------------------------------------------
fn coupling() -> Outcome {
    let w = weights((1.0, 2.0, 3.0));
    let mut pairs_checked = 0;
    for (g, b) in [h1_bstar(), seeded(1, 2, 0)] {
        let sp = enumerate_states(&g, &b).map_err(err)?;
        ensure(sp.len() <= 500, || "instance too large".into())?;
        for style in [CouplingStyle::Sequential, CouplingStyle::Whole] {
            let bk = BlockKernel::new(&g, w, b.clone(), strip_blocks(&g, 2).map_err(err)?, style);
            let pb = block_matrix::<f64>(&bk, &sp).map_err(err)?;
            let n = sp.len();
            let res: Vec<Result<usize, String>> = map_range(Exec::default(), n, |i| {
                for j in i + 1..n {
                    let law = coupled_step_law(&bk, &sp.states[i], &sp.states[j]).map_err(err)?;
                    let mut mx = vec![0.0; n];
                    let mut my = vec![0.0; n];
                    for (x, y, p) in &law {
                        mx[sp.index_of(x).ok_or("off space")?] += p;
                        my[sp.index_of(y).ok_or("off space")?] += p;
                    }
                    for z in 0..n {
                        if (mx[z] - pb[i][z]).abs() > 1e-12 || (my[z] - pb[j][z]).abs() > 1e-12 {
                            return Err(format!("{style:?}: marginal mismatch for pair ({i},{j}) at {z}"));
                        }
                    }
                }
                Ok(n - i - 1)
            });
            for r in res {
                pairs_checked += r?;
            }
        }
    }
    let (g, b, sp) = smallest(1, 2, 40);
    let bk = BlockKernel::new(&g, w, b.clone(), strip_blocks(&g, 2).map_err(err)?, CouplingStyle::Sequential);
    let n = sp.len();
    let pairs: Vec<(Configuration, Configuration)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| (sp.states[i].clone(), sp.states[j].clone())).collect();
    let rep = blocks::contraction_estimate(&bk, &pairs, 2024, 10_000, Exec::default()).map_err(err)?;
    let pi = measure(&g, &w, &sp).map_err(err)?;
    let gstar = spectral_gap(&to_matrix(&block_matrix::<f64>(&bk, &sp).map_err(err)?), &pi).map_err(err)?.gamma_star;
    let bound = 1.0 - rep.worst_ratio - 3.0 * rep.worst_stderr;
    ensure(gstar >= bound, || format!("gamma* {gstar} < 1 - theta - 3se = {bound}"))?;
    Ok(format!(
        "{pairs_checked} coupled pairs with exact marginals; strip |Omega|={n}: theta^={:.4} (se {:.1e}), gamma*={gstar:.4} >= {bound:.4}",
        rep.worst_ratio, rep.worst_stderr
    ))
}

// 10 -----------------------------------------------------------------------------------
fn potential() -> Outcome {
    let mut r = rng::from_seed(10);
    for i in 0..100 {
        let w = Weights::new(
            r.gen_range(1..=64) as f64 / 8.0,
            r.gen_range(1..=64) as f64 / 8.0,
            r.gen_range(1..=64) as f64 / 8.0,
        )
        .map_err(err)?;
        ensure(potential_identity_holds::<BigRational>(&w), || format!("identity fails for triple {i}: {w:?}"))?;
    }
    let mut gap = 0.0f64;
    let mut n = 0;
    for (_, g, b) in small_instances() {
        for t in WEIGHTS {
            let gm = gibbs_measure(&g, &weights(t), &b).map_err(err)?;
            gap = gap.max(gm.max_gap);
            n += 1;
        }
    }
    Ok(format!("100 random triples x 8 patterns exact; {n} Gibbs measures, max gap {gap:.1e}"))
}

// 11 -----------------------------------------------------------------------------------
fn pfaffian_oracle() -> Outcome {
    let mut matched = 0;
    let mut nonzero = 0;
    for i in 0..50u64 {
        let nv = 4 + (i as usize % 13);
        let pg = random_planar(1000 + i, nv);
        pg.validate().map_err(|e| format!("corpus graph {i}: {e}"))?;
        let brute: BigRational = pg.brute_force_count();
        let pf: BigRational = count_matchings(&pg).map_err(err)?;
        ensure(brute == pf, || format!("graph {i}: Pfaffian {pf} != brute force {brute}"))?;
        let orient = kasteleyn_orientation(&pg).map_err(err)?;
        let m = pg.skew_matrix::<BigRational>(&orient);
        let p = pfaffian::pfaffian(m.clone());
        ensure(p.clone() * p == determinant(m), || format!("graph {i}: Pf^2 != det"))?;
        matched += 1;
        if !brute.is_zero() {
            nonzero += 1;
        }
    }
    let g = build_box(2, 2).map_err(err)?;
    let w = weights((1.0, 2.0, 3.0));
    let delta: Vec<usize> = g.faces[0].edges.iter().map(|e| e.unwrap()).collect();
    let mut worst = 0.0f64;
    for s in 0..20 {
        let (_, b) = seeded(2, 2, 500 + s);
        let law = boundary_marginal(&g, &w, &b, &delta).map_err(err)?;
        let sp = enumerate_states(&g, &b).map_err(err)?;
        let pi = measure(&g, &w, &sp).map_err(err)?;
        let mut en = vec![0.0; 1 << delta.len()];
        for (st, p) in sp.states.iter().zip(&pi) {
            let idx = delta.iter().enumerate().fold(0, |a, (i, &e)| a | (st.get(e) as usize) << i);
            en[idx] += p;
        }
        for (a, b) in law.iter().zip(&en) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("boundary marginal off by {worst:e}"))?;
    Ok(format!("{matched} planar graphs exact ({nonzero} with matchings), Pf^2 = det on all; 20 boundary marginals within {worst:.1e}"))
}

// 12 -----------------------------------------------------------------------------------
fn saw() -> Outcome {
    let t0 = Instant::now();
    let c = saw_counts(8, SAW_GUARD, Exec::default()).map_err(err)?;
    ensure(c[0] == 16, || format!("nu_1 = {}", c[0]))?;
    let mut brute = 0u64;
    for a in SAW_OFFSETS {
        for b in SAW_OFFSETS {
            let end = (a.0 + b.0, a.1 + b.1);
            if end != (0, 0) && end != a {
                brute += 1;
            }
        }
    }
    ensure(c[1] == brute && brute == 240, || format!("nu_2 = {}, brute force {brute}", c[1]))?;
    for j in 1..=8 {
        for k in 1..=8 - j {
            if j + k <= 8 {
                ensure(c[j + k - 1] <= c[j - 1] * c[k - 1], || format!("nu_{} > nu_{j} nu_{k}", j + k))?;
            }
        }
    }
    let el = t0.elapsed();
    ensure(el < Duration::from_secs(60), || format!("took {el:?}"))?;
    let (lo, hi) = connective_estimate(&c);
    Ok(format!("nu = {c:?}; anchors ({lo:.3}, {hi:.3}); {el:.2?}"))
}

// 13 -----------------------------------------------------------------------------------
fn condition_f() -> Outcome {
    let c = saw_counts(8, SAW_GUARD, Exec::default()).map_err(err)?;
    let nu_hat = connective_estimate(&c).1;
    let eps = 1.0 / nu_hat;
    let mut out = String::new();
    for t in [(1.0, 1.0, 1.0), (9.0, 1.0, 1.0)] {
        let w = weights(t);
        let d = condition_F(1, &w, eps, &FOptions { route: FRoute::Direct, ..Default::default() }).map_err(err)?;
        let p = condition_F(1, &w, eps, &FOptions { route: FRoute::Pfaffian, ..Default::default() }).map_err(err)?;
        let diff = (d.value - p.value).abs();
        ensure(diff <= 1e-9, || format!("{t:?}: routes differ by {diff:e}"))?;
        if t.0 == 9.0 {
            ensure(d.value >= eps, || format!("(9,1,1): value {} below 1/nu^ = {eps}", d.value))?;
        }
        let _ = write!(out, "{t:?}: F value {:.6} (routes agree to {diff:.0e}), holds at 1/nu^={eps:.4}: {}; ", d.value, d.holds);
    }
    Ok(out.trim_end_matches("; ").to_string())
}

// 14 -----------------------------------------------------------------------------------
fn sampler() -> Outcome {
    let (h, hb) = h1_bstar();
    let w = weights((1.0, 2.0, 3.0));
    let hsp = enumerate_states(&h, &hb).map_err(err)?;
    let (g, b, sp) = smallest(1, 2, 20);
    ensure(sp.len() <= 200, || "instance too large".into())?;
    let pi = measure(&g, &w, &sp).map_err(err)?;
    let k = TransitionKernel::new(&g, w, b.clone()).map_err(err)?;
    let mut r = rng::from_seed(14);
    let traj = chain::trajectory(&k, &sp, &sp.states[0], 1_000_000, &mut r).map_err(err)?;
    let mut freq = vec![0.0; sp.len()];
    for &i in &traj[1..] {
        freq[i] += 1.0 / 1e6;
    }
    let d = analysis::tv(&freq, &pi).map_err(err)?;
    ensure(d <= 0.05, || format!("empirical tv {d}"))?;
    let hk = TransitionKernel::new(&h, w, hb.clone()).map_err(err)?;
    let p = transition_matrix::<f64>(&hk, &hsp).map_err(err)?;
    let x = 0;
    let trials = 1_000_000usize;
    let mut counts = vec![0usize; hsp.len()];
    let mut r2 = rng::stream(14, 1);
    for _ in 0..trials {
        let y = step(&hk, &hsp.states[x], &mut r2);
        counts[hsp.index_of(&y).unwrap()] += 1;
    }
    let mut worst = 0.0f64;
    for y in 0..hsp.len() {
        let q = p[x][y];
        let f = counts[y] as f64 / trials as f64;
        if q == 0.0 {
            ensure(counts[y] == 0, || format!("step to {y} has probability 0"))?;
            continue;
        }
        let se = (q * (1.0 - q) / trials as f64).sqrt();
        worst = worst.max((f - q).abs() / se);
    }
    ensure(worst <= 3.0, || format!("one-step frequency off by {worst:.2} standard errors"))?;
    Ok(format!("box(1,2) |Omega|={}: tv after 1e6 steps {d:.4}; H1/b* one-step row within {worst:.2} se", sp.len()))
}

// 15 -----------------------------------------------------------------------------------
const PROBE_STATE_GUARD: usize = 2000;

fn scaling_probe() -> Outcome {
    let w = Weights::uniform();
    let mut csv = String::from("n,states,t_mix\n");
    let mut pts = Vec::new();
    for n in 2..=5u32 {
        let g = build_box(1, n).map_err(err)?;
        let b = BoundaryCondition::new((0..g.boundary.len()).map(|i| i % 2 == 0).collect());
        ensure(is_admissible(&g, &b), || "alternating boundary inadmissible".into())?;
        match enumerate_states(&g, &b) {
            Ok(sp) if sp.len() <= PROBE_STATE_GUARD => {
                let (p, pi) = dense_pi(&g, &w, &sp);
                let tm = mixing_time(&p, &pi, 0.25).map_err(err)?;
                let _ = writeln!(csv, "{n},{},{tm}", sp.len());
                pts.push(((n as f64).ln(), (tm as f64).ln()));
            }
            Ok(sp) => {
                let _ = writeln!(csv, "{n},{},guard", sp.len());
            }
            Err(_) => {
                let _ = writeln!(csv, "{n},guard,guard");
            }
        }
    }
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR"));
    std::fs::write(dir.join("scaling_probe.csv"), &csv).map_err(err)?;
    let slope = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / m, sy / m);
        let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        format!("{:.2}", num / den)
    } else {
        "n/a".into()
    };
    Ok(format!("informational; exponent {slope}; csv: {}", csv.trim().replace('\n', " | ")))
}

fn main() {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [(u32, &str, fn() -> Outcome); 15] = [
        (1, "detailed balance (exact)", detailed_balance),
        (2, "laziness and spectrum", laziness_spectrum),
        (3, "irreducibility audit", irreducibility),
        (4, "path algorithm", path_algorithm),
        (5, "one-move cycle characterization", cycle_characterization),
        (6, "mixing sandwich", sandwich),
        (7, "comparison inequality", comparison),
        (8, "diameter bound", diameter_bound),
        (9, "coupling marginals and contraction", coupling),
        (10, "potential identity and Gibbs measure", potential),
        (11, "Pfaffian oracle", pfaffian_oracle),
        (12, "self-avoiding walks", saw),
        (13, "condition F(1, eps), two routes", condition_f),
        (14, "sampler correctness", sampler),
        (15, "scaling probe", scaling_probe),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        if let Some(fl) = &filter {
            if !name.contains(fl.as_str()) && fl != &id.to_string() {
                continue;
            }
        }
        let t0 = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let el = t0.elapsed();
        match res {
            Ok(msg) => println!("PASS {id:>2} {name} [{el:.1?}]: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {id:>2} {name} [{el:.1?}]: {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
