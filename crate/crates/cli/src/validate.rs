use crate::commands::Outcome;
use crate::Cli;
use num_rational::BigRational;
use num_traits::{One, Zero};
use onetwo::analysis::{
    detailed_balance_exact, detailed_balance_sparse, mixing_time, relaxation_bounds, spectral_gap, to_matrix,
};
use onetwo::chain::{transition_matrix, transition_rows, TransitionKernel};
use onetwo::dimer::{build_path_report, distance_cfg, replay, to_bisector};
use onetwo::hexlattice::{build_box, HexGraph};
use onetwo::model::{
    enumerate_states, is_admissible, measure, measure_s, partition_function_s, random_admissible_boundary,
    BoundaryCondition, StateSpace, Weights,
};
use onetwo::pfaffian::pfaffian_partition;
use onetwo::spatial::{gibbs_measure, potential_identity_holds, saw_counts};
use onetwo::{rng, Result};
use rand::Rng;
use serde_json::json;
use std::time::Instant;

type Check = std::result::Result<String, String>;

struct Fixture {
    name: &'static str,
    g: HexGraph,
    spaces: Vec<StateSpace>,
}

fn fixtures(seed: u64) -> Result<Vec<Fixture>> {
    let h = build_box(1, 1)?;
    let spaces = (0..64u32)
        .map(|m| BoundaryCondition::new((0..6).map(|i| m >> i & 1 == 1).collect()))
        .filter(|b| is_admissible(&h, b))
        .map(|b| enumerate_states(&h, &b))
        .collect::<Result<Vec<_>>>()?;
    let g = build_box(2, 2)?;
    let b = random_admissible_boundary(&g, &mut rng::stream(seed, 0));
    let sp = enumerate_states(&g, &b)?;
    Ok(vec![Fixture { name: "H1", g: h, spaces }, Fixture { name: "box(2,2)", g, spaces: vec![sp] }])
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s(e: onetwo::Error) -> String {
    e.to_string()
}

fn components(rows: &[Vec<(usize, f64)>]) -> usize {
    let n = rows.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (x, row) in rows.iter().enumerate() {
        for &(y, v) in row {
            if v > 0.0 {
                let (a, b) = (find(&mut parent, x), find(&mut parent, y));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

fn lattice(f: &Fixture) -> Check {
    f.g.validate().map_err(e2s)?;
    ensure(f.g.faces.iter().all(|fc| fc.edges.iter().all(|e| e.is_some())), || "open region face".into())?;
    Ok(format!("{} vertices, {} edges, {} faces", f.g.n_vertices(), f.g.n_edges(), f.g.faces.len()))
}

fn normalization(f: &Fixture, w: &Weights) -> Check {
    for sp in &f.spaces {
        let pi = measure_s::<BigRational>(&f.g, w, sp).map_err(e2s)?;
        ensure(pi.iter().fold(BigRational::zero(), |a, x| a + x).is_one(), || "measure does not sum to 1".into())?;
    }
    Ok(format!("{} measures sum to 1 exactly", f.spaces.len()))
}

fn balance(f: &Fixture, w: &Weights) -> Check {
    let mut rows = 0;
    for sp in &f.spaces {
        let k = TransitionKernel::new(&f.g, *w, sp.boundary.clone()).map_err(e2s)?;
        let pi = measure_s::<BigRational>(&f.g, w, sp).map_err(e2s)?;
        let p = transition_rows::<BigRational>(&k, sp, onetwo::par::Exec::default()).map_err(e2s)?;
        ensure(detailed_balance_sparse(&p, &pi), || "detailed balance fails".into())?;
        let half = BigRational::new(1.into(), 2.into());
        for (i, row) in p.iter().enumerate() {
            let total = row.iter().fold(BigRational::zero(), |a, (_, x)| a + x);
            ensure(total.is_one(), || format!("row {i} sums to {total}"))?;
            let d = row.iter().find(|(j, _)| *j == i).map(|(_, x)| x.clone()).unwrap_or_else(BigRational::zero);
            ensure(d >= half, || format!("row {i} diagonal {d}"))?;
        }
        let fl: Vec<Vec<(usize, f64)>> =
            transition_rows::<f64>(&k, sp, onetwo::par::Exec::default()).map_err(e2s)?;
        let c = components(&fl);
        ensure(c == 1, || format!("{c} components"))?;
        rows += p.len();
    }
    Ok(format!("{rows} rows exact, lazy, stochastic, irreducible"))
}

fn bisectors(f: &Fixture) -> Check {
    let mut n = 0;
    for sp in &f.spaces {
        for s in &sp.states {
            let a = to_bisector(&f.g, s).map_err(e2s)?;
            let b = to_bisector(&f.g, &s.complement()).map_err(e2s)?;
            ensure(a.sel == b.sel, || "bisectors differ under complement".into())?;
            n += 1;
        }
    }
    Ok(format!("{n} configurations 2-to-1"))
}

fn paths(f: &Fixture, seed: u64) -> Check {
    let mut r = rng::stream(seed, 2);
    let mut n = 0;
    for sp in &f.spaces {
        let m = sp.len();
        let pairs: Vec<(usize, usize)> = if m * m <= 400 {
            (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).collect()
        } else {
            (0..200).map(|_| (r.gen_range(0..m), r.gen_range(0..m))).collect()
        };
        for (i, j) in pairs {
            let (x, y) = (&sp.states[i], &sp.states[j]);
            let rep = build_path_report(&f.g, x, y, Default::default()).map_err(e2s)?;
            ensure(&replay(&f.g, x, &rep.moves).map_err(e2s)? == y, || format!("path {i}->{j} misses"))?;
            let d = distance_cfg(&f.g, x, y).map_err(e2s)?;
            ensure(rep.moves.len() <= d, || format!("path {i}->{j} longer than distance {d}"))?;
            n += 1;
        }
    }
    Ok(format!("{n} paths replayed"))
}

fn gibbs(f: &Fixture, w: &Weights) -> Check {
    let mut gap: f64 = 0.0;
    for sp in &f.spaces {
        gap = gap.max(gibbs_measure(&f.g, w, &sp.boundary).map_err(e2s)?.max_gap);
    }
    Ok(format!("max gap {gap:.1e}"))
}

fn pfaffian(f: &Fixture, w: &Weights) -> Check {
    for sp in &f.spaces {
        let z = partition_function_s::<BigRational>(&f.g, w, sp).map_err(e2s)?;
        let pz = pfaffian_partition::<BigRational>(&f.g, w, &sp.boundary, &[]).map_err(e2s)?;
        ensure(z == pz, || format!("Pfaffian {pz} vs enumeration {z}"))?;
    }
    Ok(format!("{} partition functions exact", f.spaces.len()))
}

fn spectrum(f: &Fixture, w: &Weights) -> Check {
    let mut n = 0;
    for sp in f.spaces.iter().filter(|sp| sp.len() > 1 && sp.len() <= 500) {
        let k = TransitionKernel::new(&f.g, *w, sp.boundary.clone()).map_err(e2s)?;
        let p = transition_matrix::<BigRational>(&k, sp).map_err(e2s)?;
        let pis = measure_s::<BigRational>(&f.g, w, sp).map_err(e2s)?;
        ensure(detailed_balance_exact(&p, &pis), || "dense detailed balance".into())?;
        let pm = to_matrix(&p);
        let pi = measure(&f.g, w, sp).map_err(e2s)?;
        let s = spectral_gap(&pm, &pi).map_err(e2s)?;
        ensure(s.eigenvalues.iter().all(|&l| l >= -1e-10), || "negative eigenvalue".into())?;
        let tm = mixing_time(&pm, &pi, 0.25).map_err(e2s)? as f64;
        let pmin = pi.iter().copied().fold(f64::INFINITY, f64::min);
        let (lo, hi) = relaxation_bounds(s.t_rel(), pmin, 0.25);
        ensure(lo <= tm + 1e-9 && tm <= hi.ceil() + 1e-9, || format!("t_mix {tm} outside [{lo}, {hi}]"))?;
        n += 1;
    }
    Ok(format!("{n} kernels inside the relaxation sandwich"))
}

fn potential(w: &Weights, seed: u64) -> Check {
    let mut r = rng::stream(seed, 3);
    let mut ws = vec![*w];
    for _ in 0..20 {
        ws.push(Weights::new(r.gen_range(1..20) as f64, r.gen_range(1..20) as f64, r.gen_range(1..20) as f64).map_err(e2s)?);
    }
    for x in &ws {
        ensure(potential_identity_holds::<BigRational>(x), || format!("identity fails for {x:?}"))?;
    }
    Ok(format!("{} weight triples exact", ws.len()))
}

fn walks() -> Check {
    let c = saw_counts(5, 5, onetwo::par::Exec::default()).map_err(e2s)?;
    ensure(c[0] == 16 && c[1] == 240, || format!("counts {c:?}"))?;
    for j in 1..=5 {
        for k in 1..=5 - j {
            ensure(c[j + k - 1] <= c[j - 1] * c[k - 1], || format!("nu_{} > nu_{j} nu_{k}", j + k))?;
        }
    }
    Ok(format!("nu = {c:?}"))
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let gl = &cli.global;
    let w = Weights::parse(&gl.weights)?;
    let fx = fixtures(gl.seed)?;
    let mut checks: Vec<(String, Box<dyn Fn() -> Check + '_>)> = Vec::new();
    for f in &fx {
        checks.push((format!("{}: lattice", f.name), Box::new(move || lattice(f))));
        checks.push((format!("{}: measure normalization", f.name), Box::new(move || normalization(f, &w))));
        checks.push((format!("{}: kernel", f.name), Box::new(move || balance(f, &w))));
        checks.push((format!("{}: bisector 2-to-1", f.name), Box::new(move || bisectors(f))));
        checks.push((format!("{}: paths", f.name), Box::new(move || paths(f, gl.seed))));
        checks.push((format!("{}: Gibbs measure", f.name), Box::new(move || gibbs(f, &w))));
        checks.push((format!("{}: Pfaffian partition", f.name), Box::new(move || pfaffian(f, &w))));
        if f.spaces.iter().any(|sp| sp.len() <= 500) {
            checks.push((format!("{}: spectrum", f.name), Box::new(move || spectrum(f, &w))));
        }
    }
    checks.push(("potential identity".into(), Box::new(|| potential(&w, gl.seed))));
    checks.push(("self-avoiding walks".into(), Box::new(walks)));
    let mut out = Vec::new();
    let mut all = true;
    for (name, check) in &checks {
        let t0 = Instant::now();
        let res = check();
        let pass = res.is_ok();
        all &= pass;
        let detail = match res {
            Ok(s) | Err(s) => s,
        };
        eprintln!("{} {name}: {detail} [{:.1?}]", if pass { "PASS" } else { "FAIL" }, t0.elapsed());
        out.push(json!({ "name": name, "pass": pass, "detail": detail }));
    }
    let failed = out.iter().filter(|c| c["pass"] == false).count();
    eprintln!("{} checks, {failed} failed", out.len());
    let result = json!({ "checks": out, "passed": out.len() - failed, "failed": failed });
    let boundary = &fx[1].spaces[0].boundary.states;
    let mut o = Outcome::new(result, json!({ "box22_boundary_states": boundary }));
    o.ok = all;
    Ok(o)
}
