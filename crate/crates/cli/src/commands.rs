use crate::report::{emit, render, spec_value, Output};
use crate::setup::{self, Instance};
use crate::{BlockArgs, ChainArg, Cli, Command, CouplingArg, ModeArg, RouteArg};
use nalgebra::DMatrix;
use num_rational::BigRational;
use onetwo::analysis::{
    self, congestion_ratio, d_curve, detailed_balance_exact, diameter, mixing_time, relaxation_bounds,
    reversibility_residual, spectral_gap, support_components, to_matrix, PathFamily,
};
use onetwo::blocks::{block_matrix, block_step, contraction_estimate, contraction_exact, BlockKernel, CouplingStyle};
use onetwo::chain::{self, transition_matrix, TransitionKernel};
use onetwo::dimer::{apply_move, build_path};
use onetwo::model::{config_weight, first_state, measure, measure_s, partition_function_s, Configuration, StateSpace, Weights};
use onetwo::pfaffian::{count_matchings, determinant, is_clockwise_odd, kasteleyn_orientation, pfaffian, PlainGraph};
use onetwo::spatial::{condition_F, connective_estimate, saw_counts, FOptions, FRoute};
use onetwo::{par, rng, Error, Result};
use rand::seq::index::sample;
use serde_json::{json, Value};
use std::fmt::Write as _;

/// Result of a command: JSON payload, extra spec inputs, CSV files and the check outcome.
pub struct Outcome {
    pub result: Value,
    pub inputs: Value,
    pub csv: Vec<(String, String)>,
    pub ok: bool,
}

impl Outcome {
    pub fn new(result: Value, inputs: Value) -> Self {
        Outcome { result, inputs, csv: Vec::new(), ok: true }
    }
}

pub fn run(cli: &Cli) -> Result<bool> {
    let out = match &cli.command {
        Command::Enumerate { list } => enumerate(cli, *list)?,
        Command::Sample { steps, chain, block, every } => sample_cmd(cli, *steps, *chain, block, *every)?,
        Command::Tmix { eps, chain, block, curve } => tmix(cli, *eps, *chain, block, *curve)?,
        Command::Gap { chain, block } => gap(cli, *chain, block)?,
        Command::Compare { block } => compare(cli, block)?,
        Command::Couple { block, coupling, pairs, trials } => couple(cli, block, *coupling, *pairs, *trials)?,
        Command::CheckF { n, a, b, c, epsilon, route, max_n } => check_f(cli, *n, (*a, *b, *c), *epsilon, *route, *max_n)?,
        Command::Saw { kmax, guard } => saw(cli, *kmax, *guard)?,
        Command::Pfaffian { graph, brute } => pfaffian_cmd(cli, graph, *brute)?,
        Command::Validate => crate::validate::run(cli)?,
    };
    let spec = spec_value(cli, out.inputs.clone());
    let json = render(cli, &spec, &out.result);
    emit(cli, &Output { json, csv: out.csv }).map_err(|e| Error::Argument(format!("writing output: {e}")))?;
    Ok(out.ok)
}

fn inst_inputs(inst: &Instance) -> Value {
    json!({ "boundary_states": inst.b.states })
}

fn rational(mode: ModeArg) -> bool {
    mode == ModeArg::Rational
}

fn present_internal(inst: &Instance, s: &Configuration) -> Vec<usize> {
    inst.g.internal.iter().copied().filter(|&e| s.get(e)).collect()
}

fn enumerate(cli: &Cli, list: bool) -> Result<Outcome> {
    let gl = &cli.global;
    let inst = setup::instance(gl)?;
    let sp = setup::space(gl, &inst)?;
    let (z, probs): (String, Vec<String>) = if rational(gl.mode) {
        let z = partition_function_s::<BigRational>(&inst.g, &inst.w, &sp)?;
        let pi = measure_s::<BigRational>(&inst.g, &inst.w, &sp)?;
        (z.to_string(), pi.iter().map(|x| x.to_string()).collect())
    } else {
        let z = partition_function_s::<f64>(&inst.g, &inst.w, &sp)?;
        (format!("{z:e}"), measure(&inst.g, &inst.w, &sp)?.iter().map(|x| format!("{x:e}")).collect())
    };
    eprintln!("{} states, Z = {z}", sp.len());
    let mut csv = String::from("index,probability,present_internal_edges\n");
    for (i, s) in sp.states.iter().enumerate() {
        let es: Vec<String> = present_internal(&inst, s).iter().map(|e| e.to_string()).collect();
        let _ = writeln!(csv, "{i},{},{}", probs[i], es.join(" "));
    }
    let mut result = json!({
        "states": sp.len(),
        "partition_function": z,
        "internal_edges": inst.g.internal.len(),
        "boundary_edges": inst.g.boundary,
        "boundary_present": inst.b.present_edges(&inst.g),
    });
    if list {
        result["list"] = sp
            .states
            .iter()
            .zip(&probs)
            .map(|(s, p)| json!({ "present": present_internal(&inst, s), "probability": p }))
            .collect();
    }
    let mut o = Outcome::new(result, inst_inputs(&inst));
    o.csv.push(("states.csv".into(), csv));
    Ok(o)
}

fn sample_cmd(cli: &Cli, steps: usize, kind: ChainArg, block: &BlockArgs, every: usize) -> Result<Outcome> {
    let gl = &cli.global;
    let inst = setup::instance(gl)?;
    let start = first_state(&inst.g, &inst.b).ok_or(Error::Inadmissible)?;
    let mut r = rng::stream(gl.seed, 1);
    let every = every.max(1);
    let tk = TransitionKernel::new(&inst.g, inst.w, inst.b.clone())?;
    let bk = match kind {
        ChainArg::Block => Some(BlockKernel::new(&inst.g, inst.w, inst.b.clone(), setup::blocks(&inst.g, block)?, CouplingStyle::Sequential)),
        ChainArg::Single => None,
    };
    let mut cur = start.clone();
    let mut changes = 0usize;
    let mut occupancy = 0.0;
    let mut csv = String::from("t,present_internal,hamming_from_start,log_weight\n");
    let row = |csv: &mut String, t: usize, s: &Configuration| {
        let lw = config_weight(&inst.g, &inst.w, s).ln();
        let _ = writeln!(csv, "{t},{},{},{lw:.12}", present_internal(&inst, s).len(), s.diff(&start).len());
    };
    row(&mut csv, 0, &cur);
    for t in 1..=steps {
        let next = match &bk {
            Some(k) => block_step(k, &cur, &mut r)?,
            None => chain::step(&tk, &cur, &mut r),
        };
        if next != cur {
            changes += 1;
        }
        cur = next;
        occupancy += present_internal(&inst, &cur).len() as f64;
        if t % every == 0 {
            row(&mut csv, t, &cur);
        }
    }
    let frac = if steps > 0 { occupancy / steps as f64 / inst.g.internal.len().max(1) as f64 } else { 0.0 };
    eprintln!("{steps} steps, {changes} state changes, mean internal occupancy {frac:.4}");
    let result = json!({
        "steps": steps,
        "chain": kind,
        "changes": changes,
        "mean_internal_occupancy": frac,
        "start": present_internal(&inst, &start),
        "final": present_internal(&inst, &cur),
    });
    let mut o = Outcome::new(result, inst_inputs(&inst));
    o.csv.push(("trajectory.csv".into(), csv));
    Ok(o)
}

/// Kernel matrix in floats; in rational mode also the exact detailed-balance verdict.
fn kernel(cli: &Cli, inst: &Instance, sp: &StateSpace, kind: ChainArg, block: &BlockArgs) -> Result<(DMatrix<f64>, Vec<f64>, Option<bool>)> {
    let pi = measure(&inst.g, &inst.w, sp)?;
    let exact = rational(cli.global.mode);
    let (p, db) = match kind {
        ChainArg::Single => {
            let k = TransitionKernel::new(&inst.g, inst.w, inst.b.clone())?;
            if exact {
                let p = transition_matrix::<BigRational>(&k, sp)?;
                let pis = measure_s::<BigRational>(&inst.g, &inst.w, sp)?;
                let db = detailed_balance_exact(&p, &pis);
                (to_matrix(&p), Some(db))
            } else {
                (to_matrix(&transition_matrix::<f64>(&k, sp)?), None)
            }
        }
        ChainArg::Block => {
            let k = BlockKernel::new(&inst.g, inst.w, inst.b.clone(), setup::blocks(&inst.g, block)?, CouplingStyle::Sequential);
            if exact {
                let p = block_matrix::<BigRational>(&k, sp)?;
                let pis = measure_s::<BigRational>(&inst.g, &inst.w, sp)?;
                let db = detailed_balance_exact(&p, &pis);
                (to_matrix(&p), Some(db))
            } else {
                (to_matrix(&block_matrix::<f64>(&k, sp)?), None)
            }
        }
    };
    Ok((p, pi, db))
}

fn chain_label(kind: ChainArg, block: &BlockArgs) -> Value {
    match kind {
        ChainArg::Single => json!({ "chain": "single" }),
        ChainArg::Block => json!({ "chain": "block", "blocks": block.blocks, "l": block.l }),
    }
}

fn tmix(cli: &Cli, eps: f64, kind: ChainArg, block: &BlockArgs, curve: usize) -> Result<Outcome> {
    if !(0.0 < eps && eps < 0.5) {
        return Err(Error::Argument(format!("eps {eps} outside (0, 1/2)")));
    }
    let gl = &cli.global;
    let inst = setup::instance(gl)?;
    let sp = setup::dense_space(gl, &inst)?;
    let (p, pi, db) = kernel(cli, &inst, &sp, kind, block)?;
    let comps = support_components(&p).len();
    if comps > 1 {
        return Err(Error::Reducible(comps));
    }
    let spec = spectral_gap(&p, &pi)?;
    let tm = mixing_time(&p, &pi, eps)?;
    let pi_min = pi.iter().copied().fold(f64::INFINITY, f64::min);
    let (lo, hi) = relaxation_bounds(spec.t_rel(), pi_min, eps);
    let contains = lo <= tm as f64 + 1e-9 && (tm as f64) <= hi.ceil() + 1e-9;
    let diam = diameter(&p);
    let diam_ok = diam.is_none_or(|l| tm as f64 >= l as f64 / 2.0);
    let curve_v = d_curve(&p, &pi, tm.min(curve))?;
    let mut csv = String::from("t,d\n");
    for (t, d) in curve_v.iter().enumerate() {
        let _ = writeln!(csv, "{t},{d:.15e}");
    }
    eprintln!("|Omega| = {}, t_mix({eps}) = {tm}, sandwich [{lo:.3}, {hi:.3}] contains: {contains}", sp.len());
    let ok = contains && diam_ok && db.unwrap_or(true);
    let result = json!({
        "kernel": chain_label(kind, block),
        "states": sp.len(),
        "eps": eps,
        "t_mix": tm,
        "t_rel": spec.t_rel(),
        "gamma": spec.gamma,
        "gamma_star": spec.gamma_star,
        "sandwich": { "lower": lo, "upper": hi, "contains_t_mix": contains },
        "diameter": diam,
        "diameter_bound_holds": diam_ok,
        "detailed_balance_exact": db,
        "reversibility_residual": reversibility_residual(&p, &pi),
        "d_curve_len": curve_v.len(),
    });
    let mut o = Outcome::new(result, inst_inputs(&inst));
    o.csv.push(("d_curve.csv".into(), csv));
    o.ok = ok;
    Ok(o)
}

fn gap(cli: &Cli, kind: ChainArg, block: &BlockArgs) -> Result<Outcome> {
    let gl = &cli.global;
    let inst = setup::instance(gl)?;
    let sp = setup::dense_space(gl, &inst)?;
    let (p, pi, db) = kernel(cli, &inst, &sp, kind, block)?;
    let spec = spectral_gap(&p, &pi)?;
    let min_ev = spec.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    eprintln!("|Omega| = {}, gap {:.6e}, t_rel {:.4}", sp.len(), spec.gamma, spec.t_rel());
    let result = json!({
        "kernel": chain_label(kind, block),
        "states": sp.len(),
        "gamma": spec.gamma,
        "gamma_star": spec.gamma_star,
        "t_rel": spec.t_rel(),
        "min_eigenvalue": min_ev,
        "components": support_components(&p).len(),
        "detailed_balance_exact": db,
    });
    let mut o = Outcome::new(result, inst_inputs(&inst));
    o.ok = db.unwrap_or(true) && min_ev >= -1e-10;
    Ok(o)
}

fn compare(cli: &Cli, block: &BlockArgs) -> Result<Outcome> {
    let gl = &cli.global;
    let inst = setup::instance(gl)?;
    let sp = setup::dense_space(gl, &inst)?;
    let (p, pi, _) = kernel(cli, &inst, &sp, ChainArg::Single, block)?;
    let (pb, _, _) = kernel(cli, &inst, &sp, ChainArg::Block, block)?;
    let n = sp.len();
    let g = &inst.g;
    let paths: Vec<Result<Vec<((usize, usize), Vec<usize>)>>> = par::map_range(setup::exec(gl), n, |x| {
        let mut v = Vec::new();
        for y in 0..n {
            if x == y || pb[(x, y)] <= 0.0 {
                continue;
            }
            let mut cur = sp.states[x].clone();
            let mut idx = vec![x];
            for m in build_path(g, &sp.states[x], &sp.states[y])? {
                cur = apply_move(g, &cur, m)?;
                idx.push(sp.index_of(&cur).ok_or_else(|| Error::Mismatch("path leaves the space".into()))?);
            }
            v.push(((x, y), idx));
        }
        Ok(v)
    });
    let mut fam = PathFamily::default();
    for ps in paths {
        fam.paths.extend(ps?);
    }
    let longest = fam.paths.iter().map(|(_, p)| p.len() - 1).max().unwrap_or(0);
    let b = congestion_ratio(&p, &pi, &pb, &pi, &fam)?;
    let gs = spectral_gap(&p, &pi)?.gamma;
    let gb = spectral_gap(&pb, &pi)?.gamma;
    let holds = gb <= b * gs * (1.0 + 1e-9) + 1e-12;
    eprintln!("gamma_block {gb:.6e} <= B {b:.4} x gamma {gs:.6e}: {holds}");
    let result = json!({
        "states": n,
        "blocks": block.blocks,
        "l": block.l,
        "paths": fam.paths.len(),
        "longest_path": longest,
        "congestion_b": b,
        "gamma_single": gs,
        "gamma_block": gb,
        "holds": holds,
    });
    let mut o = Outcome::new(result, inst_inputs(&inst));
    o.ok = holds;
    Ok(o)
}

fn couple(cli: &Cli, block: &BlockArgs, coupling: CouplingArg, pairs: usize, trials: usize) -> Result<Outcome> {
    let gl = &cli.global;
    let inst = setup::instance(gl)?;
    let sp = setup::space(gl, &inst)?;
    if sp.len() < 2 {
        return Err(Error::Argument("need at least two states to couple".into()));
    }
    let style = match coupling {
        CouplingArg::Sequential => CouplingStyle::Sequential,
        CouplingArg::Whole => CouplingStyle::Whole,
    };
    let k = BlockKernel::new(&inst.g, inst.w, inst.b.clone(), setup::blocks(&inst.g, block)?, style);
    let mut r = rng::stream(gl.seed, 1);
    let chosen: Vec<(Configuration, Configuration)> = (0..pairs)
        .map(|_| {
            let ij = sample(&mut r, sp.len(), 2);
            (sp.states[ij.index(0)].clone(), sp.states[ij.index(1)].clone())
        })
        .collect();
    let rep = contraction_estimate(&k, &chosen, gl.seed, trials, setup::exec(gl))?;
    let exact: Vec<f64> = chosen.iter().map(|(s, t)| contraction_exact(&k, s, t)).collect::<Result<_>>()?;
    let exact_max = exact.iter().copied().fold(0.0, f64::max);
    let certified = rep.worst_ratio + 3.0 * rep.worst_stderr < 1.0;
    let gap_bound = if certified { analysis::contraction_gap_bound(rep.worst_ratio).ok() } else { None };
    eprintln!(
        "{} pairs x {trials} trials: mean ratio {:.4}, worst {:.4} (se {:.2e}), exact worst {exact_max:.4}",
        rep.pairs, rep.mean_ratio, rep.worst_ratio, rep.worst_stderr
    );
    let result = json!({
        "states": sp.len(),
        "coupling": coupling,
        "blocks": block.blocks,
        "l": block.l,
        "estimate": rep,
        "exact_ratios": exact,
        "exact_worst": exact_max,
        "contracts": certified,
        "gap_lower_bound": gap_bound,
    });
    Ok(Outcome::new(result, inst_inputs(&inst)))
}

fn check_f(cli: &Cli, n: u32, abc: (Option<f64>, Option<f64>, Option<f64>), eps: f64, route: RouteArg, max_n: u32) -> Result<Outcome> {
    let base = Weights::parse(&cli.global.weights)?;
    let w = Weights::new(abc.0.unwrap_or(base.a), abc.1.unwrap_or(base.b), abc.2.unwrap_or(base.c))?;
    let opts = FOptions {
        route: match route {
            RouteArg::Direct => FRoute::Direct,
            RouteArg::Pfaffian => FRoute::Pfaffian,
        },
        exec: setup::exec(&cli.global),
        max_n,
        ..FOptions::default()
    };
    let rep = condition_F(n, &w, eps, &opts)?;
    eprintln!("F({n}, {eps:.6}) for ({}, {}, {}): value {:.6}, holds: {}", w.a, w.b, w.c, rep.value, rep.holds);
    let result = json!({
        "value": rep.value,
        "threshold": rep.threshold,
        "holds": rep.holds,
        "argmax_pair": rep.argmax_pair,
        "report": rep,
    });
    Ok(Outcome::new(result, json!({ "weights": w })))
}

fn saw(cli: &Cli, kmax: usize, guard: usize) -> Result<Outcome> {
    let counts = saw_counts(kmax, guard, setup::exec(&cli.global))?;
    let (lower, upper) = connective_estimate(&counts);
    let roots: Vec<f64> = counts.iter().enumerate().map(|(i, &c)| (c as f64).powf(1.0 / (i + 1) as f64)).collect();
    let submult = (1..=kmax).all(|j| (1..=kmax - j).all(|k| counts[j + k - 1] as u128 <= counts[j - 1] as u128 * counts[k - 1] as u128));
    eprintln!("nu = {counts:?}; anchors ({lower:.4}, {upper:.4})");
    let result = json!({
        "kmax": kmax,
        "counts": counts,
        "roots": roots,
        "lower_anchor": lower,
        "upper_anchor": upper,
        "threshold": 1.0 / upper,
        "epsilon_preset": onetwo::spatial::EPSILON_PRESET,
        "submultiplicative": submult,
    });
    let mut o = Outcome::new(result, Value::Null);
    o.ok = submult;
    Ok(o)
}

fn pfaffian_cmd(cli: &Cli, path: &std::path::Path, brute: bool) -> Result<Outcome> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Argument(format!("{}: {e}", path.display())))?;
    let pg: PlainGraph = serde_json::from_str(&text).map_err(|e| Error::Argument(format!("{}: {e}", path.display())))?;
    pg.validate()?;
    let orient = kasteleyn_orientation(&pg)?;
    let odd = is_clockwise_odd(&pg, &orient);
    if brute && pg.n() > 24 {
        return Err(Error::Guard(format!("brute force on {} vertices exceeds 24", pg.n())));
    }
    let (count, pf_det, brute_v, agree): (String, bool, Option<String>, Option<bool>) = if rational(cli.global.mode) {
        let a = pg.skew_matrix::<BigRational>(&orient);
        let pf = pfaffian(a.clone());
        let ok = pf.clone() * pf == determinant(a);
        let c = count_matchings::<BigRational>(&pg)?;
        let b = brute.then(|| pg.brute_force_count::<BigRational>());
        let agree = b.as_ref().map(|b| *b == c);
        (c.to_string(), ok, b.map(|b| b.to_string()), agree)
    } else {
        let a = pg.skew_matrix::<f64>(&orient);
        let pf = pfaffian(a.clone());
        let det = determinant(a);
        let ok = (pf * pf - det).abs() <= 1e-9 * det.abs().max(1.0);
        let c = count_matchings::<f64>(&pg)?;
        let b = brute.then(|| pg.brute_force_count::<f64>());
        let agree = b.map(|b| (b - c).abs() <= 1e-9 * b.abs().max(1.0));
        (format!("{c:e}"), ok, b.map(|b| format!("{b:e}")), agree)
    };
    eprintln!("{} vertices, {} edges: matchings {count}", pg.n(), pg.edges.len());
    let result = json!({
        "vertices": pg.n(),
        "edges": pg.edges.len(),
        "count": count,
        "clockwise_odd": odd,
        "pf_squared_equals_det": pf_det,
        "brute_force": brute_v,
        "brute_force_agrees": agree,
    });
    let mut o = Outcome::new(result, json!({ "graph": pg }));
    o.ok = odd && pf_det && agree.unwrap_or(true);
    Ok(o)
}
