use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use onetwo::blocks::{contraction_estimate, strip_blocks, BlockKernel, CouplingStyle};
use onetwo::chain::{transition_rows, TransitionKernel};
use onetwo::hexlattice::build_box;
use onetwo::model::{enumerate_states, random_admissible_boundary, Weights};
use onetwo::par::Exec;
use onetwo::rng;
use onetwo::spatial::{saw_counts, SAW_GUARD};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn kernel_rows(c: &mut Criterion) {
    let g = build_box(2, 2).unwrap();
    let b = random_admissible_boundary(&g, &mut rng::from_seed(0));
    let sp = enumerate_states(&g, &b).unwrap();
    let k = TransitionKernel::new(&g, Weights::new(1.0, 2.0, 3.0).unwrap(), b).unwrap();
    let mut grp = c.benchmark_group("transition_rows_box22");
    grp.sample_size(10);
    for (name, exec) in MODES {
        grp.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bch, &e| {
            bch.iter(|| transition_rows::<f64>(&k, &sp, e).unwrap())
        });
    }
    grp.finish();
}

fn saw(c: &mut Criterion) {
    let mut grp = c.benchmark_group("saw_counts_k6");
    grp.sample_size(10);
    for (name, exec) in MODES {
        grp.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bch, &e| {
            bch.iter(|| saw_counts(6, SAW_GUARD, e).unwrap())
        });
    }
    grp.finish();
}

fn contraction(c: &mut Criterion) {
    let g = build_box(1, 2).unwrap();
    let b = random_admissible_boundary(&g, &mut rng::from_seed(1));
    let sp = enumerate_states(&g, &b).unwrap();
    let k = BlockKernel::new(&g, Weights::uniform(), b, strip_blocks(&g, 2).unwrap(), CouplingStyle::Sequential);
    let pairs: Vec<_> = (1..sp.len().min(17)).map(|j| (sp.states[0].clone(), sp.states[j].clone())).collect();
    let mut grp = c.benchmark_group("contraction_estimate_box12");
    grp.sample_size(10);
    for (name, exec) in MODES {
        grp.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bch, &e| {
            bch.iter(|| contraction_estimate(&k, &pairs, 7, 200, e).unwrap())
        });
    }
    grp.finish();
}

criterion_group!(benches, kernel_rows, saw, contraction);
criterion_main!(benches);
