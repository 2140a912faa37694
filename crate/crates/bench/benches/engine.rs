use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nocgate::config::{RunMode, SimConfig};
use nocgate::engine::{run, CellKey};
use nocgate::{Pattern, Policy};

fn bench_cycles(c: &mut Criterion) {
    let mut group = c.benchmark_group("engine_10k_cycles_8x8");
    group.sample_size(10);
    for policy in [Policy::NoPg, Policy::TootCoarse, Policy::CafeenFull] {
        for pir in [0.01, 0.2] {
            let mut cfg = SimConfig::default();
            cfg.run.mode = RunMode::Cycles;
            cfg.run.max_cycles = 10_000;
            let key = CellKey {
                policy,
                pattern: Pattern::UniformRandom,
                pir,
            };
            group.bench_with_input(
                BenchmarkId::from_parameter(format!("{policy}_pir{pir}")),
                &key,
                |b, &key| b.iter(|| run(&cfg, key).unwrap().metrics.cycles),
            );
        }
    }
    group.finish();
}

fn bench_routing(c: &mut Criterion) {
    use nocgate::topology::{path, MeshConfig, RouteAction};
    let mesh = MeshConfig::new(8, 8).unwrap();
    c.bench_function("path_all_pairs_8x8", |b| {
        b.iter(|| {
            let mut hops = 0usize;
            for s in 0..mesh.nodes() {
                for d in 0..mesh.nodes() {
                    if s == d {
                        continue;
                    }
                    hops += path(mesh.coord(s), mesh.coord(d), RouteAction::Xy)
                        .unwrap()
                        .len();
                }
            }
            std::hint::black_box(hops)
        })
    });
}

criterion_group!(benches, bench_cycles, bench_routing);
criterion_main!(benches);
