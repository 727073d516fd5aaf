use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pun_bench::{candidates, history, DistancePredictor};
use pun_core::avs::{interpolate, run_episode, select_next, AggregatePolicy, CandidateSet, EpisodeConfig, FilterPolicy};
use pun_core::sim::mesh::procedural;
use pun_core::sim::{make_umap, SimConfig};
use pun_core::{UncertaintyKind, Viewpoint};

fn interpolation(c: &mut Criterion) {
    let maps = history(1, 1);
    let dirs: Vec<_> = candidates(512, 2).iter().map(Viewpoint::dir).collect();
    c.bench_function("interpolate_512", |b| {
        b.iter(|| dirs.iter().map(|d| interpolate(&maps[0], d)).sum::<f64>())
    });
}

fn selection_round(c: &mut Criterion) {
    let mut g = c.benchmark_group("selection_round");
    for steps in [1usize, 10, 19] {
        let maps = history(steps, 3);
        let selected: Vec<Viewpoint> = maps.iter().map(|m| *m.source_view()).collect();
        g.bench_with_input(BenchmarkId::from_parameter(steps), &steps, |b, _| {
            b.iter(|| {
                let mut set = CandidateSet::from_history(candidates(512, 4), &maps, AggregatePolicy::ProductAll).unwrap();
                black_box(select_next(&mut set, &selected, FilterPolicy::default(), AggregatePolicy::ProductAll).unwrap())
            })
        });
    }
    g.finish();
}

fn episode(c: &mut Criterion) {
    let sim = SimConfig::default();
    let mut g = c.benchmark_group("episode_budget_20");
    for agg in AggregatePolicy::GRID {
        let cfg = EpisodeConfig { agg, ..EpisodeConfig::default() };
        g.bench_function(agg.to_string(), |b| {
            b.iter(|| run_episode(None, &mut DistancePredictor, "bench", &cfg, &sim).unwrap())
        });
    }
    g.finish();
}

fn simulator(c: &mut Criterion) {
    let mesh = procedural("notched_box").unwrap();
    let sim = SimConfig { resolution: 64, grid_dim: 48, ..SimConfig::default() };
    let view = Viewpoint::new(60.0, 30.0, 2.73).unwrap();
    let mut g = c.benchmark_group("simulator");
    g.sample_size(10);
    g.bench_function("render_64px", |b| b.iter(|| sim.render(&mesh, &view).unwrap()));
    g.bench_function("umap_64px_48grid", |b| b.iter(|| make_umap(&mesh, &view, UncertaintyKind::Psnr, &sim).unwrap()));
    g.finish();
}

criterion_group!(benches, interpolation, selection_round, episode, simulator);
criterion_main!(benches);
