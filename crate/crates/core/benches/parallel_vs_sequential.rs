use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use aerolift_core::pipeline::{fit_tracks, lift_scene, track_clusters, viewpoint_reports, PipelineConfig};
use aerolift_core::synthgen::{animal_boxes, camera_poses, generate_scene, intrinsics, render_frame, Preset};
use aerolift_core::Execution;

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn render(c: &mut Criterion) {
    let config = Preset::Herd.config();
    let boxes = animal_boxes(&config);
    let poses = camera_poses(&config).unwrap();
    let k = intrinsics(&config);
    let mut group = c.benchmark_group("render_frame");
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| render_frame(&boxes[0], &poses[0], &k, config.noise_sigma, 7, exec))
        });
    }
    group.finish();
}

fn stages(c: &mut Criterion) {
    let config = PipelineConfig::default();
    let (bundle, _) = generate_scene(&Preset::Herd.config(), 7, Execution::default()).unwrap();
    let clusters = lift_scene(&bundle, &config.lift, Execution::default()).unwrap();
    let tracks = track_clusters(&clusters, &config.tracker, bundle.meta.scale_hint).unwrap();
    let store = fit_tracks(&bundle, &tracks.records, &config, true, Execution::default()).unwrap();

    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::new("lift", name), |b| b.iter(|| lift_scene(&bundle, &config.lift, exec).unwrap()));
        group.bench_function(BenchmarkId::new("fit", name), |b| {
            b.iter(|| fit_tracks(&bundle, &tracks.records, &config, true, exec).unwrap())
        });
        group.bench_function(BenchmarkId::new("viewpoint", name), |b| {
            b.iter(|| viewpoint_reports(&bundle, &store, &config.quality, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, render, stages);
criterion_main!(benches);
