use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use evblob::bench::{bench_scenario, bench_tracker};
use evblob::par::Parallelism;
use evblob::synth::generate;

const EVENTS: u64 = 200_000;

fn modes() -> Vec<Parallelism> {
    if Parallelism::available().is_parallel() {
        vec![Parallelism::Sequential, Parallelism::Rayon]
    } else {
        vec![Parallelism::Sequential]
    }
}

fn synth(c: &mut Criterion) {
    let scenario = bench_scenario(EVENTS, 1);
    let mut g = c.benchmark_group("generate");
    g.sample_size(20).throughput(Throughput::Elements(EVENTS));
    for par in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{par:?}")), &par, |b, &par| {
            b.iter(|| generate(&scenario, par).unwrap().events.len())
        });
    }
    g.finish();
}

fn track(c: &mut Criterion) {
    let scenario = bench_scenario(EVENTS, 2);
    let events = generate(&scenario, Parallelism::default()).unwrap().events;
    let mut g = c.benchmark_group("track");
    g.sample_size(20).throughput(Throughput::Elements(events.len() as u64));
    g.bench_function("sequential", |b| {
        b.iter(|| {
            let mut tracker = bench_tracker(&scenario).unwrap();
            for e in &events {
                black_box(tracker.process_event(e).unwrap());
            }
            tracker.counters().matched
        })
    });
    g.finish();
}

fn end_to_end(c: &mut Criterion) {
    let scenario = bench_scenario(EVENTS, 3);
    let mut g = c.benchmark_group("generate_and_track");
    g.sample_size(10).throughput(Throughput::Elements(EVENTS));
    for par in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{par:?}")), &par, |b, &par| {
            b.iter(|| {
                let events = generate(&scenario, par).unwrap().events;
                let mut tracker = bench_tracker(&scenario).unwrap();
                for e in &events {
                    black_box(tracker.process_event(e).unwrap());
                }
                tracker.counters().matched
            })
        });
    }
    g.finish();
}

criterion_group!(benches, synth, track, end_to_end);
criterion_main!(benches);
