use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use pmt_bench::{paired_scores, recorded_log};
use pmt_core::agents::{run_program, PolicyKind};
use pmt_core::analytics::{correlate, normalize_column};
use pmt_core::{replay, ClockConfig, Content, VirtualClock};

fn clock(c: &mut Criterion) {
    c.bench_function("clock/full_day_by_minute", |b| {
        b.iter_batched(
            || VirtualClock::new(ClockConfig::default()).unwrap(),
            |mut clock| {
                let mut events = 0;
                while !clock.is_ended() {
                    events += clock.advance(3_000).len();
                }
                black_box(events)
            },
            BatchSize::SmallInput,
        )
    });
    let clock = VirtualClock::new(ClockConfig::default()).unwrap();
    c.bench_function("clock/to_virtual", |b| b.iter(|| clock.to_virtual(black_box(1_234_567))));
}

fn sessions(c: &mut Criterion) {
    let content = Content::defaults().unwrap();
    let mut group = c.benchmark_group("headless");
    group.sample_size(20);
    group.bench_function("program_perfect", |b| b.iter(|| run_program(&content, PolicyKind::Perfect, black_box(3))));
    let kind = PolicyKind::ClockChecker { check_period: 45 };
    group.bench_function("program_clock_checker", |b| b.iter(|| run_program(&content, kind, black_box(3))));
    let log = recorded_log(&content, 8, 3);
    group.bench_function("replay_session8", |b| b.iter(|| replay(black_box(&log))));
    group.finish();
}

fn stats(c: &mut Criterion) {
    let (x, y) = paired_scores(10);
    c.bench_function("stats/correlate_n10", |b| b.iter(|| correlate(black_box(&x), black_box(&y), 0.95)));
    let durations: Vec<i64> = (0..1000).map(|i| (i * 37) % 900).collect();
    c.bench_function("stats/normalize_1000", |b| b.iter(|| normalize_column(black_box(&durations))));
}

criterion_group!(benches, clock, sessions, stats);
criterion_main!(benches);
