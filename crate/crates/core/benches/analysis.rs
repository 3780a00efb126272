//! Batch analysis throughput: the rayon-backed path (default `parallel`
//! feature) against the always-available sequential reference, plus the
//! mark aggregation hot loop.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use codemine_core::analyzer::{analyze_batch, analyze_batch_sequential};
use codemine_core::squale::{global_mark, SqualeConfig};

/// Deterministic synthetic corpus: branchy c-family functions of varying
/// size.
fn corpus(files: usize) -> Vec<(String, String)> {
    (0..files)
        .map(|i| {
            let mut body = String::new();
            body.push_str(&format!("int work_{i}(int n) {{\n"));
            for j in 0..(i % 17 + 4) {
                body.push_str(&format!(
                    "  if (n > {j}) {{ n = n * {j} + {i}; }} else {{ n = n - {j}; }}\n"
                ));
                body.push_str(&format!("  while (n % {} != 0) {{ n = n + 1; }}\n", j + 2));
            }
            body.push_str("  return n;\n}\n");
            (format!("src/mod_{}/file_{i}.c", i % 7), body)
        })
        .collect()
}

fn bench_analyze_batch(c: &mut Criterion) {
    let files = corpus(256);
    let mut group = c.benchmark_group("analyze_batch");
    group.bench_function("parallel_default", |b| {
        b.iter_batched(
            || files.clone(),
            |files| black_box(analyze_batch(&files, "c-family").unwrap()),
            BatchSize::LargeInput,
        )
    });
    group.bench_function("sequential", |b| {
        b.iter_batched(
            || files.clone(),
            |files| black_box(analyze_batch_sequential(&files, "c-family").unwrap()),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

fn bench_global_mark(c: &mut Criterion) {
    let config = SqualeConfig::default();
    let marks: Vec<f64> = (0..10_000).map(|i| (i % 31) as f64 * 3.0 / 30.0).collect();
    c.bench_function("global_mark_10k_pool", |b| {
        b.iter(|| black_box(global_mark(black_box(&marks), &config).unwrap()))
    });
}

criterion_group!(benches, bench_analyze_batch, bench_global_mark);
criterion_main!(benches);
