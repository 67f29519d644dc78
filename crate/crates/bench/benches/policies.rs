use std::hint::black_box;

use banditlab::harness::{run_replication, ExperimentConfig};
use banditlab::policies::ucb::kl_ucb_upper;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn config(policy: &str, horizon: u64) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        r#"
horizon = {horizon}
metrics = ["ee"]
[policy]
{policy}
[environment]
kind = "stochastic"
arms = [
  {{ dist = "bernoulli", p = 0.9 }},
  {{ dist = "bernoulli", p = 0.8 }},
  {{ dist = "bernoulli", p = 0.7 }},
  {{ dist = "bernoulli", p = 0.6 }},
  {{ dist = "bernoulli", p = 0.5 }},
]
"#
    ))
    .expect("bench config parses")
}

/// One 10^4-step replication per policy, including the regret series.
fn replications(c: &mut Criterion) {
    let mut g = c.benchmark_group("replication_1e4");
    g.sample_size(20);
    for (label, policy) in [
        ("epsilon-greedy", "name = \"epsilon-greedy\"\nepsilon = 0.1"),
        ("ucb1", "name = \"ucb1\""),
        ("ucb-tuned", "name = \"ucb-tuned\""),
        ("kl-ucb", "name = \"kl-ucb\""),
        ("bayes-ucb", "name = \"bayes-ucb\""),
        ("thompson", "name = \"thompson\""),
        ("exp3", "name = \"exp3\""),
        ("d-ucb", "name = \"d-ucb\"\ngamma = 0.995"),
        ("sw-ucb", "name = \"sw-ucb\"\ntau = 1000"),
        ("mp-ts", "name = \"mp-ts\"\nm = 2"),
    ] {
        let cfg = config(policy, 10_000);
        let env = cfg.validate().unwrap();
        g.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| black_box(run_replication(&cfg, &env, 0).unwrap().series.len()))
        });
    }
    g.finish();
}

fn kl_solver(c: &mut Criterion) {
    c.bench_function("kl_ucb_upper", |b| {
        b.iter(|| kl_ucb_upper(black_box(0.42), black_box(137), black_box(50_000), 0.0))
    });
}

fn hoo(c: &mut Criterion) {
    let cfg = ExperimentConfig::from_toml(
        r#"
horizon = 2000
metrics = ["ee"]
[policy]
name = "hoo"
[environment]
kind = "continuum"
function = { shape = "triangle", peak = 0.7, height = 0.9, slope = 1.0 }
noise = { noise = "bernoulli" }
"#,
    )
    .unwrap();
    let env = cfg.validate().unwrap();
    let mut g = c.benchmark_group("hoo");
    g.sample_size(10);
    g.bench_function("replication_2000", |b| {
        b.iter(|| black_box(run_replication(&cfg, &env, 0).unwrap().recommendation))
    });
    g.finish();
}

criterion_group!(benches, replications, kl_solver, hoo);
criterion_main!(benches);
