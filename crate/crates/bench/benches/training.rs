use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use qrl_core::ppo::{collect_episode, ppo_update, AgentState, CircuitPolicy, TrainerConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_update_phase(c: &mut Criterion) {
    let config = TrainerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let agent = AgentState::init(&config, &mut rng);
    let buffer = {
        let mut behavior = CircuitPolicy {
            params: &agent.policy,
            temperature: 1.0,
            epsilon_greedy: 0.0,
        };
        collect_episode(&mut behavior, &mut rng).unwrap()
    };

    let mut group = c.benchmark_group("ppo");
    group.sample_size(10);
    group.bench_function(format!("update_{}_transitions", buffer.len()), |b| {
        b.iter_batched(
            || (agent.clone(), buffer.clone()),
            |(mut a, mut buf)| ppo_update(&mut a, &mut buf, &config).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(benches, bench_update_phase);
criterion_main!(benches);
