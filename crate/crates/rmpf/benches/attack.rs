//! Brute-force search benchmarks: sequential vs parallel execution of
//! both search modes over fixed instances.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use rmpf::analysis::{brute_force_recover_with, search_domain, Execution, SearchMode};
use rmpf::kap::{make_token, PrivateKey, PublicParams, Token};
use rmpf::matrix::Dims;

fn fixed_instance(p: u64, rows: usize, cols: usize) -> (PublicParams, Token) {
    let mut rng = ChaCha20Rng::seed_from_u64(0xBEEF);
    let dims = Dims::new(rows, cols).unwrap();
    let params = PublicParams::with_prime(p, dims, &mut rng).unwrap();
    let secret = PrivateKey::generate(&params, &mut rng);
    let token = make_token(&params, &secret).unwrap();
    (params, token)
}

fn attack(c: &mut Criterion) {
    // Small prime: both modes are feasible.
    let (params, token) = fixed_instance(251, 3, 2);
    let mut group = c.benchmark_group("recover_251_3x2");
    for (label, mode) in [
        ("full", SearchMode::Full),
        ("reduced", SearchMode::Reduced),
    ] {
        let domain = search_domain(251, mode).unwrap();
        for (exec_label, exec) in [
            ("seq", Execution::Sequential),
            ("par", Execution::Parallel),
        ] {
            group.bench_function(format!("{label}_{exec_label}"), |b| {
                b.iter(|| {
                    brute_force_recover_with(
                        black_box(&params),
                        black_box(&token),
                        domain,
                        mode,
                        exec,
                    )
                    .unwrap()
                })
            });
        }
    }
    group.finish();

    // Protocol-sized prime: only the reduced scan is feasible.
    let (params, token) = fixed_instance(104_729, 5, 3);
    let domain = search_domain(104_729, SearchMode::Reduced).unwrap();
    let mut group = c.benchmark_group("recover_104729_5x3");
    group.sample_size(20);
    for (exec_label, exec) in [
        ("seq", Execution::Sequential),
        ("par", Execution::Parallel),
    ] {
        group.bench_function(format!("reduced_{exec_label}"), |b| {
            b.iter(|| {
                brute_force_recover_with(
                    black_box(&params),
                    black_box(&token),
                    domain,
                    SearchMode::Reduced,
                    exec,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, attack);
criterion_main!(benches);
