//! Header hashing and synthetic mining throughput.

use criterion::{criterion_group, criterion_main, Criterion};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use aov_core::btc::{decode_nbits, mine_test_header, pow_hash, BlockHeader, Target};

fn random_header(rng: &mut StdRng) -> BlockHeader {
    BlockHeader {
        version: rng.gen(),
        prev_hash: rng.gen(),
        merkle_root: rng.gen(),
        timestamp: rng.gen(),
        nbits: 0x1d00ffff,
        nonce: rng.gen(),
    }
}

fn bench_pow_hash(c: &mut Criterion) {
    let mut rng = StdRng::seed_from_u64(11);
    let header = random_header(&mut rng);
    c.bench_function("pow_hash", |b| b.iter(|| pow_hash(&header)));
}

fn bench_decode_nbits(c: &mut Criterion) {
    c.bench_function("decode_nbits", |b| b.iter(|| decode_nbits(0x1d00ffff).unwrap()));
}

fn bench_mine_easy_target(c: &mut Criterion) {
    let mut rng = StdRng::seed_from_u64(12);
    // one hit per 256 nonces on average
    let target = Target::pow2(248);
    c.bench_function("mine_2^248", |b| {
        b.iter(|| {
            let template = random_header(&mut rng);
            mine_test_header(&template, &target, 1 << 20).unwrap()
        })
    });
}

criterion_group!(benches, bench_pow_hash, bench_decode_nbits, bench_mine_easy_target);
criterion_main!(benches);
