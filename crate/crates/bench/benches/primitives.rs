use std::hint::black_box;

use anytrust::fsig::{fs_keygen, fs_sign, fs_verify};
use anytrust::group::multi_exp;
use anytrust::mre::{mre_decrypt, mre_encrypt};
use anytrust::sharing::{check_low_degree, commit_evals, dual_code_vector, sample_polynomial};
use anytrust::vrf::{sortition, Ratio, VrfKeyPair};
use anytrust::{GroupElement, Scalar};
use anytrust_bench::rng;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn group(c: &mut Criterion) {
    let mut rng = rng(1);
    let x = Scalar::random(&mut rng);
    let p = GroupElement::base_exp(&Scalar::random(&mut rng));
    c.bench_function("base_exp", |b| b.iter(|| GroupElement::base_exp(black_box(&x))));
    c.bench_function("exp", |b| b.iter(|| black_box(p).exp(black_box(&x))));
    let mut g = c.benchmark_group("multi_exp");
    for n in [16usize, 64, 256] {
        let bases: Vec<GroupElement> = (0..n).map(|_| GroupElement::base_exp(&Scalar::random(&mut rng))).collect();
        let exps: Vec<Scalar> = (0..n).map(|_| Scalar::random(&mut rng)).collect();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| multi_exp(&bases, &exps)));
    }
    g.finish();
}

fn sharing(c: &mut Criterion) {
    let mut rng = rng(2);
    let mut g = c.benchmark_group("low_degree_test");
    for n in [16usize, 64, 256] {
        let t = (n - 1) / 2;
        let cm = commit_evals(&sample_polynomial(t, &mut rng), n);
        let perp = dual_code_vector(n, t, &mut rng);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| check_low_degree(&cm, &perp)));
    }
    g.finish();
}

fn encryption(c: &mut Criterion) {
    let mut rng = rng(3);
    let n = 64;
    let dks: Vec<Scalar> = (0..n).map(|_| Scalar::random(&mut rng)).collect();
    let eks: Vec<GroupElement> = dks.iter().map(GroupElement::base_exp).collect();
    let msgs: Vec<Scalar> = (0..n).map(|_| Scalar::random(&mut rng)).collect();
    let r = Scalar::random(&mut rng);
    c.bench_function("mre_encrypt/64", |b| b.iter(|| mre_encrypt(&eks, &msgs, &r)));
    let ct = mre_encrypt(&eks, &msgs, &r).expect("encrypt");
    c.bench_function("mre_decrypt", |b| b.iter(|| mre_decrypt(&ct, 7, &dks[6])));
}

fn signatures(c: &mut Criterion) {
    let mut rng = rng(4);
    let keys = fs_keygen(3, &mut rng);
    let msg = b"bench message";
    let sig = fs_sign(&keys, 1, msg).expect("sign");
    c.bench_function("fs_sign", |b| b.iter(|| fs_sign(&keys, 1, msg)));
    c.bench_function("fs_verify", |b| b.iter(|| fs_verify(keys.vk(), 1, &sig, msg)));
    let vrf = VrfKeyPair::generate(&mut rng);
    let ratio = Ratio::new(1, 1).expect("ratio");
    c.bench_function("sortition", |b| b.iter(|| sortition(&vrf, b"beacon", "deal", ratio)));
}

criterion_group!(benches, group, sharing, encryption, signatures);
criterion_main!(benches);
