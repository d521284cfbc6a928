//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Pass criterion numbers to run a subset.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use anytrust::checkpoint::{combine, partial_sign, schnorr_challenge, schnorr_verify, verify_partial, PartialSig};
use anytrust::committee::Selection;
use anytrust::dkg::{run_honest, DkgOutput, NodeState, SessionParams, EVENT_AGREE, EVENT_DEAL, SIG_ROUNDS};
use anytrust::keys::NodeKeys;
use anytrust::sharing::{check_low_degree, commit_evals, dual_code_vector, sample_polynomial, EvalCommitment};
use anytrust::sim::{self, PolicyKind, Report, Scenario, SimConfig};
use anytrust::weights::{allocate_sub_ids, check_qualified, WeightVector};
use anytrust::{GroupElement, Scalar};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !($cond) {
            return Err(format!($($fmt)+));
        }
    };
}

fn dkg_cfg(n: usize, t: usize, seed: u64, s: u64, kind: PolicyKind) -> SimConfig {
    let mut cfg = SimConfig::new(Scenario::Dkg, n, t, seed);
    cfg.s_expected = Some(s);
    cfg.adversary = kind;
    cfg
}

fn run(cfg: &SimConfig) -> Result<Report, String> {
    sim::run(cfg).map_err(|e| format!("{} n={} seed={} {}: {e}", cfg.scenario.name(), cfg.n, cfg.seed, cfg.adversary))
}

/// Lagrange interpolation at zero, written against the field operations only.
fn lagrange_zero(points: &[(u32, Scalar)]) -> Scalar {
    points
        .iter()
        .map(|&(i, y)| {
            let (num, den) = points.iter().filter(|(j, _)| *j != i).fold((Scalar::ONE, Scalar::ONE), |(n, d), &(j, _)| {
                let (i, j) = (Scalar::from_u64(i as u64), Scalar::from_u64(j as u64));
                (n * j, d * (j - i))
            });
            y * num * den.invert().expect("distinct indices")
        })
        .sum()
}

/// Consistency and correctness of the honest outputs of one run.
fn check_dkg(report: &Report, t: usize, rng: &mut ChaCha20Rng) -> Result<(), String> {
    let d = report.dkg().ok_or("missing dkg detail")?;
    let outs: Vec<(&u32, &DkgOutput)> = d.outputs.iter().collect();
    ensure!(outs.len() > t, "only {} honest outputs", outs.len());
    let (_, first) = outs[0];
    for (i, o) in &outs {
        ensure!(
            o.pk == first.pk && o.pk_shares == first.pk_shares && o.qual == first.qual,
            "node {i} disagrees with node {}",
            outs[0].0
        );
        ensure!(GroupElement::base_exp(&o.sk_share) == first.pk_shares[**i as usize - 1], "node {i} share mismatch");
    }
    let mut pick = outs.clone();
    pick.shuffle(rng);
    let points: Vec<(u32, Scalar)> = pick[..t + 1].iter().map(|(i, o)| (**i, o.sk_share)).collect();
    ensure!(GroupElement::base_exp(&lagrange_zero(&points)) == first.pk, "t+1 shares do not interpolate to sk");
    Ok(())
}

/// Dealers never corrupted must stay out of DisQual everywhere.
fn honest_disqualified(report: &Report) -> Vec<u32> {
    let d = report.dkg().expect("dkg detail");
    let mut bad = BTreeSet::new();
    for o in d.outputs.values() {
        bad.extend(o.disqual.iter().filter(|j| d.dealers.contains(j) && !d.corrupted.contains(j)));
    }
    bad.into_iter().collect()
}

fn c1_consistency() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let mut runs = 0;
    for (n, t) in [(4, 1), (8, 3), (16, 7), (64, 31)] {
        for kind in PolicyKind::ALL {
            for seed in 0..20 {
                let report = run(&dkg_cfg(n, t, seed, 8, kind))?;
                check_dkg(&report, t, &mut rng).map_err(|e| format!("n={n} {kind} seed={seed}: {e}"))?;
                let hd = honest_disqualified(&report);
                ensure!(hd.is_empty(), "n={n} {kind} seed={seed}: honest dealers {hd:?} disqualified");
                runs += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed <= Duration::from_secs(300), "{runs} runs took {:.1}s > 300s", elapsed.as_secs_f64());
    Ok(format!("{runs} runs, 0 failures, {:.1}s", elapsed.as_secs_f64()))
}

fn c2_disqualification() -> Outcome {
    let mut disqualified = 0;
    for seed in 0..100 {
        let mut cfg = dkg_cfg(16, 7, seed, 6, PolicyKind::MalformCiphertext);
        cfg.corrupt = Some(1);
        let report = run(&cfg)?;
        let d = report.dkg().ok_or("missing dkg detail")?;
        let cheater = *d.corrupted.iter().next().ok_or("no corrupted node")?;
        ensure!(d.dealers.contains(&cheater), "seed {seed}: corrupted node {cheater} did not deal");
        if d.outputs.values().all(|o| o.disqual.contains(&cheater)) {
            disqualified += 1;
        }
        let hd = honest_disqualified(&report);
        ensure!(hd.is_empty(), "seed {seed}: honest dealers {hd:?} disqualified");
    }
    let mut sweep = 0;
    for kind in PolicyKind::ALL {
        for seed in 100..110 {
            let report = run(&dkg_cfg(16, 7, seed, 8, kind))?;
            let hd = honest_disqualified(&report);
            ensure!(hd.is_empty(), "{kind} seed {seed}: honest dealers {hd:?} disqualified");
            sweep += 1;
        }
    }
    ensure!(disqualified == 100, "cheating dealer disqualified in {disqualified}/100 runs");
    Ok(format!("cheater disqualified 100/100, no honest dealer disqualified over {} runs", 100 + sweep))
}

fn c3_dual_code() -> Outcome {
    let (n, t) = (16, 7);
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let (mut accepted, mut rejected) = (0, 0);
    for k in 0..10_000 {
        let f = sample_polynomial(t, &mut rng);
        let cm = commit_evals(&f, n);
        if !check_low_degree(&cm, &dual_code_vector(n, t, &mut rng)).map_err(|e| e.to_string())? {
            rejected += 1;
        }
        let bad = if k % 2 == 0 {
            let mut cms = cm.cms.clone();
            let tau = rng.gen_range(0..=n);
            cms[tau] *= GroupElement::base_exp(&Scalar::from_u64(rng.gen_range(1..u64::MAX)));
            EvalCommitment { cms }
        } else {
            let deg = rng.gen_range(t + 1..=n);
            let mut g = sample_polynomial(deg, &mut rng);
            while g.coeffs()[deg].is_zero() {
                g = sample_polynomial(deg, &mut rng);
            }
            commit_evals(&g, n)
        };
        if check_low_degree(&bad, &dual_code_vector(n, t, &mut rng)).map_err(|e| e.to_string())? {
            accepted += 1;
        }
    }
    ensure!(accepted == 0 && rejected == 0, "{accepted} adversarial acceptances, {rejected} honest rejections");
    Ok("10000 adversarial vectors: 0 accepted; 10000 honest vectors: 0 rejected".into())
}

fn honest_exp(report: &Report) -> BTreeMap<u32, u64> {
    let d = report.dkg().expect("dkg detail");
    d.outputs.keys().map(|i| (*i, d.exp[i])).collect()
}

fn c4_cost() -> Outcome {
    let s = 20u64;
    let mut good_max = BTreeMap::new();
    let mut lines = Vec::new();
    for n in [64usize, 128, 256] {
        let t = (n - 1) / 2;
        let good = honest_exp(&run(&dkg_cfg(n, t, 1, s, PolicyKind::Honest))?);
        let bad = honest_exp(&run(&dkg_cfg(n, t, 1, s, PolicyKind::MalformCiphertext))?);
        let gmax = *good.values().max().expect("honest nodes");
        let dmax = bad.iter().map(|(i, e)| e.saturating_sub(good[i])).max().expect("honest nodes");
        let (gb, db) = ((s + 2) * n as u64 + 64, 4 * n as u64 + 64);
        ensure!(gmax <= gb, "n={n}: good-case EXP {gmax} > {gb}");
        ensure!(dmax <= db, "n={n}: bad-case overhead {dmax} > {db}");
        good_max.insert(n, gmax);
        lines.push(format!("n={n} good={gmax}/{gb} extra={dmax}/{db}"));
    }
    let ratio = good_max[&128] as f64 / good_max[&64] as f64;
    ensure!((1.8..=2.3).contains(&ratio), "EXP ratio n=128/n=64 is {ratio:.3}");
    Ok(format!("{}; ratio {ratio:.3}", lines.join(", ")))
}

fn c5_broadcast_size() -> Outcome {
    let (n, t) = (512, 255);
    let bytes = |kind| -> Result<u64, String> {
        run(&dkg_cfg(n, t, 1, 20, kind))?.metric_u64("traffic", "broadcast_bytes").ok_or("missing broadcast_bytes".into())
    };
    let good = bytes(PolicyKind::Honest)?;
    ensure!((250_000..=1_000_000).contains(&good), "good-case payload {good} B outside [250 KB, 1 MB]");
    let bad = bytes(PolicyKind::MalformCiphertext)?;
    ensure!(2 * bad <= 3 * good, "bad-case payload {bad} B > 1.5 x {good} B");
    let pbb = |len| -> Result<u64, String> {
        let mut cfg = SimConfig::new(Scenario::Broadcast, 16, 7, 5);
        cfg.payload_len = len;
        run(&cfg)?.metric_u64("traffic", "broadcast_bytes").ok_or("missing broadcast_bytes".into())
    };
    let (small, large) = (pbb(1_000)?, pbb(100_000)?);
    ensure!(small == large, "PBB bytes differ: {small} for 1 KB, {large} for 100 KB");
    Ok(format!("good {good} B, bad {bad} B ({:.3}x), PBB {small} B for both value sizes", bad as f64 / good as f64))
}

fn c6_extended_broadcast() -> Outcome {
    let policies = [
        PolicyKind::Honest,
        PolicyKind::WithholdMulticast { fraction: 0.6 },
        PolicyKind::WithholdMulticast { fraction: 0.0 },
    ];
    let mut withheld_bottom = 0;
    for seed in 0..500u64 {
        let mut cfg = SimConfig::new(Scenario::Broadcast, 10, 4, seed);
        cfg.adversary = policies[seed as usize % 3];
        cfg.payload_len = 64;
        let report = run(&cfg)?;
        let d = report.broadcast().ok_or("missing broadcast detail")?;
        let mut views = d.outputs.values();
        let first = views.next().ok_or("no honest receiver")?;
        ensure!(views.all(|v| v == first), "seed {seed}: honest receivers disagree");
        for j in &d.senders {
            let got = first.get(j).cloned().flatten();
            if !d.corrupted.contains(j) {
                ensure!(got.as_ref() == Some(&d.values[j]), "seed {seed}: honest sender {j} not delivered");
            } else if got.is_none() {
                withheld_bottom += 1;
            }
        }
    }
    Ok(format!("500 runs, 0 disagreements, honest values always delivered ({withheld_bottom} withheld values output as bottom)"))
}

fn c7_allocation() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let mut bounded = 0;
    for k in 0..10_000 {
        let n: usize = rng.gen_range(1..=16);
        let t_min = (n as u64).saturating_sub(1).div_ceil(3).max(1);
        let t = if k % 2 == 0 { rng.gen_range(t_min..t_min + 64) } else { rng.gen_range(t_min..1_000_000) };
        let total = 3 * t + 1;
        let mut cuts: BTreeSet<u64> = BTreeSet::new();
        while cuts.len() < n - 1 {
            cuts.insert(rng.gen_range(1..total));
        }
        let edges: Vec<u64> = [0].into_iter().chain(cuts).chain([total]).collect();
        let w: Vec<u128> = edges.windows(2).map(|e| (e[1] - e[0]) as u128).collect();
        let wv = WeightVector::new(w.clone()).map_err(|e| e.to_string())?;
        ensure!(wv.t() == t as u128, "vector {k}: t mismatch");
        let a = allocate_sub_ids(&wv);
        ensure!(check_qualified(&w, &a.d), "vector {k}: allocation {:?} of {w:?} not qualified", a.d);
        let t = t as u128;
        if n as u128 <= 2 * t {
            let sum: u128 = a.d.iter().sum();
            let q = 2 * t / n as u128;
            ensure!(sum * q <= 4 * t + 1, "vector {k}: {sum} sub-IDs exceed (4t+1)/{q} for t={t}");
            bounded += 1;
        }
    }
    Ok(format!("10000 vectors qualified, size bound held on all {bounded} with n <= 2t"))
}

/// Everyone deals and agrees; used for the subset-signing check.
fn honest_dkg(n: usize, t: usize, rng: &mut ChaCha20Rng) -> Result<Vec<DkgOutput>, String> {
    let keys: Vec<NodeKeys> = (0..n).map(|_| NodeKeys::generate(SIG_ROUNDS, rng)).collect();
    let all: BTreeSet<u32> = (1..=n as u32).collect();
    let selection = Selection::designated([(EVENT_DEAL, all.clone()), (EVENT_AGREE, all)]);
    let roster = keys.iter().map(NodeKeys::public).collect();
    let params = Arc::new(
        SessionParams::new(n, t, rng.gen(), b"acceptance".to_vec(), selection, roster).map_err(|e| e.to_string())?,
    );
    let mut nodes = keys
        .into_iter()
        .zip(1u32..)
        .map(|(k, i)| NodeState::new(Arc::clone(&params), i, k, rng.gen()))
        .collect::<anytrust::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    run_honest(&mut nodes).map_err(|e| e.to_string())
}

fn c8_checkpoint() -> Outcome {
    let mut cfg = SimConfig::new(Scenario::Checkpoint { epochs: 3 }, 16, 7, 8);
    cfg.s_expected = Some(8);
    let report = run(&cfg)?;
    let d = report.checkpoint().ok_or("missing checkpoint detail")?;
    let sub_ids = d.allocation.sub_ids();
    ensure!(sub_ids == 16, "{sub_ids} sub-IDs, expected 16");
    ensure!(report.metric_u64("chain", "tx_count") == Some(4), "expected genesis plus 3 checkpoint transactions");
    ensure!(d.txs.len() == 4 && d.checkpoints.len() == 3, "expected one transaction per epoch");
    ensure!(Some(&d.bootstrapped) == d.checkpoints.last(), "bootstrap did not return the honest digest");

    for seed in 0..100 {
        let mut cfg = SimConfig::new(Scenario::Checkpoint { epochs: 1 }, 16, 7, seed);
        cfg.s_expected = Some(5);
        let r = run(&cfg)?;
        ensure!(
            r.metric_bool("verdict", "long_range_rejected") == Some(true) && r.metric_bool("verdict", "fork_detected") == Some(true),
            "seed {seed}: long-range attack not rejected"
        );
    }

    let (n, t) = (16, 7);
    let mut rng = ChaCha20Rng::seed_from_u64(88);
    let key = honest_dkg(n, t, &mut rng)?;
    let nonce = honest_dkg(n, t, &mut rng)?;
    let (q, r) = (key[0].pk, nonce[0].pk);
    let msg = b"checkpoint subsets";
    let c = schnorr_challenge(&r, &q, msg);
    let partials: Vec<PartialSig> = (1..=n as u32)
        .map(|i| {
            let k = i as usize - 1;
            partial_sign(i, &nonce[k].sk_share, &r, &key[k].sk_share, &q, msg)
        })
        .filter(|p| {
            let k = p.signer as usize - 1;
            verify_partial(p, &nonce[0].pk_shares[k], &key[0].pk_shares[k], &c)
        })
        .collect();
    ensure!(partials.len() == n, "{} of {n} honest partials verified", partials.len());
    let reference = combine(&partials[..t + 1], t).map_err(|e| e.to_string())?;
    ensure!(schnorr_verify(&q, msg, &reference), "combined signature does not verify");
    for _ in 0..50 {
        let mut subset = partials.clone();
        subset.shuffle(&mut rng);
        subset.truncate(t + 1);
        ensure!(combine(&subset, t).map_err(|e| e.to_string())? == reference, "two subsets combined differently");
    }
    Ok("3 epochs: 1 tx each, bootstrap returns tip; long-range rejected 100/100; 50 random subsets agree".into())
}

fn c9_determinism() -> Outcome {
    let mut cfgs = Vec::new();
    for kind in PolicyKind::ALL {
        cfgs.push(dkg_cfg(16, 7, 9, 6, kind));
        let mut b = SimConfig::new(Scenario::Broadcast, 10, 4, 9);
        b.adversary = kind;
        b.payload_len = 128;
        cfgs.push(b);
    }
    let mut c = SimConfig::new(Scenario::Checkpoint { epochs: 2 }, 16, 7, 9);
    c.s_expected = Some(5);
    cfgs.push(c);
    for cfg in &mut cfgs {
        cfg.trace = true;
        let (a, b) = (run(cfg)?, run(cfg)?);
        ensure!(a.to_jsonl() == b.to_jsonl(), "{} {}: report differs on re-run", cfg.scenario.name(), cfg.adversary);
        ensure!(a.trace_jsonl() == b.trace_jsonl(), "{} {}: trace differs on re-run", cfg.scenario.name(), cfg.adversary);
    }
    Ok(format!("{} scenarios byte-identical on re-run", cfgs.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("DKG consistency and correctness", c1_consistency),
        ("disqualification and unforgeability", c2_disqualification),
        ("dual-code test soundness", c3_dual_code),
        ("cost accounting", c4_cost),
        ("broadcast size", c5_broadcast_size),
        ("extended broadcast", c6_extended_broadcast),
        ("allocation", c7_allocation),
        ("checkpoint", c8_checkpoint),
        ("determinism", c9_determinism),
    ];
    let only: BTreeSet<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS [{id}] {name}: {msg} ({secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("FAIL [{id}] {name}: {msg} ({secs:.1}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
