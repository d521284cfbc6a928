use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use super::adversary::{Adversary, Behavior, PolicyKind};
use super::report::{Detail, DkgDetail, Recorder, Report, Traffic};
use super::{keyword, pick, to_set, Clock, SimConfig, DEFAULT_FORCED_SIZE};
use crate::broadcast::{BulletinBoard, Pbb};
use crate::committee::Selection;
use crate::dkg::{
    Complaint, ComplaintList, ComplaintMulticast, DealFault, DealTranscript, DkgOutput, ForgeMode, NodeState,
    SessionParams, Targets, EVENT_AGREE, EVENT_DEAL, SIG_ROUNDS,
};
use crate::error::{Error, Result};
use crate::group::{metered, GroupElement};
use crate::keys::NodeKeys;
use crate::sharing::{check_low_degree, dual_code_vector, interpolate_zero, EvalCommitment};
use crate::vrf::{any_trust_ratio, Ratio};

const PHASES: [&str; 4] = ["deal", "verify", "aggregate", "finalize"];

pub(super) struct Committees {
    pub selection: Selection,
    /// Forced members in seeded order; empty under sortition.
    pub deal: Vec<u32>,
    pub agree: Vec<u32>,
}

pub(super) fn committees<R: Rng + ?Sized>(cfg: &SimConfig, n: usize, t: usize, rng: &mut R) -> Result<Committees> {
    if cfg.forced {
        let s = cfg.s_expected.unwrap_or(DEFAULT_FORCED_SIZE) as usize;
        let deal = pick(n, s, rng);
        let agree = pick(n, s, rng);
        let selection = Selection::designated([(EVENT_DEAL, to_set(&deal)), (EVENT_AGREE, to_set(&agree))]);
        return Ok(Committees { selection, deal, agree });
    }
    let ratio = match cfg.s_expected {
        Some(s) => Ratio::expected(s, n as u64)?,
        None => any_trust_ratio(n as u64, t as u64, cfg.failure_bound)?,
    };
    Ok(Committees { selection: Selection::sortition(ratio), deal: Vec::new(), agree: Vec::new() })
}

pub(super) fn run(cfg: &SimConfig) -> Result<Report> {
    let (n, t) = (cfg.n, cfg.t);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut clock = Clock::new(cfg.timing);
    let mut rec = Recorder::new(cfg, n, t);
    let mut traffic = Traffic::new(cfg.trace);

    let keys: Vec<NodeKeys> = (0..n).map(|_| NodeKeys::generate(SIG_ROUNDS, &mut rng)).collect();
    let session_id: [u8; 32] = rng.gen();
    let beacon: [u8; 32] = rng.gen();
    let com = committees(cfg, n, t, &mut rng)?;
    // The first member of each forced committee stays honest.
    let reserved: BTreeSet<u32> = com.deal.first().into_iter().chain(com.agree.first()).copied().collect();
    let priority = com.deal.get(1..).unwrap_or(&[]);
    let mut adv = Adversary::new(cfg.adversary, n, cfg.corrupt.unwrap_or(t), priority, &reserved, &mut rng);
    let static_corrupt = adv.corrupted();
    let roster = keys.iter().map(NodeKeys::public).collect();
    let params = Arc::new(SessionParams::new(n, t, session_id, beacon.to_vec(), com.selection, roster)?);
    let mut nodes = keys
        .into_iter()
        .zip(1u32..)
        .map(|(k, i)| NodeState::new(Arc::clone(&params), i, k, rng.gen()))
        .collect::<Result<Vec<_>>>()?;
    let (kw_deal, kw_list) = (keyword(&session_id, "deal"), keyword(&session_id, "list"));
    let mut pbb = Pbb::new();
    let mut exp = vec![[0u64; 4]; n];
    if let Some(ms) = clock.lap() {
        rec.put("setup", "wall_ms", ms);
    }

    for node in &mut nodes {
        let i = node.index();
        let (posted, e) = metered(|| deal_as(node, adv.behavior(i)));
        exp[i as usize - 1][0] = e;
        for d in posted? {
            traffic.record(1, i, None, "pbb", kw_deal.len() + d.to_bytes().len(), "deal");
            pbb.post(i, &kw_deal, d.to_bytes().to_vec());
        }
    }
    let closed1 = pbb.counter();
    let deals: Vec<Arc<DealTranscript>> = pbb
        .retrieve(0, closed1, &kw_deal)
        .into_iter()
        .filter_map(|e| DealTranscript::from_bytes(&e.value).ok())
        .map(Arc::new)
        .collect();
    let dealers: BTreeSet<u32> = deals.iter().map(|d| d.dealer).collect();
    if let Some(ms) = clock.lap() {
        rec.put("deal", "wall_ms", ms);
    }

    let mut resign_blocked = 0u64;
    if adv.kind() == PolicyKind::Adaptive {
        let mut candidates: Vec<u32> = dealers.iter().copied().filter(|i| !reserved.contains(i)).collect();
        if reserved.is_empty() {
            candidates.pop();
        }
        for i in adv.corrupt_adaptively(&candidates, &mut rng) {
            let node = &nodes[i as usize - 1];
            match node.try_sign_round(1, b"conflicting deal") {
                Err(Error::KeyUnavailable { .. }) => resign_blocked += 1,
                Ok(_) => return Err(Error::Invariant(format!("erasure: node {i} re-signed with its round-1 key"))),
                Err(e) => return Err(e),
            }
        }
    }

    let mut multicasts: Vec<ComplaintMulticast> = Vec::new();
    let mut delivered: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut forged: BTreeMap<u32, Vec<Complaint>> = BTreeMap::new();
    for node in &mut nodes {
        let i = node.index();
        let b = adv.behavior(i).cloned();
        let (mc, e) = metered(|| complain_as(node, b.as_ref(), &deals, &mut forged));
        exp[i as usize - 1][1] = e;
        let Some(mc) = mc? else { continue };
        let reach: BTreeSet<u32> = match b {
            Some(Behavior::WithholdMulticast { fraction }) => Adversary::reached(i, n, fraction, &mut rng),
            _ => (1..=n as u32).filter(|&j| j != i).collect(),
        };
        let len = mc.to_bytes().len();
        for &j in &reach {
            traffic.record(2, i, Some(j), "multicast", len, "complaints");
            delivered[j as usize - 1].push(multicasts.len());
        }
        delivered[i as usize - 1].push(multicasts.len());
        multicasts.push(mc);
    }
    if let Some(ms) = clock.lap() {
        rec.put("verify", "wall_ms", ms);
    }

    for node in &mut nodes {
        let i = node.index();
        let received: Vec<ComplaintMulticast> =
            delivered[i as usize - 1].iter().map(|&k| multicasts[k].clone()).collect();
        let extra = forged.get(&i).map_or(&[][..], Vec::as_slice);
        let (list, e) = metered(|| match adv.behavior(i) {
            Some(Behavior::Silent) => {
                node.skip_round();
                Ok(None)
            }
            Some(Behavior::ForgeComplaint) => node.round3_with_extra(&received, extra, true),
            _ => node.round3_aggregate(&received),
        });
        exp[i as usize - 1][2] = e;
        if let Some(list) = list? {
            let bytes = list.to_bytes();
            traffic.record(3, i, None, "pbb", kw_list.len() + bytes.len(), "list");
            pbb.post(i, &kw_list, bytes);
        }
    }
    let lists: Vec<ComplaintList> = pbb
        .retrieve(closed1, pbb.counter(), &kw_list)
        .into_iter()
        .filter_map(|e| ComplaintList::from_bytes(&e.value).ok())
        .collect();
    if let Some(ms) = clock.lap() {
        rec.put("aggregate", "wall_ms", ms);
    }

    let mut outputs = BTreeMap::new();
    for node in &mut nodes {
        let i = node.index();
        let b = adv.behavior(i);
        if b.is_some_and(|b| !b.verifies()) {
            continue;
        }
        let (out, e) = metered(|| node.finalize(&lists));
        exp[i as usize - 1][3] = e;
        if b.is_none() {
            outputs.insert(i, out?);
        }
    }
    if let Some(ms) = clock.lap() {
        rec.put("finalize", "wall_ms", ms);
    }

    let corrupted = adv.corrupted();
    check_outputs(&outputs, n, t, &mut rng)?;
    for &h in outputs.keys() {
        let node = &nodes[h as usize - 1];
        let out = &outputs[&h];
        for &j in dealers.difference(&static_corrupt) {
            if out.disqual.contains(&j) || node.d1().contains(&j) {
                return Err(Error::Invariant(format!("unforgeability: honest dealer {j} excluded at node {h}")));
            }
        }
        if !node.erasure_audit().is_empty() {
            return Err(Error::Invariant(format!("erasure: node {h} retains old signing keys")));
        }
    }
    for &j in dealers.intersection(&static_corrupt) {
        let caught = outputs.keys().any(|&h| nodes[h as usize - 1].d2().contains(&j));
        if caught && outputs.values().any(|o| !o.disqual.contains(&j)) {
            return Err(Error::Invariant(format!("disqualification: dealer {j} dealt a bad share but stayed qualified")));
        }
    }

    let exp = &exp;
    let honest_exp = |phase: usize| outputs.keys().map(move |&h| exp[h as usize - 1][phase]);
    let total = |h: u32| exp[h as usize - 1].iter().sum::<u64>();
    rec.put("setup", "dealers", dealers.len());
    rec.put("setup", "lists", lists.len());
    rec.put("setup", "corrupted", static_corrupt.len());
    rec.put("setup", "adaptive", adv.adaptive().len());
    for (k, phase) in PHASES.iter().enumerate() {
        rec.put(phase, "exp_max", honest_exp(k).max().unwrap_or(0));
        rec.put(phase, "exp_sum", honest_exp(k).sum::<u64>());
    }
    let max_over = |pred: &dyn Fn(u32) -> bool| outputs.keys().filter(|&&h| pred(h)).map(|&h| total(h)).max().unwrap_or(0);
    rec.put("total", "exp_max", max_over(&|_| true));
    rec.put("total", "exp_sum", outputs.keys().map(|&h| total(h)).sum::<u64>());
    rec.put("total", "exp_max_dealer", max_over(&|h| dealers.contains(&h)));
    rec.put("total", "exp_max_nondealer", max_over(&|h| !dealers.contains(&h)));
    rec.put("total", "honest", outputs.len());
    let deal_bytes = pbb.stored_bytes_with_prefix(&kw_deal);
    rec.put("traffic", "deal_bytes", deal_bytes);
    rec.put("traffic", "list_bytes", pbb.stored_bytes() - deal_bytes);
    rec.put("traffic", "broadcast_bytes", pbb.stored_bytes());
    rec.put("traffic", "multicast_bytes", traffic.bytes("multicast"));
    let first = outputs.values().next().ok_or_else(|| Error::Invariant("no honest node".into()))?;
    rec.put("verdict", "consistent", true);
    rec.put("verdict", "correct", true);
    rec.put("verdict", "qual", json!(first.qual));
    rec.put("verdict", "disqual", json!(first.disqual));
    rec.put("verdict", "adaptive_resign_blocked", resign_blocked);

    let detail = DkgDetail {
        dealers,
        corrupted,
        d1: outputs.keys().map(|&h| (h, nodes[h as usize - 1].d1().clone())).collect(),
        exp: (1..=n as u32).map(|i| (i, total(i))).collect(),
        outputs,
    };
    Ok(rec.finish(traffic, Detail::Dkg(detail)))
}

fn deal_as(node: &mut NodeState, b: Option<&Behavior>) -> Result<Vec<DealTranscript>> {
    let fault = match b {
        Some(Behavior::Silent) => {
            node.skip_round();
            return Ok(Vec::new());
        }
        Some(Behavior::DoubleVote) => return Ok(node.round1_double_deal()?.map(|(a, b)| vec![a, b]).unwrap_or_default()),
        Some(Behavior::MalformCiphertext(targets)) => DealFault::ShiftShares(targets.clone()),
        Some(Behavior::UndecodableShare) => DealFault::UndecodableShares(Targets::All),
        Some(Behavior::WrongDegree) => DealFault::HighDegree,
        _ => DealFault::None,
    };
    Ok(node.round1_deal_with(&fault)?.into_iter().collect())
}

/// Round 2. Corrupted nodes other than honest-but-corrupt ones skip verification.
fn complain_as(
    node: &mut NodeState,
    b: Option<&Behavior>,
    deals: &[Arc<DealTranscript>],
    forged: &mut BTreeMap<u32, Vec<Complaint>>,
) -> Result<Option<ComplaintMulticast>> {
    match b {
        None => node.round2_verify(deals),
        Some(b) if b.verifies() => node.round2_verify(deals),
        Some(Behavior::ForgeComplaint) => {
            let mut cs = node.forge_complaints(deals, ForgeMode::MatchingShare);
            cs.extend(node.forge_complaints(deals, ForgeMode::AlteredShare));
            node.skip_round();
            forged.insert(node.index(), cs.clone());
            if cs.is_empty() {
                Ok(None)
            } else {
                node.sign_multicast(cs).map(Some)
            }
        }
        Some(_) => {
            node.skip_round();
            Ok(None)
        }
    }
}

/// Consistency of the public outputs, and correctness of the shared key.
fn check_outputs(outputs: &BTreeMap<u32, DkgOutput>, n: usize, t: usize, rng: &mut ChaCha20Rng) -> Result<()> {
    let mut views = outputs.values().map(DkgOutput::public_view);
    let Some(first) = views.next() else { return Ok(()) };
    if views.any(|v| v != first) {
        return Err(Error::Invariant("consistency: honest nodes disagree on (pk, pk_shares, Qual)".into()));
    }
    let (pk, pk_shares, _) = first;
    let mut honest: Vec<u32> = outputs.keys().copied().collect();
    honest.shuffle(rng);
    honest.truncate(t + 1);
    let points: BTreeMap<u32, _> = honest.iter().map(|&h| (h, outputs[&h].sk_share)).collect();
    if points.len() == t + 1 && GroupElement::base_exp(&interpolate_zero(&points)?) != pk {
        return Err(Error::Invariant("correctness: t+1 honest shares do not interpolate the key".into()));
    }
    let cm = EvalCommitment { cms: std::iter::once(pk).chain(pk_shares.iter().copied()).collect() };
    if !check_low_degree(&cm, &dual_code_vector(n, t, rng))? {
        return Err(Error::Invariant("correctness: public key shares are not of degree t".into()));
    }
    Ok(())
}
