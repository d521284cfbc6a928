use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::adversary::{Adversary, Behavior};
use super::report::{BroadcastDetail, Detail, Recorder, Report, Traffic};
use super::{Clock, SimConfig, DEFAULT_FORCED_SIZE};
use crate::broadcast::{ebc_send, encode_vote, BulletinBoard, Ddn, EbcReceiver, EbcSession, Pbb, EVENT_CHECK};
use crate::committee::Selection;
use crate::dkg::Targets;
use crate::error::{Error, Result};
use crate::vrf::{Ratio, VrfKeyPair};

pub(super) fn run(cfg: &SimConfig) -> Result<Report> {
    let (n, t) = (cfg.n, cfg.t);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut clock = Clock::new(cfg.timing);
    let mut rec = Recorder::new(cfg, n, t);
    let mut traffic = Traffic::new(cfg.trace);

    let vrfs: Vec<VrfKeyPair> = (0..n).map(|_| VrfKeyPair::generate(&mut rng)).collect();
    let sid: [u8; 32] = rng.gen();
    let beacon: [u8; 32] = rng.gen();
    let adv = Adversary::new(cfg.adversary, n, cfg.corrupt.unwrap_or(t), &[], &BTreeSet::new(), &mut rng);
    let corrupted = adv.corrupted();
    let mut bad: Vec<u32> = corrupted.iter().copied().collect();
    let mut good: Vec<u32> = (1..=n as u32).filter(|i| !corrupted.contains(i)).collect();
    bad.shuffle(&mut rng);
    good.shuffle(&mut rng);

    // Corrupted nodes send first; at least one honest sender remains.
    let count = cfg.senders.unwrap_or(DEFAULT_FORCED_SIZE as usize).clamp(1, n);
    let k_bad = bad.len().min(count - 1);
    let senders: Vec<u32> = bad[..k_bad].iter().chain(&good).take(count).copied().collect();

    let c = cfg.c_expected.unwrap_or(DEFAULT_FORCED_SIZE) as usize;
    let selection = if cfg.forced {
        let mut k_c = bad.len().min(c.saturating_sub(1) / 2);
        let h = good.len().min(c - k_c);
        k_c = k_c.min(h.saturating_sub(1));
        let members: BTreeSet<u32> = bad[..k_c].iter().chain(&good[..h]).copied().collect();
        rec.put("setup", "committee", members.len());
        rec.put("setup", "committee_corrupted", k_c);
        Selection::designated([(EVENT_CHECK, members)])
    } else {
        Selection::sortition(Ratio::expected(c as u64, n as u64)?)
    };

    let values: BTreeMap<u32, Vec<u8>> = senders
        .iter()
        .map(|&j| {
            let mut v = vec![0u8; cfg.payload_len];
            rng.fill_bytes(&mut v);
            (j, v)
        })
        .collect();

    let mut pbb = Pbb::new();
    let rvks = vrfs.iter().map(|k| k.rvk).collect();
    let mut session = EbcSession::open(sid, senders.iter().copied(), beacon.to_vec(), selection, rvks, &pbb);
    let post_len = session.keyword("send").len() + 32;
    let mut inbox: Vec<BTreeMap<u32, Vec<u8>>> = vec![BTreeMap::new(); n];
    for (&j, v) in &values {
        let b = adv.behavior(j);
        if b == Some(&Behavior::Silent) {
            continue;
        }
        ebc_send(&mut pbb, &session, j, v);
        traffic.record(1, j, None, "pbb", post_len, "send");
        let tampered = tamper(v);
        let others = (1..=n as u32).filter(|&r| r != j);
        let plan: Vec<(u32, &Vec<u8>)> = match b {
            Some(Behavior::DoubleVote) => {
                ebc_send(&mut pbb, &session, j, &tampered);
                traffic.record(1, j, None, "pbb", post_len, "send");
                others.map(|r| (r, if r % 2 == 0 { v } else { &tampered })).collect()
            }
            Some(Behavior::WithholdMulticast { fraction }) => {
                Adversary::reached(j, n, *fraction, &mut rng).into_iter().map(|r| (r, v)).collect()
            }
            Some(Behavior::MalformCiphertext(targets)) => {
                others.map(|r| (r, if targets.contains(r) { &tampered } else { v })).collect()
            }
            Some(Behavior::UndecodableShare | Behavior::WrongDegree) => {
                let targets = Targets::Only(Adversary::reached(j, n, 0.5, &mut rng));
                others.map(|r| (r, if targets.contains(r) { &tampered } else { v })).collect()
            }
            _ => others.map(|r| (r, v)).collect(),
        };
        for (r, value) in plan {
            traffic.record(1, j, Some(r), "multicast", value.len(), "value");
            inbox[r as usize - 1].insert(j, value.clone());
        }
        inbox[j as usize - 1].insert(j, v.clone());
    }
    session.close_round(&pbb);
    if let Some(ms) = clock.lap() {
        rec.put("send", "wall_ms", ms);
    }

    let kw_check = session.keyword(EVENT_CHECK);
    let mut receivers: Vec<EbcReceiver> =
        vrfs.iter().zip(1u32..).map(|(k, i)| EbcReceiver::new(i, k.clone())).collect();
    for r in &mut receivers {
        let i = r.index();
        let got = std::mem::take(&mut inbox[i as usize - 1]);
        match adv.behavior(i) {
            None | Some(Behavior::HonestButCorrupt) => {
                if r.vote(&mut pbb, &session, got)?.is_some() {
                    traffic.record(2, i, None, "pbb", kw_check.len() + session.vote_len(), "vote");
                }
            }
            Some(Behavior::Silent) => {}
            Some(b) => {
                let Some(cred) = session.selection.select(&vrfs[i as usize - 1], i, &session.rand, EVENT_CHECK) else {
                    continue;
                };
                // Approve exactly the corrupted senders.
                let lie: Vec<bool> = session.senders().iter().map(|j| corrupted.contains(j)).collect();
                let mut votes = vec![encode_vote(&cred, &lie)];
                if *b == Behavior::DoubleVote {
                    votes.push(encode_vote(&cred, &lie.iter().map(|x| !x).collect::<Vec<_>>()));
                }
                for v in votes {
                    traffic.record(2, i, None, "pbb", kw_check.len() + v.len(), "vote");
                    pbb.post(i, &kw_check, v);
                }
            }
        }
    }
    session.close_round(&pbb);
    if let Some(ms) = clock.lap() {
        rec.put("vote", "wall_ms", ms);
    }

    let mut ddn = Ddn::new();
    for &c in &corrupted {
        ddn.set_active(c, false);
    }
    let honest: Vec<usize> = (0..n).filter(|&k| !corrupted.contains(&(k as u32 + 1))).collect();
    for &k in &honest {
        receivers[k].finalize(&pbb, &session, &mut ddn)?;
    }
    let mut outputs = BTreeMap::new();
    for &k in &honest {
        let before = ddn.transferred_bytes();
        outputs.insert(k as u32 + 1, receivers[k].output(&session, &mut ddn)?);
        let fetched = ddn.transferred_bytes() - before;
        if fetched > 0 {
            traffic.record(3, k as u32 + 1, None, "ddn", fetched, "fetch");
        }
    }
    if let Some(ms) = clock.lap() {
        rec.put("deliver", "wall_ms", ms);
    }

    let mut views = outputs.values();
    let first = views.next().ok_or_else(|| Error::Invariant("no honest receiver".into()))?.clone();
    if views.any(|o| *o != first) {
        return Err(Error::Invariant("agreement: honest receivers delivered different values".into()));
    }
    for (j, v) in values.iter().filter(|(j, _)| !corrupted.contains(j)) {
        if first.get(j).and_then(Option::as_ref) != Some(v) {
            return Err(Error::Invariant(format!("validity: honest sender {j} was not delivered")));
        }
    }

    let delivered = first.values().filter(|v| v.is_some()).count();
    rec.put("setup", "senders", senders.len());
    rec.put("setup", "corrupted", corrupted.len());
    rec.put("traffic", "broadcast_bytes", pbb.stored_bytes());
    rec.put("traffic", "multicast_bytes", traffic.bytes("multicast"));
    rec.put("traffic", "ddn_bytes", ddn.transferred_bytes());
    rec.put("traffic", "ddn_registration_bytes", ddn.registration_bytes());
    rec.put("verdict", "agreement", true);
    rec.put("verdict", "validity", true);
    rec.put("verdict", "delivered", delivered);
    rec.put("verdict", "bottom", first.len() - delivered);

    let detail = BroadcastDetail { senders, corrupted, values, outputs };
    Ok(rec.finish(traffic, Detail::Broadcast(detail)))
}

fn tamper(v: &[u8]) -> Vec<u8> {
    let mut out = v.to_vec();
    match out.first_mut() {
        Some(b) => *b ^= 1,
        None => out.push(0),
    }
    out
}
