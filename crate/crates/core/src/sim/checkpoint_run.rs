use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::dkg_run::committees;
use super::report::{CheckpointDetail, Detail, Recorder, Report, Traffic};
use super::{Clock, SimConfig};
use crate::broadcast::BulletinBoard;
use crate::checkpoint::{
    bootstrap_verify, build_tx_body, combine, partial_sign, schnorr_challenge, schnorr_verify, verify_partial,
    CheckpointTx, Ledger, PartialSig, SchnorrSig, TX_KEYWORD, TX_LEN,
};
use crate::dkg::{run_honest, DkgOutput, NodeState, SessionParams, SIG_ROUNDS};
use crate::error::{ChainFault, Error, LedgerFault, Result};
use crate::group::{metered, GroupElement, Scalar};
use crate::hash::tagged_hash;
use crate::keys::NodeKeys;
use crate::mre::EncKeyPair;
use crate::weights::{allocate_sub_ids, check_qualified, size_bound, WeightVector};

/// Four heavy and eight light validators; the allocation divides by 3.
pub const DEFAULT_WEIGHTS: [u128; 12] = [6, 6, 6, 6, 3, 3, 3, 3, 3, 3, 3, 3];

struct Network<'a> {
    cfg: &'a SimConfig,
    /// Owning validator of each sub-ID.
    owners: Vec<u32>,
    enc: Vec<EncKeyPair>,
    t: usize,
    rng: ChaCha20Rng,
}

impl Network<'_> {
    /// One all-honest DKG over the sub-IDs; returns the outputs and total EXP.
    fn dkg(&mut self) -> Result<(Vec<DkgOutput>, u64)> {
        let (n, t) = (self.owners.len(), self.t);
        let rng = &mut self.rng;
        let keys: Vec<NodeKeys> = self
            .owners
            .iter()
            .map(|&v| NodeKeys::with_encryption(self.enc[v as usize - 1].clone(), SIG_ROUNDS, rng))
            .collect();
        let com = committees(self.cfg, n, t, rng)?;
        let roster = keys.iter().map(NodeKeys::public).collect();
        let params = Arc::new(SessionParams::new(n, t, rng.gen(), rng.gen::<[u8; 32]>().to_vec(), com.selection, roster)?);
        let mut nodes = keys
            .into_iter()
            .zip(1u32..)
            .map(|(k, i)| NodeState::new(Arc::clone(&params), i, k, rng.gen()))
            .collect::<Result<Vec<_>>>()?;
        let (outs, e) = metered(|| run_honest(&mut nodes));
        let outs = outs?;
        if outs.iter().any(|o| o.public_view() != outs[0].public_view()) {
            return Err(Error::Invariant("consistency: sub-IDs disagree on the DKG output".into()));
        }
        Ok((outs, e))
    }
}

/// Signs `msg` under `key` with nonce shares from `nonce`. One partial is
/// tampered with and must be filtered out; two disjoint-ended subsets must
/// combine to the same signature.
fn threshold_sign(key: &[DkgOutput], nonce: &[DkgOutput], msg: &[u8], t: usize) -> Result<SchnorrSig> {
    let (q, r) = (key[0].pk, nonce[0].pk);
    let c = schnorr_challenge(&r, &q, msg);
    let mut partials: Vec<PartialSig> = key
        .iter()
        .zip(nonce)
        .zip(1u32..)
        .map(|((x, k), i)| partial_sign(i, &k.sk_share, &r, &x.sk_share, &q, msg))
        .collect();
    partials[0].z += Scalar::ONE;
    let valid: Vec<PartialSig> = partials
        .into_iter()
        .filter(|p| {
            let i = p.signer as usize - 1;
            verify_partial(p, &nonce[0].pk_shares[i], &key[0].pk_shares[i], &c)
        })
        .collect();
    if valid.len() + 1 != key.len() || valid.iter().any(|p| p.signer == 1) {
        return Err(Error::Invariant("partial verification: wrong set of partials accepted".into()));
    }
    let a = combine(&valid[..t + 1], t)?;
    let b = combine(&valid[valid.len() - t - 1..], t)?;
    if a != b {
        return Err(Error::Invariant("threshold signing: signer subsets produced different signatures".into()));
    }
    if !schnorr_verify(&q, msg, &a) {
        return Err(Error::Invariant("threshold signing: combined signature does not verify".into()));
    }
    Ok(a)
}

fn digest(tag: &[u8], seed: u64, epoch: u32) -> [u8; 32] {
    tagged_hash(tag, &[&seed.to_be_bytes(), &epoch.to_be_bytes()])
}

pub(super) fn run(cfg: &SimConfig, epochs: u32) -> Result<Report> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut clock = Clock::new(cfg.timing);
    let w = WeightVector::new(cfg.weights.clone().unwrap_or_else(|| DEFAULT_WEIGHTS.to_vec()))?;
    let alloc = allocate_sub_ids(&w);
    let qualified = check_qualified(w.weights(), &alloc.d);
    if !qualified {
        return Err(Error::Invariant("allocation: a weight majority lacks a sub-ID majority".into()));
    }
    let owners: Vec<u32> =
        alloc.d.iter().zip(1u32..).flat_map(|(&d, v)| std::iter::repeat_n(v, d as usize)).collect();
    let n = owners.len();
    if n == 0 {
        return Err(Error::Config("allocation produced no sub-IDs".into()));
    }
    let t = (n - 1) / 2;
    let mut rec = Recorder::new(cfg, n, t);
    rec.put("setup", "validators", w.n());
    rec.put("setup", "divisor", alloc.divisor.to_string());
    rec.put("setup", "sub_ids", n);
    rec.put("setup", "size_bound", size_bound(&w).map(|b| b.to_string()));
    rec.put("setup", "qualified", qualified);
    let enc = (0..w.n())
        .map(|_| {
            let dk = Scalar::random(&mut rng);
            EncKeyPair { ek: GroupElement::base_exp(&dk), dk }
        })
        .collect();
    let mut net = Network { cfg, owners, enc, t, rng };

    let mut ledger = Ledger::new();
    let (mut key, e0) = net.dkg()?;
    rec.put("genesis", "exp_key_dkg", e0);
    let first_key = key.clone();
    let genesis_id = ledger.publish_genesis(0, &CheckpointTx::genesis(key[0].pk, digest(b"CKP-GENESIS", cfg.seed, 0)));
    let mut txs = vec![genesis_id];
    let mut checkpoints = Vec::new();
    for e in 1..=epochs {
        let phase = format!("epoch-{e}");
        let (next, e_key) = net.dkg()?;
        let ckp = digest(b"CKP-BLOCK", cfg.seed, e);
        let body = build_tx_body(txs.last().expect("genesis"), &next[0].pk, &ckp)?;
        let (nonce, e_nonce) = net.dkg()?;
        let (sig, e_sign) = metered(|| threshold_sign(&key, &nonce, &body, t));
        let tx = CheckpointTx { input_ref: *txs.last().expect("genesis"), output_key: next[0].pk, op_return: ckp, sig: sig? };
        txs.push(ledger.submit(1, &tx)?);
        checkpoints.push(ckp);
        rec.put(&phase, "exp_key_dkg", e_key);
        rec.put(&phase, "exp_nonce_dkg", e_nonce);
        rec.put(&phase, "exp_sign", e_sign);
        rec.put(&phase, "tx_bytes", TX_LEN);
        if let Some(ms) = clock.lap() {
            rec.put(&phase, "wall_ms", ms);
        }
        key = next;
    }

    let bootstrapped = bootstrap_verify(ledger.board(), &genesis_id)?;
    if Some(&bootstrapped) != checkpoints.last() {
        return Err(Error::Invariant("bootstrap: chain tip is not the latest checkpoint".into()));
    }
    if ledger.tx_count() != epochs as usize + 1 {
        return Err(Error::Invariant("ledger: expected exactly one transaction per epoch".into()));
    }

    // A long-range attacker holding the first configuration's shares re-spends genesis.
    let (nonce, _) = net.dkg()?;
    let stale_q = GroupElement::base_exp(&Scalar::random(&mut net.rng));
    let ckp = digest(b"CKP-FORK", cfg.seed, 1);
    let body = build_tx_body(&genesis_id, &stale_q, &ckp)?;
    let fork = CheckpointTx {
        input_ref: genesis_id,
        output_key: stale_q,
        op_return: ckp,
        sig: threshold_sign(&first_key, &nonce, &body, t)?,
    };
    match ledger.submit(2, &fork) {
        Err(Error::Ledger(LedgerFault::InputSpent)) => {}
        Ok(_) => return Err(Error::Invariant("long-range: a stale key re-spent a consumed output".into())),
        Err(e) => return Err(e),
    }
    let mut board = ledger.board().clone();
    board.post(2, TX_KEYWORD, fork.to_bytes());
    let fork_detected = matches!(bootstrap_verify(&board, &genesis_id), Err(Error::Chain { fault: ChainFault::Fork, .. }));
    if !fork_detected {
        return Err(Error::Invariant("bootstrap: a forged fork went unnoticed".into()));
    }

    rec.put("chain", "tx_count", ledger.tx_count());
    rec.put("chain", "broadcast_bytes", ledger.board().stored_bytes());
    rec.put("verdict", "bootstrap", true);
    rec.put("verdict", "long_range_rejected", true);
    rec.put("verdict", "fork_detected", fork_detected);
    let detail = CheckpointDetail { allocation: alloc, txs, checkpoints, bootstrapped };
    Ok(rec.finish(Traffic::new(false), Detail::Checkpoint(detail)))
}
