//! Checkpoint transactions, threshold Schnorr signing with a DKG-generated
//! nonce, and chain verification for bootstrapping clients.

use std::collections::{BTreeMap, BTreeSet};

use crate::broadcast::{BulletinBoard, Pbb};
use crate::codec::{Reader, Writer};
use crate::error::{ChainFault, Error, LedgerFault, Result};
use crate::group::{hash_to_scalar, multi_exp, GroupElement, Scalar};
use crate::hash::sha256;
use crate::sharing::lagrange_coeffs;
use crate::weights::Allocation;

pub const TX_KEYWORD: &[u8] = b"CKP-TX";
pub const TX_LEN: usize = 32 + 33 + 32 + 33 + 32;
pub const MAX_OP_RETURN: usize = 80;

pub type TxId = [u8; 32];

/// The validator set of one epoch and the key it controls.
#[derive(Clone, Debug)]
pub struct Configuration {
    pub epoch: u32,
    pub validators: Vec<(u32, u128)>,
    pub allocation: Allocation,
    pub q: GroupElement,
    /// `pk_shares[k - 1]` belongs to sub-ID `k`.
    pub pk_shares: Vec<GroupElement>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchnorrSig {
    pub r: GroupElement,
    pub z: Scalar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckpointTx {
    pub input_ref: TxId,
    pub output_key: GroupElement,
    pub op_return: [u8; 32],
    pub sig: SchnorrSig,
}

impl CheckpointTx {
    /// The unsigned root of a chain. Its signature fields are placeholders.
    pub fn genesis(q: GroupElement, digest: [u8; 32]) -> Self {
        CheckpointTx {
            input_ref: [0; 32],
            output_key: q,
            op_return: digest,
            sig: SchnorrSig { r: GroupElement::identity(), z: Scalar::ZERO },
        }
    }

    pub fn body(&self) -> Vec<u8> {
        encode_body(&self.input_ref, &self.output_key, &self.op_return)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_capacity(TX_LEN);
        w.bytes(&self.body()).point(&self.sig.r).scalar(&self.sig.z);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let tx = CheckpointTx {
            input_ref: r.array()?,
            output_key: r.point()?,
            op_return: r.array()?,
            sig: SchnorrSig { r: r.point()?, z: r.scalar()? },
        };
        r.finish()?;
        Ok(tx)
    }

    pub fn id(&self) -> TxId {
        sha256(&self.to_bytes())
    }
}

fn encode_body(prev: &TxId, q_next: &GroupElement, op_return: &[u8; 32]) -> Vec<u8> {
    let mut w = Writer::with_capacity(97);
    w.bytes(prev).point(q_next).bytes(op_return);
    w.finish()
}

pub fn build_tx_body(prev: &TxId, q_next: &GroupElement, ckp: &[u8]) -> Result<Vec<u8>> {
    if ckp.len() > MAX_OP_RETURN {
        return Err(Error::OversizedOpReturn(ckp.len()));
    }
    let op_return: [u8; 32] = ckp
        .try_into()
        .map_err(|_| Error::InvalidParameter(format!("checkpoint digest is {} bytes, expected 32", ckp.len())))?;
    Ok(encode_body(prev, q_next, &op_return))
}

pub fn schnorr_challenge(r: &GroupElement, pk: &GroupElement, msg: &[u8]) -> Scalar {
    let mut buf = Vec::with_capacity(66 + msg.len());
    buf.extend_from_slice(&r.to_bytes());
    buf.extend_from_slice(&pk.to_bytes());
    buf.extend_from_slice(msg);
    hash_to_scalar(b"SCHNORR", &buf)
}

pub fn schnorr_verify(pk: &GroupElement, msg: &[u8], sig: &SchnorrSig) -> bool {
    let c = schnorr_challenge(&sig.r, pk, msg);
    multi_exp(&[GroupElement::generator(), *pk], &[sig.z, -c]) == sig.r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartialSig {
    pub signer: u32,
    pub z: Scalar,
    pub r: GroupElement,
}

/// `z_i = k_i + c·x_i` with `c` bound to the common nonce `r` and the group key `pk`.
pub fn partial_sign(signer: u32, k_i: &Scalar, r: &GroupElement, x_i: &Scalar, pk: &GroupElement, msg: &[u8]) -> PartialSig {
    let c = schnorr_challenge(r, pk, msg);
    PartialSig { signer, z: *k_i + c * x_i, r: *r }
}

/// `g^{z_i} = R_i · pk_i^c`.
pub fn verify_partial(ps: &PartialSig, r_i: &GroupElement, pk_i: &GroupElement, c: &Scalar) -> bool {
    multi_exp(&[GroupElement::generator(), *pk_i], &[ps.z, -*c]) == *r_i
}

/// Interpolates the first `t + 1` partials by signer index at zero.
pub fn combine(partials: &[PartialSig], t: usize) -> Result<SchnorrSig> {
    let mut by_signer = BTreeMap::new();
    for ps in partials {
        if by_signer.insert(ps.signer, ps).is_some() {
            return Err(Error::DuplicateIndex(ps.signer));
        }
    }
    if by_signer.len() < t + 1 {
        return Err(Error::InsufficientShares { needed: t + 1, have: by_signer.len() });
    }
    let chosen: Vec<&PartialSig> = by_signer.into_values().take(t + 1).collect();
    let r = chosen[0].r;
    if chosen.iter().any(|p| p.r != r) {
        return Err(Error::InvalidParameter("partials disagree on the nonce commitment".into()));
    }
    let idx: Vec<u32> = chosen.iter().map(|p| p.signer).collect();
    let lambda = lagrange_coeffs(&idx, 0)?;
    Ok(SchnorrSig { r, z: chosen.iter().map(|p| lambda[&p.signer] * p.z).sum() })
}

/// Spend-chain rules over a bulletin board: each output is spent at most once,
/// by a transaction signed under that output's key.
#[derive(Clone, Debug, Default)]
pub struct Ledger {
    pbb: Pbb,
    outputs: BTreeMap<TxId, GroupElement>,
    spent: BTreeSet<TxId>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn board(&self) -> &Pbb {
        &self.pbb
    }

    /// Mutable access to the underlying board, bypassing the spend rules.
    pub fn board_mut(&mut self) -> &mut Pbb {
        &mut self.pbb
    }

    pub fn publish_genesis(&mut self, poster: u32, tx: &CheckpointTx) -> TxId {
        let id = tx.id();
        self.outputs.insert(id, tx.output_key);
        self.pbb.post(poster, TX_KEYWORD, tx.to_bytes());
        id
    }

    pub fn submit(&mut self, poster: u32, tx: &CheckpointTx) -> Result<TxId> {
        let key = self.outputs.get(&tx.input_ref).ok_or(Error::Ledger(LedgerFault::UnknownInput))?;
        if self.spent.contains(&tx.input_ref) {
            return Err(Error::Ledger(LedgerFault::InputSpent));
        }
        if !schnorr_verify(key, &tx.body(), &tx.sig) {
            return Err(Error::Ledger(LedgerFault::InvalidSignature));
        }
        let id = tx.id();
        self.spent.insert(tx.input_ref);
        self.outputs.insert(id, tx.output_key);
        self.pbb.post(poster, TX_KEYWORD, tx.to_bytes());
        Ok(id)
    }

    pub fn tx_count(&self) -> usize {
        self.pbb.retrieve(0, self.pbb.counter(), TX_KEYWORD).len()
    }
}

/// Walks the spend chain from `genesis` and returns the latest checkpoint digest.
///
/// The transaction at depth `k` is epoch `k`'s checkpoint; errors name it.
pub fn bootstrap_verify<B: BulletinBoard + ?Sized>(pbb: &B, genesis: &TxId) -> Result<[u8; 32]> {
    let records = pbb.retrieve(0, pbb.counter(), TX_KEYWORD);
    let mut children: BTreeMap<TxId, Vec<&[u8]>> = BTreeMap::new();
    let mut root = None;
    for e in &records {
        if e.value.len() >= 32 {
            let parent: TxId = e.value[..32].try_into().expect("32 bytes");
            children.entry(parent).or_default().push(&e.value);
        }
        if root.is_none() && sha256(&e.value) == *genesis {
            root = CheckpointTx::from_bytes(&e.value).ok();
        }
    }
    let mut cur = root.ok_or(Error::Chain { epoch: 0, fault: ChainFault::MissingGenesis })?;
    let mut cur_id = *genesis;
    for epoch in 1u32.. {
        let Some(raw) = children.get(&cur_id) else { break };
        let parsed: Vec<Option<CheckpointTx>> = raw.iter().map(|b| CheckpointTx::from_bytes(b).ok()).collect();
        let valid: Vec<CheckpointTx> = parsed
            .iter()
            .flatten()
            .filter(|tx| schnorr_verify(&cur.output_key, &tx.body(), &tx.sig))
            .map(|tx| (tx.id(), *tx))
            .collect::<BTreeMap<_, _>>()
            .into_values()
            .collect();
        let fault = match valid.len() {
            1 => None,
            0 if parsed.iter().any(Option::is_some) => Some(ChainFault::InvalidSignature),
            0 => Some(ChainFault::Malformed),
            _ => Some(ChainFault::Fork),
        };
        if let Some(fault) = fault {
            return Err(Error::Chain { epoch, fault });
        }
        cur = valid[0];
        cur_id = cur.id();
    }
    Ok(cur.op_return)
}
