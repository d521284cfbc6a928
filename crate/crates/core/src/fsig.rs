//! Bounded-round forward-secure signatures: one Schnorr key per round under a
//! single verification record, erased as rounds advance.

use rand::{CryptoRng, RngCore};

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::group::{hash_to_scalar, multi_exp, GroupElement, Scalar};

pub const SIGNATURE_LEN: usize = 33 + 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FsVerifyKey {
    round_keys: Vec<GroupElement>,
}

impl FsVerifyKey {
    pub fn rounds(&self) -> u32 {
        self.round_keys.len() as u32
    }

    fn key(&self, round: u32) -> Option<&GroupElement> {
        (round as usize).checked_sub(1).and_then(|i| self.round_keys.get(i))
    }

    pub fn write(&self, w: &mut Writer) {
        w.u32(self.round_keys.len() as u32);
        for k in &self.round_keys {
            w.point(k);
        }
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        let n = r.count(33)?;
        let round_keys = (0..n).map(|_| r.point()).collect::<Result<_>>()?;
        Ok(FsVerifyKey { round_keys })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Signature {
    pub r: GroupElement,
    pub z: Scalar,
}

impl Signature {
    pub fn write(&self, w: &mut Writer) {
        w.point(&self.r).scalar(&self.z);
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        Ok(Signature { r: r.point()?, z: r.scalar()? })
    }
}

#[derive(Clone, Debug)]
pub struct EpochSigKeys {
    vk: FsVerifyKey,
    per_round: Vec<Option<Scalar>>,
    current: u32,
}

impl EpochSigKeys {
    pub fn vk(&self) -> &FsVerifyKey {
        &self.vk
    }

    pub fn current(&self) -> u32 {
        self.current
    }

    /// Rounds whose signing key is still held.
    pub fn retained_rounds(&self) -> Vec<u32> {
        self.per_round
            .iter()
            .enumerate()
            .filter_map(|(i, k)| k.map(|_| i as u32 + 1))
            .collect()
    }
}

pub fn fs_keygen<R: RngCore + CryptoRng + ?Sized>(rounds: u32, rng: &mut R) -> EpochSigKeys {
    assert!(rounds >= 1, "at least one round");
    let per_round: Vec<_> = (0..rounds).map(|_| Scalar::random(rng)).collect();
    let round_keys = per_round.iter().map(GroupElement::base_exp).collect();
    EpochSigKeys {
        vk: FsVerifyKey { round_keys },
        per_round: per_round.into_iter().map(Some).collect(),
        current: 1,
    }
}

fn challenge(round: u32, pk: &GroupElement, r: &GroupElement, msg: &[u8]) -> Scalar {
    let mut buf = Vec::with_capacity(4 + 66 + msg.len());
    buf.extend_from_slice(&round.to_be_bytes());
    buf.extend_from_slice(&pk.to_bytes());
    buf.extend_from_slice(&r.to_bytes());
    buf.extend_from_slice(msg);
    hash_to_scalar(b"FS-SIG", &buf)
}

pub fn fs_sign(keys: &EpochSigKeys, round: u32, msg: &[u8]) -> Result<Signature> {
    let unavailable = Error::KeyUnavailable { round, current: keys.current };
    if round != keys.current {
        return Err(unavailable);
    }
    let sk = keys
        .per_round
        .get(round as usize - 1)
        .copied()
        .flatten()
        .ok_or(unavailable)?;
    let pk = keys.vk.key(round).expect("key present for held round");
    let mut seed = sk.to_bytes().to_vec();
    seed.extend_from_slice(msg);
    let k = hash_to_scalar(b"FS-NONCE", &seed);
    let r = GroupElement::base_exp(&k);
    let z = k + challenge(round, pk, &r, msg) * sk;
    Ok(Signature { r, z })
}

/// Erases the current round's key and moves to the next round.
pub fn fs_update(keys: &mut EpochSigKeys) {
    if let Some(slot) = keys.per_round.get_mut(keys.current as usize - 1) {
        *slot = None;
    }
    keys.current += 1;
}

pub fn fs_verify(vk: &FsVerifyKey, round: u32, sig: &Signature, msg: &[u8]) -> bool {
    let Some(pk) = vk.key(round) else { return false };
    let c = challenge(round, pk, &sig.r, msg);
    multi_exp(&[GroupElement::generator(), *pk], &[sig.z, -c]) == sig.r
}
