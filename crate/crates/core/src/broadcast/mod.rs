//! Extended broadcast over a bulletin board and a data-dispersal network.
//!
//! Round 1: each sender posts the hash of its value and multicasts the value.
//! Round 2: members of an honest-majority "check" committee post a bitvector
//! of which senders' values they received intact. Round 3: a sender is final
//! when a strict majority of valid votes marks it valid; receivers holding a
//! final value register it on the DDN, and the rest fetch it from there.

mod ddn;
mod pbb;

use std::collections::{BTreeMap, BTreeSet};

pub use ddn::{BlockId, Ddn, REGISTRATION_LEN};
pub use pbb::{BulletinBoard, Pbb, PbbEntry};

use crate::codec::Reader;
use crate::committee::Selection;
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::hash::sha256;
use crate::vrf::{VrfCredential, VrfKeyPair, CREDENTIAL_LEN};

pub const EVENT_CHECK: &str = "check";

/// Public parameters of one broadcast instance, shared by every participant.
///
/// `windows[r]` is the board counter when round `r + 1` opened; the driver
/// appends one entry per closed round.
#[derive(Clone, Debug)]
pub struct EbcSession {
    pub sid: [u8; 32],
    senders: Vec<u32>,
    pub rand: Vec<u8>,
    pub selection: Selection,
    /// `rvks[i - 1]` is node `i`'s sortition key.
    pub rvks: Vec<GroupElement>,
    windows: Vec<u64>,
}

impl EbcSession {
    pub fn open<B: BulletinBoard + ?Sized>(
        sid: [u8; 32],
        senders: impl IntoIterator<Item = u32>,
        rand: Vec<u8>,
        selection: Selection,
        rvks: Vec<GroupElement>,
        pbb: &B,
    ) -> Self {
        let senders: BTreeSet<u32> = senders.into_iter().collect();
        EbcSession { sid, senders: senders.into_iter().collect(), rand, selection, rvks, windows: vec![pbb.counter()] }
    }

    /// Senders in index order; bit `k` of a vote refers to `senders()[k]`.
    pub fn senders(&self) -> &[u32] {
        &self.senders
    }

    pub fn close_round<B: BulletinBoard + ?Sized>(&mut self, pbb: &B) {
        self.windows.push(pbb.counter());
    }

    fn window(&self, round: usize) -> Result<(u64, u64)> {
        match (self.windows.get(round - 1), self.windows.get(round)) {
            (Some(&a), Some(&b)) => Ok((a, b)),
            _ => Err(Error::InvalidParameter(format!("broadcast round {round} has not closed"))),
        }
    }

    pub fn keyword(&self, tag: &str) -> Vec<u8> {
        let mut kw = self.sid.to_vec();
        kw.extend_from_slice(tag.as_bytes());
        kw
    }

    pub fn vote_len(&self) -> usize {
        CREDENTIAL_LEN + self.senders.len().div_ceil(8)
    }

    /// First posted block id per sender in the round-1 window.
    fn posted_ids<B: BulletinBoard + ?Sized>(&self, pbb: &B) -> Result<BTreeMap<u32, BlockId>> {
        let (a, b) = self.window(1)?;
        let mut ids = BTreeMap::new();
        for e in pbb.retrieve(a, b, &self.keyword("send")) {
            if self.senders.binary_search(&e.poster).is_ok() {
                if let Ok(bid) = <BlockId>::try_from(e.value.as_slice()) {
                    ids.entry(e.poster).or_insert(bid);
                }
            }
        }
        Ok(ids)
    }
}

/// Round 1 for a sender: posts the block id of `v`. The caller multicasts `v`.
pub fn ebc_send<B: BulletinBoard + ?Sized>(pbb: &mut B, session: &EbcSession, sender: u32, v: &[u8]) -> BlockId {
    let bid = sha256(v);
    pbb.post(sender, &session.keyword("send"), bid.to_vec());
    bid
}

pub fn encode_vote(cred: &VrfCredential, valid: &[bool]) -> Vec<u8> {
    let mut out = cred.to_bytes().to_vec();
    let mut bits = vec![0u8; valid.len().div_ceil(8)];
    for (k, _) in valid.iter().enumerate().filter(|(_, v)| **v) {
        bits[k / 8] |= 0x80 >> (k % 8);
    }
    out.extend_from_slice(&bits);
    out
}

fn decode_vote(bytes: &[u8], senders: usize) -> Option<(VrfCredential, Vec<bool>)> {
    if bytes.len() != CREDENTIAL_LEN + senders.div_ceil(8) {
        return None;
    }
    let mut r = Reader::new(bytes);
    let cred = VrfCredential::read(&mut r).ok()?;
    let bits = r.take(senders.div_ceil(8)).ok()?;
    Some((cred, (0..senders).map(|k| bits[k / 8] & (0x80 >> (k % 8)) != 0).collect()))
}

/// One receiver's progress through a broadcast instance.
#[derive(Clone, Debug)]
pub struct EbcReceiver {
    index: u32,
    vrf: VrfKeyPair,
    bids: BTreeMap<u32, BlockId>,
    held: BTreeMap<u32, Vec<u8>>,
    valid: BTreeMap<u32, bool>,
    finals: BTreeMap<u32, bool>,
}

impl EbcReceiver {
    pub fn new(index: u32, vrf: VrfKeyPair) -> Self {
        EbcReceiver {
            index,
            vrf,
            bids: BTreeMap::new(),
            held: BTreeMap::new(),
            valid: BTreeMap::new(),
            finals: BTreeMap::new(),
        }
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn valid(&self) -> &BTreeMap<u32, bool> {
        &self.valid
    }

    pub fn finals(&self) -> &BTreeMap<u32, bool> {
        &self.finals
    }

    /// Round 2: checks the multicast values against the posted ids and, if
    /// elected to the check committee, posts a vote. Returns the vote's counter.
    pub fn vote<B: BulletinBoard + ?Sized>(
        &mut self,
        pbb: &mut B,
        session: &EbcSession,
        mut received: BTreeMap<u32, Vec<u8>>,
    ) -> Result<Option<u64>> {
        self.bids = session.posted_ids(pbb)?;
        for &j in session.senders() {
            let ok = match (received.remove(&j), self.bids.get(&j)) {
                (Some(v), Some(bid)) if sha256(&v) == *bid => {
                    self.held.insert(j, v);
                    true
                }
                _ => false,
            };
            self.valid.insert(j, ok);
        }
        let Some(cred) = session.selection.select(&self.vrf, self.index, &session.rand, EVENT_CHECK) else {
            return Ok(None);
        };
        let bits: Vec<bool> = session.senders().iter().map(|j| self.valid[j]).collect();
        Ok(Some(pbb.post(self.index, &session.keyword(EVENT_CHECK), encode_vote(&cred, &bits))))
    }

    /// Round 3: tallies the committee's votes and registers final values held locally.
    pub fn finalize<B: BulletinBoard + ?Sized>(
        &mut self,
        pbb: &B,
        session: &EbcSession,
        ddn: &mut Ddn,
    ) -> Result<&BTreeMap<u32, bool>> {
        let (a, b) = session.window(2)?;
        let senders = session.senders();
        let mut voters = BTreeSet::new();
        let mut tally = vec![0usize; senders.len()];
        for e in pbb.retrieve(a, b, &session.keyword(EVENT_CHECK)) {
            if voters.contains(&e.poster) {
                continue;
            }
            let Some(rvk) = (e.poster as usize).checked_sub(1).and_then(|i| session.rvks.get(i)) else { continue };
            let Some((cred, bits)) = decode_vote(&e.value, senders.len()) else { continue };
            if !session.selection.verify(rvk, e.poster, &session.rand, EVENT_CHECK, &cred) {
                continue;
            }
            voters.insert(e.poster);
            for (t, bit) in tally.iter_mut().zip(bits) {
                *t += bit as usize;
            }
        }
        let threshold = voters.len() / 2 + 1;
        for (k, &j) in senders.iter().enumerate() {
            let fin = tally[k] >= threshold;
            self.finals.insert(j, fin);
            if fin && self.valid.get(&j) == Some(&true) {
                ddn.register(self.index, &self.held[&j]);
            }
        }
        Ok(&self.finals)
    }

    /// The delivered value per sender, fetching final values this receiver
    /// did not get directly.
    pub fn output(&self, session: &EbcSession, ddn: &mut Ddn) -> Result<BTreeMap<u32, Option<Vec<u8>>>> {
        let mut out = BTreeMap::new();
        for &j in session.senders() {
            let value = match (self.finals.get(&j), self.held.get(&j)) {
                (Some(true), Some(v)) => Some(v.clone()),
                (Some(true), None) => {
                    let fetched = self.bids.get(&j).and_then(|bid| ddn.retrieve(bid));
                    Some(fetched.ok_or(Error::RetrievalFailed { sender: j })?)
                }
                _ => None,
            };
            out.insert(j, value);
        }
        Ok(out)
    }
}
