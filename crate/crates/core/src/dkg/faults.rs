//! Deviations from the honest protocol, used by the simulator's adversary.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::messages::{Complaint, ComplaintList, ComplaintMulticast, DealTranscript};
use super::node::{NodeState, Stage};
use crate::error::Result;
use crate::fsig::{fs_sign, fs_update, Signature};
use crate::mre::prove_decryption;

/// Which recipients a malformed deal targets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Targets {
    All,
    Only(BTreeSet<u32>),
}

impl Targets {
    pub fn contains(&self, i: u32) -> bool {
        match self {
            Targets::All => true,
            Targets::Only(s) => s.contains(&i),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DealFault {
    None,
    /// Encrypts `f(i) + 1` instead of `f(i)`.
    ShiftShares(Targets),
    /// Encrypts a block that is not a canonical scalar.
    UndecodableShares(Targets),
    /// Commits to a polynomial of degree `t + 1`.
    HighDegree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForgeMode {
    /// A correct decryption proof of a share that matches its commitment.
    MatchingShare,
    /// A decryption proof whose claimed plaintext has been altered.
    AlteredShare,
}

impl NodeState {
    pub fn round1_deal_with(&mut self, fault: &DealFault) -> Result<Option<DealTranscript>> {
        self.expect(Stage::Deal, "round1_deal")?;
        let deal = match self.deal_credential() {
            Some(cred) => Some(self.build_deal(cred, fault)?),
            None => None,
        };
        self.finish_round1(deal.as_ref());
        Ok(deal)
    }

    /// Two distinct validly signed deals, if this node is a dealer.
    pub fn round1_double_deal(&mut self) -> Result<Option<(DealTranscript, DealTranscript)>> {
        self.expect(Stage::Deal, "round1_deal")?;
        let pair = match self.deal_credential() {
            Some(cred) => Some((self.build_deal(cred, &DealFault::None)?, self.build_deal(cred, &DealFault::None)?)),
            None => None,
        };
        self.finish_round1(pair.as_ref().map(|(a, _)| a));
        Ok(pair)
    }

    /// Attempts a signature under the given round key, as a corrupting adversary would.
    pub fn try_sign_round(&self, round: u32, msg: &[u8]) -> Result<Signature> {
        fs_sign(&self.keys().sig, round, msg)
    }

    /// Advances through the current stage without sending anything.
    pub fn skip_round(&mut self) {
        let next = match self.stage() {
            Stage::Deal => {
                fs_update(&mut self.keys_mut().sig);
                Stage::Verify
            }
            Stage::Verify => Stage::Aggregate,
            Stage::Aggregate => {
                fs_update(&mut self.keys_mut().sig);
                Stage::Finalize
            }
            Stage::Finalize | Stage::Done => Stage::Done,
        };
        self.set_stage(next);
    }

    /// Complaints against every other dealer whose share this node can open.
    /// Against an honest dealer none of them is valid.
    pub fn forge_complaints(&self, deals: &[Arc<DealTranscript>], mode: ForgeMode) -> Vec<Complaint> {
        let i = self.index();
        let enc = &self.keys().enc;
        deals
            .iter()
            .filter(|d| d.dealer != i)
            .filter_map(|d| {
                let payload = d.ct.payloads.get(i as usize - 1)?;
                let mut proof = prove_decryption(&d.ct.c0, payload, i, &enc.dk, &enc.ek);
                if mode == ForgeMode::AlteredShare {
                    proof.m[31] ^= 1;
                }
                Some(Complaint { dealer: d.dealer, complainer: i, proof })
            })
            .collect()
    }

    /// Round 3 for a corrupted "agree" member that pads its list with extra
    /// complaints and, optionally, a duplicate of its first valid one.
    pub fn round3_with_extra(
        &mut self,
        multicasts: &[ComplaintMulticast],
        extra: &[Complaint],
        duplicate: bool,
    ) -> Result<Option<ComplaintList>> {
        self.round3_inner(multicasts, extra, duplicate)
    }
}
