//! The three-round any-trust DKG.
//!
//! Round 1: a sortition-elected "deal" committee broadcasts evaluation
//! commitments and multi-recipient ciphertexts of its shares. Round 2: every
//! node checks each deal with a dual-code test and multicasts verifiable
//! complaints about shares that do not match their commitments. Round 3: an
//! "agree" committee broadcasts the deduplicated valid complaints, after which
//! every node derives the same qualified set and key.

mod faults;
mod messages;
mod node;

use crate::committee::Selection;
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::keys::PublicKeys;
use crate::mre::verify_decryption;

pub use faults::{DealFault, ForgeMode, Targets};
pub use messages::{
    Complaint, ComplaintList, ComplaintMulticast, DealTranscript, DkgOutput, COMPLAINT_LEN, ROUND_AGREE,
    ROUND_COMPLAIN, ROUND_DEAL,
};
pub use node::{NodeState, Stage};

/// Number of signing rounds each node's forward-secure key covers.
pub const SIG_ROUNDS: u32 = 3;

pub const EVENT_DEAL: &str = "deal";
pub const EVENT_AGREE: &str = "agree";

#[derive(Clone, Debug)]
pub struct SessionParams {
    pub n: usize,
    pub t: usize,
    pub session_id: [u8; 32],
    pub rand: Vec<u8>,
    pub selection: Selection,
    /// `roster[i - 1]` holds node `i`'s public keys.
    pub roster: Vec<PublicKeys>,
}

impl SessionParams {
    pub fn new(
        n: usize,
        t: usize,
        session_id: [u8; 32],
        rand: Vec<u8>,
        selection: Selection,
        roster: Vec<PublicKeys>,
    ) -> Result<Self> {
        if n < 2 * t + 1 {
            return Err(Error::InvalidParameter(format!("need n >= 2t+1, got n={n}, t={t}")));
        }
        if roster.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: roster.len() });
        }
        Ok(SessionParams { n, t, session_id, rand, selection, roster })
    }

    pub fn member(&self, index: u32) -> Option<&PublicKeys> {
        (index as usize).checked_sub(1).and_then(|i| self.roster.get(i))
    }

    pub fn eks(&self) -> Vec<GroupElement> {
        self.roster.iter().map(|p| p.ek).collect()
    }
}

/// A complaint is valid iff the decryption proof verifies against the dealer's
/// broadcast ciphertext and the proven plaintext is not the committed share.
pub fn verify_complaint(c: &Complaint, deal: &DealTranscript, ek_complainer: &GroupElement) -> bool {
    if c.dealer != deal.dealer {
        return false;
    }
    let i = c.complainer as usize;
    let (Some(payload), Some(cm)) = (
        i.checked_sub(1).and_then(|k| deal.ct.payloads.get(k)),
        deal.cm.cms.get(i).filter(|_| i >= 1),
    ) else {
        return false;
    };
    if !verify_decryption(&deal.ct.c0, payload, c.complainer, ek_complainer, &c.proof) {
        return false;
    }
    match c.proof.m_scalar() {
        None => true,
        Some(m) => GroupElement::base_exp(&m) != *cm,
    }
}

/// Runs an all-honest session over fully connected nodes: every broadcast and
/// multicast reaches everyone in index order.
pub fn run_honest(nodes: &mut [NodeState]) -> Result<Vec<DkgOutput>> {
    let deals = nodes
        .iter_mut()
        .map(|n| Ok(n.round1_deal()?.map(std::sync::Arc::new)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    let multicasts = nodes
        .iter_mut()
        .map(|n| n.round2_verify(&deals))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    let lists = nodes
        .iter_mut()
        .map(|n| n.round3_aggregate(&multicasts))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    nodes.iter_mut().map(|n| n.finalize(&lists)).collect()
}
