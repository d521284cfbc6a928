use std::collections::BTreeSet;

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::fsig::{Signature, SIGNATURE_LEN};
use crate::group::{GroupElement, Scalar, POINT_LEN, SCALAR_LEN};
use crate::hash::sha256;
use crate::mre::{DecryptionProof, MreCiphertext, PROOF_LEN};
use crate::sharing::EvalCommitment;
use crate::vrf::{VrfCredential, CREDENTIAL_LEN};

pub const ROUND_DEAL: u8 = 1;
pub const ROUND_COMPLAIN: u8 = 2;
pub const ROUND_AGREE: u8 = 3;

pub const COMPLAINT_LEN: usize = 4 + 4 + PROOF_LEN;

/// One dealer's round-1 broadcast. Keeps its wire encoding so that every
/// receiver checks the signature over the exact posted bytes.
#[derive(Clone, Debug)]
pub struct DealTranscript {
    pub session_id: [u8; 32],
    pub dealer: u32,
    pub cred: VrfCredential,
    pub cm: EvalCommitment,
    pub ct: MreCiphertext,
    pub sig: Signature,
    wire: Vec<u8>,
}

impl PartialEq for DealTranscript {
    fn eq(&self, other: &Self) -> bool {
        self.wire == other.wire
    }
}

impl Eq for DealTranscript {}

pub(crate) fn deal_body(
    session_id: &[u8; 32],
    dealer: u32,
    cred: &VrfCredential,
    cm: &EvalCommitment,
    ct: &MreCiphertext,
) -> Vec<u8> {
    let n = ct.payloads.len();
    let mut w = Writer::with_capacity(32 + 1 + 4 + CREDENTIAL_LEN + 4 + (n + 2) * POINT_LEN + n * SCALAR_LEN + SIGNATURE_LEN);
    w.bytes(session_id).u8(ROUND_DEAL).u32(dealer);
    cred.write(&mut w);
    cm.write(&mut w);
    w.point(&ct.c0);
    for p in &ct.payloads {
        w.bytes(p);
    }
    w.finish()
}

impl DealTranscript {
    /// Assembles a transcript from a signed body produced by [`deal_body`].
    pub(crate) fn assemble(
        session_id: [u8; 32],
        dealer: u32,
        cred: VrfCredential,
        cm: EvalCommitment,
        ct: MreCiphertext,
        body: Vec<u8>,
        sig: Signature,
    ) -> Self {
        let mut w = Writer::with_capacity(body.len() + SIGNATURE_LEN);
        w.bytes(&body);
        sig.write(&mut w);
        DealTranscript { session_id, dealer, cred, cm, ct, sig, wire: w.finish() }
    }

    pub fn to_bytes(&self) -> &[u8] {
        &self.wire
    }

    /// The bytes covered by the signature.
    pub fn signed_bytes(&self) -> &[u8] {
        &self.wire[..self.wire.len() - SIGNATURE_LEN]
    }

    pub fn digest(&self) -> [u8; 32] {
        sha256(&self.wire)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let session_id = r.array()?;
        if r.u8()? != ROUND_DEAL {
            return Err(Error::Decode("deal round byte"));
        }
        let dealer = r.u32()?;
        let cred = VrfCredential::read(&mut r)?;
        let cm = EvalCommitment::read(&mut r)?;
        if cm.cms.is_empty() {
            return Err(Error::Decode("empty commitment"));
        }
        let c0 = r.point()?;
        let n = cm.cms.len() - 1;
        let payloads = (0..n).map(|_| r.array()).collect::<Result<_>>()?;
        let sig = Signature::read(&mut r)?;
        r.finish()?;
        Ok(DealTranscript {
            session_id,
            dealer,
            cred,
            cm,
            ct: MreCiphertext { c0, payloads },
            sig,
            wire: bytes.to_vec(),
        })
    }
}

/// A publicly verifiable accusation against `dealer` by `complainer`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Complaint {
    pub dealer: u32,
    pub complainer: u32,
    pub proof: DecryptionProof,
}

impl Complaint {
    pub fn write(&self, w: &mut Writer) {
        w.u32(self.dealer).u32(self.complainer);
        self.proof.write(w);
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        Ok(Complaint { dealer: r.u32()?, complainer: r.u32()?, proof: DecryptionProof::read(r)? })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_capacity(COMPLAINT_LEN);
        self.write(&mut w);
        w.finish()
    }
}

fn write_complaints(w: &mut Writer, complaints: &[Complaint]) {
    w.u32(complaints.len() as u32);
    for c in complaints {
        c.write(w);
    }
}

fn read_complaints(r: &mut Reader<'_>) -> Result<Vec<Complaint>> {
    let n = r.count(COMPLAINT_LEN)?;
    (0..n).map(|_| Complaint::read(r)).collect()
}

/// A node's round-2 complaints, multicast to every participant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplaintMulticast {
    pub session_id: [u8; 32],
    pub sender: u32,
    pub complaints: Vec<Complaint>,
    pub sig: Signature,
}

impl ComplaintMulticast {
    pub(crate) fn body(session_id: &[u8; 32], sender: u32, complaints: &[Complaint]) -> Vec<u8> {
        let mut w = Writer::with_capacity(41 + complaints.len() * COMPLAINT_LEN);
        w.bytes(session_id).u8(ROUND_COMPLAIN).u32(sender);
        write_complaints(&mut w, complaints);
        w.finish()
    }

    pub fn signed_bytes(&self) -> Vec<u8> {
        Self::body(&self.session_id, self.sender, &self.complaints)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(&self.signed_bytes());
        self.sig.write(&mut w);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let session_id = r.array()?;
        if r.u8()? != ROUND_COMPLAIN {
            return Err(Error::Decode("multicast round byte"));
        }
        let sender = r.u32()?;
        let complaints = read_complaints(&mut r)?;
        let sig = Signature::read(&mut r)?;
        r.finish()?;
        Ok(ComplaintMulticast { session_id, sender, complaints, sig })
    }
}

/// An "agree" committee member's deduplicated round-3 broadcast.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplaintList {
    pub session_id: [u8; 32],
    pub sender: u32,
    pub cred: VrfCredential,
    pub complaints: Vec<Complaint>,
    pub sig: Signature,
}

impl ComplaintList {
    pub(crate) fn body(session_id: &[u8; 32], sender: u32, cred: &VrfCredential, complaints: &[Complaint]) -> Vec<u8> {
        let mut w = Writer::with_capacity(41 + CREDENTIAL_LEN + complaints.len() * COMPLAINT_LEN);
        w.bytes(session_id).u8(ROUND_AGREE).u32(sender);
        cred.write(&mut w);
        write_complaints(&mut w, complaints);
        w.finish()
    }

    pub fn signed_bytes(&self) -> Vec<u8> {
        Self::body(&self.session_id, self.sender, &self.cred, &self.complaints)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(&self.signed_bytes());
        self.sig.write(&mut w);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let session_id = r.array()?;
        if r.u8()? != ROUND_AGREE {
            return Err(Error::Decode("list round byte"));
        }
        let sender = r.u32()?;
        let cred = VrfCredential::read(&mut r)?;
        let complaints = read_complaints(&mut r)?;
        let sig = Signature::read(&mut r)?;
        r.finish()?;
        Ok(ComplaintList { session_id, sender, cred, complaints, sig })
    }
}

/// Result of a completed DKG at one node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DkgOutput {
    pub pk: GroupElement,
    /// `pk_shares[i - 1]` belongs to node `i`.
    pub pk_shares: Vec<GroupElement>,
    pub sk_share: Scalar,
    pub qual: BTreeSet<u32>,
    pub disqual: BTreeSet<u32>,
}

impl DkgOutput {
    pub fn pk_share(&self, index: u32) -> Option<&GroupElement> {
        (index as usize).checked_sub(1).and_then(|i| self.pk_shares.get(i))
    }

    /// The public part every honest node must agree on.
    pub fn public_view(&self) -> (GroupElement, &[GroupElement], &BTreeSet<u32>) {
        (self.pk, &self.pk_shares, &self.qual)
    }
}
