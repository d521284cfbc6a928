use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::faults::DealFault;
use super::messages::{deal_body, Complaint, ComplaintList, ComplaintMulticast, DealTranscript, DkgOutput};
use super::{verify_complaint, SessionParams, EVENT_AGREE, EVENT_DEAL};
use crate::error::{Error, Result};
use crate::fsig::{fs_sign, fs_update, fs_verify};
use crate::group::{GroupElement, Scalar, SCALAR_LEN};
use crate::hash::sha256;
use crate::keys::NodeKeys;
use crate::mre::{mre_encrypt_blocks, prove_decryption_shared, unpad};
use crate::sharing::{check_low_degree, commit_evals, dual_code_vector, sample_polynomial, DualCodeVector};
use crate::vrf::VrfCredential;

const SIG_DEAL: u32 = 1;
const SIG_LATER: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Deal,
    Verify,
    Aggregate,
    Finalize,
    Done,
}

impl Stage {
    fn name(self) -> &'static str {
        match self {
            Stage::Deal => "deal",
            Stage::Verify => "verify",
            Stage::Aggregate => "aggregate",
            Stage::Finalize => "finalize",
            Stage::Done => "done",
        }
    }
}

/// One participant's view of a DKG session.
///
/// `deals` holds the transcripts of every dealer in D2 ∪ D3; D1 dealers are
/// only remembered by index.
#[derive(Debug)]
pub struct NodeState {
    params: Arc<SessionParams>,
    index: u32,
    keys: NodeKeys,
    rng: ChaCha20Rng,
    stage: Stage,
    own_deal: Option<[u8; 32]>,
    deals: BTreeMap<u32, Arc<DealTranscript>>,
    d1: BTreeSet<u32>,
    d2: BTreeSet<u32>,
    d3: BTreeSet<u32>,
    shares: BTreeMap<u32, Scalar>,
    verified: HashMap<[u8; 32], bool>,
}

impl NodeState {
    pub fn new(params: Arc<SessionParams>, index: u32, keys: NodeKeys, seed: [u8; 32]) -> Result<Self> {
        let expected = params.member(index).ok_or(Error::IndexOutOfRange(index as usize))?;
        if *expected != keys.public() {
            return Err(Error::InvalidParameter(format!("keys of node {index} do not match the roster")));
        }
        if keys.sig.current() != 1 || keys.sig.vk().rounds() < super::SIG_ROUNDS {
            return Err(Error::InvalidParameter(format!("node {index} needs a fresh 3-round signing key")));
        }
        Ok(NodeState {
            params,
            index,
            keys,
            rng: ChaCha20Rng::from_seed(seed),
            stage: Stage::Deal,
            own_deal: None,
            deals: BTreeMap::new(),
            d1: BTreeSet::new(),
            d2: BTreeSet::new(),
            d3: BTreeSet::new(),
            shares: BTreeMap::new(),
            verified: HashMap::new(),
        })
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn params(&self) -> &SessionParams {
        &self.params
    }

    pub fn keys(&self) -> &NodeKeys {
        &self.keys
    }

    pub fn d1(&self) -> &BTreeSet<u32> {
        &self.d1
    }

    pub fn d2(&self) -> &BTreeSet<u32> {
        &self.d2
    }

    pub fn d3(&self) -> &BTreeSet<u32> {
        &self.d3
    }

    pub fn deal(&self, dealer: u32) -> Option<&Arc<DealTranscript>> {
        self.deals.get(&dealer)
    }

    pub(super) fn expect(&self, stage: Stage, op: &'static str) -> Result<()> {
        if self.stage == stage {
            Ok(())
        } else {
            Err(Error::WrongStage { op, stage: self.stage.name() })
        }
    }

    /// Secret material this node should no longer hold. Empty for an honest node.
    pub fn erasure_audit(&self) -> Vec<String> {
        let current = self.keys.sig.current();
        self.keys
            .sig
            .retained_rounds()
            .into_iter()
            .filter(|&r| r < current)
            .map(|r| format!("node {} retains its round-{r} signing key", self.index))
            .collect()
    }

    pub fn round1_deal(&mut self) -> Result<Option<DealTranscript>> {
        self.round1_deal_with(&DealFault::None)
    }

    pub(super) fn deal_credential(&self) -> Option<VrfCredential> {
        let p = &self.params;
        p.selection.select(&self.keys.vrf, self.index, &p.rand, EVENT_DEAL)
    }

    pub(super) fn finish_round1(&mut self, own: Option<&DealTranscript>) {
        self.own_deal = own.map(DealTranscript::digest);
        fs_update(&mut self.keys.sig);
        self.stage = Stage::Verify;
    }

    /// Samples, commits, encrypts and signs a deal. The polynomial and the
    /// encryption randomness are dropped on return.
    pub(super) fn build_deal(&mut self, cred: VrfCredential, fault: &DealFault) -> Result<DealTranscript> {
        let p = Arc::clone(&self.params);
        let degree = if matches!(fault, DealFault::HighDegree) { p.t + 1 } else { p.t };
        let f = sample_polynomial(degree, &mut self.rng);
        let cm = commit_evals(&f, p.n);
        let blocks: Vec<[u8; SCALAR_LEN]> = (1..=p.n as u32)
            .map(|i| {
                let share = f.eval_at(i as u64);
                match fault {
                    DealFault::ShiftShares(to) if to.contains(i) => (share + Scalar::ONE).to_bytes(),
                    DealFault::UndecodableShares(to) if to.contains(i) => [0xff; SCALAR_LEN],
                    _ => share.to_bytes(),
                }
            })
            .collect();
        let r = Scalar::random(&mut self.rng);
        let ct = mre_encrypt_blocks(&p.eks(), &blocks, &r)?;
        let body = deal_body(&p.session_id, self.index, &cred, &cm, &ct);
        let sig = fs_sign(&self.keys.sig, SIG_DEAL, &body)?;
        Ok(DealTranscript::assemble(p.session_id, self.index, cred, cm, ct, body, sig))
    }

    /// Verifies the agreed round-1 deals and returns the signed complaint
    /// multicast, if any complaint was raised.
    pub fn round2_verify(&mut self, deals: &[Arc<DealTranscript>]) -> Result<Option<ComplaintMulticast>> {
        let complaints = self.round2_complaints(deals)?;
        if complaints.is_empty() {
            return Ok(None);
        }
        self.sign_multicast(complaints).map(Some)
    }

    /// The verification half of [`NodeState::round2_verify`], without signing.
    pub fn round2_complaints(&mut self, deals: &[Arc<DealTranscript>]) -> Result<Vec<Complaint>> {
        self.expect(Stage::Verify, "round2_verify")?;
        let p = Arc::clone(&self.params);
        let perp = dual_code_vector(p.n, p.t, &mut self.rng);
        let mut seen = BTreeSet::new();
        let mut complaints = Vec::new();
        for deal in deals {
            if deal.session_id != p.session_id || seen.contains(&deal.dealer) {
                continue;
            }
            let Some(pk) = p.member(deal.dealer) else { continue };
            let own = self.own_deal.is_some() && self.own_deal == Some(deal.digest());
            if !own && !fs_verify(&pk.vk, SIG_DEAL, &deal.sig, deal.signed_bytes()) {
                continue;
            }
            seen.insert(deal.dealer);
            if !own && !self.well_formed(deal, &perp) {
                self.d1.insert(deal.dealer);
                continue;
            }
            match self.open_share(deal) {
                Ok(share) => {
                    self.d3.insert(deal.dealer);
                    self.shares.insert(deal.dealer, share);
                }
                Err(c) => {
                    self.d2.insert(deal.dealer);
                    complaints.push(c);
                }
            }
            self.deals.insert(deal.dealer, Arc::clone(deal));
        }
        self.stage = Stage::Aggregate;
        Ok(complaints)
    }

    fn well_formed(&self, deal: &DealTranscript, perp: &DualCodeVector) -> bool {
        let p = &self.params;
        let rvk = &p.roster[deal.dealer as usize - 1].rvk;
        deal.cm.cms.len() == p.n + 1
            && deal.ct.payloads.len() == p.n
            && p.selection.verify(rvk, deal.dealer, &p.rand, EVENT_DEAL, &deal.cred)
            && check_low_degree(&deal.cm, perp) == Ok(true)
    }

    /// Decrypts this node's share, or builds a complaint when it is
    /// undecodable or disagrees with the commitment.
    #[allow(clippy::result_large_err)]
    fn open_share(&self, deal: &DealTranscript) -> Result<Scalar, Complaint> {
        let i = self.index;
        let payload = &deal.ct.payloads[i as usize - 1];
        let shared = deal.ct.c0.exp(&self.keys.enc.dk);
        if let Some(m) = Scalar::from_bytes(&unpad(&shared, i, payload)) {
            if GroupElement::base_exp(&m) == deal.cm.cms[i as usize] {
                return Ok(m);
            }
        }
        let enc = &self.keys.enc;
        Err(Complaint {
            dealer: deal.dealer,
            complainer: i,
            proof: prove_decryption_shared(&deal.ct.c0, payload, i, &enc.dk, &enc.ek, shared),
        })
    }

    pub fn sign_multicast(&self, complaints: Vec<Complaint>) -> Result<ComplaintMulticast> {
        let sid = self.params.session_id;
        let body = ComplaintMulticast::body(&sid, self.index, &complaints);
        let sig = fs_sign(&self.keys.sig, SIG_LATER, &body)?;
        Ok(ComplaintMulticast { session_id: sid, sender: self.index, complaints, sig })
    }

    fn complaint_valid(&mut self, c: &Complaint, deal: &DealTranscript) -> bool {
        let Some(complainer) = self.params.member(c.complainer) else { return false };
        let ek = complainer.ek;
        *self
            .verified
            .entry(sha256(&c.to_bytes()))
            .or_insert_with(|| verify_complaint(c, deal, &ek))
    }

    /// If elected to the "agree" committee, returns the signed list of the
    /// first valid complaint per dealer. Always advances the signing key.
    pub fn round3_aggregate(&mut self, multicasts: &[ComplaintMulticast]) -> Result<Option<ComplaintList>> {
        self.round3_inner(multicasts, &[], false)
    }

    pub(super) fn round3_inner(
        &mut self,
        multicasts: &[ComplaintMulticast],
        extra: &[Complaint],
        duplicate: bool,
    ) -> Result<Option<ComplaintList>> {
        self.expect(Stage::Aggregate, "round3_aggregate")?;
        let p = Arc::clone(&self.params);
        let out = match p.selection.select(&self.keys.vrf, self.index, &p.rand, EVENT_AGREE) {
            None => None,
            Some(cred) => {
                let mut complaints = self.collect_complaints(multicasts);
                if duplicate {
                    if let Some(first) = complaints.first().copied() {
                        complaints.push(first);
                    }
                }
                complaints.extend_from_slice(extra);
                if complaints.is_empty() {
                    None
                } else {
                    let body = ComplaintList::body(&p.session_id, self.index, &cred, &complaints);
                    let sig = fs_sign(&self.keys.sig, SIG_LATER, &body)?;
                    Some(ComplaintList { session_id: p.session_id, sender: self.index, cred, complaints, sig })
                }
            }
        };
        fs_update(&mut self.keys.sig);
        self.stage = Stage::Finalize;
        Ok(out)
    }

    fn collect_complaints(&mut self, multicasts: &[ComplaintMulticast]) -> Vec<Complaint> {
        let p = Arc::clone(&self.params);
        let mut ordered: Vec<&ComplaintMulticast> = multicasts.iter().collect();
        ordered.sort_by_key(|m| m.sender);
        let mut named = BTreeSet::new();
        let mut out = Vec::new();
        for mc in ordered {
            if mc.session_id != p.session_id {
                continue;
            }
            let Some(sender) = p.member(mc.sender) else { continue };
            let mut authentic = None;
            for c in &mc.complaints {
                if c.complainer != mc.sender || named.contains(&c.dealer) {
                    continue;
                }
                let Some(deal) = self.deals.get(&c.dealer).cloned() else { continue };
                if !*authentic.get_or_insert_with(|| fs_verify(&sender.vk, SIG_LATER, &mc.sig, &mc.signed_bytes())) {
                    break;
                }
                if self.complaint_valid(c, &deal) {
                    named.insert(c.dealer);
                    out.push(*c);
                }
            }
        }
        out
    }

    /// Derives DisQual from the agreed round-3 lists and outputs the key.
    pub fn finalize(&mut self, lists: &[ComplaintList]) -> Result<DkgOutput> {
        self.expect(Stage::Finalize, "finalize")?;
        let p = Arc::clone(&self.params);
        let mut disqual = BTreeSet::new();
        for list in lists {
            if list.session_id != p.session_id {
                continue;
            }
            let Some(sender) = p.member(list.sender) else { continue };
            let mut authentic = None;
            for c in &list.complaints {
                if disqual.contains(&c.dealer) {
                    continue;
                }
                let Some(deal) = self.deals.get(&c.dealer).cloned() else { continue };
                let ok = *authentic.get_or_insert_with(|| {
                    p.selection.verify(&sender.rvk, list.sender, &p.rand, EVENT_AGREE, &list.cred)
                        && fs_verify(&sender.vk, SIG_LATER, &list.sig, &list.signed_bytes())
                });
                if !ok {
                    break;
                }
                if self.complaint_valid(c, &deal) {
                    disqual.insert(c.dealer);
                }
            }
        }

        let qual: BTreeSet<u32> = self.deals.keys().filter(|j| !disqual.contains(j)).copied().collect();
        if qual.is_empty() {
            self.stage = Stage::Done;
            return Err(Error::QualEmpty);
        }
        let mut pk = GroupElement::identity();
        let mut pk_shares = vec![GroupElement::identity(); p.n];
        let mut sk_share = Scalar::ZERO;
        for j in &qual {
            let share = self.shares.get(j).ok_or_else(|| {
                Error::Invariant(format!("node {} complained about dealer {j}, which stayed qualified", self.index))
            })?;
            sk_share += *share;
            let cms = &self.deals[j].cm.cms;
            pk *= cms[0];
            for (acc, c) in pk_shares.iter_mut().zip(&cms[1..]) {
                *acc *= *c;
            }
        }
        self.stage = Stage::Done;
        if GroupElement::base_exp(&sk_share) != pk_shares[self.index as usize - 1] {
            return Err(Error::Invariant(format!("node {} share does not match its public share", self.index)));
        }
        Ok(DkgOutput { pk, pk_shares, sk_share, qual, disqual })
    }

    pub(super) fn keys_mut(&mut self) -> &mut NodeKeys {
        &mut self.keys
    }

    pub(super) fn set_stage(&mut self, stage: Stage) {
        self.stage = stage;
    }
}
