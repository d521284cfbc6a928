//! Committee election: VRF sortition, or a designated committee for tests.

use std::collections::{BTreeMap, BTreeSet};

use crate::group::GroupElement;
use crate::vrf::{sortition, sortition_verify, Ratio, VrfCredential, VrfKeyPair};

/// How members of a per-event committee are chosen.
///
/// `Designated` is a non-protocol test mode: membership is fixed up front and
/// credentials are all-zero placeholders.
#[derive(Clone, Debug)]
pub enum Selection {
    Sortition { ratio: Ratio },
    Designated { members: BTreeMap<String, BTreeSet<u32>> },
}

impl Selection {
    pub fn sortition(ratio: Ratio) -> Self {
        Selection::Sortition { ratio }
    }

    pub fn designated<I, S>(events: I) -> Self
    where
        I: IntoIterator<Item = (S, BTreeSet<u32>)>,
        S: Into<String>,
    {
        Selection::Designated { members: events.into_iter().map(|(e, m)| (e.into(), m)).collect() }
    }

    pub fn is_designated(&self) -> bool {
        matches!(self, Selection::Designated { .. })
    }

    pub fn select(&self, keys: &VrfKeyPair, index: u32, rand: &[u8], event: &str) -> Option<VrfCredential> {
        match self {
            Selection::Sortition { ratio } => sortition(keys, rand, event, *ratio),
            Selection::Designated { members } => members
                .get(event)
                .is_some_and(|m| m.contains(&index))
                .then(VrfCredential::designated),
        }
    }

    pub fn verify(&self, rvk: &GroupElement, index: u32, rand: &[u8], event: &str, cred: &VrfCredential) -> bool {
        match self {
            Selection::Sortition { ratio } => sortition_verify(rvk, rand, *ratio, event, cred),
            Selection::Designated { members } => members.get(event).is_some_and(|m| m.contains(&index)),
        }
    }
}
