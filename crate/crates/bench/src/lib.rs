//! Shared fixtures for the criterion benches.

use std::collections::BTreeSet;
use std::sync::Arc;

use anytrust::committee::Selection;
use anytrust::dkg::{NodeState, SessionParams, EVENT_AGREE, EVENT_DEAL, SIG_ROUNDS};
use anytrust::keys::NodeKeys;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Fresh nodes for one session with designated committees of size `s`.
pub fn dkg_nodes(n: usize, t: usize, s: usize, seed: u64) -> Vec<NodeState> {
    let mut rng = rng(seed);
    let keys: Vec<NodeKeys> = (0..n).map(|_| NodeKeys::generate(SIG_ROUNDS, &mut rng)).collect();
    let mut pick = || {
        let mut all: Vec<u32> = (1..=n as u32).collect();
        all.shuffle(&mut rng);
        all.into_iter().take(s).collect::<BTreeSet<u32>>()
    };
    let selection = Selection::designated([(EVENT_DEAL, pick()), (EVENT_AGREE, pick())]);
    let roster = keys.iter().map(NodeKeys::public).collect();
    let params = Arc::new(SessionParams::new(n, t, rng.gen(), b"bench".to_vec(), selection, roster).expect("params"));
    keys.into_iter()
        .zip(1u32..)
        .map(|(k, i)| NodeState::new(Arc::clone(&params), i, k, rng.gen()).expect("node"))
        .collect()
}
