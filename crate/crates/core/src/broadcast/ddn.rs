use std::collections::{BTreeMap, BTreeSet};

use crate::hash::sha256;

pub type BlockId = [u8; 32];

/// Size in bytes of one provider registration record (node id and block id).
pub const REGISTRATION_LEN: usize = 4 + 32;

/// Content-addressed block provisioning. Whether a provider serves requests is
/// set by the simulator through [`Ddn::set_active`].
#[derive(Clone, Debug, Default)]
pub struct Ddn {
    blocks: BTreeMap<BlockId, Vec<u8>>,
    registry: BTreeMap<BlockId, BTreeSet<u32>>,
    inactive: BTreeSet<u32>,
    transferred: usize,
    registrations: usize,
}

impl Ddn {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `node` as a provider of `block`; holding the bytes is the precondition.
    pub fn register(&mut self, node: u32, block: &[u8]) -> BlockId {
        let bid = sha256(block);
        self.blocks.entry(bid).or_insert_with(|| block.to_vec());
        if self.registry.entry(bid).or_default().insert(node) {
            self.registrations += 1;
        }
        bid
    }

    pub fn set_active(&mut self, node: u32, active: bool) {
        if active {
            self.inactive.remove(&node);
        } else {
            self.inactive.insert(node);
        }
    }

    pub fn providers(&self, bid: &BlockId) -> Option<&BTreeSet<u32>> {
        self.registry.get(bid)
    }

    /// The block, if some registered provider is active.
    pub fn retrieve(&mut self, bid: &BlockId) -> Option<Vec<u8>> {
        let serving = self.registry.get(bid)?.iter().any(|p| !self.inactive.contains(p));
        if !serving {
            return None;
        }
        let block = self.blocks.get(bid)?.clone();
        self.transferred += block.len();
        Some(block)
    }

    /// Block bytes served to retrieving nodes.
    pub fn transferred_bytes(&self) -> usize {
        self.transferred
    }

    pub fn registration_bytes(&self) -> usize {
        self.registrations * REGISTRATION_LEN
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provider_activity_decides_retrieval() {
        let mut ddn = Ddn::new();
        let bid = ddn.register(1, b"block");
        assert_eq!(ddn.retrieve(&bid).as_deref(), Some(&b"block"[..]));
        assert_eq!(ddn.retrieve(&[0; 32]), None);
        ddn.register(2, b"block");
        ddn.register(3, b"block");
        for mask in 0u8..8 {
            for p in 0..3 {
                ddn.set_active(p + 1, mask & (1 << p) != 0);
            }
            assert_eq!(ddn.retrieve(&bid).is_some(), mask != 0, "mask {mask:03b}");
        }
        assert_eq!(ddn.registration_bytes(), 3 * REGISTRATION_LEN);
        assert_eq!(ddn.transferred_bytes(), 5 * 8);
    }
}
