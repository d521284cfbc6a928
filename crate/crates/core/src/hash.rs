use sha2::{Digest, Sha256};

/// SHA-256 over `len(tag) ‖ tag ‖ parts...`.
pub fn tagged_hash(tag: &[u8], parts: &[&[u8]]) -> [u8; 32] {
    assert!(tag.len() <= u8::MAX as usize, "domain tag longer than 255 bytes");
    let mut h = Sha256::new();
    h.update([tag.len() as u8]);
    h.update(tag);
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

/// Untagged SHA-256, used for content addressing.
pub fn sha256(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}
