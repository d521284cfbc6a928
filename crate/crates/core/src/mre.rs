//! Multi-recipient hashed ElGamal with shared randomness, plus DLEQ proofs of
//! correct decryption.

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::group::{hash_to_scalar, multi_exp, GroupElement, Scalar, SCALAR_LEN};
use crate::hash::tagged_hash;

pub const PROOF_LEN: usize = 32 + 33 + 32 + 32;

#[derive(Clone, Debug)]
pub struct EncKeyPair {
    pub ek: GroupElement,
    pub dk: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MreCiphertext {
    pub c0: GroupElement,
    pub payloads: Vec<[u8; SCALAR_LEN]>,
}

/// Pad for recipient `index` (1-based) derived from the shared value `ek^r`.
///
/// The recipient index is hashed in so that sub-IDs sharing one encryption key
/// receive independent pads.
pub fn mre_pad(shared: &GroupElement, index: u32) -> [u8; SCALAR_LEN] {
    let mut out = [0u8; SCALAR_LEN];
    let shared = shared.to_bytes();
    for (ctr, chunk) in out.chunks_mut(32).enumerate() {
        let block = tagged_hash(b"MRE-PAD", &[&shared, &index.to_be_bytes(), &[ctr as u8]]);
        chunk.copy_from_slice(&block[..chunk.len()]);
    }
    out
}

fn xor(a: &[u8; SCALAR_LEN], b: &[u8; SCALAR_LEN]) -> [u8; SCALAR_LEN] {
    std::array::from_fn(|i| a[i] ^ b[i])
}

/// Removes recipient `index`'s pad from `payload` given `shared = c0^dk`.
pub fn unpad(shared: &GroupElement, index: u32, payload: &[u8; SCALAR_LEN]) -> [u8; SCALAR_LEN] {
    xor(&mre_pad(shared, index), payload)
}

pub fn mre_encrypt(eks: &[GroupElement], msgs: &[Scalar], r: &Scalar) -> Result<MreCiphertext> {
    let blocks: Vec<_> = msgs.iter().map(Scalar::to_bytes).collect();
    mre_encrypt_blocks(eks, &blocks, r)
}

/// Like [`mre_encrypt`] but over raw 32-byte blocks, which need not be canonical scalars.
pub fn mre_encrypt_blocks(eks: &[GroupElement], blocks: &[[u8; SCALAR_LEN]], r: &Scalar) -> Result<MreCiphertext> {
    if eks.len() != blocks.len() {
        return Err(Error::LengthMismatch { expected: eks.len(), got: blocks.len() });
    }
    let c0 = GroupElement::base_exp(r);
    let payloads = eks
        .iter()
        .zip(blocks)
        .enumerate()
        .map(|(i, (ek, m))| xor(&mre_pad(&ek.exp(r), i as u32 + 1), m))
        .collect();
    Ok(MreCiphertext { c0, payloads })
}

fn payload(ct: &MreCiphertext, i: u32) -> Result<&[u8; SCALAR_LEN]> {
    (i as usize)
        .checked_sub(1)
        .and_then(|k| ct.payloads.get(k))
        .ok_or(Error::IndexOutOfRange(i as usize))
}

/// The raw decrypted block for recipient `i`, before scalar decoding.
pub fn mre_decrypt_block(ct: &MreCiphertext, i: u32, dk: &Scalar) -> Result<[u8; SCALAR_LEN]> {
    let p = payload(ct, i)?;
    Ok(unpad(&ct.c0.exp(dk), i, p))
}

pub fn mre_decrypt(ct: &MreCiphertext, i: u32, dk: &Scalar) -> Result<Scalar> {
    Scalar::from_bytes(&mre_decrypt_block(ct, i, dk)?).ok_or(Error::NonCanonicalScalar)
}

/// Claimed decryption of one payload with a proof that `log_g(ek) = log_c0(shared)`.
///
/// `m` is the raw decrypted block so that undecodable plaintexts can be proven too.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecryptionProof {
    pub m: [u8; SCALAR_LEN],
    pub shared: GroupElement,
    pub challenge: Scalar,
    pub response: Scalar,
}

impl DecryptionProof {
    /// The plaintext as a scalar, if it is a canonical encoding.
    pub fn m_scalar(&self) -> Option<Scalar> {
        Scalar::from_bytes(&self.m)
    }

    pub fn write(&self, w: &mut Writer) {
        w.bytes(&self.m).point(&self.shared).scalar(&self.challenge).scalar(&self.response);
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        Ok(DecryptionProof {
            m: r.array()?,
            shared: r.point()?,
            challenge: r.scalar()?,
            response: r.scalar()?,
        })
    }
}

fn dleq_challenge(
    ek: &GroupElement,
    c0: &GroupElement,
    shared: &GroupElement,
    a: &GroupElement,
    b: &GroupElement,
) -> Scalar {
    let mut buf = Vec::with_capacity(6 * 33);
    for p in [&GroupElement::generator(), ek, c0, shared, a, b] {
        buf.extend_from_slice(&p.to_bytes());
    }
    hash_to_scalar(b"DLEQ", &buf)
}

/// Proof for an already computed `shared = c0^dk`; costs two exponentiations.
pub fn prove_decryption_shared(
    c0: &GroupElement,
    payload_i: &[u8; SCALAR_LEN],
    index: u32,
    dk: &Scalar,
    ek: &GroupElement,
    shared: GroupElement,
) -> DecryptionProof {
    let mut seed = dk.to_bytes().to_vec();
    seed.extend_from_slice(&c0.to_bytes());
    seed.extend_from_slice(payload_i);
    let k = hash_to_scalar(b"DLEQ-NONCE", &seed);
    let a = GroupElement::base_exp(&k);
    let b = c0.exp(&k);
    let challenge = dleq_challenge(ek, c0, &shared, &a, &b);
    DecryptionProof {
        m: xor(&mre_pad(&shared, index), payload_i),
        shared,
        challenge,
        response: k - challenge * dk,
    }
}

pub fn prove_decryption(
    c0: &GroupElement,
    payload_i: &[u8; SCALAR_LEN],
    index: u32,
    dk: &Scalar,
    ek: &GroupElement,
) -> DecryptionProof {
    prove_decryption_shared(c0, payload_i, index, dk, ek, c0.exp(dk))
}

pub fn verify_decryption(
    c0: &GroupElement,
    payload_i: &[u8; SCALAR_LEN],
    index: u32,
    ek: &GroupElement,
    proof: &DecryptionProof,
) -> bool {
    if proof.m != xor(&mre_pad(&proof.shared, index), payload_i) {
        return false;
    }
    let e = [proof.response, proof.challenge];
    let a = multi_exp(&[GroupElement::generator(), *ek], &e);
    let b = multi_exp(&[*c0, proof.shared], &e);
    dleq_challenge(ek, c0, &proof.shared, &a, &b) == proof.challenge
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn keypairs(n: usize, rng: &mut ChaCha20Rng) -> Vec<EncKeyPair> {
        (0..n)
            .map(|_| {
                let dk = Scalar::random(rng);
                EncKeyPair { ek: GroupElement::base_exp(&dk), dk }
            })
            .collect()
    }

    #[test]
    fn roundtrip_and_cross_key_mismatch() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let kp = keypairs(4, &mut rng);
        let msgs: Vec<_> = (0..4).map(|_| Scalar::random(&mut rng)).collect();
        let eks: Vec<_> = kp.iter().map(|k| k.ek).collect();
        let ct = mre_encrypt(&eks, &msgs, &Scalar::random(&mut rng)).unwrap();
        for i in 0..4 {
            assert_eq!(mre_decrypt(&ct, i as u32 + 1, &kp[i].dk).unwrap(), msgs[i]);
            for j in (0..4).filter(|&j| j != i) {
                assert_ne!(mre_decrypt(&ct, i as u32 + 1, &kp[j].dk).ok(), Some(msgs[i]));
            }
        }
    }

    #[test]
    fn index_and_length_errors() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let kp = keypairs(2, &mut rng);
        let eks: Vec<_> = kp.iter().map(|k| k.ek).collect();
        assert!(mre_encrypt(&eks, &[Scalar::ONE], &Scalar::ONE).is_err());
        let ct = mre_encrypt(&eks, &[Scalar::ONE, Scalar::ONE], &Scalar::ONE).unwrap();
        assert_eq!(mre_decrypt(&ct, 0, &kp[0].dk), Err(Error::IndexOutOfRange(0)));
        assert_eq!(mre_decrypt(&ct, 3, &kp[0].dk), Err(Error::IndexOutOfRange(3)));
    }

    #[test]
    fn undecodable_block_reported() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let kp = keypairs(1, &mut rng);
        let mut ct = mre_encrypt(&[kp[0].ek], &[Scalar::ONE], &Scalar::from_u64(5)).unwrap();
        let pad = mre_pad(&kp[0].ek.exp(&Scalar::from_u64(5)), 1);
        ct.payloads[0] = xor(&pad, &[0xff; 32]);
        assert_eq!(mre_decrypt(&ct, 1, &kp[0].dk), Err(Error::NonCanonicalScalar));
        let proof = prove_decryption(&ct.c0, &ct.payloads[0], 1, &kp[0].dk, &kp[0].ek);
        assert!(verify_decryption(&ct.c0, &ct.payloads[0], 1, &kp[0].ek, &proof));
        assert_eq!(proof.m_scalar(), None);
    }

    #[test]
    fn proof_completeness_and_soundness_smoke() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let kp = keypairs(3, &mut rng);
        let eks: Vec<_> = kp.iter().map(|k| k.ek).collect();
        let msgs: Vec<_> = (0..3).map(|_| Scalar::random(&mut rng)).collect();
        let ct = mre_encrypt(&eks, &msgs, &Scalar::random(&mut rng)).unwrap();
        let proof = prove_decryption(&ct.c0, &ct.payloads[1], 2, &kp[1].dk, &kp[1].ek);
        assert!(verify_decryption(&ct.c0, &ct.payloads[1], 2, &kp[1].ek, &proof));
        assert_eq!(proof.m_scalar(), Some(msgs[1]));

        let mut wrong_shared = proof;
        wrong_shared.shared = ct.c0.exp(&(kp[1].dk + Scalar::ONE));
        assert!(!verify_decryption(&ct.c0, &ct.payloads[1], 2, &kp[1].ek, &wrong_shared));

        let mut wrong_m = proof;
        wrong_m.m[31] ^= 1;
        assert!(!verify_decryption(&ct.c0, &ct.payloads[1], 2, &kp[1].ek, &wrong_m));

        // Transplanted to another recipient's payload.
        assert!(!verify_decryption(&ct.c0, &ct.payloads[2], 3, &kp[1].ek, &proof));
        assert!(!verify_decryption(&ct.c0, &ct.payloads[2], 3, &kp[2].ek, &proof));

        let mut buf = Writer::default();
        proof.write(&mut buf);
        let bytes = buf.finish();
        assert_eq!(bytes.len(), PROOF_LEN);
        assert_eq!(DecryptionProof::read(&mut Reader::new(&bytes)).unwrap(), proof);
    }
}
