//! DDH-based VRF and the sortition built on it.

use std::fmt;

use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::group::{hash_to_group, hash_to_scalar, multi_exp, GroupElement, Scalar};
use crate::hash::tagged_hash;

pub const CREDENTIAL_LEN: usize = 33 + 32 + 32;

#[derive(Clone, Debug)]
pub struct VrfKeyPair {
    pub rvk: GroupElement,
    pub rsk: Scalar,
}

impl VrfKeyPair {
    pub fn generate<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        let rsk = Scalar::random(rng);
        VrfKeyPair { rvk: GroupElement::base_exp(&rsk), rsk }
    }
}

/// A selection probability `num / den` in `[0, 1]`.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    pub const ZERO: Ratio = Ratio { num: 0, den: 1 };
    pub const ONE: Ratio = Ratio { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::InvalidParameter(format!("ratio {num}/{den} outside [0, 1]")));
        }
        let g = gcd(num, den);
        Ok(Ratio { num: num / g, den: den / g })
    }

    /// `min(1, expected / n)`, the ratio giving an expected committee of `expected`.
    pub fn expected(expected: u64, n: u64) -> Result<Self> {
        Ratio::new(expected.min(n), n)
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Whether a 256-bit VRF output `y` satisfies `y / (2^256 - 1) <= num / den`.
    pub fn admits(&self, y: &[u8; 32]) -> bool {
        if self.num == 0 {
            return false;
        }
        let max = (BigUint::from(1u8) << 256usize) - 1u8;
        BigUint::from_bytes_be(y) * self.den <= max * self.num
    }
}

impl fmt::Debug for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct VrfCredential {
    pub output: [u8; 32],
    pub gamma: GroupElement,
    pub c: Scalar,
    pub s: Scalar,
}

impl VrfCredential {
    /// All-zero credential used where selection is designated rather than proven.
    pub fn designated() -> Self {
        VrfCredential::from_proof(GroupElement::identity(), Scalar::ZERO, Scalar::ZERO)
    }

    fn from_proof(gamma: GroupElement, c: Scalar, s: Scalar) -> Self {
        VrfCredential { output: vrf_output(&gamma), gamma, c, s }
    }

    pub fn to_bytes(&self) -> [u8; CREDENTIAL_LEN] {
        let mut out = [0u8; CREDENTIAL_LEN];
        out[..33].copy_from_slice(&self.gamma.to_bytes());
        out[33..65].copy_from_slice(&self.c.to_bytes());
        out[65..].copy_from_slice(&self.s.to_bytes());
        out
    }

    pub fn write(&self, w: &mut Writer) {
        w.bytes(&self.to_bytes());
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        let gamma = r.point()?;
        let c = r.scalar()?;
        let s = r.scalar()?;
        Ok(VrfCredential::from_proof(gamma, c, s))
    }
}

fn vrf_alpha(rand: &[u8], event: &str) -> Vec<u8> {
    let mut w = Writer::with_capacity(rand.len() + event.len() + 4);
    w.u32(rand.len() as u32).bytes(rand).bytes(event.as_bytes());
    w.finish()
}

fn vrf_base(rvk: &GroupElement, alpha: &[u8]) -> GroupElement {
    let mut input = rvk.to_bytes().to_vec();
    input.extend_from_slice(alpha);
    hash_to_group(b"VRF-H2G", &input)
}

fn vrf_output(gamma: &GroupElement) -> [u8; 32] {
    tagged_hash(b"VRF-OUT", &[&gamma.to_bytes()])
}

fn vrf_challenge(
    h: &GroupElement,
    rvk: &GroupElement,
    gamma: &GroupElement,
    u: &GroupElement,
    v: &GroupElement,
) -> Scalar {
    let mut buf = Vec::with_capacity(5 * 33);
    for p in [h, rvk, gamma, u, v] {
        buf.extend_from_slice(&p.to_bytes());
    }
    hash_to_scalar(b"VRF-CHAL", &buf)
}

/// Evaluates the VRF on `rand ‖ event` and returns a credential iff the output
/// passes the ratio test. A non-selected node pays a single exponentiation.
pub fn sortition(keys: &VrfKeyPair, rand: &[u8], event: &str, ratio: Ratio) -> Option<VrfCredential> {
    let alpha = vrf_alpha(rand, event);
    let h = vrf_base(&keys.rvk, &alpha);
    let gamma = h.exp(&keys.rsk);
    if !ratio.admits(&vrf_output(&gamma)) {
        return None;
    }
    let mut seed = keys.rsk.to_bytes().to_vec();
    seed.extend_from_slice(&h.to_bytes());
    let k = hash_to_scalar(b"VRF-NONCE", &seed);
    let u = GroupElement::base_exp(&k);
    let v = h.exp(&k);
    let c = vrf_challenge(&h, &keys.rvk, &gamma, &u, &v);
    let s = k - c * keys.rsk;
    Some(VrfCredential::from_proof(gamma, c, s))
}

pub fn sortition_verify(
    rvk: &GroupElement,
    rand: &[u8],
    ratio: Ratio,
    event: &str,
    cred: &VrfCredential,
) -> bool {
    if cred.output != vrf_output(&cred.gamma) || !ratio.admits(&cred.output) {
        return false;
    }
    let h = vrf_base(rvk, &vrf_alpha(rand, event));
    let u = multi_exp(&[GroupElement::generator(), *rvk], &[cred.s, cred.c]);
    let v = multi_exp(&[h, cred.gamma], &[cred.s, cred.c]);
    vrf_challenge(&h, rvk, &cred.gamma, &u, &v) == cred.c
}

/// Smallest ratio `p` (on a 2^-32 grid) with `(1 - p)^(n - t) <= failure_bound`.
pub fn any_trust_ratio(n: u64, t: u64, failure_bound: f64) -> Result<Ratio> {
    if t >= n {
        return Err(Error::InvalidParameter(format!("need t < n, got t={t}, n={n}")));
    }
    if !(failure_bound > 0.0 && failure_bound < 1.0) {
        return Err(Error::InvalidParameter(format!("failure bound {failure_bound} outside (0, 1)")));
    }
    const DEN: u64 = 1 << 32;
    let honest = (n - t) as f64;
    let tail = |num: u64| honest * (-(num as f64) / DEN as f64).ln_1p();
    let target = failure_bound.ln();
    let p = -(target / honest).exp_m1();
    let mut num = ((p * DEN as f64).ceil() as u64).min(DEN);
    while num < DEN && tail(num) > target {
        num += 1;
    }
    while num > 0 && tail(num - 1) <= target {
        num -= 1;
    }
    Ratio::new(num, DEN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn keys(seed: u64) -> VrfKeyPair {
        VrfKeyPair::generate(&mut ChaCha20Rng::seed_from_u64(seed))
    }

    #[test]
    fn ratio_one_selects_and_zero_rejects() {
        let k = keys(1);
        let cred = sortition(&k, b"beacon", "deal", Ratio::ONE).expect("selected");
        assert!(sortition_verify(&k.rvk, b"beacon", Ratio::ONE, "deal", &cred));
        assert!(sortition(&k, b"beacon", "deal", Ratio::ZERO).is_none());
        assert!(Ratio::ONE.admits(&[0xff; 32]));
    }

    #[test]
    fn deterministic_credentials() {
        let k = keys(2);
        let a = sortition(&k, b"r", "deal", Ratio::ONE).unwrap();
        let b = sortition(&k, b"r", "deal", Ratio::ONE).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn tampering_and_replay_rejected() {
        let k = keys(3);
        let cred = sortition(&k, b"r1", "deal", Ratio::ONE).unwrap();
        let mut bad = cred;
        bad.s = Scalar::random(&mut ChaCha20Rng::seed_from_u64(9));
        assert!(!sortition_verify(&k.rvk, b"r1", Ratio::ONE, "deal", &bad));
        assert!(!sortition_verify(&k.rvk, b"r2", Ratio::ONE, "deal", &cred));
        assert!(!sortition_verify(&k.rvk, b"r1", Ratio::ONE, "agree", &cred));
        assert!(!sortition_verify(&keys(4).rvk, b"r1", Ratio::ONE, "deal", &cred));
    }

    #[test]
    fn credential_encoding_roundtrip() {
        let k = keys(5);
        let cred = sortition(&k, b"r", "check", Ratio::ONE).unwrap();
        let bytes = cred.to_bytes();
        let back = VrfCredential::read(&mut Reader::new(&bytes)).unwrap();
        assert_eq!(back, cred);
    }

    #[test]
    fn any_trust_ratio_basics() {
        let p = any_trust_ratio(1, 0, 0.5).unwrap();
        assert_eq!((p.num(), p.den()), (1, 2));
        let mut prev = 1.0;
        for n in [10u64, 20, 40, 80, 160] {
            let p = any_trust_ratio(n, 5, 1e-6).unwrap().to_f64();
            assert!(p <= prev);
            prev = p;
        }
        assert!(any_trust_ratio(4, 4, 0.1).is_err());
        assert!(any_trust_ratio(4, 1, 1.0).is_err());
    }

    #[test]
    fn any_trust_ratio_is_smallest_on_grid() {
        for (n, t, b) in [(64u64, 31u64, 1e-6), (1688, 843, 5e-9), (16, 7, 1e-3)] {
            let p = any_trust_ratio(n, t, b).unwrap();
            let step = 1.0 / (1u64 << 32) as f64;
            let f = |x: f64| (1.0 - x).powf((n - t) as f64);
            assert!(f(p.to_f64()) <= b * (1.0 + 1e-9));
            assert!(f(p.to_f64() - step) > b * (1.0 - 1e-9));
        }
    }
}
