use rand::{CryptoRng, RngCore};

use crate::codec::{Reader, Writer};
use crate::error::Result;
use crate::fsig::{fs_keygen, EpochSigKeys, FsVerifyKey};
use crate::group::{GroupElement, Scalar};
use crate::mre::EncKeyPair;
use crate::vrf::VrfKeyPair;

/// The three key pairs each node holds: encryption, sortition and signing.
#[derive(Clone, Debug)]
pub struct NodeKeys {
    pub enc: EncKeyPair,
    pub vrf: VrfKeyPair,
    pub sig: EpochSigKeys,
}

/// The public half of [`NodeKeys`], as published in the roster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKeys {
    pub ek: GroupElement,
    pub rvk: GroupElement,
    pub vk: FsVerifyKey,
}

impl NodeKeys {
    pub fn generate<R: RngCore + CryptoRng + ?Sized>(rounds: u32, rng: &mut R) -> Self {
        let dk = Scalar::random(rng);
        NodeKeys {
            enc: EncKeyPair { ek: GroupElement::base_exp(&dk), dk },
            vrf: VrfKeyPair::generate(rng),
            sig: fs_keygen(rounds, rng),
        }
    }

    /// Same as [`NodeKeys::generate`] but reusing an existing encryption key pair.
    pub fn with_encryption<R: RngCore + CryptoRng + ?Sized>(enc: EncKeyPair, rounds: u32, rng: &mut R) -> Self {
        NodeKeys { enc, vrf: VrfKeyPair::generate(rng), sig: fs_keygen(rounds, rng) }
    }

    pub fn public(&self) -> PublicKeys {
        PublicKeys { ek: self.enc.ek, rvk: self.vrf.rvk, vk: self.sig.vk().clone() }
    }

    /// `g^dk = ek` and `g^rsk = rvk`.
    pub fn is_consistent(&self) -> bool {
        GroupElement::base_exp(&self.enc.dk) == self.enc.ek && GroupElement::base_exp(&self.vrf.rsk) == self.vrf.rvk
    }
}

impl PublicKeys {
    pub fn write(&self, w: &mut Writer) {
        w.point(&self.ek).point(&self.rvk);
        self.vk.write(w);
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        Ok(PublicKeys { ek: r.point()?, rvk: r.point()?, vk: FsVerifyKey::read(r)? })
    }
}
