pub mod broadcast;
pub mod checkpoint;
pub mod codec;
pub mod committee;
pub mod dkg;
pub mod error;
pub mod fsig;
pub mod group;
pub mod hash;
pub mod keys;
pub mod mre;
pub mod sharing;
pub mod sim;
pub mod vrf;
pub mod weights;

pub use error::{Error, Result};
pub use group::{GroupElement, Scalar};
