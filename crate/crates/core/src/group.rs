//! secp256k1 group arithmetic in multiplicative notation.
//!
//! Every exponentiation goes through this module so that the per-thread
//! counter returned by [`exp_count`] reflects the work a node performed.

use std::cell::Cell;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use k256::elliptic_curve::bigint::U256;
use k256::elliptic_curve::group::Group;
use k256::elliptic_curve::ops::{MulByGenerator, Reduce};
use k256::elliptic_curve::sec1::{FromEncodedPoint, ToEncodedPoint};
use k256::elliptic_curve::{Field, PrimeField};
use k256::{AffinePoint, EncodedPoint, FieldBytes, ProjectivePoint};
use rand::{CryptoRng, RngCore};

use crate::hash::tagged_hash;

pub const SCALAR_LEN: usize = 32;
pub const POINT_LEN: usize = 33;

thread_local! {
    static EXP_COUNTER: Cell<u64> = const { Cell::new(0) };
}

/// Number of group exponentiations performed on the current thread.
pub fn exp_count() -> u64 {
    EXP_COUNTER.with(Cell::get)
}

fn count_exps(k: u64) {
    EXP_COUNTER.with(|c| c.set(c.get() + k));
}

/// Runs `f` and returns its result with the number of exponentiations it made.
pub fn metered<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let start = exp_count();
    let out = f();
    (out, exp_count() - start)
}

#[derive(Clone, Copy, PartialEq, Eq, Default)]
pub struct Scalar(pub(crate) k256::Scalar);

impl Scalar {
    pub const ZERO: Scalar = Scalar(k256::Scalar::ZERO);
    pub const ONE: Scalar = Scalar(k256::Scalar::ONE);

    pub fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        Scalar(k256::Scalar::random(&mut *rng))
    }

    pub fn from_u64(v: u64) -> Self {
        Scalar(k256::Scalar::from(v))
    }

    pub fn from_i64(v: i64) -> Self {
        let s = Scalar::from_u64(v.unsigned_abs());
        if v < 0 {
            -s
        } else {
            s
        }
    }

    /// Big-endian canonical encoding.
    pub fn to_bytes(&self) -> [u8; SCALAR_LEN] {
        self.0.to_bytes().into()
    }

    /// Decodes a canonical encoding; values `>= p` are rejected.
    pub fn from_bytes(bytes: &[u8; SCALAR_LEN]) -> Option<Self> {
        Option::from(k256::Scalar::from_repr(FieldBytes::from(*bytes))).map(Scalar)
    }

    /// Interprets 32 bytes as an integer and reduces it modulo `p`.
    pub fn reduce(bytes: &[u8; SCALAR_LEN]) -> Self {
        Scalar(<k256::Scalar as Reduce<U256>>::reduce_bytes(&FieldBytes::from(*bytes)))
    }

    pub fn invert(&self) -> Option<Self> {
        Option::from(self.0.invert()).map(Scalar)
    }

    pub fn is_zero(&self) -> bool {
        bool::from(self.0.is_zero())
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({})", hex(&self.to_bytes()))
    }
}

macro_rules! scalar_binop {
    ($tr:ident, $m:ident, $atr:ident, $am:ident) => {
        impl $tr for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar {
                Scalar(self.0.$m(&rhs.0))
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: &Scalar) -> Scalar {
                Scalar(self.0.$m(&rhs.0))
            }
        }
        impl $atr for Scalar {
            fn $am(&mut self, rhs: Scalar) {
                self.0 = self.0.$m(&rhs.0);
            }
        }
    };
}

scalar_binop!(Add, add, AddAssign, add_assign);
scalar_binop!(Sub, sub, SubAssign, sub_assign);
scalar_binop!(Mul, mul, MulAssign, mul_assign);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::ZERO, |a, b| a + b)
    }
}

impl<'a> Sum<&'a Scalar> for Scalar {
    fn sum<I: Iterator<Item = &'a Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::ZERO, |a, b| a + b)
    }
}

impl Product for Scalar {
    fn product<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::ONE, |a, b| a * b)
    }
}

/// An element of the prime-order group, written multiplicatively.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct GroupElement(pub(crate) ProjectivePoint);

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement(ProjectivePoint::IDENTITY)
    }

    pub fn generator() -> Self {
        GroupElement(ProjectivePoint::GENERATOR)
    }

    /// `g^x`.
    pub fn base_exp(x: &Scalar) -> Self {
        count_exps(1);
        GroupElement(ProjectivePoint::mul_by_generator(&x.0))
    }

    /// `self^x`.
    pub fn exp(&self, x: &Scalar) -> Self {
        count_exps(1);
        GroupElement(self.0 * x.0)
    }

    pub fn inverse(&self) -> Self {
        GroupElement(-self.0)
    }

    pub fn is_identity(&self) -> bool {
        bool::from(self.0.is_identity())
    }

    /// Compressed SEC1 encoding; the identity encodes as 33 zero bytes.
    pub fn to_bytes(&self) -> [u8; POINT_LEN] {
        let mut out = [0u8; POINT_LEN];
        if !self.is_identity() {
            out.copy_from_slice(self.0.to_affine().to_encoded_point(true).as_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8; POINT_LEN]) -> Option<Self> {
        if bytes.iter().all(|&b| b == 0) {
            return Some(Self::identity());
        }
        if bytes[0] != 0x02 && bytes[0] != 0x03 {
            return None;
        }
        let ep = EncodedPoint::from_bytes(bytes).ok()?;
        Option::<AffinePoint>::from(AffinePoint::from_encoded_point(&ep))
            .map(|p| GroupElement(p.into()))
    }
}

impl Default for GroupElement {
    fn default() -> Self {
        Self::identity()
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement({})", hex(&self.to_bytes()))
    }
}

// Multiplicative notation over the additive curve group.
#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: GroupElement) -> GroupElement {
        GroupElement(self.0 + rhs.0)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul<&GroupElement> for GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: &GroupElement) -> GroupElement {
        GroupElement(self.0 + rhs.0)
    }
}

#[allow(clippy::suspicious_op_assign_impl)]
impl MulAssign for GroupElement {
    fn mul_assign(&mut self, rhs: GroupElement) {
        self.0 += rhs.0;
    }
}

impl Product for GroupElement {
    fn product<I: Iterator<Item = GroupElement>>(iter: I) -> GroupElement {
        iter.fold(GroupElement::identity(), |a, b| a * b)
    }
}

impl<'a> Product<&'a GroupElement> for GroupElement {
    fn product<I: Iterator<Item = &'a GroupElement>>(iter: I) -> GroupElement {
        iter.fold(GroupElement::identity(), |a, b| a * b)
    }
}

/// Hash to a scalar: SHA-256 under a length-prefixed domain tag, reduced mod `p`.
pub fn hash_to_scalar(domain_tag: &[u8], input: &[u8]) -> Scalar {
    Scalar::reduce(&tagged_hash(domain_tag, &[input]))
}

/// Hash to a group element by try-and-increment on the x-coordinate.
pub fn hash_to_group(domain_tag: &[u8], input: &[u8]) -> GroupElement {
    let mut enc = [0u8; POINT_LEN];
    enc[0] = 0x02;
    for ctr in 0u32.. {
        let x = tagged_hash(domain_tag, &[input, &ctr.to_be_bytes()]);
        enc[1..].copy_from_slice(&x);
        if let Some(p) = GroupElement::from_bytes(&enc) {
            return p;
        }
    }
    unreachable!("counter space exhausted")
}

const WNAF_WINDOW: u32 = 5;
const WNAF_TABLE: usize = 1 << (WNAF_WINDOW - 2);

fn wnaf_digits(x: &Scalar) -> Vec<i8> {
    let be = x.to_bytes();
    let mut k = [0u64; 5];
    for (i, limb) in k.iter_mut().take(4).enumerate() {
        let lo = SCALAR_LEN - 8 * (i + 1);
        *limb = u64::from_be_bytes(be[lo..lo + 8].try_into().expect("8-byte limb"));
    }
    let mut digits = Vec::with_capacity(260);
    let modulus = 1u64 << WNAF_WINDOW;
    while k.iter().any(|&l| l != 0) {
        let mut d = 0i64;
        if k[0] & 1 == 1 {
            d = (k[0] & (modulus - 1)) as i64;
            if d >= (modulus / 2) as i64 {
                d -= modulus as i64;
            }
            if d > 0 {
                sub_small(&mut k, d as u64);
            } else {
                add_small(&mut k, (-d) as u64);
            }
        }
        digits.push(d as i8);
        for i in 0..5 {
            k[i] = (k[i] >> 1) | if i < 4 { k[i + 1] << 63 } else { 0 };
        }
    }
    digits
}

fn add_small(k: &mut [u64; 5], v: u64) {
    let mut carry = v;
    for limb in k.iter_mut() {
        let (s, c) = limb.overflowing_add(carry);
        *limb = s;
        carry = c as u64;
        if carry == 0 {
            break;
        }
    }
}

fn sub_small(k: &mut [u64; 5], v: u64) {
    let mut borrow = v;
    for limb in k.iter_mut() {
        let (s, b) = limb.overflowing_sub(borrow);
        *limb = s;
        borrow = b as u64;
        if borrow == 0 {
            break;
        }
    }
}

/// `∏ bases[i]^exps[i]` by interleaved width-5 wNAF.
///
/// Counts one exponentiation per term whose exponent is neither 0 nor 1.
pub fn multi_exp(bases: &[GroupElement], exps: &[Scalar]) -> GroupElement {
    assert_eq!(bases.len(), exps.len(), "multi_exp length mismatch");
    let mut acc = ProjectivePoint::IDENTITY;
    let mut tables: Vec<[ProjectivePoint; WNAF_TABLE]> = Vec::new();
    let mut digits: Vec<Vec<i8>> = Vec::new();
    for (b, e) in bases.iter().zip(exps) {
        if e.is_zero() || b.is_identity() {
            continue;
        }
        if *e == Scalar::ONE {
            acc += b.0;
            continue;
        }
        let double = b.0.double();
        let mut table = [b.0; WNAF_TABLE];
        for i in 1..WNAF_TABLE {
            table[i] = table[i - 1] + double;
        }
        tables.push(table);
        digits.push(wnaf_digits(e));
    }
    // Exponents on identity bases are still work the protocol asks for.
    let terms = exps.iter().filter(|e| !e.is_zero() && **e != Scalar::ONE).count();
    count_exps(terms as u64);

    let len = digits.iter().map(Vec::len).max().unwrap_or(0);
    let mut sum = ProjectivePoint::IDENTITY;
    for bit in (0..len).rev() {
        sum = sum.double();
        for (table, d) in tables.iter().zip(&digits) {
            let Some(&d) = d.get(bit) else { continue };
            if d > 0 {
                sum += table[(d as usize - 1) / 2];
            } else if d < 0 {
                sum -= table[((-d) as usize - 1) / 2];
            }
        }
    }
    GroupElement(acc + sum)
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
