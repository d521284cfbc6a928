//! Sub-ID allocation for weighted validators.
//!
//! Weights are rounded to multiples of a common divisor, and each validator
//! receives `w'_i / divisor` sub-IDs. The rounding must move at most `t` units
//! of weight in total, which keeps any coalition with more than two thirds of
//! the weight in the sub-ID majority.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Largest validator count checked exhaustively by [`check_qualified`].
pub const EXHAUSTIVE_MAX: usize = 20;

/// Divisors above the binary-search result that are re-checked one by one.
const SCAN_WINDOW: u128 = 4096;

const SAMPLED_PARTITIONS: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightVector {
    w: Vec<u128>,
    total: u128,
}

impl WeightVector {
    pub fn new(w: Vec<u128>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidParameter("empty weight vector".into()));
        }
        if let Some(i) = w.iter().position(|&x| x == 0) {
            return Err(Error::InvalidParameter(format!("weight {} is zero", i + 1)));
        }
        let total = w
            .iter()
            .try_fold(0u128, |acc, &x| acc.checked_add(x))
            .ok_or_else(|| Error::InvalidParameter("total weight overflows".into()))?;
        Ok(WeightVector { w, total })
    }

    /// One decimal integer per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let w = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, l)| l.parse().map_err(|e| Error::Config(format!("line {}: {e}", i + 1))))
            .collect::<Result<_>>()?;
        Self::new(w)
    }

    pub fn weights(&self) -> &[u128] {
        &self.w
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn total(&self) -> u128 {
        self.total
    }

    /// `floor((total - 1) / 3)`.
    pub fn t(&self) -> u128 {
        (self.total - 1) / 3
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    pub d: Vec<u128>,
    pub divisor: u128,
    pub adjusted: Vec<u128>,
}

impl Allocation {
    pub fn sub_ids(&self) -> u128 {
        self.d.iter().sum()
    }

    /// Tab-separated `index, w, w', d` rows with a header.
    pub fn to_tsv(&self, w: &WeightVector) -> String {
        let mut out = String::from("index\tw\tw_adj\td\n");
        for (i, ((w, a), d)) in w.weights().iter().zip(&self.adjusted).zip(&self.d).enumerate() {
            let _ = writeln!(out, "{}\t{w}\t{a}\t{d}", i + 1);
        }
        out
    }
}

/// Rounds each weight to a multiple of `gcd`: down when the remainder is below
/// half of `gcd`, up otherwise.
pub fn f_gcd_adjust(w: &[u128], gcd: u128) -> Vec<u128> {
    assert!(gcd >= 1, "gcd must be positive");
    w.iter()
        .map(|&x| {
            let r = x % gcd;
            if 2 * r < gcd {
                x - r
            } else {
                x + (gcd - r)
            }
        })
        .collect()
}

pub fn adjustment(w: &[u128], adjusted: &[u128]) -> u128 {
    w.iter().zip(adjusted).map(|(a, b)| a.abs_diff(*b)).sum()
}

pub fn is_t_bounded(w: &[u128], adjusted: &[u128], t: u128) -> bool {
    assert_eq!(w.len(), adjusted.len(), "weight vectors differ in length");
    adjustment(w, adjusted) <= t
}

fn feasible(w: &[u128], gcd: u128, t: u128) -> bool {
    let mut delta = 0u128;
    for &x in w {
        let r = x % gcd;
        delta += if 2 * r < gcd { r } else { gcd - r };
        if delta > t {
            return false;
        }
    }
    true
}

/// Picks the divisor by binary search over `[floor(2t/n), max w]`, then scans a
/// bounded window above the result because feasibility is not monotone.
pub fn allocate_sub_ids(w: &WeightVector) -> Allocation {
    let t = w.t();
    let max = *w.weights().iter().max().expect("nonempty");
    // Every divisor up to 2t/n moves each weight by at most t/n.
    let floor = (2 * t / w.n() as u128).clamp(1, max);
    debug_assert!(feasible(w.weights(), floor, t));
    let (mut lo, mut hi) = (floor, max);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if feasible(w.weights(), mid, t) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let top = max.min(lo.saturating_add(SCAN_WINDOW));
    let divisor = (lo + 1..=top).rev().find(|&g| feasible(w.weights(), g, t)).unwrap_or(lo);
    let adjusted = f_gcd_adjust(w.weights(), divisor);
    let d = adjusted.iter().map(|a| a / divisor).collect();
    Allocation { d, divisor, adjusted }
}

/// `Σd ≤ (4t+1) / floor(2t/n)`, meaningful when `n ≤ 2t`.
pub fn size_bound(w: &WeightVector) -> Option<u128> {
    let t = w.t();
    let q = 2 * t / w.n() as u128;
    (q > 0).then(|| (4 * t + 1) / q)
}

fn violates(w_a: u128, w_b: u128, d_a: u128, d_b: u128) -> bool {
    w_a > 2 * w_b && d_a <= d_b
}

/// Whether every split `(A, B)` with `w(A) > 2·w(B)` also has `d(A) > d(B)`.
///
/// Exhaustive up to [`EXHAUSTIVE_MAX`] validators, sampled with a fixed seed above.
pub fn check_qualified(w: &[u128], d: &[u128]) -> bool {
    assert_eq!(w.len(), d.len(), "weight and allocation lengths differ");
    if w.len() <= EXHAUSTIVE_MAX {
        check_exhaustive(w, d)
    } else {
        check_sampled(w, d, SAMPLED_PARTITIONS, &mut ChaCha20Rng::seed_from_u64(0))
    }
}

fn check_exhaustive(w: &[u128], d: &[u128]) -> bool {
    let (w_total, d_total): (u128, u128) = (w.iter().sum(), d.iter().sum());
    let (mut w_a, mut d_a) = (0u128, 0u128);
    let mut in_a = vec![false; w.len()];
    if violates(0, w_total, 0, d_total) {
        return false;
    }
    // Gray-code walk: step k flips the element at the index of k's lowest set bit.
    for k in 1u64..(1u64 << w.len()) {
        let i = k.trailing_zeros() as usize;
        in_a[i] = !in_a[i];
        if in_a[i] {
            w_a += w[i];
            d_a += d[i];
        } else {
            w_a -= w[i];
            d_a -= d[i];
        }
        if violates(w_a, w_total - w_a, d_a, d_total - d_a) {
            return false;
        }
    }
    true
}

pub fn check_sampled<R: Rng + ?Sized>(w: &[u128], d: &[u128], samples: usize, rng: &mut R) -> bool {
    let (w_total, d_total): (u128, u128) = (w.iter().sum(), d.iter().sum());
    (0..samples).all(|_| {
        let (mut w_a, mut d_a) = (0u128, 0u128);
        for (wi, di) in w.iter().zip(d) {
            if rng.gen_bool(0.5) {
                w_a += wi;
                d_a += di;
            }
        }
        !violates(w_a, w_total - w_a, d_a, d_total - d_a)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Reference: every divisor checked, largest feasible wins.
    fn brute_divisor(w: &WeightVector) -> u128 {
        let max = *w.weights().iter().max().unwrap();
        (1..=max).rev().find(|&g| is_t_bounded(w.weights(), &f_gcd_adjust(w.weights(), g), w.t())).unwrap()
    }

    /// Reference qualification check by plain subset enumeration.
    fn brute_qualified(w: &[u128], d: &[u128]) -> bool {
        (0u32..1 << w.len()).all(|mask| {
            let pick = |v: &[u128], inside: bool| -> u128 {
                v.iter().enumerate().filter(|(i, _)| (mask >> i & 1 == 1) == inside).map(|(_, x)| x).sum()
            };
            !violates(pick(w, true), pick(w, false), pick(d, true), pick(d, false))
        })
    }

    #[test]
    fn adjustment_examples() {
        assert_eq!(f_gcd_adjust(&[4, 4, 4, 1], 1), vec![4, 4, 4, 1]);
        assert_eq!(f_gcd_adjust(&[4, 4, 4, 1], 4), vec![4, 4, 4, 0]);
        assert_eq!(f_gcd_adjust(&[5], 2), vec![6]);
        assert_eq!(f_gcd_adjust(&[6], 4), vec![8]);
        assert!(is_t_bounded(&[4, 4, 4, 1], &[4, 4, 4, 0], 4));
        assert!(!is_t_bounded(&[4, 4, 4, 1], &[3, 3, 3, 0], 3));
        assert!(is_t_bounded(&[7, 2], &[7, 2], 0));
    }

    #[test]
    fn allocation_examples() {
        let a = allocate_sub_ids(&WeightVector::new(vec![1, 1, 1, 1]).unwrap());
        assert_eq!((a.divisor, a.d.clone()), (1, vec![1, 1, 1, 1]));
        let w = WeightVector::new(vec![4, 4, 4, 1]).unwrap();
        let a = allocate_sub_ids(&w);
        assert_eq!((a.divisor, a.d.clone()), (4, vec![1, 1, 1, 0]));
        assert!(check_qualified(w.weights(), &a.d));
        assert!(check_qualified(&[3, 3, 1], &[1, 1, 1]));
        assert!(!check_qualified(&[10, 1, 1], &[1, 1, 1]));
        assert_eq!(a.to_tsv(&w).lines().nth(4), Some("4\t1\t0\t0"));
    }

    #[test]
    fn parse_weight_file() {
        let w = WeightVector::parse("3\n# comment\n\n5 \n").unwrap();
        assert_eq!(w.weights(), &[3, 5]);
        assert_eq!(w.t(), 2);
        assert!(WeightVector::parse("3\nx\n").is_err());
        assert!(WeightVector::parse("0\n").is_err());
    }

    #[test]
    fn sampled_check_catches_gross_violation() {
        let mut w = vec![1u128; 30];
        w[0] = 1000;
        let mut d = vec![1u128; 30];
        d[0] = 0;
        assert!(!check_qualified(&w, &d));
        assert!(check_qualified(&w, &w));
    }

    proptest! {
        #[test]
        fn matches_reference_search(w in prop::collection::vec(1u128..200, 1..8)) {
            let w = WeightVector::new(w).unwrap();
            let a = allocate_sub_ids(&w);
            prop_assert_eq!(a.divisor, brute_divisor(&w));
            prop_assert!(a.adjusted.iter().zip(&a.d).all(|(x, d)| *x == d * a.divisor));
            if let Some(bound) = size_bound(&w) {
                prop_assert!(a.sub_ids() <= bound);
            }
        }

        #[test]
        fn gray_walk_matches_plain_enumeration(
            w in prop::collection::vec(1u128..50, 1..9),
            d in prop::collection::vec(0u128..10, 9),
        ) {
            let d = &d[..w.len()];
            prop_assert_eq!(check_qualified(&w, d), brute_qualified(&w, d));
        }
    }
}
