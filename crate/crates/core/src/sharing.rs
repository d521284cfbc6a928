//! Shamir sharing over evaluation points `0..=n`, evaluation commitments, the
//! dual-code low-degree test and Lagrange interpolation.

use std::collections::{BTreeMap, BTreeSet};

use rand::{CryptoRng, RngCore};

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::group::{multi_exp, GroupElement, Scalar, POINT_LEN};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharePolynomial {
    coeffs: Vec<Scalar>,
}

impl SharePolynomial {
    pub fn from_coeffs(coeffs: Vec<Scalar>) -> Self {
        assert!(!coeffs.is_empty(), "polynomial needs a constant term");
        SharePolynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    /// Number of coefficients minus one; leading zeros are not trimmed.
    pub fn degree_bound(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn secret(&self) -> Scalar {
        self.coeffs[0]
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        self.coeffs.iter().rev().fold(Scalar::ZERO, |acc, a| acc * x + a)
    }

    pub fn eval_at(&self, x: u64) -> Scalar {
        self.eval(&Scalar::from_u64(x))
    }
}

pub fn sample_polynomial<R: RngCore + CryptoRng + ?Sized>(t: usize, rng: &mut R) -> SharePolynomial {
    SharePolynomial { coeffs: (0..=t).map(|_| Scalar::random(rng)).collect() }
}

/// `cms[j] = g^{f(j)}` for `j ∈ [0, n]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalCommitment {
    pub cms: Vec<GroupElement>,
}

impl EvalCommitment {
    pub fn n(&self) -> usize {
        self.cms.len().saturating_sub(1)
    }

    pub fn write(&self, w: &mut Writer) {
        w.u32(self.cms.len() as u32);
        for c in &self.cms {
            w.point(c);
        }
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        let n = r.count(POINT_LEN)?;
        let cms = (0..n).map(|_| r.point()).collect::<Result<_>>()?;
        Ok(EvalCommitment { cms })
    }
}

pub fn commit_evals(f: &SharePolynomial, n: usize) -> EvalCommitment {
    let cms = (0..=n as u64).map(|j| GroupElement::base_exp(&f.eval_at(j))).collect();
    EvalCommitment { cms }
}

/// A random codeword of the dual Reed-Solomon code, scaled so that `perp[0] = 1`.
///
/// `perp[τ] = q(τ) / ∏_{j≠τ}(τ - j)` with `deg q ≤ n - t - 1`, the degree at which
/// the vector is orthogonal to every evaluation vector of degree `≤ t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualCodeVector {
    pub perp: Vec<Scalar>,
}

/// Inverses of `∏_{j ≠ τ, 0 ≤ j ≤ n} (τ - j)` for every `τ ∈ [0, n]`.
fn dual_denominator_inverses(n: usize) -> Vec<Scalar> {
    let mut fact = vec![Scalar::ONE; n + 1];
    for i in 1..=n {
        fact[i] = fact[i - 1] * Scalar::from_u64(i as u64);
    }
    let mut inv_fact = vec![Scalar::ONE; n + 1];
    inv_fact[n] = fact[n].invert().expect("n! is nonzero mod p");
    for i in (1..=n).rev() {
        inv_fact[i - 1] = inv_fact[i] * Scalar::from_u64(i as u64);
    }
    (0..=n)
        .map(|tau| {
            let v = inv_fact[tau] * inv_fact[n - tau];
            if (n - tau) % 2 == 1 {
                -v
            } else {
                v
            }
        })
        .collect()
}

pub fn dual_code_vector<R: RngCore + CryptoRng + ?Sized>(n: usize, t: usize, rng: &mut R) -> DualCodeVector {
    assert!(t < n, "dual code needs t < n");
    let denoms = dual_denominator_inverses(n);
    loop {
        let q = sample_polynomial(n - t - 1, rng);
        let Some(scale) = (q.secret() * denoms[0]).invert() else { continue };
        let perp = (0..=n).map(|tau| q.eval_at(tau as u64) * denoms[tau] * scale).collect();
        return DualCodeVector { perp };
    }
}

/// Whether `∏ cms[τ]^{perp[τ]}` is the identity.
pub fn check_low_degree(cm: &EvalCommitment, perp: &DualCodeVector) -> Result<bool> {
    if cm.cms.len() != perp.perp.len() {
        return Err(Error::LengthMismatch { expected: perp.perp.len(), got: cm.cms.len() });
    }
    Ok(multi_exp(&cm.cms, &perp.perp).is_identity())
}

/// `λ_i` with `h(target) = Σ λ_i h(i)` for every `h` of degree `< |indices|`.
pub fn lagrange_coeffs(indices: &[u32], target: u32) -> Result<BTreeMap<u32, Scalar>> {
    let mut seen = BTreeSet::new();
    for &i in indices {
        if !seen.insert(i) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    let target = Scalar::from_u64(target as u64);
    let xs: Vec<(u32, Scalar)> = seen.iter().map(|&i| (i, Scalar::from_u64(i as u64))).collect();
    let mut out = BTreeMap::new();
    for &(i, xi) in &xs {
        let mut num = Scalar::ONE;
        let mut den = Scalar::ONE;
        for &(j, xj) in &xs {
            if j != i {
                num *= target - xj;
                den *= xi - xj;
            }
        }
        out.insert(i, num * den.invert().expect("distinct indices"));
    }
    Ok(out)
}

pub fn interpolate_at(points: &BTreeMap<u32, Scalar>, target: u32) -> Result<Scalar> {
    let idx: Vec<u32> = points.keys().copied().collect();
    let lambda = lagrange_coeffs(&idx, target)?;
    Ok(points.iter().map(|(i, y)| lambda[i] * y).sum())
}

pub fn interpolate_zero(points: &BTreeMap<u32, Scalar>) -> Result<Scalar> {
    interpolate_at(points, 0)
}
