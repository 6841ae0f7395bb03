//! The upper support functional evaluated in a fixed basis.
//!
//! For a weighting `θ` on the three legs, `ρ^θ(t)` is the maximum of
//! `Σ_a θ_a H(P_a)` over probability distributions `P` on the support of `t`,
//! where `P_a` is the marginal on leg `a` and `H` is Shannon entropy in bits.
//! The basis is never changed, so the value is an upper bound on the
//! functional and hence on `log2` of the asymptotic subrank.

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tensor::{Point, Support};

mod frank_wolfe;
mod oracle;

pub use frank_wolfe::{rho_upper, search_theta, RhoOptions, ThetaSearch};
pub use oracle::{rho_grid_oracle, rho_grid_oracle_dense, SymmetricFamily, DENSE_GRID_MAX_SUPPORT};

/// Tolerance on `θ1 + θ2 + θ3 = 1` and on probability sums.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Nonnegative leg weights summing to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Theta([f64; 3]);

impl Theta {
    pub fn new(t1: f64, t2: f64, t3: f64) -> Result<Self> {
        let w = [t1, t2, t3];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::invalid(format!("theta components must be nonnegative, got {w:?}")));
        }
        if ((t1 + t2 + t3) - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!("theta must sum to 1, got {w:?}")));
        }
        Ok(Theta(w))
    }

    /// Rescales nonnegative weights with a positive sum onto the simplex.
    pub fn from_weights(w: [f64; 3]) -> Result<Self> {
        let sum: f64 = w.iter().sum();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || sum <= 0.0 {
            return Err(Error::invalid(format!("theta weights must be nonnegative with positive sum, got {w:?}")));
        }
        Ok(Theta(w.map(|x| x / sum)))
    }

    pub fn uniform() -> Self {
        Theta([1.0 / 3.0; 3])
    }

    pub fn weights(&self) -> [f64; 3] {
        self.0
    }
}

impl Default for Theta {
    fn default() -> Self {
        Self::uniform()
    }
}

/// A probability distribution on the points of a support.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportDistribution {
    dims: [usize; 3],
    points: Vec<Point>,
    probs: Vec<f64>,
}

impl SupportDistribution {
    pub fn new(support: &Support, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != support.len() {
            return Err(Error::invalid(format!(
                "{} probabilities for a support of size {}",
                probs.len(),
                support.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("probabilities must be nonnegative"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self::from_parts(support, probs))
    }

    pub(crate) fn from_parts(support: &Support, probs: Vec<f64>) -> Self {
        SupportDistribution {
            dims: support.dims(),
            points: support.points().to_vec(),
            probs,
        }
    }

    pub fn uniform(support: &Support) -> Self {
        let n = support.len();
        Self::from_parts(support, vec![1.0 / n as f64; n])
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// `Σ_a θ_a H(P_a)` in bits.
    pub fn objective(&self, theta: Theta) -> f64 {
        (0..3)
            .filter(|&a| theta.0[a] > 0.0)
            .map(|a| theta.0[a] * entropy_unchecked(&marginal(self, a)))
            .sum()
    }
}

impl Serialize for SupportDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Mass {
            i: usize,
            j: usize,
            k: usize,
            p: f64,
        }
        let nonzero: Vec<_> = self.points.iter().zip(&self.probs).filter(|(_, &p)| p > 0.0).collect();
        let mut seq = serializer.serialize_seq(Some(nonzero.len()))?;
        for (&[i, j, k], &p) in nonzero {
            seq.serialize_element(&Mass { i, j, k, p })?;
        }
        seq.end()
    }
}

/// Certificate of one maximization run.
#[derive(Clone, Debug, Serialize)]
pub struct RhoResult {
    /// Objective value in bits.
    pub value: f64,
    pub argmax: SupportDistribution,
    /// Frank–Wolfe duality gap at termination; an upper bound on the distance to the optimum.
    pub residual: f64,
    pub iterations: u64,
}

impl RhoResult {
    /// `ζ^θ = 2^ρ`.
    pub fn zeta(&self) -> f64 {
        self.value.exp2()
    }
}

/// Pushforward of `p` onto leg `axis` (0-based).
pub fn marginal(p: &SupportDistribution, axis: usize) -> Vec<f64> {
    assert!(axis < 3, "axis must be 0, 1 or 2");
    let mut m = vec![0.0; p.dims[axis]];
    for (pt, &x) in p.points.iter().zip(&p.probs) {
        m[pt[axis]] += x;
    }
    m
}

/// `-x log2 x` with `0 log 0 = 0`.
#[inline]
pub(crate) fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.log2()
    } else {
        0.0
    }
}

pub(crate) fn entropy_unchecked(p: &[f64]) -> f64 {
    p.iter().map(|&x| xlogx(x)).sum()
}

/// Shannon entropy in bits.
pub fn entropy(p: &[f64]) -> Result<f64> {
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::invalid(format!("negative or non-finite probability {x}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::invalid(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(entropy_unchecked(p))
}

/// `h(p) = -p log2 p - (1-p) log2 (1-p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("binary entropy needs 0 <= p <= 1, got {p}")));
    }
    Ok(xlogx(p) + xlogx(1.0 - p))
}

/// `h(1/3)`, the value of the functional on `W`.
pub fn h_third() -> f64 {
    xlogx(1.0 / 3.0) + xlogx(2.0 / 3.0)
}

/// Average marginal entropy of the symmetric distribution on the support of
/// `CW_q` that puts mass `x` on each inner point and `1/3 - qx` on each outer one.
pub fn f_q(q: u32, x: f64) -> Result<f64> {
    if q == 0 {
        return Err(Error::invalid("f_q needs q >= 1"));
    }
    let q = f64::from(q);
    let hi = 1.0 / (3.0 * q);
    // admit round-off at the right endpoint
    if !(0.0..=hi * (1.0 + 1e-12)).contains(&x) {
        return Err(Error::invalid(format!("f_q needs 0 <= x <= 1/(3q) = {hi}, got {x}")));
    }
    let x = x.min(hi);
    Ok(xlogx(2.0 / 3.0 - q * x) + q * xlogx(2.0 * x) + xlogx((1.0 / 3.0 - q * x).max(0.0)))
}

/// The maximizer of `f_q` on `[0, 1/(3q)]`.
///
/// Stationary points solve `(q² - 4) x² - q x + 2/9 = 0`; the smaller root is
/// the one inside the interval.
pub fn argmax_fq(q: u32) -> Result<f64> {
    let qf = f64::from(q);
    match q {
        0 => Err(Error::invalid("argmax_fq needs q >= 1")),
        1 => Ok((33f64.sqrt() - 3.0) / 18.0),
        2 => Ok(1.0 / 9.0),
        _ => Ok((3.0 * qf - (32.0 + qf * qf).sqrt()) / (6.0 * (qf * qf - 4.0))),
    }
}

/// `f_q(argmax_fq(q))`.
pub fn fq_max(q: u32) -> Result<f64> {
    f_q(q, argmax_fq(q)?)
}
