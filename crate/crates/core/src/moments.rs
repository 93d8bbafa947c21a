//! Exact moment sequences of the hexagonal and loop-augmented triangular
//! lattices, and truncated power series over the rationals.

use std::fmt;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Largest k whose a_k is kept in the shared memo table.
pub const MEMO_K_MAX: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentKind {
    H,
    TStar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentSequence {
    pub kind: MomentKind,
    pub values: Vec<BigUint>,
}

impl MomentSequence {
    /// μ_0..μ_{k_max} for the given lattice.
    pub fn new(kind: MomentKind, k_max: usize) -> Result<Self> {
        let values = (0..=k_max)
            .map(|k| match kind {
                MomentKind::H => moment_h(k),
                MomentKind::TStar => moment_tstar(k),
            })
            .collect::<Result<_>>()?;
        Ok(MomentSequence { kind, values })
    }

    pub fn get(&self, k: usize) -> Option<&BigUint> {
        self.values.get(k)
    }
}

fn factorials(n: usize) -> Vec<BigUint> {
    let mut f = vec![BigUint::one()];
    for i in 1..=n {
        let next = &f[i - 1] * i;
        f.push(next);
    }
    f
}

fn binomial(n: usize, k: usize) -> BigUint {
    num_integer::binomial(BigUint::from(n), BigUint::from(k))
}

/// Σ over k₁+k₂+k₃ = k of the squared multinomial coefficient.
pub fn tstar_multinomial(k: usize) -> BigUint {
    let f = factorials(k);
    let mut sum = BigUint::zero();
    for k1 in 0..=k {
        for k2 in 0..=(k - k1) {
            let k3 = k - k1 - k2;
            let m = &f[k] / (&f[k1] * &f[k2] * &f[k3]);
            sum += &m * &m;
        }
    }
    sum
}

/// Σ_n C(k,n)²·C(2n,n).
pub fn tstar_vandermonde(k: usize) -> BigUint {
    (0..=k)
        .map(|n| {
            let c = binomial(k, n);
            &c * &c * binomial(2 * n, n)
        })
        .sum()
}

fn checked_tstar(k: usize) -> Result<BigUint> {
    let a = tstar_multinomial(k);
    let b = tstar_vandermonde(k);
    if a != b {
        return Err(Error::Internal(format!(
            "moment formulas disagree at k = {k}: {a} vs {b}"
        )));
    }
    Ok(a)
}

fn memo() -> &'static Result<Vec<BigUint>> {
    static TABLE: OnceLock<Result<Vec<BigUint>>> = OnceLock::new();
    TABLE.get_or_init(|| (0..=MEMO_K_MAX).map(checked_tstar).collect())
}

/// a_k = μ_k(T*), the number of weighted closed walks of length k.
pub fn moment_tstar(k: usize) -> Result<BigUint> {
    if k <= MEMO_K_MAX {
        return memo().as_ref().map(|t| t[k].clone()).map_err(Clone::clone);
    }
    checked_tstar(k)
}

/// μ_k(H): zero for odd k, a_{k/2} for even k.
pub fn moment_h(k: usize) -> Result<BigUint> {
    if k % 2 == 1 {
        Ok(BigUint::zero())
    } else {
        moment_tstar(k / 2)
    }
}

/// a_0..a_{k_max} from the three-term recurrence
/// n² a_n = (10n² − 10n + 3) a_{n−1} − 9(n − 1)² a_{n−2}; much cheaper than
/// the sums for long sequences.
pub fn tstar_recurrence(k_max: usize) -> Vec<BigUint> {
    let mut a: Vec<BigInt> = vec![BigInt::one(), BigInt::from(3)];
    for n in 2..=k_max {
        let nb = BigInt::from(n);
        let lead = BigInt::from(10 * n * n - 10 * n + 3);
        let back = BigInt::from(9 * (n - 1) * (n - 1));
        let next = (lead * &a[n - 1] - back * &a[n - 2]) / (&nb * &nb);
        a.push(next);
    }
    a.truncate(k_max + 1);
    a.into_iter()
        .map(|v| v.to_biguint().expect("moments are positive"))
        .collect()
}

/// Truncated power series c₀ + c₁x + ... + c_N x^N with exact coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalSeries {
    coeffs: Vec<BigRational>,
}

fn rat(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

impl RationalSeries {
    pub fn new(coeffs: Vec<BigRational>) -> Result<Self> {
        if coeffs.is_empty() {
            return domain("series needs at least one coefficient");
        }
        Ok(RationalSeries { coeffs })
    }

    pub fn from_integers(order: usize, vals: &[i64]) -> Self {
        let mut s = RationalSeries::zero(order);
        for (c, &v) in s.coeffs.iter_mut().zip(vals) {
            *c = rat(v);
        }
        s
    }

    pub fn zero(order: usize) -> Self {
        RationalSeries {
            coeffs: vec![BigRational::zero(); order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        let mut s = RationalSeries::zero(order);
        s.coeffs[0] = BigRational::one();
        s
    }

    /// Truncation order N.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, j: usize) -> BigRational {
        self.coeffs.get(j).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut s = RationalSeries::zero(order);
        for (j, c) in s.coeffs.iter_mut().enumerate() {
            *c = self.coeff(j);
        }
        s
    }

    /// True if every coefficient of index ≤ m is zero.
    pub fn is_zero_through(&self, m: usize) -> bool {
        (0..=m).all(|j| self.coeff(j).is_zero())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_order(self, other)?;
        Ok(RationalSeries {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_order(self, other)?;
        Ok(RationalSeries {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        RationalSeries {
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    /// Evaluate the truncated polynomial at a rational point.
    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    /// Terms of even and odd index, each at the original order.
    pub fn even_odd(&self) -> (Self, Self) {
        let mut even = RationalSeries::zero(self.order());
        let mut odd = RationalSeries::zero(self.order());
        for (j, c) in self.coeffs.iter().enumerate() {
            if j % 2 == 0 {
                even.coeffs[j] = c.clone();
            } else {
                odd.coeffs[j] = c.clone();
            }
        }
        (even, odd)
    }
}

impl fmt::Debug for RationalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        write!(f, "RationalSeries[{}]", terms.join(", "))
    }
}

fn same_order(a: &RationalSeries, b: &RationalSeries) -> Result<()> {
    if a.order() != b.order() {
        return domain(format!(
            "series orders differ: {} vs {}",
            a.order(),
            b.order()
        ));
    }
    Ok(())
}

/// Cauchy product truncated at the common order.
pub fn series_product(a: &RationalSeries, b: &RationalSeries) -> Result<RationalSeries> {
    same_order(a, b)?;
    let n = a.order();
    let mut out = RationalSeries::zero(n);
    for i in 0..=n {
        if a.coeffs[i].is_zero() {
            continue;
        }
        for j in 0..=(n - i) {
            out.coeffs[i + j] += &a.coeffs[i] * &b.coeffs[j];
        }
    }
    Ok(out)
}

/// Σ a_k x^k / k!.
pub fn series_egf_tstar(order: usize) -> Result<RationalSeries> {
    let f = factorials(order);
    let coeffs = (0..=order)
        .map(|k| {
            moment_tstar(k).map(|a| BigRational::new(BigInt::from(a), BigInt::from(f[k].clone())))
        })
        .collect::<Result<_>>()?;
    RationalSeries::new(coeffs)
}

/// Σ a_k x^k / (k!)².
pub fn series_tstar_over_square_factorial(order: usize) -> Result<RationalSeries> {
    let f = factorials(order);
    let coeffs = (0..=order)
        .map(|k| {
            let d = &f[k] * &f[k];
            moment_tstar(k).map(|a| BigRational::new(BigInt::from(a), BigInt::from(d)))
        })
        .collect::<Result<_>>()?;
    RationalSeries::new(coeffs)
}

/// Σ x^k / (k!)², the Taylor series of φ₀.
pub fn series_phi0(order: usize) -> RationalSeries {
    let f = factorials(order);
    RationalSeries {
        coeffs: f
            .iter()
            .map(|fk| BigRational::new(BigInt::one(), BigInt::from(fk * fk)))
            .collect(),
    }
}

/// Σ (a x)^k / k!.
pub fn series_exp(a: &BigRational, order: usize) -> RationalSeries {
    let mut coeffs = vec![BigRational::one()];
    for k in 1..=order {
        let next = &coeffs[k - 1] * a / rat(k as i64);
        coeffs.push(next);
    }
    RationalSeries { coeffs }
}
