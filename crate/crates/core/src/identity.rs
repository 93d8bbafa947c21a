//! The Bessel-cube identity
//!
//! e^{3x/2} Σ_{n∈ℤ} Iₙ(x)³ = ∫₀^∞ I₀(√(2xt))³ e^{−t} dt,
//!
//! its annihilating operator and Taylor recurrence, and the exponential
//! generating functions of a_k.
//!
//! Series convention: u(y) = Σ_{n∈ℤ} Iₙ(2y)³ = Σ c_j y^j, so the left side at
//! x equals e^{3x/2} u(x/2). Point values are computed in double-double and
//! rounded for reporting.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::dd::{Dd, Real};
use crate::error::{domain, Error, Result};
use crate::moments::{tstar_recurrence, RationalSeries};
use crate::quad::{GaussLaguerre, QuadSpec, DEFAULT_LAGUERRE_NODES};
use crate::specfun::{bessel_i_batch_real, phi0, phi0_series, BesselOrderRange, EvalAccuracy};

/// Largest x accepted by the left side.
pub const LHS_X_MAX: f64 = 40.0;

/// Largest x accepted by the generating-function checks.
pub const GF_X_MAX: f64 = 5.0;

/// A term is dropped once Iₙ³ falls below this fraction of the running sum
/// for three consecutive orders.
pub const LHS_TRUNCATION: f64 = 1e-34;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_residual: f64,
    pub n_truncation: usize,
    pub nodes_used: usize,
}

/// Σ_{n∈ℤ} Iₙ(x)³ in double-double and the highest order used.
fn bessel_cube_sum(x: Dd, start: usize) -> Result<(Dd, usize)> {
    let acc = EvalAccuracy::extended();
    let mut n_max = start.max(8);
    loop {
        let vals = bessel_i_batch_real(x, BesselOrderRange::new(n_max), &acc)?;
        let mut sum = vals[0] * vals[0] * vals[0];
        let mut small_run = 0;
        for (n, v) in vals.iter().enumerate().skip(1) {
            let cube = *v * *v * *v;
            sum += Dd::from_f64(2.0) * cube;
            if cube.to_f64().abs() < LHS_TRUNCATION * sum.to_f64().abs() {
                small_run += 1;
                if small_run == 3 {
                    return Ok((sum, n));
                }
            } else {
                small_run = 0;
            }
        }
        n_max *= 2;
        if n_max > 100_000 {
            return Err(Error::Internal("bessel cube sum did not truncate".into()));
        }
    }
}

fn lhs_dd(x: f64, range: BesselOrderRange) -> Result<(Dd, usize)> {
    if !x.is_finite() || x < 0.0 {
        return domain(format!("identity_lhs: x = {x} must be finite and non-negative"));
    }
    if x > LHS_X_MAX {
        return Err(Error::Range(format!("identity_lhs: x = {x} exceeds {LHS_X_MAX}")));
    }
    if x == 0.0 {
        return Ok((Dd::one(), 0));
    }
    let xd = Dd::from_f64(x);
    let (sum, n) = bessel_cube_sum(xd, range.n_max.max(x as usize + 10))?;
    Ok(((Dd::from_f64(1.5) * xd).exp() * sum, n))
}

/// e^{3x/2} (I₀(x)³ + 2 Σ_{n≥1} Iₙ(x)³). `range.n_max` is the first order
/// tried; it grows until the truncation rule is met.
pub fn identity_lhs(x: f64, range: BesselOrderRange) -> Result<f64> {
    Ok(lhs_dd(x, range)?.0.to_f64())
}

fn laguerre_dd(spec: &QuadSpec) -> Result<std::borrow::Cow<'static, GaussLaguerre<Dd>>> {
    if spec.laguerre_nodes == DEFAULT_LAGUERRE_NODES {
        Ok(std::borrow::Cow::Borrowed(GaussLaguerre::<Dd>::default_rule()))
    } else {
        Ok(std::borrow::Cow::Owned(GaussLaguerre::<Dd>::new(spec.laguerre_nodes)?))
    }
}

fn rhs_dd(x: f64, spec: &QuadSpec) -> Result<Dd> {
    if !x.is_finite() || x < 0.0 {
        return domain(format!("identity_rhs: x = {x} must be finite and non-negative"));
    }
    let acc = EvalAccuracy::extended();
    let half_x = Dd::from_f64(x) * Dd::from_f64(0.5);
    laguerre_dd(spec)?.try_integrate(|t| {
        let p = phi0_series(half_x * t, &acc)?;
        Ok(p * p * p)
    })
}

/// ∫₀^∞ φ₀(xt/2)³ e^{−t} dt by Gauss–Laguerre with `spec.laguerre_nodes` nodes.
pub fn identity_rhs(x: f64, spec: &QuadSpec) -> Result<f64> {
    Ok(rhs_dd(x, spec)?.to_f64())
}

/// Both sides at x with the residual formed before rounding.
pub fn identity_report(x: f64, spec: &QuadSpec) -> Result<IdentityReport> {
    let (lhs, n) = lhs_dd(x, BesselOrderRange::new(0))?;
    let rhs = rhs_dd(x, spec)?;
    Ok(IdentityReport {
        x,
        lhs: lhs.to_f64(),
        rhs: rhs.to_f64(),
        abs_residual: (lhs - rhs).abs().to_f64(),
        n_truncation: n,
        nodes_used: spec.laguerre_nodes,
    })
}

/// c₀..c_N of u(y) = Σ c_j y^j from c₀ = 1 and
/// j³ c_j = (j−1) j c_{j−1} + 24 (j−1) c_{j−2} + 36 c_{j−3}.
pub fn annihilator_coefficients(order: usize) -> RationalSeries {
    let mut c: Vec<BigRational> = Vec::with_capacity(order + 1);
    let get = |c: &[BigRational], j: isize| -> BigRational {
        if j < 0 {
            BigRational::zero()
        } else {
            c[j as usize].clone()
        }
    };
    for j in 0..=order {
        let v = match j {
            0 => BigRational::from_integer(1.into()),
            1 => BigRational::zero(),
            2 => BigRational::from_integer(3.into()),
            _ => {
                let jj = j as i64;
                let ji = j as isize;
                let num = get(&c, ji - 1) * BigInt::from((jj - 1) * jj)
                    + get(&c, ji - 2) * BigInt::from(24 * (jj - 1))
                    + get(&c, ji - 3) * BigInt::from(36);
                num / BigInt::from(jj * jj * jj)
            }
        };
        c.push(v);
    }
    RationalSeries::new(c).expect("non-empty")
}

/// Applies A = y²D³ − (y² − 3y)D² − (24y² + 2y − 1)D − (36y² + 24y) to a
/// truncated series. Coefficient m of the result is
/// (m+1)³ c_{m+1} − m(m+1) c_m − 24m c_{m−1} − 36 c_{m−2}, so the output
/// stops at order N − 1.
pub fn annihilator_apply(series: &RationalSeries) -> Result<RationalSeries> {
    let n = series.order();
    if n < 4 {
        return domain(format!("annihilator_apply: order {n} below 4"));
    }
    let c = |j: isize| -> BigRational {
        if j < 0 {
            BigRational::zero()
        } else {
            series.coeff(j as usize)
        }
    };
    let out = (0..n)
        .map(|m| {
            let mi = m as isize;
            let mb = m as i64;
            c(mi + 1) * BigInt::from((mb + 1).pow(3))
                - c(mi) * BigInt::from(mb * (mb + 1))
                - c(mi - 1) * BigInt::from(24 * mb)
                - c(mi - 2) * BigInt::from(36)
        })
        .collect();
    RationalSeries::new(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GfResiduals {
    pub x: f64,
    /// |Σ a_k x^k/k! − ∫ φ₀(xt)³ e^{−t} dt|
    pub full: f64,
    /// even part against ½∫(φ₀(xt)³ + φ₀(−xt)³) e^{−t} dt
    pub even: f64,
    /// odd part against ½∫(φ₀(xt)³ − φ₀(−xt)³) e^{−t} dt
    pub odd: f64,
}

impl GfResiduals {
    pub fn max(&self) -> f64 {
        self.full.max(self.even).max(self.odd)
    }
}

/// Even and odd halves of Σ a_k x^k / k! in double-double.
fn egf_parts(x: f64) -> (Dd, Dd) {
    let xd = Dd::from_f64(x);
    // terms peak near k = 9x and fall below 1e-34 of the sum well before 30x + 80
    let k_max = (30.0 * x).ceil() as usize + 80;
    let a = tstar_recurrence(k_max);
    let mut even = Dd::zero();
    let mut odd = Dd::zero();
    let mut pow_over_fact = Dd::one();
    for (k, ak) in a.iter().enumerate() {
        if k > 0 {
            pow_over_fact = pow_over_fact * xd / Dd::from_usize(k);
        }
        let term = Dd::from_bigint(&BigInt::from(ak.clone())) * pow_over_fact;
        if k % 2 == 0 {
            even += term;
        } else {
            odd += term;
        }
    }
    (even, odd)
}

/// Residuals of the three generating-function representations at x ∈ [0, 5].
pub fn generating_function_checks(x: f64) -> Result<GfResiduals> {
    if !(0.0..=GF_X_MAX).contains(&x) {
        return domain(format!("generating_function_checks: x = {x} outside [0, {GF_X_MAX}]"));
    }
    let (even, odd) = egf_parts(x);
    let acc_dd = EvalAccuracy::extended();
    let acc = EvalAccuracy::tight();
    let rule = GaussLaguerre::<Dd>::default_rule();
    let xd = Dd::from_f64(x);
    let mut pos = Dd::zero();
    let mut neg = Dd::zero();
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let p = phi0_series(xd * t, &acc_dd)?;
        pos += w * p * p * p;
        // φ₀(−xt) = J₀(2√(xt)) is bounded by 1, so f64 suffices here
        let q = phi0(-(x * t.to_f64()), &acc)?;
        neg += w * Dd::from_f64(q * q * q);
    }
    let half = Dd::from_f64(0.5);
    Ok(GfResiduals {
        x,
        full: (even + odd - pos).abs().to_f64(),
        even: (even - half * (pos + neg)).abs().to_f64(),
        odd: (odd - half * (pos - neg)).abs().to_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicSplit {
    pub x: f64,
    pub even_residual: f64,
    pub odd_residual: f64,
}

/// Compares the even and odd parts of Σ a_k x^k/k! with
/// cosh(3x)E(2x) + sinh(3x)O(2x) and sinh(3x)E(2x) + cosh(3x)O(2x), where
/// E = Σ_{n∈ℤ} I_{2n}³ and O = Σ_{n∈ℤ} I_{2n+1}³.
pub fn hyperbolic_split_check(x: f64) -> Result<HyperbolicSplit> {
    if !(0.0..=GF_X_MAX).contains(&x) {
        return domain(format!("hyperbolic_split_check: x = {x} outside [0, {GF_X_MAX}]"));
    }
    let (even, odd) = egf_parts(x);
    let (e, o) = if x == 0.0 {
        (Dd::one(), Dd::zero())
    } else {
        let acc = EvalAccuracy::extended();
        let two_x = Dd::from_f64(2.0 * x);
        let n_max = (2.0 * x) as usize + 60;
        let vals = bessel_i_batch_real(two_x, BesselOrderRange::new(n_max), &acc)?;
        let mut e = vals[0] * vals[0] * vals[0];
        let mut o = Dd::zero();
        for (n, v) in vals.iter().enumerate().skip(1) {
            let c = Dd::from_f64(2.0) * *v * *v * *v;
            if n % 2 == 0 {
                e += c;
            } else {
                o += c;
            }
        }
        (e, o)
    };
    let ep = (Dd::from_f64(3.0 * x)).exp();
    let em = (Dd::from_f64(-3.0 * x)).exp();
    let half = Dd::from_f64(0.5);
    let cosh = half * (ep + em);
    let sinh = half * (ep - em);
    Ok(HyperbolicSplit {
        x,
        even_residual: (even - (cosh * e + sinh * o)).abs().to_f64(),
        odd_residual: (odd - (sinh * e + cosh * o)).abs().to_f64(),
    })
}

/// x-grid "from:to:step", inclusive of `to` up to rounding.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Domain(format!("grid '{text}': {e}")))?;
    match nums.as_slice() {
        [x] => Ok(vec![*x]),
        [from, to, step] if *step > 0.0 && to >= from => {
            let n = ((to - from) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| from + step * i as f64).collect())
        }
        _ => domain(format!("grid '{text}' must be 'x' or 'from:to:step' with step > 0")),
    }
}

/// e^{3x/2} u(x/2) from the first N Taylor coefficients, exactly at the
/// rational value of x, rounded to double-double.
pub fn lhs_from_taylor(x: f64, order: usize) -> Result<f64> {
    let c = annihilator_coefficients(order);
    let y = BigRational::from_f64(x / 2.0)
        .ok_or_else(|| Error::Domain(format!("lhs_from_taylor: x = {x}")))?;
    let u = Dd::from_rational(&c.eval(&y));
    Ok(((Dd::from_f64(1.5) * Dd::from_f64(x)).exp() * u).to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{series_egf_tstar, series_exp, series_product};
    use num_traits::One;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn derivative(s: &RationalSeries) -> RationalSeries {
        let n = s.order();
        let coeffs = (0..n)
            .map(|j| s.coeff(j + 1) * BigInt::from(j + 1))
            .chain(std::iter::once(BigRational::zero()))
            .collect();
        RationalSeries::new(coeffs).unwrap()
    }

    fn times_poly(s: &RationalSeries, poly: &[i64]) -> RationalSeries {
        let n = s.order();
        let mut coeffs = vec![BigRational::zero(); n + poly.len() + 1];
        for (p, &a) in poly.iter().enumerate() {
            for j in 0..=n {
                coeffs[j + p] += s.coeff(j) * BigInt::from(a);
            }
        }
        RationalSeries::new(coeffs).unwrap().truncate(n)
    }

    /// The operator assembled from derivatives and polynomial products,
    /// valid through order N − 3 where no derivative has lost its top terms.
    fn apply_by_parts(s: &RationalSeries) -> RationalSeries {
        let d1 = derivative(s);
        let d2 = derivative(&d1);
        let d3 = derivative(&d2);
        let terms = [
            times_poly(&d3, &[0, 0, 1]),
            times_poly(&d2, &[0, 3, -1]),
            times_poly(&d1, &[1, -2, -24]),
            times_poly(s, &[0, -24, -36]),
        ];
        let mut acc = terms[0].clone();
        for t in &terms[1..] {
            acc = acc.add(t).unwrap();
        }
        acc
    }

    #[test]
    fn first_coefficients() {
        let c = annihilator_coefficients(5);
        assert_eq!(c.coeff(0), q(1, 1));
        assert_eq!(c.coeff(1), q(0, 1));
        assert_eq!(c.coeff(2), q(3, 1));
        assert_eq!(c.coeff(3), q(2, 1));
    }

    #[test]
    fn cauchy_product_consistency() {
        let n = 30;
        let product = series_product(&series_exp(&q(-3, 1), n), &series_egf_tstar(n).unwrap()).unwrap();
        assert_eq!(annihilator_coefficients(n), product);
    }

    #[test]
    fn annihilates_recurrence_series() {
        let c = annihilator_coefficients(30);
        let out = annihilator_apply(&c).unwrap();
        assert_eq!(out.order(), 29);
        assert!(out.is_zero_through(29));
        let c20 = annihilator_apply(&annihilator_coefficients(20)).unwrap();
        assert!(c20.is_zero_through(16));
    }

    #[test]
    fn operator_on_simple_inputs() {
        let one = RationalSeries::one(6);
        let out = annihilator_apply(&one).unwrap();
        assert_eq!(out, RationalSeries::from_integers(5, &[0, -24, -36]));
        let x = RationalSeries::from_integers(6, &[0, 1]);
        let out = annihilator_apply(&x).unwrap();
        assert_eq!(out, RationalSeries::from_integers(5, &[1, -2, -48, -36]));
        assert!(matches!(annihilator_apply(&RationalSeries::one(3)), Err(Error::Domain(_))));
    }

    #[test]
    fn coefficient_formula_matches_operator_by_parts() {
        let inputs = vec![
            annihilator_coefficients(12),
            series_egf_tstar(12).unwrap(),
            RationalSeries::from_integers(12, &[5, -3, 0, 7, 1, 0, 0, 2, -9, 4, 1, 1, 3]),
        ];
        for s in &inputs {
            let fast = annihilator_apply(s).unwrap();
            let slow = apply_by_parts(s);
            for m in 0..=s.order() - 3 {
                assert_eq!(fast.coeff(m), slow.coeff(m), "m={m}");
            }
        }
    }

    #[test]
    fn endpoint_values() {
        assert_eq!(identity_lhs(0.0, BesselOrderRange::new(3)).unwrap(), 1.0);
        assert_eq!(identity_rhs(0.0, &QuadSpec::default()).unwrap(), 1.0);
    }

    #[test]
    fn rhs_matches_egf_at_point_six() {
        // Σ a_k (0.3)^k / k! exactly
        let e = series_egf_tstar(120).unwrap().eval(&q(3, 10));
        let oracle = Dd::from_rational(&e).to_f64();
        let rhs = identity_rhs(0.6, &QuadSpec::default()).unwrap();
        assert!((rhs - oracle).abs() < 1e-10, "{rhs} vs {oracle}");
    }

    #[test]
    fn identity_holds_on_grid() {
        let spec = QuadSpec::default();
        for i in 0..=16 {
            let x = 0.25 * i as f64;
            let r = identity_report(x, &spec).unwrap();
            assert!(r.abs_residual <= 1e-10, "x={x}: {r:?}");
            assert_eq!(r.nodes_used, 80);
        }
    }

    #[test]
    fn lhs_matches_taylor_expansion() {
        for x in [1.0, 2.0, 4.0] {
            let lhs = identity_lhs(x, BesselOrderRange::new(10)).unwrap();
            let taylor = lhs_from_taylor(x, 120).unwrap();
            assert!((lhs - taylor).abs() < 1e-9, "x={x}: {lhs} vs {taylor}");
        }
    }

    #[test]
    fn lhs_range_guard() {
        assert!(matches!(identity_lhs(41.0, BesselOrderRange::new(10)), Err(Error::Range(_))));
        assert!(matches!(identity_lhs(-1.0, BesselOrderRange::new(10)), Err(Error::Domain(_))));
    }

    #[test]
    fn generating_functions() {
        let z = generating_function_checks(0.0).unwrap();
        assert!(z.max() < 1e-14);
        let h = generating_function_checks(0.5).unwrap();
        assert!(h.max() <= 1e-10, "{h:?}");
        for x in [1.0, 2.5, 4.0, 5.0] {
            let r = generating_function_checks(x).unwrap();
            assert!(r.max() <= 1e-9, "{r:?}");
        }
        assert!(generating_function_checks(5.5).is_err());
    }

    #[test]
    fn even_odd_split_is_exact_at_series_level() {
        let s = series_egf_tstar(20).unwrap();
        let (e, o) = s.even_odd();
        assert_eq!(e.add(&o).unwrap(), s);
        assert!(o.coeff(0).is_zero() && e.coeff(1).is_zero());
        assert_eq!(e.coeff(0), BigRational::one());
    }

    #[test]
    fn hyperbolic_split() {
        for i in 0..=8 {
            let x = 0.25 * i as f64;
            let r = hyperbolic_split_check(x).unwrap();
            assert!(r.even_residual <= 1e-9 && r.odd_residual <= 1e-9, "{r:?}");
        }
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:4:0.25").unwrap().len(), 17);
        assert_eq!(parse_grid("2").unwrap(), vec![2.0]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:-1").is_err());
    }
}
