//! Special functions: J₀/J₁, the entire function φ₀(u) = Σ uᵏ/(k!)²,
//! batches of modified Bessel functions Iₙ, and ₂F₁(1/3, 2/3; 1; z).
//!
//! φ₀ is the workhorse: I₀(2√u) = φ₀(u) for every complex u, so any I₀ of an
//! imaginary-looking argument is evaluated through φ₀ of its squared half
//! argument and no square-root branch ever has to be chosen.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dd::Real;
use crate::error::{domain, Error, Result};

/// Largest |u| accepted by φ₀; e^{2√u} overflows shortly beyond.
pub const PHI0_GUARD: f64 = 1.2e5;

/// Switch point between the defining series and the logarithmic connection
/// formula of ₂F₁(1/3, 2/3; 1; z).
pub const HYP2F1_SWITCH: f64 = 0.5;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalAccuracy {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl EvalAccuracy {
    pub fn new(rel_tol: f64, abs_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0) {
            return domain(format!("rel_tol must be positive, got {rel_tol}"));
        }
        if !(abs_tol >= 0.0) {
            return domain(format!("abs_tol must be non-negative, got {abs_tol}"));
        }
        if max_terms == 0 {
            return domain("max_terms must be at least 1");
        }
        Ok(EvalAccuracy {
            rel_tol,
            abs_tol,
            max_terms,
        })
    }

    /// Tolerance for results that must be good to the last bit of an `f64`.
    pub fn tight() -> Self {
        EvalAccuracy {
            rel_tol: 1e-17,
            abs_tol: 0.0,
            max_terms: 4000,
        }
    }

    /// Tolerance for double-double evaluations.
    pub fn extended() -> Self {
        EvalAccuracy {
            rel_tol: 1e-34,
            abs_tol: 0.0,
            max_terms: 4000,
        }
    }

    pub(crate) fn converged(&self, term: f64, sum: f64) -> bool {
        term.abs() <= self.rel_tol * sum.abs() || term.abs() <= self.abs_tol
    }
}

impl Default for EvalAccuracy {
    fn default() -> Self {
        EvalAccuracy {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            max_terms: 500,
        }
    }
}

/// Highest order evaluated by one backward-recurrence pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BesselOrderRange {
    pub n_max: usize,
}

impl BesselOrderRange {
    pub fn new(n_max: usize) -> Self {
        BesselOrderRange { n_max }
    }
}

fn require_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        domain(format!("{what}: non-finite argument {x}"))
    }
}

fn not_converged(what: &str, terms: usize) -> Error {
    Error::Range(format!("{what}: series not converged after {terms} terms"))
}

/// Σ (−1)ᵏ (x/2)^{2k} / (k!)², used where cancellation is harmless.
fn j0_series(x: f64, acc: &EvalAccuracy) -> Result<f64> {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..acc.max_terms {
        term *= q / ((k * k) as f64);
        sum += term;
        if acc.converged(term, sum) || term == 0.0 {
            return Ok(sum);
        }
    }
    Err(not_converged("bessel_j0", acc.max_terms))
}

/// J₀(x) and J₁(x) by Miller's backward recurrence, normalised with
/// 1 = J₀ + 2 Σ J₂ₖ. Accurate to a few ulps absolute for any finite x.
fn j01_miller(x: f64) -> (f64, f64) {
    let ax = x.abs();
    if ax == 0.0 {
        return (1.0, 0.0);
    }
    let mut n = (ax + 30.0 + 10.0 * ax.sqrt()).ceil() as usize;
    n += n % 2;
    let mut j_next = 0.0f64;
    let mut j_cur = 1e-30f64;
    let mut norm = 0.0f64;
    let mut j1 = 0.0;
    for k in (1..=n).rev() {
        let j_prev = (2.0 * k as f64 / ax) * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        let order = k - 1;
        if order == 1 {
            j1 = j_cur;
        }
        if order > 0 && order % 2 == 0 {
            norm += 2.0 * j_cur;
        }
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
            j1 *= 1e-250;
        }
    }
    norm += j_cur;
    let j0 = j_cur / norm;
    let j1 = j1 / norm;
    (j0, if x < 0.0 { -j1 } else { j1 })
}

pub fn bessel_j0(x: f64, acc: &EvalAccuracy) -> Result<f64> {
    require_finite(x, "bessel_j0")?;
    if x.abs() <= 4.0 {
        j0_series(x, acc)
    } else {
        Ok(j01_miller(x).0)
    }
}

pub fn bessel_j1(x: f64, acc: &EvalAccuracy) -> Result<f64> {
    require_finite(x, "bessel_j1")?;
    if x.abs() <= 4.0 {
        // Σ (−1)ᵏ (x/2)^{2k+1} / (k!(k+1)!)
        let q = -0.25 * x * x;
        let mut term = 0.5 * x;
        let mut sum = term;
        for k in 1..acc.max_terms {
            term *= q / ((k * (k + 1)) as f64);
            sum += term;
            if acc.converged(term, sum) || term == 0.0 {
                return Ok(sum);
            }
        }
        Err(not_converged("bessel_j1", acc.max_terms))
    } else {
        Ok(j01_miller(x).1)
    }
}

/// Σ uᵏ/(k!)² and Σ k uᵏ⁻¹/(k!)² summed directly in any [`Real`].
/// Only used where the terms do not cancel badly (u ≥ 0, or small |u|).
pub fn phi0_series<R: Real>(u: R, acc: &EvalAccuracy) -> Result<R> {
    let mut term = R::one();
    let mut sum = R::one();
    let uf = u.to_f64();
    for k in 1..acc.max_terms {
        term *= u / R::from_f64((k * k) as f64);
        sum += term;
        if (k * k) as f64 > uf.abs() && acc.converged(term.to_f64(), sum.to_f64()) {
            return Ok(sum);
        }
        if term.to_f64() == 0.0 {
            return Ok(sum);
        }
    }
    Err(not_converged("phi0", acc.max_terms))
}

pub fn phi0_prime_series<R: Real>(u: R, acc: &EvalAccuracy) -> Result<R> {
    // Σ_{j≥0} uʲ / (j!(j+1)!)
    let mut term = R::one();
    let mut sum = R::one();
    let uf = u.to_f64();
    for j in 1..acc.max_terms {
        term *= u / R::from_f64((j * (j + 1)) as f64);
        sum += term;
        if (j * j) as f64 > uf.abs() && acc.converged(term.to_f64(), sum.to_f64()) {
            return Ok(sum);
        }
        if term.to_f64() == 0.0 {
            return Ok(sum);
        }
    }
    Err(not_converged("phi0_prime", acc.max_terms))
}

fn guard_phi0(mag: f64) -> Result<()> {
    if !mag.is_finite() {
        return domain("phi0: non-finite argument");
    }
    if mag > PHI0_GUARD {
        return Err(Error::Range(format!(
            "phi0: |u| = {mag} exceeds overflow guard {PHI0_GUARD}"
        )));
    }
    Ok(())
}

/// φ₀(u) = Σ uᵏ/(k!)² = I₀(2√u) for real u.
pub fn phi0(u: f64, acc: &EvalAccuracy) -> Result<f64> {
    guard_phi0(u.abs())?;
    if u >= -4.0 {
        phi0_series(u, acc)
    } else {
        // φ₀(−v) = J₀(2√v)
        Ok(j01_miller(2.0 * (-u).sqrt()).0)
    }
}

/// φ₀′(u) = Σ k uᵏ⁻¹/(k!)² = I₁(2√u)/√u for real u.
pub fn phi0_prime(u: f64, acc: &EvalAccuracy) -> Result<f64> {
    guard_phi0(u.abs())?;
    if u >= -4.0 {
        phi0_prime_series(u, acc)
    } else {
        let r = (-u).sqrt();
        Ok(j01_miller(2.0 * r).1 / r)
    }
}

/// Trapezoidal evaluation of I₀(z) and I₁(z) from
/// Iₙ(z) = (1/π) ∫₀^π e^{z cos θ} cos(nθ) dθ. The integrand is periodic and
/// entire, so the rule converges geometrically once the panel count exceeds
/// a multiple of |z|.
fn bessel_i01_trapezoid(z: Complex64) -> (Complex64, Complex64) {
    let m = (2.0 * z.norm()).ceil() as usize + 32;
    let h = PI / m as f64;
    let mut s0 = Complex64::new(0.0, 0.0);
    let mut s1 = Complex64::new(0.0, 0.0);
    for j in 0..=m {
        let c = (j as f64 * h).cos();
        let w = if j == 0 || j == m { 0.5 } else { 1.0 };
        let e = (z * c).exp();
        s0 += e * w;
        s1 += e * (w * c);
    }
    (s0 / m as f64, s1 / m as f64)
}

/// φ₀ for complex u.
pub fn phi0_complex(u: Complex64, acc: &EvalAccuracy) -> Result<Complex64> {
    guard_phi0(u.norm())?;
    if u.norm() <= 16.0 {
        complex_series(u, acc, |k| (k * k) as f64, "phi0")
    } else {
        Ok(bessel_i01_trapezoid(2.0 * u.sqrt()).0)
    }
}

/// φ₀′ for complex u.
pub fn phi0_prime_complex(u: Complex64, acc: &EvalAccuracy) -> Result<Complex64> {
    guard_phi0(u.norm())?;
    if u.norm() <= 16.0 {
        complex_series(u, acc, |j| (j * (j + 1)) as f64, "phi0_prime")
    } else {
        let r = u.sqrt();
        Ok(bessel_i01_trapezoid(2.0 * r).1 / r)
    }
}

fn complex_series(
    u: Complex64,
    acc: &EvalAccuracy,
    denom: impl Fn(usize) -> f64,
    what: &str,
) -> Result<Complex64> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..acc.max_terms {
        term = term * u / denom(k);
        sum += term;
        if term.norm() <= acc.rel_tol * sum.norm() || term.norm() <= acc.abs_tol {
            return Ok(sum);
        }
    }
    Err(not_converged(what, acc.max_terms))
}

/// Backward-recurrence start index for a batch up to `n_max` at argument x,
/// with enough headroom for the working precision `eps`.
fn miller_start(x: f64, n_max: usize, eps: f64) -> usize {
    let digits = -eps.log10();
    let base = (n_max as f64).max(x);
    (base + 1.5 * digits + 12.0 * x.max(1.0).sqrt()).ceil() as usize + 8
}

/// I₀(x), …, I_{n_max}(x) by Miller's backward recurrence
/// Iₙ = I_{n+2} + (2(n+1)/x) I_{n+1}, normalised so that I₀ = φ₀(x²/4).
pub fn bessel_i_batch(x: f64, range: BesselOrderRange, acc: &EvalAccuracy) -> Result<Vec<f64>> {
    require_finite(x, "bessel_i_batch")?;
    bessel_i_batch_real(x, range, acc)
}

/// [`bessel_i_batch`] in any [`Real`] precision.
pub fn bessel_i_batch_real<R: Real>(
    x: R,
    range: BesselOrderRange,
    acc: &EvalAccuracy,
) -> Result<Vec<R>> {
    let xf = x.to_f64();
    if xf < 0.0 {
        return domain(format!(
            "bessel_i_batch: negative argument {xf}; use Iₙ(−x) = (−1)ⁿ Iₙ(x)"
        ));
    }
    let n_max = range.n_max;
    let mut out = vec![R::zero(); n_max + 1];
    if xf == 0.0 {
        out[0] = R::one();
        return Ok(out);
    }
    let start = miller_start(xf, n_max, R::EPSILON);
    let two_over_x = R::from_f64(2.0) / x;
    let mut i_next = R::zero();
    let mut i_cur = R::from_f64(1e-30);
    for k in (1..=start).rev() {
        // I_{k-1} = I_{k+1} + (2k/x) I_k
        let i_prev = i_next + R::from_usize(k) * two_over_x * i_cur;
        i_next = i_cur;
        i_cur = i_prev;
        let order = k - 1;
        if order <= n_max {
            out[order] = i_cur;
        }
        if i_cur.to_f64().abs() > 1e200 {
            let s = R::from_f64(1e-200);
            i_cur *= s;
            i_next *= s;
            for v in out.iter_mut().skip(order) {
                *v *= s;
            }
        }
    }
    let quarter = R::from_f64(0.25);
    let i0 = phi0_series(quarter * x * x, acc)?;
    let scale = i0 / out[0];
    for v in out.iter_mut() {
        *v *= scale;
    }
    Ok(out)
}

/// ψ(x) for x > 0 by upward recurrence and the asymptotic expansion.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("digamma: argument must be positive, got {x}"));
    }
    let mut shift = 0.0;
    let mut y = x;
    while y < 10.0 {
        shift += 1.0 / y;
        y += 1.0;
    }
    let r = 1.0 / (y * y);
    let tail = r
        * (1.0 / 12.0
            - r * (1.0 / 120.0
                - r * (1.0 / 252.0
                    - r * (1.0 / 240.0 - r * (1.0 / 132.0 - r * (691.0 / 32760.0 - r / 12.0))))));
    Ok(y.ln() - 0.5 / y - tail - shift)
}

/// Defining series Σ (1/3)ⱼ(2/3)ⱼ zʲ / (j!)² for 0 ≤ z < 1.
pub fn hyp2f1_third_series(z: f64, acc: &EvalAccuracy) -> Result<f64> {
    if !(0.0..1.0).contains(&z) {
        return domain(format!("hyp2f1_third_series: z = {z} outside [0, 1)"));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 0..acc.max_terms {
        let jf = j as f64;
        term *= (jf + 1.0 / 3.0) * (jf + 2.0 / 3.0) / ((jf + 1.0) * (jf + 1.0)) * z;
        sum += term;
        // the term ratio is below z, so the tail is bounded by term·z/(1−z)
        let tail = term * z / (1.0 - z);
        if acc.converged(tail, sum) {
            return Ok(sum);
        }
    }
    Err(not_converged("hyp2f1_third_series", acc.max_terms))
}

/// Logarithmic connection formula for the c = a + b case, written in the
/// complement w = 1 − z (0 < w ≤ 1):
/// F = Γ(1)/(Γ(1/3)Γ(2/3)) Σₙ (1/3)ₙ(2/3)ₙ/(n!)² [2ψ(n+1) − ψ(n+1/3) − ψ(n+2/3) − ln w] wⁿ.
pub fn hyp2f1_third_log(w: f64, acc: &EvalAccuracy) -> Result<f64> {
    if w == 0.0 {
        return Err(Error::Singular(1.0));
    }
    if !(w > 0.0 && w <= 1.0) {
        return domain(format!("hyp2f1_third_log: complement w = {w} outside (0, 1]"));
    }
    // 1/(Γ(1/3)Γ(2/3)) = sin(π/3)/π
    let prefactor = 3f64.sqrt() / (2.0 * PI);
    let ln_w = w.ln();
    let mut psi_n1 = -EULER_GAMMA;
    let mut psi_a = digamma(1.0 / 3.0)?;
    let mut psi_b = digamma(2.0 / 3.0)?;
    let mut coef = 1.0;
    let mut wn = 1.0;
    let mut sum = 0.0;
    for n in 0..acc.max_terms {
        let nf = n as f64;
        let term = coef * wn * (2.0 * psi_n1 - psi_a - psi_b - ln_w);
        sum += term;
        if n > 2 && acc.converged(term * w / (1.0 - w).max(1e-300), sum) {
            return Ok(prefactor * sum);
        }
        coef *= (nf + 1.0 / 3.0) * (nf + 2.0 / 3.0) / ((nf + 1.0) * (nf + 1.0));
        psi_n1 += 1.0 / (nf + 1.0);
        psi_a += 1.0 / (nf + 1.0 / 3.0);
        psi_b += 1.0 / (nf + 2.0 / 3.0);
        wn *= w;
    }
    Err(not_converged("hyp2f1_third_log", acc.max_terms))
}

/// ₂F₁(1/3, 2/3; 1; 1 − w) with the complement supplied directly, so callers
/// that know 1 − z in closed form avoid cancellation near z = 1.
pub fn hyp2f1_third_complement(w: f64, acc: &EvalAccuracy) -> Result<f64> {
    if w.is_nan() || !(0.0..=1.0).contains(&w) {
        return domain(format!("hyp2f1_third: complement {w} outside [0, 1]"));
    }
    if w > 1.0 - HYP2F1_SWITCH {
        hyp2f1_third_series(1.0 - w, acc)
    } else {
        hyp2f1_third_log(w, acc)
    }
}

/// ₂F₁(1/3, 2/3; 1; z) on [0, 1]. z = 1 is reported as [`Error::Singular`].
pub fn hyp2f1_third(z: f64, acc: &EvalAccuracy) -> Result<f64> {
    if z.is_nan() || !(0.0..=1.0).contains(&z) {
        return domain(format!("hyp2f1_third: z = {z} outside [0, 1]"));
    }
    if z == 1.0 {
        return Err(Error::Singular(1.0));
    }
    if z < HYP2F1_SWITCH {
        hyp2f1_third_series(z, acc)
    } else {
        hyp2f1_third_log(1.0 - z, acc)
    }
}
