//! Characteristic functions of H and T in real (or real-variable complex)
//! arithmetic through φ₀(u) = I₀(2√u).
//!
//! φ_H(s) = ∫₀¹ [φ₀(u)³ − 6 s² t(1−t) φ₀(u)² φ₀′(u)] dt,  u = −s² t(1−t)
//! φ_T(s) = ∫₀¹ φ₀(i s |log t|)³ dt = ∫₀^∞ φ₀(i s w)³ e^{−w} dw

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{DensityModel, Which};
use crate::error::{domain, Error, Result};
use crate::quad::{integrate_finite, integrate_finite_complex, GaussLaguerre, QuadSpec};
use crate::specfun::{phi0, phi0_complex, phi0_prime, EvalAccuracy};

pub const S_MAX: f64 = 40.0;

/// Above this |s| the integrand of the φ₀ form of φ_T reaches e^{4.5|s|}
/// while the integral stays bounded by 1, so φ_T is taken from the Fourier
/// integral of f_T instead.
pub const S_DIRECT_T: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharFnPoint {
    pub s: f64,
    pub value: Complex64,
}

fn check_s(s: f64) -> Result<()> {
    if !s.is_finite() {
        return domain(format!("charfn: non-finite frequency {s}"));
    }
    if s.abs() > S_MAX {
        return Err(Error::Range(format!("charfn: |s| = {} exceeds {S_MAX}", s.abs())));
    }
    Ok(())
}

fn spec() -> QuadSpec {
    QuadSpec::default().with_rel_tol(1e-11).with_abs_tol(1e-12)
}

/// φ_H(s), real and even.
pub fn charfn_h(s: f64) -> Result<f64> {
    check_s(s)?;
    if s == 0.0 {
        return Ok(1.0);
    }
    let acc = EvalAccuracy::tight();
    let s2 = s * s;
    let mut failure = None;
    let r = integrate_finite(
        |t| {
            let q = t * (1.0 - t);
            let u = -s2 * q;
            match (phi0(u, &acc), phi0_prime(u, &acc)) {
                (Ok(p), Ok(dp)) => p * p * p - 6.0 * s2 * q * p * p * dp,
                (Err(e), _) | (_, Err(e)) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        0.0,
        1.0,
        &spec(),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.value)
}

fn phi0_cubed(u: Complex64, acc: &EvalAccuracy) -> Result<Complex64> {
    let p = phi0_complex(u, acc)?;
    Ok(p * p * p)
}

/// Depth W in w = −log t beyond which |φ₀(isw)|³ e^{−w} ≤ e^{3√(2|s|w) − w}
/// is below e^{−40}; capped where e^{−W} would leave the normal range.
fn log_depth(s: f64) -> f64 {
    let a = 3.0 * (2.0 * s.abs()).sqrt();
    let r = 0.5 * (a + (a * a + 160.0).sqrt());
    (r * r).ceil().min(700.0)
}

/// φ_T(s) from ∫₀¹ φ₀(i s |log t|)³ dt, with no switch to the Fourier path.
/// The t-range is split at t = e^{−1}, e^{−2}, … so every panel spans a unit
/// change of log t; the piece below e^{−W} is dropped.
pub fn charfn_t_direct(s: f64) -> Result<Complex64> {
    check_s(s)?;
    if s == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let acc = EvalAccuracy::tight();
    let depth = log_depth(s);
    let splits: Vec<f64> = (1..depth as usize).map(|j| (-(j as f64)).exp()).collect();
    let mut failure = None;
    let r = integrate_finite_complex(
        |t| {
            let u = Complex64::new(0.0, s * -t.ln());
            phi0_cubed(u, &acc).unwrap_or_else(|e| {
                failure.get_or_insert(e);
                Complex64::new(f64::NAN, 0.0)
            })
        },
        (-depth).exp(),
        1.0,
        // rounding floor: the integrand peaks near e^{4.5|s|}
        &spec()
            .with_splits(&splits)
            .with_abs_tol(1e-12f64.max(1e-15 * (4.5 * s.abs()).exp())),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.value)
}

/// φ_T(s) after t = e^{−w}, by the default Gauss–Laguerre rule.
pub fn charfn_t_laguerre(s: f64) -> Result<Complex64> {
    check_s(s)?;
    let acc = EvalAccuracy::tight();
    let rule = GaussLaguerre::<f64>::default_rule();
    let mut sum = Complex64::new(0.0, 0.0);
    for (&w, &wt) in rule.nodes.iter().zip(&rule.weights) {
        sum += phi0_cubed(Complex64::new(0.0, s * w), &acc)? * wt;
    }
    Ok(sum)
}

/// φ_T(s) = E e^{isT} as the Fourier integral of the closed-form density.
pub fn charfn_t_fourier(s: f64) -> Result<Complex64> {
    check_s(s)?;
    let model = DensityModel::new(Which::T);
    let r = integrate_finite_complex(
        |x| Complex64::from_polar(model.pdf_integrand(x), s * x),
        0.0,
        9.0,
        &spec().with_splits(&[1.0]),
    )?;
    Ok(r.value)
}

/// φ_T(s): the φ₀ form for |s| ≤ [`S_DIRECT_T`], the Fourier form beyond.
pub fn charfn_t(s: f64) -> Result<Complex64> {
    if s.abs() <= S_DIRECT_T {
        charfn_t_direct(s)
    } else {
        charfn_t_fourier(s)
    }
}

/// `points` equally spaced frequencies on [s_from, s_to].
pub fn charfn_grid(which: Which, s_from: f64, s_to: f64, points: usize) -> Result<Vec<CharFnPoint>> {
    if points == 0 {
        return domain("charfn_grid: points must be at least 1");
    }
    let step = if points == 1 { 0.0 } else { (s_to - s_from) / (points - 1) as f64 };
    (0..points)
        .map(|i| {
            let s = s_from + step * i as f64;
            let value = match which {
                Which::H => Complex64::new(charfn_h(s)?, 0.0),
                Which::T => charfn_t(s)?,
                Which::X => return domain("charfn: only h and t are supported"),
            };
            Ok(CharFnPoint { s, value })
        })
        .collect()
}
