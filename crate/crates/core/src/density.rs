//! Densities of the planar random flight X = |W₃| and of the random
//! eigenvalues H (hexagonal) and T (triangular with loops), with CDFs.
//!
//! All three reduce to F = ₂F₁(1/3, 2/3; 1; z):
//!
//! * f_X(x) = 2√3 x / (π(3 + x²)) · F(z),  z = x²(9 − x²)² / (3 + x²)³ on [0, 3]
//! * f_H(x) = f_X(|x|) / 2 on [−3, 3]
//! * f_T(t) = √3 / (π(3 + t)) · F(z),  z = t(9 − t)² / (3 + t)³ on [0, 9]
//!
//! The complements 1 − z = 27(1 − x²)²/(3 + x²)³ and 27(1 − t)²/(3 + t)³
//! are formed in closed form so the logarithmic singularity is resolved
//! without cancellation.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad::{integrate_finite, QuadSpec};
use crate::specfun::{bessel_j0, hyp2f1_third_complement, EvalAccuracy};

/// Chebyshev nodes in the cached CDF grid.
pub const CDF_GRID_POINTS: usize = 2048;

/// Minimum distance from a singular point accepted by the Bessel-integral path.
pub const CROSSCHECK_GAP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    X,
    H,
    T,
}

impl Which {
    pub fn support(self) -> (f64, f64) {
        match self {
            Which::X => (0.0, 3.0),
            Which::H => (-3.0, 3.0),
            Which::T => (0.0, 9.0),
        }
    }

    pub fn singular_points(self) -> &'static [f64] {
        match self {
            Which::X | Which::T => &[1.0],
            Which::H => &[-1.0, 1.0],
        }
    }
}

impl std::str::FromStr for Which {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Which::X),
            "h" => Ok(Which::H),
            "t" => Ok(Which::T),
            _ => domain(format!("unknown density '{s}', expected x, h or t")),
        }
    }
}

/// Monotone cubic Hermite interpolant of a cumulative table.
#[derive(Debug, Clone)]
struct CdfGrid {
    xs: Vec<f64>,
    fs: Vec<f64>,
    slopes: Vec<f64>,
}

impl CdfGrid {
    fn locate(&self, x: f64) -> usize {
        match self.xs.partition_point(|&p| p <= x) {
            0 => 0,
            i => (i - 1).min(self.xs.len() - 2),
        }
    }

    fn interpolate(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let s = ((x - self.xs[i]) / h).clamp(0.0, 1.0);
        let (f0, f1) = (self.fs[i], self.fs[i + 1]);
        let (d0, d1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * f0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * f1
            + (s3 - s2) * d1
    }
}

fn pchip_slopes(xs: &[f64], fs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (fs[i + 1] - fs[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = delta[0].max(0.0);
    d[n - 1] = delta[n - 2].max(0.0);
    d
}

/// Fritsch–Carlson limiter: scales node slopes so every Hermite piece stays
/// monotone.
fn limit_slopes(xs: &[f64], fs: &[f64], d: &mut [f64]) {
    for i in 0..xs.len() - 1 {
        let delta = (fs[i + 1] - fs[i]) / (xs[i + 1] - xs[i]);
        if delta <= 0.0 {
            d[i] = 0.0;
            d[i + 1] = 0.0;
            continue;
        }
        let a = d[i] / delta;
        let b = d[i + 1] / delta;
        let r = a.hypot(b);
        if r > 3.0 {
            d[i] = 3.0 * a / r * delta;
            d[i + 1] = 3.0 * b / r * delta;
        }
    }
}

/// Evaluator for one of the three densities. Immutable once built; the CDF
/// grid is filled on first use.
#[derive(Debug)]
pub struct DensityModel {
    pub which: Which,
    pub accuracy: EvalAccuracy,
    pub singular_points: Vec<f64>,
    grid: OnceLock<Result<CdfGrid>>,
}

impl Clone for DensityModel {
    fn clone(&self) -> Self {
        DensityModel {
            which: self.which,
            accuracy: self.accuracy,
            singular_points: self.singular_points.clone(),
            grid: self.grid.clone(),
        }
    }
}

fn quad_spec() -> QuadSpec {
    QuadSpec::default().with_rel_tol(1e-12).with_abs_tol(1e-15)
}

impl DensityModel {
    pub fn new(which: Which) -> Self {
        DensityModel::with_accuracy(which, EvalAccuracy::tight())
    }

    pub fn with_accuracy(which: Which, accuracy: EvalAccuracy) -> Self {
        DensityModel {
            which,
            accuracy,
            singular_points: which.singular_points().to_vec(),
            grid: OnceLock::new(),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        self.which.support()
    }

    fn f_x(&self, x: f64) -> Result<f64> {
        if !(0.0..=3.0).contains(&x) {
            return Ok(0.0);
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        if x == 1.0 {
            return Err(Error::Singular(1.0));
        }
        let x2 = x * x;
        let d = 3.0 + x2;
        let w = 27.0 * (1.0 - x2).powi(2) / (d * d * d);
        let f = hyp2f1_third_complement(w.min(1.0), &self.accuracy)?;
        Ok(2.0 * 3f64.sqrt() * x / (PI * d) * f)
    }

    fn f_t(&self, t: f64) -> Result<f64> {
        if !(0.0..=9.0).contains(&t) {
            return Ok(0.0);
        }
        if t == 1.0 {
            return Err(Error::Singular(1.0));
        }
        let d = 3.0 + t;
        let w = 27.0 * (1.0 - t).powi(2) / (d * d * d);
        let f = hyp2f1_third_complement(w.min(1.0), &self.accuracy)?;
        Ok(3f64.sqrt() / (PI * d) * f)
    }

    /// Density at x. Zero off the support; [`Error::Singular`] exactly at a
    /// logarithmic singularity.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return domain(format!("pdf: non-finite argument {x}"));
        }
        match self.which {
            Which::X => self.f_x(x),
            Which::H => match self.f_x(x.abs()) {
                Ok(v) => Ok(0.5 * v),
                Err(Error::Singular(_)) => Err(Error::Singular(x)),
                Err(e) => Err(e),
            },
            Which::T => self.f_t(x),
        }
    }

    /// [`pdf`](Self::pdf) with the singular points (a null set) mapped to
    /// zero, for use as a quadrature integrand.
    pub fn pdf_integrand(&self, x: f64) -> f64 {
        match self.pdf(x) {
            Ok(v) => v,
            Err(Error::Singular(_)) => 0.0,
            Err(_) => f64::NAN,
        }
    }

    /// Density of the non-negative variable whose CDF is tabulated: X for X
    /// and H, T for T.
    fn base_pdf(&self, x: f64) -> f64 {
        let r = match self.which {
            Which::X | Which::H => self.f_x(x),
            Which::T => self.f_t(x),
        };
        match r {
            Ok(v) => v,
            Err(Error::Singular(_)) => 0.0,
            Err(_) => f64::NAN,
        }
    }

    fn base_upper(&self) -> f64 {
        match self.which {
            Which::X | Which::H => 3.0,
            Which::T => 9.0,
        }
    }

    fn build_grid(&self) -> Result<CdfGrid> {
        let hi = self.base_upper();
        let n = CDF_GRID_POINTS;
        let mut xs: Vec<f64> = (0..n)
            .map(|i| 0.5 * hi * (1.0 - (PI * i as f64 / (n - 1) as f64).cos()))
            .collect();
        xs.push(1.0);
        for j in 0..120 {
            let off = CROSSCHECK_GAP * 0.75f64.powi(j);
            xs.push(1.0 - off);
            xs.push(1.0 + off);
        }
        xs[0] = 0.0;
        xs[n - 1] = hi;
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        let spec = quad_spec();
        let pieces: Vec<Result<f64>> = xs
            .par_windows(2)
            .map(|w| integrate_finite(|t| self.base_pdf(t), w[0], w[1], &spec).map(|r| r.value))
            .collect();
        let mut fs = Vec::with_capacity(xs.len());
        fs.push(0.0);
        for p in pieces {
            let last = *fs.last().unwrap();
            fs.push(last + p?);
        }
        let mut slopes = pchip_slopes(&xs, &fs);
        for (i, d) in slopes.iter_mut().enumerate() {
            let exact = self.base_pdf(xs[i]);
            if exact.is_finite() && exact > 0.0 && xs[i] != 1.0 {
                *d = exact;
            }
        }
        limit_slopes(&xs, &fs, &mut slopes);
        Ok(CdfGrid { xs, fs, slopes })
    }

    fn grid(&self) -> Result<&CdfGrid> {
        self.grid
            .get_or_init(|| self.build_grid())
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Exact CDF of the tabulated base variable: cached node value plus an
    /// adaptive integral from the node to y.
    fn base_cdf(&self, y: f64) -> Result<f64> {
        let hi = self.base_upper();
        if y <= 0.0 {
            return Ok(0.0);
        }
        let g = self.grid()?;
        if y >= hi {
            return Ok(*g.fs.last().unwrap());
        }
        let i = g.locate(y);
        if y == g.xs[i] {
            return Ok(g.fs[i]);
        }
        let r = integrate_finite(|t| self.base_pdf(t), g.xs[i], y, &quad_spec())?;
        Ok(g.fs[i] + r.value)
    }

    fn base_cdf_fast(&self, y: f64) -> Result<f64> {
        let hi = self.base_upper();
        if y <= 0.0 {
            return Ok(0.0);
        }
        let g = self.grid()?;
        if y >= hi {
            return Ok(*g.fs.last().unwrap());
        }
        Ok(g.interpolate(y))
    }

    fn map_cdf(&self, x: f64, base: impl Fn(f64) -> Result<f64>) -> Result<f64> {
        if !x.is_finite() {
            return domain(format!("cdf: non-finite argument {x}"));
        }
        match self.which {
            Which::X | Which::T => base(x),
            Which::H => {
                let half = 0.5 * base(x.abs())?;
                Ok(if x >= 0.0 { 0.5 + half } else { 0.5 - half })
            }
        }
    }

    /// P(V ≤ x), by adaptive quadrature anchored on the cached grid.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(self.map_cdf(x, |y| self.base_cdf(y))?.clamp(0.0, 1.0))
    }

    /// Monotone-interpolated CDF from the cached grid; for bulk use such as
    /// Kolmogorov–Smirnov statistics.
    pub fn cdf_interpolated(&self, x: f64) -> Result<f64> {
        Ok(self.map_cdf(x, |y| self.base_cdf_fast(y))?.clamp(0.0, 1.0))
    }

    /// Distance in the X variable from the log singularity and the far edge.
    fn crosscheck_gap(&self, x: f64) -> f64 {
        let r = match self.which {
            Which::X | Which::H => x.abs(),
            Which::T => x.max(0.0).sqrt(),
        };
        (r - 1.0).abs().min((r - 3.0).abs())
    }

    /// Density from the oscillatory Bessel integral ∫₀^∞ t x J₀(tx) J₀(t)³ dt,
    /// truncated and averaged over cut-offs in [t_cut, 2 t_cut] with a
    /// sin² taper to cancel the tail oscillation.
    pub fn pdf_bessel_crosscheck(&self, x: f64, t_cut: f64) -> Result<f64> {
        if !x.is_finite() || !(t_cut >= 10.0) {
            return domain(format!("crosscheck: bad arguments x = {x}, t_cut = {t_cut}"));
        }
        if self.crosscheck_gap(x) < CROSSCHECK_GAP {
            return domain(format!(
                "crosscheck: x = {x} within {CROSSCHECK_GAP} of a singular point"
            ));
        }
        match self.which {
            Which::X => bessel_flight_density(x, t_cut, &self.accuracy),
            Which::H => Ok(0.5 * bessel_flight_density(x.abs(), t_cut, &self.accuracy)?),
            Which::T => {
                if x <= 0.0 {
                    return domain("crosscheck: T requires x > 0");
                }
                let r = x.sqrt();
                Ok(bessel_flight_density(r, t_cut, &self.accuracy)? / (2.0 * r))
            }
        }
    }
}

/// Panel width for the oscillatory integral; the fastest frequency is x + 3.
const OSC_PANEL: f64 = 0.25;

fn bessel_flight_density(x: f64, t_cut: f64, acc: &EvalAccuracy) -> Result<f64> {
    let panels = (2.0 * t_cut / OSC_PANEL).ceil() as usize;
    let h = 2.0 * t_cut / panels as f64;
    let spec = QuadSpec::default().with_rel_tol(1e-10).with_abs_tol(1e-14);
    let integrand = |t: f64| {
        let a = bessel_j0(t * x, acc).unwrap_or(f64::NAN);
        let b = bessel_j0(t, acc).unwrap_or(f64::NAN);
        t * x * a * b * b * b
    };
    let pieces: Vec<Result<f64>> = (0..panels)
        .into_par_iter()
        .map(|i| {
            let a = i as f64 * h;
            integrate_finite(integrand, a, a + h, &spec).map(|r| r.value)
        })
        .collect();
    let mut partial = 0.0;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, p) in pieces.into_iter().enumerate() {
        partial += p?;
        let end = (i + 1) as f64 * h;
        if end > t_cut {
            let w = (PI * (end - t_cut) / t_cut).sin().powi(2);
            num += w * partial;
            den += w;
        }
    }
    if !num.is_finite() {
        return Err(Error::Internal("crosscheck integrand produced NaN".into()));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::moment_tstar;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    fn total(model: &DensityModel) -> f64 {
        let (lo, hi) = model.support();
        let spec = QuadSpec::default().with_splits(&model.singular_points).with_rel_tol(1e-12);
        integrate_finite(|x| model.pdf_integrand(x), lo, hi, &spec)
            .unwrap()
            .value
    }

    #[test]
    fn endpoint_and_trivial_values() {
        let t = DensityModel::new(Which::T);
        let expected = 3f64.sqrt() / (12.0 * PI);
        assert!((t.pdf(9.0).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.045944).abs() < 1e-6);
        let h = DensityModel::new(Which::H);
        assert_eq!(h.pdf(0.0).unwrap(), 0.0);
        assert_eq!(h.pdf(3.5).unwrap(), 0.0);
        assert_eq!(t.pdf(-0.1).unwrap(), 0.0);
        assert!(matches!(t.pdf(1.0), Err(Error::Singular(_))));
        assert!(matches!(h.pdf(-1.0), Err(Error::Singular(_))));
        assert!(matches!(t.pdf(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn normalisation() {
        for which in [Which::X, Which::H, Which::T] {
            let m = DensityModel::new(which);
            let s = total(&m);
            assert!((s - 1.0).abs() < 1e-8, "{which:?}: {s}");
        }
    }

    #[test]
    fn moment_recovery() {
        let t = DensityModel::new(Which::T);
        let spec = QuadSpec::default().with_splits(&[1.0]).with_rel_tol(1e-12);
        for k in 0..=10 {
            let m = integrate_finite(
                |x| x.powi(k as i32) * t.pdf_integrand(x),
                0.0,
                9.0,
                &spec,
            )
            .unwrap()
            .value;
            let a = moment_tstar(k).unwrap().to_f64().unwrap();
            assert!(((m - a) / a).abs() < 1e-6, "k={k}: {m} vs {a}");
        }
        let h = DensityModel::new(Which::H);
        let spec = QuadSpec::default().with_splits(&[-1.0, 1.0]).with_rel_tol(1e-12);
        for k in 0..=14usize {
            let m = integrate_finite(
                |x| x.powi(k as i32) * h.pdf_integrand(x),
                -3.0,
                3.0,
                &spec.clone().with_abs_tol(1e-10 * 3f64.powi(k as i32)),
            )
            .unwrap()
            .value;
            let mu = crate::moments::moment_h(k).unwrap().to_f64().unwrap();
            assert!((m - mu).abs() <= 1e-6 * mu.max(1.0), "k={k}: {m} vs {mu}");
        }
    }

    #[test]
    fn push_forward_from_t_to_h() {
        let h = DensityModel::new(Which::H);
        let t = DensityModel::new(Which::T);
        let spec = QuadSpec::default().with_rel_tol(1e-12).with_abs_tol(1e-15);
        for i in 0..20 {
            let a = 0.15 * i as f64;
            let b = a + 0.15;
            let split = |lo: f64, hi: f64| {
                if lo < 1.0 && 1.0 < hi {
                    vec![1.0]
                } else {
                    vec![]
                }
            };
            let lhs = integrate_finite(
                |x| h.pdf_integrand(x),
                a,
                b,
                &spec.clone().with_splits(&split(a, b)),
            )
            .unwrap()
            .value;
            let rhs = integrate_finite(
                |x| t.pdf_integrand(x),
                a * a,
                b * b,
                &spec.clone().with_splits(&split(a * a, b * b)),
            )
            .unwrap()
            .value;
            assert!((lhs - 0.5 * rhs).abs() < 1e-7, "[{a}, {b}]: {lhs} vs {}", 0.5 * rhs);
        }
    }

    #[test]
    fn cdf_values() {
        let t = DensityModel::new(Which::T);
        assert_eq!(t.cdf(0.0).unwrap(), 0.0);
        assert!((t.cdf(9.0).unwrap() - 1.0).abs() < 1e-8);
        let h = DensityModel::new(Which::H);
        assert_eq!(h.cdf(0.0).unwrap(), 0.5);
        assert!(h.cdf(-3.0).unwrap().abs() < 1e-8);
        assert!((h.cdf(3.0).unwrap() - 1.0).abs() < 1e-8);
        let x = DensityModel::new(Which::X);
        // P(X ≤ x) = P(T ≤ x²)
        for v in [0.3, 0.99, 1.0, 1.7, 2.5] {
            assert!((x.cdf(v).unwrap() - t.cdf(v * v).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn interpolated_cdf_tracks_exact() {
        let t = DensityModel::new(Which::T);
        let mut prev = 0.0;
        for i in 0..=900 {
            let x = i as f64 * 0.01;
            let a = t.cdf(x).unwrap();
            let b = t.cdf_interpolated(x).unwrap();
            assert!((a - b).abs() < 1e-6, "x={x}: {a} vs {b}");
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn bessel_path_agrees() {
        let x = DensityModel::new(Which::X);
        let v = x.pdf_bessel_crosscheck(2.0, 300.0).unwrap();
        assert!((v - x.pdf(2.0).unwrap()).abs() < 1e-3, "{v}");
        let out = x.pdf_bessel_crosscheck(3.5, 300.0).unwrap();
        assert!(out.abs() < 1e-3, "{out}");
        let t = DensityModel::new(Which::T);
        let v = t.pdf_bessel_crosscheck(4.0, 300.0).unwrap();
        assert!((v - t.pdf(4.0).unwrap()).abs() < 1e-3);
        assert!(matches!(x.pdf_bessel_crosscheck(1.02, 300.0), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn h_symmetric_and_half_of_x(v in -3.5f64..3.5) {
            prop_assume!((v.abs() - 1.0).abs() > 1e-12);
            let h = DensityModel::new(Which::H);
            let x = DensityModel::new(Which::X);
            let a = h.pdf(v).unwrap();
            prop_assert_eq!(a, h.pdf(-v).unwrap());
            prop_assert_eq!(a, 0.5 * x.pdf(v.abs()).unwrap());
            prop_assert!(a >= 0.0);
        }

        #[test]
        fn t_density_nonnegative(v in -1.0f64..10.0) {
            prop_assume!(v != 1.0);
            let t = DensityModel::new(Which::T);
            prop_assert!(t.pdf(v).unwrap() >= 0.0);
        }
    }
}
