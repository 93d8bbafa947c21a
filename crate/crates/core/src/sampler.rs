//! Random variates for T and H (exact and Y_b approximation), Weyl-pair
//! moment experiments, Monte Carlo for the triple-angle moment integral, and
//! empirical statistics.
//!
//! Draws come from ChaCha8 keyed by (seed, stream_id). Work is cut into
//! fixed-size chunks whose generator is positioned by word offset, so the
//! output does not depend on the thread count.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{DensityModel, Which};
use crate::error::{domain, Error, Result};
use crate::moments::moment_tstar;

pub const ALGORITHM_TAG: &str = "chacha8";

/// Draws per parallel work unit.
pub const CHUNK: usize = 1 << 16;

/// Each uniform f64 consumes two 32-bit words of the ChaCha stream.
const WORDS_PER_UNIFORM: u128 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
    pub algorithm_tag: String,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream {
            seed,
            stream_id,
            algorithm_tag: ALGORITHM_TAG.to_string(),
        }
    }

    pub fn with_stream(&self, stream_id: u64) -> Self {
        RngStream::new(self.seed, stream_id)
    }

    /// Generator positioned at the given 32-bit word.
    pub fn generator_at(&self, word: u128) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng.set_word_pos(word);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleKind {
    ExactT,
    ExactH,
    ApproxT,
    ApproxH,
    WeylPair,
}

impl SampleKind {
    fn range(self) -> Option<(f64, f64)> {
        match self {
            SampleKind::ExactT | SampleKind::ApproxT => Some((0.0, 9.0)),
            SampleKind::ExactH | SampleKind::ApproxH => Some((-3.0, 3.0)),
            SampleKind::WeylPair => None,
        }
    }

    fn law(self) -> Option<Which> {
        match self {
            SampleKind::ExactT | SampleKind::ApproxT => Some(Which::T),
            SampleKind::ExactH | SampleKind::ApproxH => Some(Which::H),
            SampleKind::WeylPair => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub rng: RngStream,
    pub kind: SampleKind,
}

/// Monte Carlo estimate against a known target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
    pub z_score: f64,
}

impl McEstimate {
    fn new(mean: f64, stderr: f64, target: f64) -> Self {
        let diff = mean - target;
        let z_score = if stderr > 0.0 {
            diff / stderr
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        };
        McEstimate {
            estimate: mean,
            stderr,
            target,
            z_score,
        }
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.z_score.abs() <= sigmas
    }
}

/// Mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Empirical k-th moment with its standard error.
    pub fn moment(&self, k: u32) -> (f64, f64) {
        let powers: Vec<f64> = self.values.iter().map(|v| v.powi(k as i32)).collect();
        mean_stderr(&powers)
    }

    /// True if every value lies in the kind's range.
    pub fn in_range(&self) -> bool {
        match self.kind.range() {
            Some((lo, hi)) => self.values.iter().all(|v| (lo..=hi).contains(v)),
            None => true,
        }
    }
}

/// Runs `draw` n times; chunk c starts at word c·CHUNK·uniforms·2.
fn par_draws<F>(rng: &RngStream, n: usize, uniforms: usize, draw: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let len = CHUNK.min(n - start);
            let mut g = rng.generator_at(start as u128 * uniforms as u128 * WORDS_PER_UNIFORM);
            (0..len).map(|_| draw(&mut g)).collect()
        })
        .collect();
    parts.concat()
}

/// Chunked mean and standard error of f over n draws, reduced in chunk order.
fn par_mean<F>(rng: &RngStream, n: usize, uniforms: usize, f: F) -> (f64, f64)
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let len = CHUNK.min(n - start);
            let mut g = rng.generator_at(start as u128 * uniforms as u128 * WORDS_PER_UNIFORM);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..len {
                let v = f(&mut g);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let nf = n as f64;
    let mean = s / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

fn angle(g: &mut ChaCha8Rng) -> f64 {
    g.gen::<f64>() * TAU
}

/// 3 + 2(cos v₁ + cos v₂ + cos(v₁ + v₂)), clamped to [0, 9] against rounding.
pub fn t_from_angles(v1: f64, v2: f64) -> f64 {
    (3.0 + 2.0 * (v1.cos() + v2.cos() + (v1 + v2).cos())).clamp(0.0, 9.0)
}

/// The three-angle form 3 + 2(cos(u₁−u₂) + cos(u₁−u₃) + cos(u₂−u₃)).
pub fn t_from_three_angles(u1: f64, u2: f64, u3: f64) -> f64 {
    (3.0 + 2.0 * ((u1 - u2).cos() + (u1 - u3).cos() + (u2 - u3).cos())).clamp(0.0, 9.0)
}

/// 3 + 2Y_b at the point x: 3 + 2(cos x + cos βx + cos((1+β)x)).
pub fn approx_from_x(x: f64, beta: f64) -> f64 {
    (3.0 + 2.0 * (x.cos() + (beta * x).cos() + ((1.0 + beta) * x).cos())).clamp(0.0, 9.0)
}

fn require_n(n: usize) -> Result<()> {
    if n == 0 {
        return domain("sample size must be at least 1");
    }
    Ok(())
}

/// T by the two-angle form.
pub fn sample_exact_t(rng: &RngStream, n: usize) -> Result<SampleBatch> {
    require_n(n)?;
    let values = par_draws(rng, n, 2, |g| {
        let v1 = angle(g);
        let v2 = angle(g);
        t_from_angles(v1, v2)
    });
    Ok(SampleBatch {
        values,
        rng: rng.clone(),
        kind: SampleKind::ExactT,
    })
}

/// T by the three-angle form; twice-checked equivalent of [`sample_exact_t`].
pub fn sample_exact_t_three(rng: &RngStream, n: usize) -> Result<SampleBatch> {
    require_n(n)?;
    let values = par_draws(rng, n, 3, |g| {
        let u1 = angle(g);
        let u2 = angle(g);
        let u3 = angle(g);
        t_from_three_angles(u1, u2, u3)
    });
    Ok(SampleBatch {
        values,
        rng: rng.clone(),
        kind: SampleKind::ExactT,
    })
}

fn signed_root(t: f64, u: f64) -> f64 {
    if u < 0.5 {
        t.sqrt()
    } else {
        -t.sqrt()
    }
}

/// H = A√T with an independent random sign A.
pub fn sample_exact_h(rng: &RngStream, n: usize) -> Result<SampleBatch> {
    require_n(n)?;
    let values = par_draws(rng, n, 3, |g| {
        let v1 = angle(g);
        let v2 = angle(g);
        let u = g.gen::<f64>();
        signed_root(t_from_angles(v1, v2), u)
    });
    Ok(SampleBatch {
        values,
        rng: rng.clone(),
        kind: SampleKind::ExactH,
    })
}

/// Named irrational frequencies; decimal input is deliberately not accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Beta {
    Phi,
    Sqrt2,
    Pi,
}

impl Beta {
    pub fn value(self) -> f64 {
        match self {
            Beta::Phi => (1.0 + 5f64.sqrt()) / 2.0,
            Beta::Sqrt2 => std::f64::consts::SQRT_2,
            Beta::Pi => PI,
        }
    }
}

impl std::str::FromStr for Beta {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phi" | "golden" => Ok(Beta::Phi),
            "sqrt2" => Ok(Beta::Sqrt2),
            "pi" => Ok(Beta::Pi),
            _ => domain(format!("beta must be one of phi, sqrt2, pi; got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxConfig {
    pub b: f64,
    pub beta: Beta,
    pub n_samples: usize,
}

impl ApproxConfig {
    pub fn new(b: f64, beta: Beta, n_samples: usize) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return domain(format!("interval length b must be positive, got {b}"));
        }
        require_n(n_samples)?;
        Ok(ApproxConfig { b, beta, n_samples })
    }
}

/// 3 + 2Y_b with X_b uniform on [0, b].
pub fn sample_approx(config: &ApproxConfig, rng: &RngStream) -> Result<SampleBatch> {
    let cfg = ApproxConfig::new(config.b, config.beta, config.n_samples)?;
    let beta = cfg.beta.value();
    let values = par_draws(rng, cfg.n_samples, 1, |g| approx_from_x(g.gen::<f64>() * cfg.b, beta));
    Ok(SampleBatch {
        values,
        rng: rng.clone(),
        kind: SampleKind::ApproxT,
    })
}

/// A·√(3 + 2Y_b) with an independent random sign.
pub fn sample_approx_h(config: &ApproxConfig, rng: &RngStream) -> Result<SampleBatch> {
    let cfg = ApproxConfig::new(config.b, config.beta, config.n_samples)?;
    let beta = cfg.beta.value();
    let values = par_draws(rng, cfg.n_samples, 2, |g| {
        let t = approx_from_x(g.gen::<f64>() * cfg.b, beta);
        signed_root(t, g.gen::<f64>())
    });
    Ok(SampleBatch {
        values,
        rng: rng.clone(),
        kind: SampleKind::ApproxH,
    })
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// lim E[cosʲ U sinᵏ U] for U uniform on the circle:
/// j!k! / (((j+k)/2)! (j/2)! (k/2)! 2^{j+k}) when j and k are even, else 0.
pub fn circle_moment(j: u32, k: u32) -> f64 {
    if j % 2 == 1 || k % 2 == 1 {
        return 0.0;
    }
    factorial(j) * factorial(k)
        / (factorial((j + k) / 2) * factorial(j / 2) * factorial(k / 2) * 2f64.powi((j + k) as i32))
}

/// Limit of E[cosʲ(X) sinᵏ(X) cosˡ(βX) sinᵐ(βX)] as b → ∞.
pub fn weyl_target(exponents: (u32, u32, u32, u32)) -> f64 {
    let (j, k, l, m) = exponents;
    circle_moment(j, k) * circle_moment(l, m)
}

/// Monte Carlo estimate of E[cosʲ(X_b) sinᵏ(X_b) cosˡ(βX_b) sinᵐ(βX_b)] with
/// X_b uniform on [0, b].
pub fn weyl_pair_moments(
    b: f64,
    beta: f64,
    exponents: (u32, u32, u32, u32),
    n: usize,
    rng: &RngStream,
) -> Result<McEstimate> {
    let (j, k, l, m) = exponents;
    if j + k + l + m > 12 {
        return domain(format!("exponent sum {} exceeds 12", j + k + l + m));
    }
    if !(b > 0.0 && b.is_finite() && beta > 0.0 && beta.is_finite()) {
        return domain(format!("need b > 0 and beta > 0, got b = {b}, beta = {beta}"));
    }
    require_n(n)?;
    let (mean, se) = par_mean(rng, n, 1, |g| {
        let x = g.gen::<f64>() * b;
        let y = beta * x;
        x.cos().powi(j as i32) * x.sin().powi(k as i32) * y.cos().powi(l as i32) * y.sin().powi(m as i32)
    });
    Ok(McEstimate::new(mean, se, weyl_target(exponents)))
}

/// Largest k accepted by [`verify_triple_integral`].
pub const TRIPLE_K_MAX: u32 = 8;

/// Average of |e^{iφ₁} + e^{iφ₂} + e^{iφ₃}|^{2k} over independent uniform
/// angles, against a_k.
pub fn verify_triple_integral(k: u32, n: usize, rng: &RngStream) -> Result<McEstimate> {
    if k > TRIPLE_K_MAX {
        return domain(format!("k = {k} exceeds {TRIPLE_K_MAX}"));
    }
    require_n(n)?;
    let target = num_traits::ToPrimitive::to_f64(&moment_tstar(k as usize)?).unwrap_or(f64::NAN);
    if k == 0 {
        return Ok(McEstimate::new(1.0, 0.0, target));
    }
    let (mean, se) = par_mean(rng, n, 3, |g| {
        let (a, b, c) = (angle(g), angle(g), angle(g));
        let re = a.cos() + b.cos() + c.cos();
        let im = a.sin() + b.sin() + c.sin();
        (re * re + im * im).powi(k as i32)
    });
    Ok(McEstimate::new(mean, se, target))
}

/// Monte Carlo E[g(V)] for a T- or H-batch-like draw, used for empirical
/// characteristic functions.
pub fn empirical_mean(batch: &SampleBatch, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let vals: Vec<f64> = batch.values.iter().map(|&v| f(v)).collect();
    mean_stderr(&vals)
}

/// sup |F_n − F| between the batch ECDF and the model CDF.
pub fn ks_distance(batch: &SampleBatch, model: &DensityModel) -> Result<f64> {
    let law = batch
        .kind
        .law()
        .ok_or_else(|| Error::Domain("ks_distance: batch has no distribution law".into()))?;
    if law != model.which {
        return domain(format!(
            "ks_distance: {:?} batch compared with {:?} model",
            batch.kind, model.which
        ));
    }
    if batch.is_empty() {
        return domain("ks_distance: empty batch");
    }
    let (lo, hi) = model.support();
    if batch.values.iter().any(|v| !(lo..=hi).contains(v)) {
        return domain("ks_distance: batch values outside the model support");
    }
    let mut sorted = batch.values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = sorted.len() as f64;
    let cdfs: Vec<f64> = sorted
        .par_iter()
        .map(|&x| model.cdf_interpolated(x))
        .collect::<Result<_>>()?;
    let mut d: f64 = 0.0;
    for (i, f) in cdfs.iter().enumerate() {
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream() -> RngStream {
        RngStream::new(7, 0)
    }

    #[test]
    fn hooks() {
        assert_eq!(t_from_angles(0.0, 0.0), 9.0);
        assert_eq!(approx_from_x(0.0, Beta::Phi.value()), 9.0);
        assert_eq!(signed_root(9.0, 0.1), 3.0);
        assert!((t_from_three_angles(0.3, 0.3, 0.3) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let a = sample_exact_t(&stream(), 3 * CHUNK + 17).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sample_exact_t(&stream(), 3 * CHUNK + 17).unwrap());
        assert_eq!(a, b);
        let c = sample_exact_t(&stream().with_stream(1), 1000).unwrap();
        assert_ne!(a.values[..1000], c.values[..]);
        // chunking matches one sequential generator
        let mut g = stream().generator_at(0);
        let seq: Vec<f64> = (0..CHUNK + 5)
            .map(|_| {
                let v1 = angle(&mut g);
                let v2 = angle(&mut g);
                t_from_angles(v1, v2)
            })
            .collect();
        assert_eq!(seq[..], a.values[..CHUNK + 5]);
    }

    #[test]
    fn ranges_hold() {
        assert!(sample_exact_t(&stream(), 100_000).unwrap().in_range());
        assert!(sample_exact_h(&stream(), 100_000).unwrap().in_range());
        let cfg = ApproxConfig::new(10.0, Beta::Sqrt2, 100_000).unwrap();
        assert!(sample_approx(&cfg, &stream()).unwrap().in_range());
        assert!(sample_approx_h(&cfg, &stream()).unwrap().in_range());
    }

    #[test]
    fn exact_t_mean() {
        let batch = sample_exact_t(&stream(), 1_000_000).unwrap();
        let (m, _) = batch.moment(1);
        let sigma = 6f64.sqrt() / 1000.0;
        assert!((m - 3.0).abs() < 3.0 * sigma, "{m}");
    }

    #[test]
    fn exact_h_moments() {
        let batch = sample_exact_h(&stream(), 1_000_000).unwrap();
        let (m1, _) = batch.moment(1);
        assert!(m1.abs() < 3.0 * (3.0f64 / 1e6).sqrt());
        let (m4, se4) = batch.moment(4);
        assert!((m4 - 15.0).abs() < 3.0 * se4, "{m4} ± {se4}");
        let (m3, se3) = batch.moment(3);
        assert!(m3.abs() < 3.0 * se3);
    }

    #[test]
    fn two_and_three_angle_forms_agree() {
        let a = sample_exact_t(&stream(), 400_000).unwrap();
        let b = sample_exact_t_three(&stream().with_stream(9), 400_000).unwrap();
        for k in 1..=4 {
            let (ma, sa) = a.moment(k);
            let (mb, sb) = b.moment(k);
            assert!((ma - mb).abs() < 4.0 * sa.hypot(sb), "k={k}: {ma} vs {mb}");
        }
    }

    #[test]
    fn circle_moments() {
        assert_eq!(circle_moment(0, 0), 1.0);
        assert_eq!(circle_moment(2, 0), 0.5);
        assert_eq!(circle_moment(2, 2), 0.125);
        assert_eq!(circle_moment(4, 0), 0.375);
        assert_eq!(circle_moment(1, 1), 0.0);
        assert_eq!(weyl_target((2, 0, 2, 0)), 0.25);
    }

    #[test]
    fn weyl_examples() {
        let phi = Beta::Phi.value();
        let e = weyl_pair_moments(1e5, phi, (0, 0, 0, 0), 1000, &stream()).unwrap();
        assert_eq!(e.estimate, 1.0);
        assert!(e.within(0.0));
        let e = weyl_pair_moments(1e5, phi, (2, 0, 0, 0), 200_000, &stream()).unwrap();
        assert!(e.within(3.0), "{e:?}");
        let e = weyl_pair_moments(1e5, phi, (1, 0, 1, 0), 200_000, &stream()).unwrap();
        assert!(e.within(3.0), "{e:?}");
        assert!(weyl_pair_moments(1e5, phi, (7, 0, 6, 0), 10, &stream()).is_err());
    }

    #[test]
    fn triple_integral_small_k() {
        let e = verify_triple_integral(0, 10, &stream()).unwrap();
        assert_eq!(e.estimate, 1.0);
        let e = verify_triple_integral(1, 1_000_000, &stream()).unwrap();
        assert!(e.within(3.0), "{e:?}");
        assert!(verify_triple_integral(9, 10, &stream()).is_err());
    }

    #[test]
    fn ks_behaviour() {
        let t = DensityModel::new(Which::T);
        let h = DensityModel::new(Which::H);
        let batch = sample_exact_t(&stream(), 100_000).unwrap();
        let d = ks_distance(&batch, &t).unwrap();
        assert!(d <= 0.006, "{d}");
        let hb = sample_exact_h(&stream(), 1000).unwrap();
        assert!(matches!(ks_distance(&hb, &t), Err(Error::Domain(_))));
        assert!(ks_distance(&hb, &h).is_ok());
        let flat = SampleBatch {
            values: vec![4.5; 50],
            rng: stream(),
            kind: SampleKind::ExactT,
        };
        let f = t.cdf_interpolated(4.5).unwrap();
        let d = ks_distance(&flat, &t).unwrap();
        assert!((d - (1.0 - f).max(f)).abs() < 1e-15);
    }

    #[test]
    fn approx_convergence_direction() {
        let t = DensityModel::new(Which::T);
        let far = sample_approx(&ApproxConfig::new(1e5, Beta::Phi, 50_000).unwrap(), &stream()).unwrap();
        let near = sample_approx(&ApproxConfig::new(1.0, Beta::Phi, 50_000).unwrap(), &stream()).unwrap();
        assert!(ks_distance(&far, &t).unwrap() < ks_distance(&near, &t).unwrap());
    }

    #[test]
    fn beta_parsing() {
        assert_eq!("phi".parse::<Beta>().unwrap(), Beta::Phi);
        assert_eq!("PI".parse::<Beta>().unwrap(), Beta::Pi);
        assert!("1.618".parse::<Beta>().is_err());
        assert!(ApproxConfig::new(0.0, Beta::Phi, 10).is_err());
    }
}
