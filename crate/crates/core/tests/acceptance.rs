//! Acceptance suite. Runs every criterion in sequence, prints one line per
//! criterion and exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lattice_spectra::charfn::{charfn_h, charfn_t};
use lattice_spectra::density::{DensityModel, Which};
use lattice_spectra::identity::{annihilator_apply, annihilator_coefficients, identity_report};
use lattice_spectra::lattice::{build_ball, closed_walks, LatticeKind};
use lattice_spectra::moments::{moment_tstar, tstar_multinomial};
use lattice_spectra::quad::{integrate_finite, QuadSpec};
use lattice_spectra::sampler::{
    sample_approx, sample_exact_t, verify_triple_integral, weyl_pair_moments, ApproxConfig, Beta, RngStream,
};
use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

const ACCEPTANCE_SEED: u64 = 20_240_611;

const A: [u64; 9] = [1, 3, 15, 93, 639, 4653, 35169, 272835, 2157759];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn err(e: impl std::fmt::Display) -> Outcome {
    outcome(false, format!("error: {e}"))
}

fn exact_moments() -> Outcome {
    let ball = match build_ball(LatticeKind::TriangularStar, 4) {
        Ok(b) => b,
        Err(e) => return err(e),
    };
    let walks = match closed_walks(&ball, 8) {
        Ok(w) => w,
        Err(e) => return err(e),
    };
    for (k, &expected) in A.iter().enumerate() {
        let expected = BigUint::from(expected);
        let lib = match moment_tstar(k) {
            Ok(v) => v,
            Err(e) => return err(e),
        };
        let multinomial = tstar_multinomial(k);
        if lib != expected || multinomial != expected || (k >= 2 && walks[k] != expected) {
            return outcome(
                false,
                format!("k={k}: library {lib}, multinomial {multinomial}, walks {}", walks[k]),
            );
        }
    }
    outcome(true, "a_0..a_8 agree across library, multinomial sum and walk counts")
}

fn bijection() -> Outcome {
    let hex = build_ball(LatticeKind::Hexagonal, 6).and_then(|b| closed_walks(&b, 12));
    let tri = build_ball(LatticeKind::TriangularStar, 3).and_then(|b| closed_walks(&b, 6));
    let (hex, tri) = match (hex, tri) {
        (Ok(h), Ok(t)) => (h, t),
        (Err(e), _) | (_, Err(e)) => return err(e),
    };
    for k in 0..=6 {
        if tri[k] != hex[2 * k] {
            return outcome(false, format!("k={k}: T* {} vs hex {}", tri[k], hex[2 * k]));
        }
    }
    outcome(true, format!("T*(k) = hex(2k) for k <= 6, T*(6) = {}", tri[6]))
}

fn integral(model: &DensityModel, k: i32) -> lattice_spectra::Result<f64> {
    let (lo, hi) = model.support();
    let mut splits: Vec<f64> = model.singular_points.iter().copied().filter(|&p| lo < p && p < hi).collect();
    if model.which == Which::H {
        splits.push(0.0);
        splits.sort_by(f64::total_cmp);
    }
    let spec = QuadSpec::default()
        .with_splits(&splits)
        .with_abs_tol(1e-13 * 3f64.powi(k));
    Ok(integrate_finite(|x| x.powi(k) * model.pdf_integrand(x), lo, hi, &spec)?.value)
}

fn densities() -> Outcome {
    let h = DensityModel::new(Which::H);
    let t = DensityModel::new(Which::T);
    let norms = (integral(&h, 0), integral(&t, 0));
    let (nh, nt) = match norms {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return err(e),
    };
    if (nh - 1.0).abs() > 1e-8 || (nt - 1.0).abs() > 1e-8 {
        return outcome(false, format!("normalisation H {nh}, T {nt}"));
    }
    let mut worst: f64 = 0.0;
    for k in 1..=10 {
        let m = match integral(&t, k) {
            Ok(m) => m,
            Err(e) => return err(e),
        };
        let rel = (m - A_K(k as usize)).abs() / A_K(k as usize);
        worst = worst.max(rel);
    }
    outcome(
        worst <= 1e-6,
        format!("|1-∫f_H| = {:.1e}, |1-∫f_T| = {:.1e}, worst moment rel err {worst:.1e}", (nh - 1.0).abs(), (nt - 1.0).abs()),
    )
}

#[allow(non_snake_case)]
fn A_K(k: usize) -> f64 {
    moment_tstar(k).ok().and_then(|v| v.to_f64()).unwrap_or(f64::NAN)
}

fn endpoint() -> Outcome {
    let target = 3f64.sqrt() / (12.0 * PI);
    match DensityModel::new(Which::T).pdf(9.0) {
        Ok(v) => outcome((v - target).abs() <= 1e-12, format!("f_T(9) = {v:.16}, diff {:.1e}", (v - target).abs())),
        Err(e) => err(e),
    }
}

fn identity() -> Outcome {
    let spec = QuadSpec::default();
    let mut worst: f64 = 0.0;
    for i in 0..=16 {
        match identity_report(0.25 * i as f64, &spec) {
            Ok(r) => worst = worst.max(r.abs_residual),
            Err(e) => return err(e),
        }
    }
    outcome(worst <= 1e-10, format!("max residual {worst:.2e}"))
}

fn annihilator() -> Outcome {
    let c = annihilator_coefficients(27);
    let first: Vec<BigRational> = (0..4).map(|j| c.coeff(j)).collect();
    let expected: Vec<BigRational> = [1, 0, 3, 2].iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect();
    if first != expected {
        return outcome(false, format!("c_0..c_3 = {first:?}"));
    }
    // c_3 by Cauchy product of e^{-3x} with the exponential generating function of a_k
    let c3: BigRational = (0..=3)
        .map(|k| {
            let fact = |n: usize| (1..=n).fold(BigInt::one(), |a, i| a * i);
            BigRational::new(BigInt::from(-3).pow((3 - k) as u32), fact(3 - k))
                * BigRational::new(BigInt::from(A[k]), fact(k))
        })
        .fold(BigRational::zero(), |a, b| a + b);
    if c3 != expected[3] {
        return outcome(false, format!("Cauchy c_3 = {c3}"));
    }
    match annihilator_apply(&c) {
        Ok(out) if out.is_zero_through(26) => outcome(true, "zero series through order 26; c_0..c_3 = (1, 0, 3, 2)"),
        Ok(out) => {
            let m = (0..=26).find(|&m| !out.coeff(m).is_zero()).unwrap_or(0);
            outcome(false, format!("nonzero coefficient at order {m}"))
        }
        Err(e) => err(e),
    }
}

fn charfns() -> Outcome {
    let fact = |n: usize| (1..=n).fold(BigInt::one(), |a, i| a * i);
    let a = |k: usize| BigInt::from(moment_tstar(k).unwrap_or_default());
    let mut worst: f64 = 0.0;
    for (num, den) in [(1, 10), (3, 10), (1, 2)] {
        let s = BigRational::new(num.into(), den.into());
        let (mut re, mut im) = (BigRational::zero(), BigRational::zero());
        for k in 0..30 {
            let term = BigRational::new(a(k), fact(k)) * s.pow(k as i32);
            match k % 4 {
                0 => re += term,
                1 => im += term,
                2 => re -= term,
                _ => im -= term,
            }
        }
        let oracle = Complex64::new(re.to_f64().unwrap_or(f64::NAN), im.to_f64().unwrap_or(f64::NAN));
        match charfn_t(num as f64 / den as f64) {
            Ok(v) => worst = worst.max((v - oracle).norm()),
            Err(e) => return err(e),
        }
    }
    for num in [1, 2, 4] {
        let s = BigRational::new(num.into(), 2.into());
        let mut sum = BigRational::zero();
        for k in 0..60 {
            let term = BigRational::new(a(k), fact(2 * k)) * s.pow(2 * k as i32);
            sum += if k % 2 == 0 { term } else { -term };
        }
        match charfn_h(num as f64 / 2.0) {
            Ok(v) => worst = worst.max((v - sum.to_f64().unwrap_or(f64::NAN)).abs()),
            Err(e) => return err(e),
        }
    }
    outcome(worst <= 1e-9, format!("max deviation {worst:.2e}"))
}

fn exact_sampler() -> Outcome {
    let batch = match sample_exact_t(&RngStream::new(ACCEPTANCE_SEED, 1), 1_000_000) {
        Ok(b) => b,
        Err(e) => return err(e),
    };
    if !batch.in_range() {
        return outcome(false, "draw outside [0, 9]");
    }
    let mut misses = Vec::new();
    let mut zs = Vec::new();
    for k in 1..=6u32 {
        let (m, se) = batch.moment(k);
        let z = (m - A_K(k as usize)) / se;
        zs.push(format!("{z:+.2}"));
        if z.abs() > 3.0 {
            misses.push(k);
        }
    }
    outcome(misses.len() <= 1, format!("z-scores [{}], misses {misses:?}", zs.join(", ")))
}

fn approximation() -> Outcome {
    let model = DensityModel::new(Which::T);
    let rng = RngStream::new(ACCEPTANCE_SEED, 2);
    let ks = |b: f64| -> lattice_spectra::Result<f64> {
        let batch = sample_approx(&ApproxConfig::new(b, Beta::Phi, 100_000)?, &rng)?;
        lattice_spectra::sampler::ks_distance(&batch, &model)
    };
    match (ks(1e5), ks(1.0)) {
        (Ok(far), Ok(near)) => outcome(
            far <= 0.02 && near >= 5.0 * far,
            format!("KS(b=1e5) = {far:.4}, KS(b=1) = {near:.4}, ratio {:.1}", near / far),
        ),
        (Err(e), _) | (_, Err(e)) => err(e),
    }
}

fn weyl() -> Outcome {
    let beta = Beta::Phi.value();
    let mut tuples = Vec::new();
    for j in 0..=2 {
        for k in 0..=2 {
            for l in 0..=2 {
                for m in 0..=2 {
                    if j + k + l + m <= 4 {
                        tuples.push((j, k, l, m));
                    }
                }
            }
        }
    }
    let mut worst: f64 = 0.0;
    let mut failed = Vec::new();
    for (i, &t) in tuples.iter().enumerate() {
        let rng = RngStream::new(ACCEPTANCE_SEED, 100 + i as u64);
        match weyl_pair_moments(1e5, beta, t, 1_000_000, &rng) {
            Ok(e) => {
                worst = worst.max(e.z_score.abs());
                if !e.within(3.0) {
                    failed.push(t);
                }
            }
            Err(e) => return err(e),
        }
    }
    outcome(
        failed.is_empty(),
        format!("{} tuples, max |z| = {worst:.2}, failures {failed:?}", tuples.len()),
    )
}

fn triple_integral() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for k in 1..=3 {
        match verify_triple_integral(k, 10_000_000, &RngStream::new(ACCEPTANCE_SEED, 10 + k as u64)) {
            Ok(e) => {
                ok &= e.within(3.0);
                parts.push(format!("k={k}: {:.4} (target {}, z {:+.2})", e.estimate, e.target, e.z_score));
            }
            Err(e) => return err(e),
        }
    }
    outcome(ok, parts.join("; "))
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("exact moment chain", Duration::from_secs(1), exact_moments),
        ("walk bijection", Duration::from_secs(10), bijection),
        ("density normalisation and moments", Duration::from_secs(30), densities),
        ("endpoint value f_T(9)", Duration::from_secs(1), endpoint),
        ("Bessel-cube identity", Duration::from_secs(5), identity),
        ("annihilator algebra", Duration::from_secs(1), annihilator),
        ("characteristic functions", Duration::from_secs(5), charfns),
        ("exact sampler", Duration::from_secs(10), exact_sampler),
        ("Y_b approximation KS", Duration::from_secs(30), approximation),
        ("Weyl equidistribution", Duration::from_secs(60), weyl),
        ("triple-integral Monte Carlo", Duration::from_secs(60), triple_integral),
    ];
    let mut failures = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let passed = result.passed && in_time;
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {} [{:.2?} / {:?}{}]",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            result.detail,
            elapsed,
            budget,
            if in_time { "" } else { ", over budget" },
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
