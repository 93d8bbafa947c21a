use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lattice_spectra::charfn::charfn_grid;
use lattice_spectra::density::{DensityModel, Which};
use lattice_spectra::identity::{identity_report, parse_grid};
use lattice_spectra::lattice::{build_ball, closed_walks, esd_moments, LatticeKind, WeightedGraph};
use lattice_spectra::moments::{moment_h, moment_tstar};
use lattice_spectra::quad::QuadSpec;
use lattice_spectra::sampler::{
    sample_approx, sample_approx_h, sample_exact_h, sample_exact_t, verify_triple_integral, weyl_pair_moments,
    ApproxConfig, Beta, McEstimate, RngStream, SampleBatch,
};
use lattice_spectra::Error;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::json;

const DEFAULT_SEED: u64 = 20_240_611;

#[derive(Parser, Serialize)]
#[command(name = "lattice-spectra", version, about = "Spectral densities and walk counts of the hexagonal and triangular lattices")]
struct Cli {
    /// Write data here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Write the run manifest here instead of standard error.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Exact moments of H and T* as CSV.
    Moments(MomentsArgs),
    /// Density and CDF on a grid.
    Density(GridArgs),
    /// CDF on a grid.
    Cdf(GridArgs),
    /// Characteristic function of H or T on a grid.
    Charfn(CharfnArgs),
    /// Draw samples.
    Sample(SampleArgs),
    /// Check the Bessel-cube identity on an x-grid.
    VerifyIdentity(IdentityArgs),
    /// Monte Carlo check of Weyl-pair moments.
    VerifyWeyl(WeylArgs),
    /// Monte Carlo check of the triple-angle moment integral.
    VerifyMoments(VerifyMomentsArgs),
    /// Closed walks at the origin of a lattice ball.
    WalkCount(WalkCountArgs),
    /// Empirical spectral moments of a finite graph.
    Esd(EsdArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum LatticeArg {
    Hex,
    Tstar,
}

impl LatticeArg {
    fn kind(self) -> LatticeKind {
        match self {
            LatticeArg::Hex => LatticeKind::Hexagonal,
            LatticeArg::Tstar => LatticeKind::TriangularStar,
        }
    }

    fn moment(self, k: usize) -> lattice_spectra::Result<num_bigint::BigUint> {
        match self {
            LatticeArg::Hex => moment_h(k),
            LatticeArg::Tstar => moment_tstar(k),
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum WhichArg {
    X,
    H,
    T,
}

impl From<WhichArg> for Which {
    fn from(w: WhichArg) -> Which {
        match w {
            WhichArg::X => Which::X,
            WhichArg::H => Which::H,
            WhichArg::T => Which::T,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum BetaArg {
    Phi,
    Sqrt2,
    Pi,
}

impl From<BetaArg> for Beta {
    fn from(b: BetaArg) -> Beta {
        match b {
            BetaArg::Phi => Beta::Phi,
            BetaArg::Sqrt2 => Beta::Sqrt2,
            BetaArg::Pi => Beta::Pi,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SampleFormat {
    Csv,
    RawF64,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum KindArg {
    ExactT,
    ExactH,
    ApproxT,
    ApproxH,
}

#[derive(Args, Serialize)]
struct MomentsArgs {
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    /// Restrict output to one lattice; both columns otherwise.
    #[arg(long)]
    lattice: Option<LatticeArg>,
}

#[derive(Args, Serialize)]
struct GridArgs {
    #[arg(long, default_value = "t")]
    which: WhichArg,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long, default_value = "csv")]
    format: TableFormat,
}

#[derive(Args, Serialize)]
struct CharfnArgs {
    #[arg(long, default_value = "t")]
    which: WhichArg,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    s_from: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    s_to: f64,
    #[arg(long, default_value_t = 101)]
    points: usize,
}

#[derive(Args, Serialize)]
struct SeedArgs {
    #[arg(long, env = "LATTICE_SPECTRA_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
}

impl SeedArgs {
    fn rng(&self) -> RngStream {
        RngStream::new(self.seed, self.stream)
    }
}

#[derive(Args, Serialize)]
struct SampleArgs {
    #[arg(long, default_value = "exact-t")]
    kind: KindArg,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Interval length for the approximate kinds.
    #[arg(long, default_value_t = 1e5)]
    b: f64,
    #[arg(long, default_value = "phi")]
    beta: BetaArg,
    #[arg(long, default_value = "csv")]
    format: SampleFormat,
    #[command(flatten)]
    seed: SeedArgs,
}

#[derive(Args, Serialize)]
struct IdentityArgs {
    /// "from:to:step" or a single x.
    #[arg(long, default_value = "0:4:0.25")]
    x_grid: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args, Serialize)]
struct WeylArgs {
    #[arg(long, default_value_t = 1e5)]
    b: f64,
    #[arg(long, default_value = "phi")]
    beta: BetaArg,
    /// Exponents j,k,l,m.
    #[arg(long, value_delimiter = ',', conflicts_with = "all")]
    exponents: Option<Vec<u32>>,
    /// Every tuple in {0,1,2}^4 with sum at most 4, one stream each.
    #[arg(long)]
    all: bool,
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    #[arg(long, default_value_t = 3.0)]
    sigmas: f64,
    #[command(flatten)]
    seed: SeedArgs,
}

#[derive(Args, Serialize)]
struct VerifyMomentsArgs {
    /// Moment orders to check.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    k: Vec<u32>,
    #[arg(long, default_value_t = 10_000_000)]
    n: usize,
    #[arg(long, default_value_t = 3.0)]
    sigmas: f64,
    #[command(flatten)]
    seed: SeedArgs,
}

#[derive(Args, Serialize)]
struct WalkCountArgs {
    #[arg(long)]
    lattice: LatticeArg,
    #[arg(long, default_value_t = 8)]
    k_max: usize,
}

#[derive(Args, Serialize)]
struct EsdArgs {
    /// Graph JSON: {"n": .., "edges": [[i, j, w], ..]} or a ball export.
    #[arg(long, conflicts_with_all = ["lattice", "radius"])]
    graph: Option<PathBuf>,
    /// Use a lattice ball instead of a graph file.
    #[arg(long, requires = "radius")]
    lattice: Option<LatticeArg>,
    #[arg(long)]
    radius: Option<usize>,
    /// Save the ball as graph JSON.
    #[arg(long, requires = "lattice")]
    export_ball: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    k_max: usize,
}

#[derive(Serialize)]
struct Check {
    name: String,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'static str,
    parameters: &'a Command,
    seed: Option<u64>,
    threads: Option<usize>,
    version: &'static str,
    duration_secs: f64,
    checks: Vec<Check>,
    status: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Range(_) | Error::Precondition(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(format!("i/o: {e}"))
    }
}

type Outcome = Result<Vec<Check>, Failure>;

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Moments(_) => "moments",
            Command::Density(_) => "density",
            Command::Cdf(_) => "cdf",
            Command::Charfn(_) => "charfn",
            Command::Sample(_) => "sample",
            Command::VerifyIdentity(_) => "verify-identity",
            Command::VerifyWeyl(_) => "verify-weyl",
            Command::VerifyMoments(_) => "verify-moments",
            Command::WalkCount(_) => "walk-count",
            Command::Esd(_) => "esd",
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Command::Sample(a) => Some(a.seed.seed),
            Command::VerifyWeyl(a) => Some(a.seed.seed),
            Command::VerifyMoments(a) => Some(a.seed.seed),
            _ => None,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let start = Instant::now();
    let result = open_output(cli.out.as_deref()).and_then(|mut out| {
        let checks = run(&cli.command, &mut out)?;
        out.flush()?;
        Ok(checks)
    });
    let (checks, status, error) = match result {
        Ok(checks) => {
            let status = if checks.iter().all(|c| c.passed) { 0 } else { 1 };
            (checks, status, None)
        }
        Err(Failure::Usage(msg)) => (Vec::new(), 2, Some(msg)),
        Err(Failure::Runtime(msg)) => (Vec::new(), 1, Some(msg)),
    };
    if let Some(msg) = &error {
        eprintln!("error: {msg}");
    }
    let manifest = RunManifest {
        subcommand: cli.command.name(),
        parameters: &cli.command,
        seed: cli.command.seed(),
        threads: cli.threads,
        version: env!("CARGO_PKG_VERSION"),
        duration_secs: start.elapsed().as_secs_f64(),
        checks,
        status,
        error,
    };
    if let Err(e) = write_manifest(&manifest, cli.manifest.as_deref()) {
        eprintln!("error: writing manifest: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(status as u8)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_manifest(manifest: &RunManifest, path: Option<&Path>) -> io::Result<()> {
    let text = serde_json::to_string(manifest).map_err(io::Error::other)?;
    match path {
        Some(p) => {
            let tmp = p.with_extension("tmp");
            std::fs::write(&tmp, text + "\n")?;
            std::fs::rename(tmp, p)
        }
        None => writeln!(io::stderr().lock(), "{text}"),
    }
}

fn run(command: &Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::Moments(a) => moments(a, out),
        Command::Density(a) => density(a, out, true),
        Command::Cdf(a) => density(a, out, false),
        Command::Charfn(a) => charfn(a, out),
        Command::Sample(a) => sample(a, out),
        Command::VerifyIdentity(a) => verify_identity(a, out),
        Command::VerifyWeyl(a) => verify_weyl(a, out),
        Command::VerifyMoments(a) => verify_moments(a, out),
        Command::WalkCount(a) => walk_count(a, out),
        Command::Esd(a) => esd(a, out),
    }
}

fn moments(a: &MomentsArgs, out: &mut dyn Write) -> Outcome {
    match a.lattice {
        Some(l) => {
            writeln!(out, "k,{}", if matches!(l, LatticeArg::Hex) { "mu_h" } else { "mu_tstar" })?;
            for k in 0..=a.k_max {
                writeln!(out, "{k},{}", l.moment(k)?)?;
            }
        }
        None => {
            writeln!(out, "k,mu_h,mu_tstar")?;
            for k in 0..=a.k_max {
                writeln!(out, "{k},{},{}", moment_h(k)?, moment_tstar(k)?)?;
            }
        }
    }
    Ok(Vec::new())
}

fn grid(from: f64, to: f64, points: usize) -> Result<Vec<f64>, Failure> {
    if points == 0 || from > to || !from.is_finite() || !to.is_finite() {
        return Err(Failure::Usage(format!("bad grid {from}..{to} with {points} points")));
    }
    if points == 1 {
        return Ok(vec![from]);
    }
    let step = (to - from) / (points - 1) as f64;
    Ok((0..points).map(|i| if i + 1 == points { to } else { from + step * i as f64 }).collect())
}

fn density(a: &GridArgs, out: &mut dyn Write, with_pdf: bool) -> Outcome {
    let model = DensityModel::new(a.which.into());
    let (lo, hi) = model.support();
    let xs = grid(a.from.unwrap_or(lo), a.to.unwrap_or(hi), a.points)?;
    if matches!(a.format, TableFormat::Csv) {
        writeln!(out, "{}", if with_pdf { "x,pdf,cdf" } else { "x,cdf" })?;
    }
    for x in xs {
        let pdf = match model.pdf(x) {
            Ok(v) => v,
            Err(Error::Singular(_)) => f64::INFINITY,
            Err(e) => return Err(e.into()),
        };
        let cdf = model.cdf(x)?;
        match (a.format, with_pdf) {
            (TableFormat::Csv, true) => writeln!(out, "{x},{pdf},{cdf}")?,
            (TableFormat::Csv, false) => writeln!(out, "{x},{cdf}")?,
            (TableFormat::Json, true) => {
                let pdf = if pdf.is_finite() { json!(pdf) } else { json!("inf") };
                writeln!(out, "{}", json!({"x": x, "pdf": pdf, "cdf": cdf}))?
            }
            (TableFormat::Json, false) => writeln!(out, "{}", json!({"x": x, "cdf": cdf}))?,
        }
    }
    Ok(Vec::new())
}

fn charfn(a: &CharfnArgs, out: &mut dyn Write) -> Outcome {
    let points = charfn_grid(a.which.into(), a.s_from, a.s_to, a.points)?;
    writeln!(out, "s,re,im")?;
    for p in points {
        writeln!(out, "{},{},{}", p.s, p.value.re, p.value.im)?;
    }
    Ok(Vec::new())
}

fn sample(a: &SampleArgs, out: &mut dyn Write) -> Outcome {
    let rng = a.seed.rng();
    let batch: SampleBatch = match a.kind {
        KindArg::ExactT => sample_exact_t(&rng, a.n)?,
        KindArg::ExactH => sample_exact_h(&rng, a.n)?,
        KindArg::ApproxT => sample_approx(&ApproxConfig::new(a.b, a.beta.into(), a.n)?, &rng)?,
        KindArg::ApproxH => sample_approx_h(&ApproxConfig::new(a.b, a.beta.into(), a.n)?, &rng)?,
    };
    match a.format {
        SampleFormat::Csv => {
            writeln!(out, "value")?;
            for v in &batch.values {
                writeln!(out, "{v}")?;
            }
        }
        SampleFormat::RawF64 => {
            for v in &batch.values {
                out.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(vec![Check {
        name: "range".into(),
        passed: batch.in_range(),
        residual: None,
    }])
}

fn verify_identity(a: &IdentityArgs, out: &mut dyn Write) -> Outcome {
    let xs = parse_grid(&a.x_grid)?;
    let spec = QuadSpec::default();
    let mut checks = Vec::new();
    for x in xs {
        let r = identity_report(x, &spec)?;
        writeln!(out, "{}", serde_json::to_string(&r).map_err(io::Error::other)?)?;
        checks.push(Check {
            name: format!("identity x={x}"),
            passed: r.abs_residual <= a.tol,
            residual: Some(r.abs_residual),
        });
    }
    Ok(checks)
}

fn mc_check(name: String, e: &McEstimate, sigmas: f64, out: &mut dyn Write) -> Result<Check, Failure> {
    writeln!(out, "{}", serde_json::to_string(e).map_err(io::Error::other)?)?;
    Ok(Check {
        name,
        passed: e.within(sigmas),
        residual: Some(e.z_score),
    })
}

fn weyl_tuples() -> Vec<(u32, u32, u32, u32)> {
    let mut v = Vec::new();
    for j in 0..=2 {
        for k in 0..=2 {
            for l in 0..=2 {
                for m in 0..=2 {
                    if j + k + l + m <= 4 {
                        v.push((j, k, l, m));
                    }
                }
            }
        }
    }
    v
}

fn verify_weyl(a: &WeylArgs, out: &mut dyn Write) -> Outcome {
    let beta = Beta::from(a.beta).value();
    let tuples = match (&a.exponents, a.all) {
        (Some(e), _) if e.len() == 4 => vec![(e[0], e[1], e[2], e[3])],
        (Some(e), _) => return Err(Failure::Usage(format!("--exponents needs 4 values, got {}", e.len()))),
        (None, true) => weyl_tuples(),
        (None, false) => return Err(Failure::Usage("give --exponents j,k,l,m or --all".into())),
    };
    let mut checks = Vec::new();
    for (i, &t) in tuples.iter().enumerate() {
        let rng = a.seed.rng().with_stream(a.seed.stream + i as u64);
        let e = weyl_pair_moments(a.b, beta, t, a.n, &rng)?;
        checks.push(mc_check(format!("weyl {t:?}"), &e, a.sigmas, out)?);
    }
    Ok(checks)
}

fn verify_moments(a: &VerifyMomentsArgs, out: &mut dyn Write) -> Outcome {
    let mut checks = Vec::new();
    for (i, &k) in a.k.iter().enumerate() {
        let rng = a.seed.rng().with_stream(a.seed.stream + i as u64);
        let e = verify_triple_integral(k, a.n, &rng)?;
        checks.push(mc_check(format!("triple integral k={k}"), &e, a.sigmas, out)?);
    }
    Ok(checks)
}

fn walk_count(a: &WalkCountArgs, out: &mut dyn Write) -> Outcome {
    let ball = build_ball(a.lattice.kind(), a.k_max.div_ceil(2))?;
    let walks = closed_walks(&ball, a.k_max)?;
    writeln!(out, "k,walks")?;
    let mut agree = true;
    for (k, w) in walks.iter().enumerate() {
        writeln!(out, "{k},{w}")?;
        agree &= *w == a.lattice.moment(k)?;
    }
    Ok(vec![Check {
        name: "walk counts match exact moments".into(),
        passed: agree,
        residual: None,
    }])
}

fn esd(a: &EsdArgs, out: &mut dyn Write) -> Outcome {
    let graph = match (&a.graph, a.lattice, a.radius) {
        (Some(path), _, _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            WeightedGraph::from_json(&text)?
        }
        (None, Some(l), Some(r)) => {
            let ball = build_ball(l.kind(), r)?;
            if let Some(p) = &a.export_ball {
                std::fs::write(p, ball.to_json())?;
            }
            WeightedGraph::from(&ball)
        }
        _ => return Err(Failure::Usage("give --graph FILE or --lattice with --radius".into())),
    };
    let moments = esd_moments(&graph, a.k_max)?;
    writeln!(out, "k,moment,moment_f64")?;
    for (k, m) in moments.iter().enumerate() {
        writeln!(out, "{k},{m},{}", m.to_f64().unwrap_or(f64::NAN))?;
    }
    Ok(Vec::new())
}
