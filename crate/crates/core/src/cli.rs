//! Command-line front end: configuration, the verification suite and the
//! table-emitting subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::approx::{run_pipeline, MollifierKernel, PipelineConfig};
use crate::carleman::{certify_lipschitz, EpsilonRule, SequenceDescriptor};
use crate::convexweights::{certify_biconjugate, log_moment_bound, WeightDescriptor};
use crate::error::Error;
use crate::fixtures::{band_limited, delta, interval_mean, series_functionals, zero_shift_fixture};
use crate::functionals::{certify_transform_growth, FunctionalDescriptor, MeasureFunctional, ScaleContext};
use crate::lagrange::{build_cardinal_generator, certify_series_bound, reconstruct, zero_shift, DecayCertificate};
use crate::quad::{linspace, log_grid};
use crate::report::{fmt_f64, reports_to_csv, BoundReport};
use crate::spaces::{certify_exponential_membership, envelope_constant, SampledFunction};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ultradiff", version, about = "Certificates and tables for weighted ultradifferentiable spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; defaults apply when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed for the randomized probes.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Tolerance override, repeatable.
    #[arg(long = "tol", global = true, value_name = "KEY=VAL", value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every certificate and write one report per check.
    Verify,
    /// Tabulate a functional's transform over the probe box.
    Transform {
        /// Functional descriptor (JSON); evaluation at 0 when absent.
        #[arg(long)]
        functional: Option<PathBuf>,
    },
    /// Reconstruct a band-limited fixture from its samples.
    Reconstruct {
        /// Fixture name, or `empty` for zero samples.
        #[arg(long, default_value = "sinc")]
        fixture: String,
    },
    /// Run the cutoff, mollification and Taylor pipeline on a fixture.
    Approximate {
        /// `gauss` or `zero`.
        fixture: String,
    },
    /// Merge report files written by `verify`.
    ReportMerge {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn parse_tol(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VAL, got {s}"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("{k}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeBox {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub n_re: usize,
    pub n_im: usize,
}

impl ProbeBox {
    pub fn points(&self) -> Vec<Complex64> {
        let xs = linspace(self.re.0, self.re.1, self.n_re);
        let ys = linspace(self.im.0, self.im.1, self.n_im);
        xs.iter()
            .flat_map(|&x| ys.iter().map(move |&y| Complex64::new(x, y)))
            .collect()
    }

    fn is_empty(&self) -> bool {
        self.n_re == 0 || self.n_im == 0
    }
}

/// Full description of a run. A run is reproduced by its config and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub sequence: SequenceDescriptor,
    pub weight: WeightDescriptor,
    pub sigma: f64,
    pub epsilon: EpsilonRule,
    pub radius_grid: RadiusGrid,
    pub probe_box: ProbeBox,
    pub reconstruct_box: ProbeBox,
    pub m_values: Vec<usize>,
    pub n_range: usize,
    pub random_probes: usize,
    pub seed: u64,
    pub pipeline: PipelineConfig,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sequence: SequenceDescriptor::Gevrey { s: 1.0, k: 1024 },
            weight: WeightDescriptor::default(),
            sigma: 1.0,
            epsilon: EpsilonRule::Harmonic,
            radius_grid: RadiusGrid {
                lo: 1e-2,
                hi: 1e3,
                points: 400,
            },
            probe_box: ProbeBox {
                re: (-3.0, 3.0),
                im: (-3.0, 3.0),
                n_re: 3,
                n_im: 3,
            },
            reconstruct_box: ProbeBox {
                re: (-2.0, 2.0),
                im: (-1.0, 1.0),
                n_re: 9,
                n_im: 5,
            },
            m_values: vec![1, 2],
            n_range: 200,
            random_probes: 2,
            seed: 0,
            pipeline: PipelineConfig::default(),
            tolerances: BTreeMap::new(),
        }
    }
}

/// Named tolerances with their defaults.
pub const TOLERANCES: &[(&str, f64)] = &[
    ("dual_identity", 1e-6),
    ("lipschitz", 1.0),
    ("reconstruct", 1e-6),
    ("reconstruct_tail", 1e-9),
    ("zero_shift_total", 0.1),
    ("pipeline_target", 1e-3),
    ("digits_lost", 6.0),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Tolerances {
    pub fn resolve(config: &BTreeMap<String, f64>, overrides: &[(String, f64)]) -> Result<Self, CliError> {
        let mut map: BTreeMap<String, f64> = TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in config.iter().chain(overrides.iter().map(|(k, v)| (k, v))) {
            if !map.contains_key(k.as_str()) {
                return Err(CliError::Config(format!("unknown tolerance key `{k}`")));
            }
            if !(v.is_finite() && *v > 0.0) {
                return Err(CliError::Config(format!("tolerance `{k}` must be positive")));
            }
            map.insert(k.clone(), *v);
        }
        Ok(Self(map))
    }

    pub fn get(&self, key: &str) -> f64 {
        self.0[key]
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Violation(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Violation(_) => EXIT_VIOLATION,
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(s) => write!(f, "configuration error: {s}"),
            CliError::Violation(s) => write!(f, "check failed: {s}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Input errors are configuration errors, everything else a violation.
fn classify(e: Error) -> CliError {
    match e {
        Error::InvalidInput(s) => CliError::Config(s),
        other => CliError::Violation(other.to_string()),
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(p) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |s: &str| Err(CliError::Config(s.to_string()));
        let g = &self.radius_grid;
        if g.points < 2 || !(g.lo > 0.0 && g.hi > g.lo) {
            return bad("radius grid needs at least two points on 0 < lo < hi");
        }
        if self.probe_box.is_empty() || self.reconstruct_box.is_empty() {
            return bad("probe boxes must be non-empty");
        }
        if self.m_values.is_empty() || self.m_values.contains(&0) {
            return bad("m_values must list positive integers");
        }
        if self.n_range == 0 {
            return bad("n_range must be positive");
        }
        if !(self.sigma > 0.0) {
            return bad("sigma must be positive");
        }
        self.epsilon.validate().map_err(classify)?;
        self.pipeline.validate().map_err(classify)
    }

    pub fn context(&self) -> Result<ScaleContext, CliError> {
        let seq = self.sequence.build().map_err(classify)?;
        let weight = self.weight.build().map_err(classify)?;
        let base = Arc::new(crate::carleman::AssociatedWeight::new(Arc::new(seq)));
        let family = crate::carleman::ScaledWeightFamily::new(base, self.sigma, self.epsilon.clone()).map_err(classify)?;
        Ok(ScaleContext::new(
            Arc::new(family),
            Arc::new(crate::convexweights::ThetaFamily::new(Arc::new(weight))),
        ))
    }

    /// Box probes followed by `random_probes` uniform draws in the same box.
    pub fn probes(&self, seed: u64) -> Vec<Complex64> {
        let b = &self.probe_box;
        let mut pts = b.points();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..self.random_probes {
            let re = if b.re.1 > b.re.0 { rng.gen_range(b.re.0..b.re.1) } else { b.re.0 };
            let im = if b.im.1 > b.im.0 { rng.gen_range(b.im.0..b.im.1) } else { b.im.0 };
            pts.push(Complex64::new(re, im));
        }
        pts
    }
}

fn guard(check: &str, r: crate::error::Result<BoundReport>) -> BoundReport {
    r.unwrap_or_else(|e| BoundReport::new(check).failed().with_note(e.to_string()))
}

/// The certificate suite. Checks that raise are recorded as failed reports.
pub fn verify_reports(cfg: &RunConfig, seed: u64, tol: &Tolerances) -> Result<Vec<BoundReport>, CliError> {
    let ctx = cfg.context()?;
    let seq = ctx.family.sequence();
    let weight = ctx.weight();
    let mut out = seq.certify_conditions();

    out.push(ctx.family.base().growth_report().clone());
    let k_top = 20.min(seq.len() - 1);
    out.push(guard("dual-identity", {
        let mut worst = 0.0f64;
        let mut at = 0;
        let mut err = None;
        for k in 0..=k_top {
            match seq.dual_identity_ratio(k) {
                Ok(r) if (r - 1.0).abs() > worst => {
                    worst = (r - 1.0).abs();
                    at = k;
                }
                Ok(_) => {}
                Err(e) => {
                    err = Some(e);
                    break;
                }
            }
        }
        match err {
            Some(e) => Err(e),
            None => {
                let limit = tol.get("dual_identity");
                let r = BoundReport::new("dual-identity")
                    .with_constant(worst)
                    .with_ratio(worst / limit)
                    .with_witness(vec![at as f64])
                    .with_grid(format!("k=0..{k_top}"));
                Ok(if worst <= limit { r } else { r.failed() })
            }
        }
    }));

    let g = &cfg.radius_grid;
    let radii = log_grid(g.lo, g.hi, g.points);
    out.push(guard(
        "weight-lipschitz",
        certify_lipschitz(ctx.family.base(), &radii).map(|r| {
            if r.worst_ratio <= tol.get("lipschitz") {
                r
            } else {
                r.failed()
            }
        }),
    ));

    let half = weight.half_width().min(20.0);
    let p = weight.p();
    let ygrid = linspace(-half, half, 2001);
    out.push(guard(
        "biconjugate-inversion",
        certify_biconjugate(|y: f64| y.abs().powf(p) / p, &ygrid),
    ));
    out.extend(weight.reports().iter().cloned());

    let probes = cfg.probes(seed);
    for &m in &cfg.m_values {
        out.push(guard("tilt-constant", ctx.theta.b_m(m, 20.0)));
        out.push(guard(
            "exponential-membership",
            certify_exponential_membership(&ctx.family, &ctx.theta, m, &probes),
        ));
    }

    let mut functionals: Vec<(&str, MeasureFunctional)> = vec![("delta", delta(&ctx)), ("interval", interval_mean(&ctx))];
    functionals.extend(series_functionals(&ctx));
    for (name, t) in &functionals {
        let r = guard("transform-growth", certify_transform_growth(t, &probes));
        out.push(r.with_note(format!("functional {name}")));
    }

    let alpha = weight.alpha();
    let kappa = alpha / (alpha - 1.0);
    out.push(guard(
        "log-moment-bound",
        log_moment_bound(|x: f64| x.abs().powf(kappa), 1.0, 0.0, alpha, &[2, 4, 8, 16]),
    ));

    let kernel = MollifierKernel::default();
    out.extend(kernel.reports.iter().cloned());
    out.push(kernel_taylor_report(&kernel));

    match build_cardinal_generator(1.0, cfg.n_range) {
        Ok(gen) => {
            out.push(gen.lower_bound.clone());
            let fx = &band_limited()[0];
            let rprobes = cfg.reconstruct_box.points();
            out.push(guard(
                "lagrange-term-bound",
                certify_series_bound(&fx.f, &gen, &ctx, 1, alpha, &rprobes, None),
            ));
            out.push(reconstruction_report(&gen, cfg, tol));
        }
        Err(e) => out.push(BoundReport::new("generator-lower-bound").failed().with_note(e.to_string())),
    }

    let (spec, base) = zero_shift_fixture(tol.get("zero_shift_total"));
    let zprobes = spec.outside_probes(64, 16.0, 41);
    out.push(guard("zero-shift", zero_shift(&spec, &base, &zprobes).map(|(_, r)| r)));
    Ok(out)
}

fn kernel_taylor_report(kernel: &MollifierKernel) -> BoundReport {
    let mut worst = 0.0f64;
    let mut at = vec![];
    for x in linspace(-12.0, 12.0, 97) {
        for n in 0..=12 {
            let q = 2 * n + 1;
            let bound = kernel.c_g * x.abs().powi(q as i32) / (1..=q).map(|i| i as f64).product::<f64>();
            let mass: f64 = kernel.taylor[..=n].iter().enumerate().map(|(k, a)| (a * x.powi(2 * k as i32)).abs()).sum();
            let err = ((kernel.eval(x) - kernel.taylor_poly(n, x)).abs() - 64.0 * f64::EPSILON * mass).max(0.0);
            if bound > 0.0 && err / bound > worst {
                worst = err / bound;
                at = vec![x, n as f64];
            }
        }
    }
    let r = BoundReport::new("kernel-taylor-remainder")
        .with_constant(kernel.c_g)
        .with_ratio(worst)
        .with_witness(at)
        .with_grid("x in [-12, 12] x 97, N <= 12");
    if worst <= 1.0 {
        r
    } else {
        r.failed()
    }
}

fn reconstruction_report(gen: &crate::lagrange::LagrangeGenerator, cfg: &RunConfig, tol: &Tolerances) -> BoundReport {
    let fx = &band_limited()[0];
    let samples = gen.sample(&fx.f);
    let decay = DecayCertificate::fit(&samples, gen, fx.alpha, fx.nu);
    let mut worst = 0.0f64;
    let mut at = vec![];
    for z in cfg.reconstruct_box.points() {
        match reconstruct(&samples, gen, z, &decay, tol.get("reconstruct_tail")) {
            Ok(r) => {
                let e = (r.value - fx.f.eval(z)).norm();
                if e >= worst {
                    worst = e;
                    at = vec![z.re, z.im];
                }
            }
            Err(e) => return BoundReport::new("lagrange-reconstruction").failed().with_note(e.to_string()),
        }
    }
    let limit = tol.get("reconstruct");
    let r = BoundReport::new("lagrange-reconstruction")
        .with_constant(worst)
        .with_ratio(worst / limit)
        .with_witness(at)
        .with_named("decay_constant", decay.decay_constant)
        .with_named("n_range", gen.n_range as f64);
    if worst <= limit {
        r
    } else {
        r.failed()
    }
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let p = dir.join(name);
    fs::write(&p, body)?;
    Ok(p)
}

fn write_reports(dir: &Path, reports: &[BoundReport]) -> Result<(), CliError> {
    write(dir, "reports.csv", &reports_to_csv(reports))?;
    let json = serde_json::to_string_pretty(reports).map_err(|e| CliError::Config(e.to_string()))?;
    write(dir, "reports.json", &json)?;
    Ok(())
}

fn verdict(reports: &[BoundReport]) -> i32 {
    if reports.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    }
}

/// `re_z,im_z,re_t,im_t,abs_t,envelope` with the growth envelope
/// `c exp(ψ(Im z) + w_{m+1}(|z|) + q_m)`.
pub fn transform_table(t: &MeasureFunctional, probes: &[Complex64]) -> Result<String, CliError> {
    let ctx = t.context().ok_or_else(|| CliError::Config("functional has no weight context".into()))?;
    let cert = t.norm_certificate().map_err(classify)?;
    let y_max = probes.iter().fold(20.0f64, |a, z| a.max(z.im.abs()));
    let q = envelope_constant(&ctx.family, &ctx.theta, cert.m, y_max).map_err(classify)?;
    let mut out = String::from("re_z,im_z,re_t,im_t,abs_t,envelope\n");
    for &z in probes {
        let v = t.fourier_laplace(z).map_err(classify)?;
        let w = ctx.family.w_m(cert.m + 1, z.norm()).map_err(classify)?;
        let env = cert.c * (ctx.weight().psi(z.im) + w + q.constant).exp();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(z.re),
            fmt_f64(z.im),
            fmt_f64(v.re),
            fmt_f64(v.im),
            fmt_f64(v.norm()),
            fmt_f64(env)
        ));
    }
    Ok(out)
}

/// `re_z,im_z,re_value,im_value,abs_err,tail` for a named band-limited
/// fixture, or zero samples for `empty`.
pub fn reconstruct_table(cfg: &RunConfig, fixture: &str, tol: &Tolerances) -> Result<String, CliError> {
    let gen = build_cardinal_generator(1.0, cfg.n_range).map_err(classify)?;
    let (samples, reference, alpha, nu) = if fixture == "empty" {
        (vec![Complex64::new(0.0, 0.0); gen.len()], None, 2.0, 0.0)
    } else {
        let fx = band_limited()
            .into_iter()
            .find(|f| f.name == fixture)
            .ok_or_else(|| CliError::Config(format!("unknown fixture `{fixture}`")))?;
        (gen.sample(&fx.f), Some(fx.f), fx.alpha, fx.nu)
    };
    let decay = DecayCertificate::fit(&samples, &gen, alpha, nu);
    let mut out = String::from("re_z,im_z,re_value,im_value,abs_err,tail\n");
    for z in cfg.reconstruct_box.points() {
        let r = reconstruct(&samples, &gen, z, &decay, tol.get("reconstruct_tail")).map_err(classify)?;
        let err = reference.as_ref().map_or(0.0, |f| (r.value - f.eval(z)).norm());
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(z.re),
            fmt_f64(z.im),
            fmt_f64(r.value.re),
            fmt_f64(r.value.im),
            fmt_f64(err),
            fmt_f64(r.tail + r.unstored_tail)
        ));
    }
    Ok(out)
}

pub fn approximate_fixture(name: &str) -> Option<SampledFunction> {
    match name {
        "gauss" => Some(SampledFunction::gaussian()),
        "zero" => Some(SampledFunction::zero()),
        _ => None,
    }
}

/// Concatenates report files (JSON arrays as written by `verify`).
pub fn merge_reports(inputs: &[PathBuf]) -> Result<Vec<BoundReport>, CliError> {
    let mut all = Vec::new();
    for p in inputs {
        let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        let reps: Vec<BoundReport> =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        all.extend(reps);
    }
    Ok(all)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.validate()?;
    let tol = Tolerances::resolve(&cfg.tolerances, &cli.tol)?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let out = &cli.out;
    match &cli.command {
        Command::Verify => {
            let reports = verify_reports(&cfg, seed, &tol)?;
            write_reports(out, &reports)?;
            for r in reports.iter().filter(|r| !r.passed) {
                eprintln!("FAIL {} {}", r.check, r.note.as_deref().unwrap_or(""));
            }
            Ok(verdict(&reports))
        }
        Command::Transform { functional } => {
            let ctx = cfg.context()?;
            let t = match functional {
                None => delta(&ctx),
                Some(p) => {
                    let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                    let d: FunctionalDescriptor =
                        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                    d.build(Some(ctx)).map_err(classify)?
                }
            };
            write(out, "transform.csv", &transform_table(&t, &cfg.probes(seed))?)?;
            Ok(EXIT_OK)
        }
        Command::Reconstruct { fixture } => {
            write(out, "reconstruct.csv", &reconstruct_table(&cfg, fixture, &tol)?)?;
            Ok(EXIT_OK)
        }
        Command::Approximate { fixture } => {
            let f = approximate_fixture(fixture)
                .ok_or_else(|| CliError::Config(format!("unknown fixture `{fixture}`")))?;
            let ctx = cfg.context()?;
            let mut pc = cfg.pipeline.clone();
            pc.target = tol.get("pipeline_target");
            pc.max_digits_lost = tol.get("digits_lost");
            let state = run_pipeline(&f, &pc, &ctx.theta, &MollifierKernel::default()).map_err(classify)?;
            write(out, "pipeline.csv", &state.to_csv())?;
            write_reports(out, &state.reports)?;
            Ok(EXIT_OK)
        }
        Command::ReportMerge { inputs } => {
            let reports = merge_reports(inputs)?;
            write_reports(out, &reports)?;
            Ok(verdict(&reports))
        }
    }
}
