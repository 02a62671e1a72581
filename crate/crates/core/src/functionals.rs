//! Measure-sum functionals on weighted spaces, their Fourier–Laplace
//! transforms `T̂(z) = T(e^{-ixz})`, the series `T̂ = Σ V_k z^k`, and the two
//! synthesis constructions that build a functional with a prescribed
//! transform.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::carleman::ScaledWeightFamily;
use crate::convexweights::{ConvexWeight, ThetaFamily};
use crate::error::{invalid, Error, Result};
use crate::optim::CompensatedSum;
use crate::quad::{integrate_complex_with_breaks, PanelRule, QuadOptions};
use crate::report::{fmt_f64, BoundReport};
use crate::spaces::{envelope_constant, ComplexBox, EntireFunctionModel, SampledFunction};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A complex measure: weighted points, or a density sampled at the nodes of a
/// composite Gauss–Kronrod rule.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Points(Vec<(f64, Complex64)>),
    Density { rule: PanelRule, samples: Vec<Complex64> },
}

impl Measure {
    pub fn point(x: f64, c: Complex64) -> Self {
        Self::Points(vec![(x, c)])
    }

    pub fn density<F: Fn(f64) -> Complex64>(rule: PanelRule, rho: F) -> Self {
        let samples = rule.nodes.iter().map(|&x| rho(x)).collect();
        Self::Density { rule, samples }
    }

    /// Constant density `value` on `[a, b]`.
    pub fn uniform(a: f64, b: f64, panels: usize, value: Complex64) -> Self {
        Self::density(PanelRule::uniform(a, b, panels), |_| value)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        match self {
            Self::Points(p) => Self::Points(p.iter().map(|(x, w)| (*x, w * c)).collect()),
            Self::Density { rule, samples } => Self::Density {
                rule: rule.clone(),
                samples: samples.iter().map(|s| s * c).collect(),
            },
        }
    }

    pub fn total_variation(&self) -> f64 {
        match self {
            Self::Points(p) => p.iter().map(|(_, c)| c.norm()).sum(),
            Self::Density { rule, samples } => rule
                .kronrod_weights
                .iter()
                .zip(samples)
                .map(|(w, s)| w * s.norm())
                .sum(),
        }
    }

    /// `∫ g d|μ|`.
    pub fn weighted_variation<G: Fn(f64) -> Result<f64>>(&self, g: G) -> Result<f64> {
        let mut acc = 0.0;
        match self {
            Self::Points(p) => {
                for (x, c) in p {
                    acc += c.norm() * g(*x)?;
                }
            }
            Self::Density { rule, samples } => {
                for ((x, w), s) in rule.nodes.iter().zip(&rule.kronrod_weights).zip(samples) {
                    if *s != ZERO {
                        acc += w * s.norm() * g(*x)?;
                    }
                }
            }
        }
        Ok(acc)
    }

    /// `∫ f dμ`. Density integrals fail when the embedded Gauss estimate
    /// disagrees by more than `1e-7` of the absolute integral.
    pub fn integrate<F: FnMut(f64) -> Result<Complex64>>(&self, mut f: F) -> Result<Complex64> {
        match self {
            Self::Points(p) => {
                let mut s = CompensatedSum::new();
                for (x, c) in p {
                    s += c * f(*x)?;
                }
                Ok(s.value())
            }
            Self::Density { rule, samples } => {
                let mut k = CompensatedSum::new();
                let mut g = CompensatedSum::new();
                for (((x, wk), wg), s) in rule
                    .nodes
                    .iter()
                    .zip(&rule.kronrod_weights)
                    .zip(&rule.gauss_weights)
                    .zip(samples)
                {
                    if *s == ZERO {
                        continue;
                    }
                    let v = s * f(*x)?;
                    k += v * *wk;
                    g += v * *wg;
                }
                let est = (k.value() - g.value()).norm();
                if est > 1e-7 * k.abs_total() + 1e-300 {
                    return Err(Error::QuadratureNotConverged {
                        a: rule.nodes[0],
                        b: rule.nodes[rule.nodes.len() - 1],
                        estimate: est,
                    });
                }
                Ok(k.value())
            }
        }
    }
}

/// One normal-form term `∫ f^{(k)} [/θ_m] dμ`, optionally carrying the
/// prefactor `1/((σ+ε_m)^k M_k)` and the `1/θ_m` weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub k: usize,
    pub measure: Measure,
    pub scaled: bool,
}

/// Weight data needed by scaled terms and growth certificates.
#[derive(Debug, Clone)]
pub struct ScaleContext {
    pub family: Arc<ScaledWeightFamily>,
    pub theta: Arc<ThetaFamily>,
}

impl ScaleContext {
    pub fn new(family: Arc<ScaledWeightFamily>, theta: Arc<ThetaFamily>) -> Self {
        Self { family, theta }
    }

    pub fn weight(&self) -> &ConvexWeight {
        self.theta.weight()
    }

    /// `ln((σ+ε_m)^k M_k)`.
    pub fn ln_scale(&self, m: usize, k: usize) -> Result<f64> {
        let seq = self.family.sequence();
        if k >= seq.len() {
            return invalid(format!("derivative order {k} exceeds the stored sequence"));
        }
        Ok(k as f64 * self.family.scale(m).ln() + seq.log_m(k))
    }
}

/// Norm bound `|T(f)| ≤ c ‖f‖`, with the norm index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormCertificate {
    pub c: f64,
    pub m: usize,
}

/// `T(f) = Σ terms + Σ a_j f(λ_j) + ∫ p f^{(n)}`.
#[derive(Debug, Clone)]
pub struct MeasureFunctional {
    pub terms: Vec<Term>,
    pub point_terms: Vec<(Complex64, f64)>,
    pub deriv_tail: Option<(usize, Measure)>,
    pub m: usize,
    context: Option<ScaleContext>,
    certificate: Option<NormCertificate>,
}

impl MeasureFunctional {
    pub fn new(m: usize) -> Self {
        Self {
            terms: Vec::new(),
            point_terms: Vec::new(),
            deriv_tail: None,
            m: m.max(1),
            context: None,
            certificate: None,
        }
    }

    pub fn zero(m: usize) -> Self {
        Self::new(m)
    }

    pub fn with_context(mut self, ctx: ScaleContext) -> Self {
        self.context = Some(ctx);
        self
    }

    pub fn with_term(mut self, k: usize, measure: Measure, scaled: bool) -> Self {
        self.terms.push(Term { k, measure, scaled });
        self
    }

    pub fn with_point(mut self, a: Complex64, lambda: f64) -> Self {
        self.point_terms.push((a, lambda));
        self
    }

    pub fn with_deriv_tail(mut self, order: usize, density: Measure) -> Self {
        self.deriv_tail = Some((order, density));
        self
    }

    pub fn with_certificate(mut self, cert: NormCertificate) -> Self {
        self.certificate = Some(cert);
        self
    }

    pub fn context(&self) -> Option<&ScaleContext> {
        self.context.as_ref()
    }

    fn ctx(&self) -> Result<&ScaleContext> {
        self.context
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("scaled terms need a weight context".into()))
    }

    /// `αT + βS`; both must share the index m.
    pub fn combine(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Result<Self> {
        if self.m != other.m {
            return invalid("combined functionals must share m");
        }
        let mut out = Self::new(self.m);
        out.context = self.context.clone().or_else(|| other.context.clone());
        for (t, c) in self
            .terms
            .iter()
            .map(|t| (t, alpha))
            .chain(other.terms.iter().map(|t| (t, beta)))
        {
            out.terms.push(Term {
                k: t.k,
                measure: t.measure.scaled(c),
                scaled: t.scaled,
            });
        }
        out.point_terms.extend(self.point_terms.iter().map(|(a, l)| (a * alpha, *l)));
        out.point_terms.extend(other.point_terms.iter().map(|(a, l)| (a * beta, *l)));
        for (tail, c) in [(&self.deriv_tail, alpha), (&other.deriv_tail, beta)] {
            if let Some((n, p)) = tail {
                out.terms.push(Term {
                    k: *n,
                    measure: p.scaled(c),
                    scaled: false,
                });
            }
        }
        Ok(out)
    }

    /// Largest derivative order used.
    pub fn order(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.k)
            .chain(self.deriv_tail.as_ref().map(|(n, _)| *n))
            .max()
            .unwrap_or(0)
    }

    pub fn apply(&self, f: &SampledFunction) -> Result<Complex64> {
        let mut total = CompensatedSum::new();
        for t in &self.terms {
            let k = t.k;
            if t.scaled {
                let ctx = self.ctx()?;
                let pre = (-ctx.ln_scale(self.m, k)?).exp();
                let v = t
                    .measure
                    .integrate(|x| Ok(f.derivative(k, x)? * (-ctx.theta.ln_theta(self.m, x)?).exp()))?;
                total += v * pre;
            } else {
                total += t.measure.integrate(|x| f.derivative(k, x))?;
            }
        }
        for (a, l) in &self.point_terms {
            total += a * f.eval(*l);
        }
        if let Some((n, p)) = &self.deriv_tail {
            total += p.integrate(|t| f.derivative(*n, t))?;
        }
        Ok(total.value())
    }

    pub fn fourier_laplace(&self, z: Complex64) -> Result<Complex64> {
        self.apply(&SampledFunction::exponential_element(z))
    }

    /// Constant c in `|T(f)| ≤ c ‖f‖_{G,m}`: the stored certificate when
    /// present, otherwise summed term by term.
    pub fn norm_certificate(&self) -> Result<NormCertificate> {
        if let Some(c) = self.certificate {
            return Ok(c);
        }
        let ctx = self.ctx()?;
        let m = self.m;
        let theta = |x: f64| ctx.theta.theta(m, x);
        let mut c = 0.0;
        for t in &self.terms {
            if t.scaled {
                c += t.measure.total_variation();
            } else {
                c += ctx.ln_scale(m, t.k)?.exp() * t.measure.weighted_variation(theta)?;
            }
        }
        for (a, l) in &self.point_terms {
            c += a.norm() * theta(*l)?;
        }
        if let Some((n, p)) = &self.deriv_tail {
            c += ctx.ln_scale(m, *n)?.exp() * p.weighted_variation(theta)?;
        }
        Ok(NormCertificate { c, m })
    }

    /// Per-order entire functions `V_k` with `T̂(z) = Σ V_k(z) z^k`.
    pub fn transform(&self) -> Result<TransformResult> {
        let mut orders: Vec<usize> = self.terms.iter().map(|t| t.k).collect();
        if !self.point_terms.is_empty() {
            orders.push(0);
        }
        if let Some((n, _)) = &self.deriv_tail {
            orders.push(*n);
        }
        orders.sort_unstable();
        orders.dedup();
        let shared = Arc::new(self.clone());
        let mut v = Vec::with_capacity(orders.len());
        for &k in &orders {
            let t = shared.clone();
            v.push(EntireFunctionModel::closure(move |z| {
                t.v_k(k, z).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
            }));
        }
        Ok(TransformResult {
            functional: shared,
            orders,
            v,
            tilt: OnceLock::new(),
        })
    }

    /// `V_k(z) = (-i)^k [pref] ∫ e^{-izx} [/θ_m] dμ_k` plus the point and
    /// derivative-tail contributions of order k.
    pub fn v_k(&self, k: usize, z: Complex64) -> Result<Complex64> {
        let e = |x: f64| (-I * z * x).exp();
        let mi = (-I).powu(k as u32);
        let mut s = CompensatedSum::new();
        for t in self.terms.iter().filter(|t| t.k == k) {
            if t.scaled {
                let ctx = self.ctx()?;
                let pre = (-ctx.ln_scale(self.m, k)?).exp();
                let v = t
                    .measure
                    .integrate(|x| Ok(e(x) * (-ctx.theta.ln_theta(self.m, x)?).exp()))?;
                s += mi * pre * v;
            } else {
                s += mi * t.measure.integrate(|x| Ok(e(x)))?;
            }
        }
        if k == 0 {
            for (a, l) in &self.point_terms {
                s += a * e(*l);
            }
        }
        if let Some((n, p)) = &self.deriv_tail {
            if *n == k {
                s += mi * p.integrate(|x| Ok(e(x)))?;
            }
        }
        Ok(s.value())
    }

    /// Transform samples as CSV (`re_z,im_z,re_t,im_t`).
    pub fn transform_csv(&self, probes: &[Complex64]) -> Result<String> {
        let mut out = String::from("re_z,im_z,re_t,im_t\n");
        for &z in probes {
            let t = self.fourier_laplace(z)?;
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(z.re),
                fmt_f64(z.im),
                fmt_f64(t.re),
                fmt_f64(t.im)
            ));
        }
        Ok(out)
    }
}

/// `T̂` together with its per-order pieces.
#[derive(Debug)]
pub struct TransformResult {
    pub functional: Arc<MeasureFunctional>,
    pub orders: Vec<usize>,
    pub v: Vec<EntireFunctionModel>,
    tilt: OnceLock<f64>,
}

impl TransformResult {
    pub fn direct(&self, z: Complex64) -> Result<Complex64> {
        self.functional.fourier_laplace(z)
    }

    /// `Σ_{k ≤ k_max} V_k(z) z^k`.
    pub fn series(&self, z: Complex64, k_max: usize) -> Complex64 {
        let mut s = CompensatedSum::new();
        for (k, v) in self.orders.iter().zip(&self.v) {
            if *k <= k_max {
                s += v.eval(z) * z.powu(*k as u32);
            }
        }
        s.value()
    }

    /// Majorant of `Σ_{k > k_max} |V_k(z) z^k|` from
    /// `|V_k(z)| ≤ A (1+|z|)^{m(α-1)} e^{ψ(Im z)} / ((σ+ε_m)^k M_k)` with
    /// `A = sup_k |μ_k| e^{b_m}`. All terms must be θ-scaled.
    pub fn tail_bound(&self, z: Complex64, k_max: usize) -> Result<f64> {
        let t = &self.functional;
        if !t.point_terms.is_empty() || t.deriv_tail.is_some() || t.terms.iter().any(|x| !x.scaled) {
            return invalid("series tail bound needs a functional made of scaled terms");
        }
        let ctx = t.ctx()?;
        let b_m = match self.tilt.get() {
            Some(b) => *b,
            None => {
                let b = ctx.theta.b_m(t.m, 40.0)?.constant;
                *self.tilt.get_or_init(|| b)
            }
        };
        let mut sup_var = 0.0f64;
        for &k in &self.orders {
            let var: f64 = t.terms.iter().filter(|x| x.k == k).map(|x| x.measure.total_variation()).sum();
            sup_var = sup_var.max(var);
        }
        let alpha = ctx.weight().alpha();
        let ln_env = (sup_var.ln() + b_m)
            + t.m as f64 * (alpha - 1.0) * z.norm().ln_1p()
            + ctx.weight().psi(z.im);
        let top = t.order();
        let mut tail = 0.0;
        for k in k_max + 1..=top {
            tail += (ln_env + k as f64 * z.norm().ln() - ctx.ln_scale(t.m, k)?).exp();
        }
        Ok(tail)
    }
}

/// Checks `|T̂(z)| ≤ c exp(ψ(Im z) + w_{m+1}(|z|) + q_m)` at every probe.
pub fn certify_transform_growth(t: &MeasureFunctional, probes: &[Complex64]) -> Result<BoundReport> {
    let ctx = t.ctx()?;
    let cert = t.norm_certificate()?;
    let y_max = probes.iter().fold(20.0f64, |a, z| a.max(z.im.abs()));
    let q = envelope_constant(&ctx.family, &ctx.theta, cert.m, y_max)?;
    let mut worst = 0.0f64;
    let mut at = vec![];
    for &z in probes {
        let lhs = t.fourier_laplace(z)?.norm();
        let ln_rhs = cert.c.ln() + ctx.weight().psi(z.im) + ctx.family.w_m(cert.m + 1, z.norm())? + q.constant;
        let ratio = if lhs == 0.0 { 0.0 } else { (lhs.ln() - ln_rhs).exp() };
        if ratio > 1.0 {
            return Err(Error::GrowthViolated {
                z,
                lhs,
                rhs: ln_rhs.exp(),
            });
        }
        if ratio >= worst {
            worst = ratio;
            at = vec![z.re, z.im];
        }
    }
    Ok(BoundReport::new("transform-growth")
        .with_constant(cert.c)
        .with_ratio(worst)
        .with_witness(at)
        .with_grid(format!("{} probes", probes.len()))
        .with_named("q_m", q.constant)
        .with_named("m", cert.m as f64)
        .with_named("slack", 1.0 - worst))
}

/// JSON form: `{"terms":[{"k":0,"points":[[0.0,1.0]]}],"point_terms":[],"m":1}`.
/// Points are `[x, re]` or `[x, re, im]`; point terms `[λ, re]` or `[λ, re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalDescriptor {
    #[serde(default)]
    pub terms: Vec<TermDescriptor>,
    #[serde(default)]
    pub point_terms: Vec<Vec<f64>>,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDescriptor {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub scaled: bool,
}

fn weighted_point(v: &[f64]) -> Result<(f64, Complex64)> {
    match v {
        [x, re] => Ok((*x, Complex64::new(*re, 0.0))),
        [x, re, im] => Ok((*x, Complex64::new(*re, *im))),
        _ => invalid("points are [x, re] or [x, re, im]"),
    }
}

impl FunctionalDescriptor {
    pub fn build(&self, context: Option<ScaleContext>) -> Result<MeasureFunctional> {
        if self.m == 0 {
            return invalid("m starts at 1");
        }
        let mut t = MeasureFunctional::new(self.m);
        if let Some(c) = context {
            t = t.with_context(c);
        }
        for term in &self.terms {
            let pts = term.points.iter().map(|p| weighted_point(p)).collect::<Result<Vec<_>>>()?;
            t = t.with_term(term.k, Measure::Points(pts), term.scaled);
        }
        for p in &self.point_terms {
            let (l, a) = weighted_point(p)?;
            t = t.with_point(a, l);
        }
        if t.terms.iter().any(|x| x.scaled) && t.context.is_none() {
            return invalid("scaled terms need a weight context");
        }
        Ok(t)
    }
}

/// Tolerances for density recovery and synthesis.
#[derive(Debug, Clone, Copy)]
pub struct SynthesisOptions {
    /// Box on which the growth hypotheses are checked.
    pub probe_box: ComplexBox,
    /// Truncation tail of the inverse transform, relative to the growth constant.
    pub tail_budget: f64,
    pub panel_width: f64,
    /// Density values below `floor · max|p|` count as outside the support.
    pub density_floor: f64,
    pub max_intervals: usize,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            probe_box: ComplexBox::square(6.0, 25),
            tail_budget: 1e-8,
            panel_width: 0.25,
            density_floor: 1e-13,
            max_intervals: 4000,
        }
    }
}

/// A recovered density `p(t) = (1/2π) ∫ u(x) e^{ixt} dx`.
#[derive(Debug, Clone)]
pub struct DensityRecovery {
    pub measure: Measure,
    pub support: (f64, f64),
    /// Truncation radius of the x-integral.
    pub radius: f64,
    pub tail_bound: f64,
    /// `sup |p(t)| e^{φ(t)}` over the rule nodes.
    pub sup_weighted: f64,
}

fn symmetric_breaks(radius: f64) -> Vec<f64> {
    let mut pos = vec![];
    let mut b = 0.5;
    while b < radius {
        pos.push(b);
        b *= 2.0;
    }
    pos.push(radius);
    let mut all: Vec<f64> = pos.iter().rev().map(|x| -x).collect();
    all.push(0.0);
    all.extend(pos);
    all
}

fn inverse_transform_at<F: Fn(f64) -> Complex64>(
    u: &F,
    t: f64,
    breaks: &[f64],
    max_intervals: usize,
) -> Result<Complex64> {
    let opts = QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_intervals,
    };
    let r = integrate_complex_with_breaks(|x| u(x) * (I * x * t).exp(), breaks, opts)
        .map_err(|e| Error::DensityRecoveryFailed(format!("inverse transform at t = {t}: {e}")))?;
    Ok(r.value / (2.0 * std::f64::consts::PI))
}

/// Recovers `p` from samples of its transform on the real axis. The support
/// is located on a 0.5-spaced scan of the weight domain; `bound` caps
/// `sup |p| e^φ`. Returns `None` when p vanishes.
pub fn recover_density<F: Fn(f64) -> Complex64>(
    u: F,
    radius: f64,
    tail_bound: f64,
    weight: &ConvexWeight,
    bound: f64,
    opts: &SynthesisOptions,
) -> Result<Option<DensityRecovery>> {
    let breaks = symmetric_breaks(radius);
    let cap = (weight.half_width() - 1.0).floor();
    let n = (2.0 * cap / 0.5) as usize;
    let scan: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let t = -cap + 0.5 * i as f64;
            inverse_transform_at(&u, t, &breaks, opts.max_intervals).map(|p| (t, p.norm()))
        })
        .collect::<Result<_>>()?;
    let pmax = scan.iter().fold(0.0f64, |a, (_, p)| a.max(*p));
    if pmax == 0.0 {
        return Ok(None);
    }
    let keep = |p: f64| p >= opts.density_floor * pmax;
    let first = scan.iter().position(|(_, p)| keep(*p)).unwrap();
    let last = scan.iter().rposition(|(_, p)| keep(*p)).unwrap();
    if first == 0 || last == n {
        return Err(Error::DensityRecoveryFailed(format!(
            "density does not decay inside [-{cap}, {cap}]"
        )));
    }
    let (a, b) = (scan[first].0 - 0.5, scan[last].0 + 0.5);
    let panels = ((b - a) / opts.panel_width).ceil() as usize;
    let rule = PanelRule::uniform(a, b, panels);
    let samples: Vec<Complex64> = rule
        .nodes
        .iter()
        .map(|&t| inverse_transform_at(&u, t, &breaks, opts.max_intervals))
        .collect::<Result<_>>()?;
    let mut sup_weighted = 0.0f64;
    for (t, p) in rule.nodes.iter().zip(&samples) {
        sup_weighted = sup_weighted.max(p.norm() * weight.phi(*t)?.exp());
    }
    if sup_weighted >= bound {
        return Err(Error::DensityRecoveryFailed(format!(
            "sup |p| e^phi = {sup_weighted} is not below {bound}"
        )));
    }
    Ok(Some(DensityRecovery {
        measure: Measure::Density { rule, samples },
        support: (a, b),
        radius,
        tail_bound,
        sup_weighted,
    }))
}

/// Functional with `T̂ = U V` for `|U| ≤ C_U e^{ψ(Im z)}/(1+|z|²)` and
/// `|V| ≤ C_V e^{w_m(|z|)}`: `T(f) = ∫ p Σ v_k i^k f^{(k)}`, certified by
/// `|T(f)| ≤ β_m C_U C_V ‖f‖_{G,m+1}`.
pub fn synthesize_factorized(
    u: &EntireFunctionModel,
    v: &EntireFunctionModel,
    m: usize,
    c_u: f64,
    c_v: f64,
    ctx: &ScaleContext,
    opts: &SynthesisOptions,
) -> Result<MeasureFunctional> {
    if m == 0 || !(c_u > 0.0) || !(c_v > 0.0) {
        return invalid("factorized synthesis needs m >= 1 and positive constants");
    }
    let fam = &ctx.family;
    let w = ctx.weight();
    for z in opts.probe_box.points() {
        let lu = u.eval(z).norm() * (1.0 + z.norm_sqr()) * (-w.psi(z.im)).exp();
        if lu > c_u * (1.0 + 1e-9) {
            return Err(Error::FactorizationBoundViolated(format!(
                "|U(z)|(1+|z|^2)e^(-psi) = {lu} exceeds C_U = {c_u} at z = {z}"
            )));
        }
        let lv = v.eval(z).norm() * (-fam.w_m(m, z.norm())?).exp();
        if lv > c_v * (1.0 + 1e-9) {
            return Err(Error::FactorizationBoundViolated(format!(
                "|V(z)|e^(-w_m) = {lv} exceeds C_V = {c_v} at z = {z}"
            )));
        }
    }
    // truncate where the Cauchy majorant C_V / ((σ+ε_m)^k M_k) drops below 1e-12 C_V
    let stored = fam.sequence().len() - 1;
    let mut k_top = 0;
    while k_top < stored && ctx.ln_scale(m, k_top)? < 12.0 * std::f64::consts::LN_10 {
        k_top += 1;
    }
    let coeffs = v.taylor_coefficients(k_top + 1, 1.0, 512);
    let vmax = coeffs.iter().fold(0.0f64, |a, c| a.max(c.norm()));
    let mut kept = vec![];
    for (k, vk) in coeffs.iter().enumerate() {
        let scaled = vk.norm() * ctx.ln_scale(m, k)?.exp();
        if scaled > c_v * (1.0 + 1e-9) + 1e-9 {
            return Err(Error::FactorizationBoundViolated(format!(
                "Taylor coefficient {k}: |v_k|(sigma+eps_m)^k M_k = {scaled} exceeds C_V = {c_v}"
            )));
        }
        if vk.norm() > 1e-14 * vmax {
            kept.push((k, *vk));
        }
    }
    let radius = 1.0 / (std::f64::consts::PI * opts.tail_budget);
    let tail = c_u / (std::f64::consts::PI * radius);
    let rec = recover_density(|x| u.eval(Complex64::new(x, 0.0)), radius, tail, w, c_u / 2.0, opts)?;
    let mut t = MeasureFunctional::new(m + 1)
        .with_context(ctx.clone())
        .with_certificate(NormCertificate {
            c: fam.beta(m) * c_u * c_v,
            m: m + 1,
        });
    if let Some(rec) = rec {
        for (k, vk) in kept {
            t = t.with_term(k, rec.measure.scaled(vk * I.powu(k as u32)), false);
        }
    }
    Ok(t)
}

/// Output of the polynomial-growth synthesis.
#[derive(Debug, Clone)]
pub struct PolygrowthSynthesis {
    pub functional: MeasureFunctional,
    pub coefficients: Vec<Complex64>,
    /// True when p came from the closed-form spline of an exponential sum.
    pub exact_density: bool,
    /// `Σ|a_k| θ_2(λ_k) + ∫|p| θ_2`, bounding T against `‖·‖_{N+2,2}`.
    pub norm_constant: f64,
}

fn taylor_derivatives(u: &EntireFunctionModel, count: usize) -> Vec<Complex64> {
    let mut fact = 1.0;
    let exact: Option<Vec<Complex64>> = match u {
        EntireFunctionModel::ExpSum(t) => Some(
            (0..count)
                .map(|n| t.iter().map(|(c, mu)| c * (-I * mu).powu(n as u32)).sum())
                .collect(),
        ),
        _ => None,
    };
    if let Some(d) = exact {
        return d;
    }
    let c = u.taylor_coefficients(count, 1.0, 256);
    c.into_iter()
        .enumerate()
        .map(|(n, c)| {
            if n > 0 {
                fact *= n as f64;
            }
            c * fact
        })
        .collect()
}

fn exp_sum_terms(u: &EntireFunctionModel) -> Option<Vec<(Complex64, f64)>> {
    match u {
        EntireFunctionModel::ExpSum(t) => Some(t.clone()),
        EntireFunctionModel::Polynomial(c) if c.iter().skip(1).all(|x| *x == ZERO) => {
            Some(vec![(c.first().copied().unwrap_or(ZERO), 0.0)])
        }
        _ => None,
    }
}

/// Functional `T(f) = Σ a_k f(λ_k) + ∫ p f^{(N+2)}` with `T̂ = U` for
/// `|U| ≤ C (1+|z|)^N e^{ψ(Im z)}`.
///
/// The `a_k` solve `Σ a_k (-iλ_k)^n = U^{(n)}(0)`, `n ≤ N+1`, so that
/// `h = (U - Σ a_k e^{-iλ_k z}) / (-iz)^{N+2}` is entire; p is the inverse
/// transform of h (a closed-form spline when U is an exponential sum).
pub fn synthesize_polygrowth(
    u: &EntireFunctionModel,
    c: f64,
    n_poly: usize,
    nodes: &[f64],
    ctx: &ScaleContext,
    opts: &SynthesisOptions,
) -> Result<PolygrowthSynthesis> {
    let n = n_poly + 2;
    if nodes.len() != n {
        return invalid(format!("need {n} nodes, got {}", nodes.len()));
    }
    for (i, a) in nodes.iter().enumerate() {
        if *a == 0.0 || !a.is_finite() {
            return Err(Error::SingularNodeSystem(format!("node {i} is zero or not finite")));
        }
        if nodes[..i].contains(a) {
            return Err(Error::SingularNodeSystem(format!("node {a} is repeated")));
        }
    }
    let w = ctx.weight();
    for z in opts.probe_box.points() {
        let lhs = u.eval(z).norm();
        let rhs = c * (1.0 + z.norm()).powi(n_poly as i32) * w.psi(z.im).exp();
        if lhs > rhs * (1.0 + 1e-9) {
            return Err(Error::GrowthViolated { z, lhs, rhs });
        }
    }
    let d = taylor_derivatives(u, n);
    let mat = DMatrix::from_fn(n, n, |r, k| (-I * nodes[k]).powu(r as u32));
    let rhs = DVector::from_vec(d.clone());
    let a = mat
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularNodeSystem("node matrix is singular".into()))?;
    let resid = (&mat * &a - &rhs).norm();
    if !(resid <= 1e-9 * (1.0 + rhs.norm())) {
        return Err(Error::SingularNodeSystem(format!("residual {resid} after solve")));
    }
    let coefficients: Vec<Complex64> = a.iter().copied().collect();
    let mut t = MeasureFunctional::new(2).with_context(ctx.clone());
    for (ak, l) in coefficients.iter().zip(nodes) {
        t = t.with_point(*ak, *l);
    }
    let mut exact_density = false;
    if let Some(mut g) = exp_sum_terms(u) {
        exact_density = true;
        g.extend(coefficients.iter().zip(nodes).map(|(ak, l)| (-ak, *l)));
        g.sort_by(|x, y| x.1.total_cmp(&y.1));
        let mut merged: Vec<(Complex64, f64)> = vec![];
        for (cj, mu) in g {
            match merged.last_mut() {
                Some(last) if last.1 == mu => last.0 += cj,
                _ => merged.push((cj, mu)),
            }
        }
        let scale = merged.iter().fold(0.0f64, |s, x| s.max(x.0.norm()));
        merged.retain(|x| x.0.norm() > 1e-14 * scale);
        if merged.len() > 1 {
            let mut breaks = vec![merged[0].1];
            for pair in merged.windows(2) {
                let (lo, hi) = (pair[0].1, pair[1].1);
                let pieces = ((hi - lo) / opts.panel_width).ceil().max(1.0) as usize;
                breaks.extend((1..=pieces).map(|i| lo + (hi - lo) * i as f64 / pieces as f64));
            }
            let rule = PanelRule::new(&breaks);
            let fact: f64 = (1..n).map(|i| i as f64).product();
            let p = Measure::density(rule, |t| {
                merged
                    .iter()
                    .filter(|(_, mu)| *mu > t)
                    .map(|(cj, mu)| cj * (mu - t).powi(n as i32 - 1))
                    .sum::<Complex64>()
                    / fact
            });
            t = t.with_deriv_tail(n, p);
        }
    } else {
        let model = u.clone();
        let coef = coefficients.clone();
        let nodes_v = nodes.to_vec();
        let g = move |z: Complex64| {
            model.eval(z)
                - coef
                    .iter()
                    .zip(&nodes_v)
                    .map(|(ak, l)| ak * (-I * l * z).exp())
                    .sum::<Complex64>()
        };
        let h_far = |z: Complex64| g(z) / (-I * z).powu(n as u32);
        // near the origin h is evaluated by the Cauchy integral on |ζ| = 1
        let ring: Vec<(Complex64, Complex64)> = (0..64)
            .map(|j| {
                let zeta = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / 64.0);
                (zeta, h_far(zeta))
            })
            .collect();
        let h = |x: f64| {
            if x.abs() >= 0.5 {
                h_far(Complex64::new(x, 0.0))
            } else {
                ring.iter().map(|(zeta, hv)| hv * zeta / (zeta - x)).sum::<Complex64>() / 64.0
            }
        };
        let asum: f64 = coefficients.iter().map(|a| a.norm()).sum();
        let lead = c * 2f64.powi(n_poly as i32) + asum;
        let radius = lead / (std::f64::consts::PI * opts.tail_budget * c);
        let rec = recover_density(h, radius, opts.tail_budget * c, w, f64::INFINITY, opts)?;
        if let Some(rec) = rec {
            t = t.with_deriv_tail(n, rec.measure);
        }
    }
    let theta2 = |x: f64| ctx.theta.theta(2, x);
    let mut norm_constant = 0.0;
    for (ak, l) in coefficients.iter().zip(nodes) {
        norm_constant += ak.norm() * theta2(*l)?;
    }
    if let Some((_, p)) = &t.deriv_tail {
        norm_constant += p.weighted_variation(theta2)?;
    }
    Ok(PolygrowthSynthesis {
        functional: t,
        coefficients,
        exact_density,
        norm_constant,
    })
}

/// Moment diagnostics for a functional whose transform vanishes on
/// `z_grid`: `max |T(x^ν)|` over `orders` and the gap between the partial
/// sums `Σ_{ν ≤ N} ξ^ν T(x^ν)/ν!` and `T(e^{ξx})`.
pub fn uniqueness_probe(
    t: &MeasureFunctional,
    z_grid: &[Complex64],
    orders: &[usize],
    xi_probes: &[f64],
) -> Result<BoundReport> {
    let mut max_transform = 0.0f64;
    for &z in z_grid {
        max_transform = max_transform.max(t.fourier_laplace(z)?.norm());
    }
    let top = orders.iter().copied().max().unwrap_or(0);
    let mut moments = vec![ZERO; top + 1];
    for (nu, slot) in moments.iter_mut().enumerate() {
        let mut c = vec![ZERO; nu + 1];
        c[nu] = Complex64::new(1.0, 0.0);
        *slot = t.apply(&SampledFunction::polynomial(c))?;
    }
    let mut worst = 0.0f64;
    let mut at = 0.0;
    for &nu in orders {
        if moments[nu].norm() > worst {
            worst = moments[nu].norm();
            at = nu as f64;
        }
    }
    let mut gap = 0.0f64;
    for &xi in xi_probes {
        let mut partial = CompensatedSum::new();
        let mut fact = 1.0;
        for (nu, m) in moments.iter().enumerate() {
            if nu > 0 {
                fact *= nu as f64;
            }
            partial += m * xi.powi(nu as i32) / fact;
        }
        let direct = t.apply(&SampledFunction::exponential(xi))?;
        gap = gap.max((partial.value() - direct).norm());
    }
    Ok(BoundReport::new("moment-uniqueness")
        .with_constant(worst)
        .with_ratio(worst)
        .with_witness(vec![at])
        .with_grid(format!("{} transform probes, orders up to {top}", z_grid.len()))
        .with_named("max_transform", max_transform)
        .with_named("partial_sum_gap", gap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{decaying_transforms, delta, interval_mean, probe_grid, series_functionals, standard_context};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ctx() -> ScaleContext {
        standard_context().unwrap()
    }

    fn offset_probes() -> Vec<Complex64> {
        let xs = [-2.5, -1.2, 0.3, 1.4, 2.6];
        let ys = [-1.5, -0.7, 0.2, 0.9, 1.6];
        xs.iter().flat_map(|x| ys.iter().map(move |y| c(*x, *y))).collect()
    }

    #[test]
    fn apply_examples() {
        let one = SampledFunction::constant(c(1.0, 0.0));
        assert_eq!(MeasureFunctional::new(1).with_term(0, Measure::point(0.0, c(1.0, 0.0)), false).apply(&one).unwrap(), c(1.0, 0.0));
        let sq = SampledFunction::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let v = MeasureFunctional::new(1).with_point(c(1.0, 0.0), 2.0).apply(&sq).unwrap();
        assert!((v - c(4.0, 0.0)).norm() < 1e-14);
        let id = SampledFunction::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let v = interval_mean(&ctx()).apply(&id).unwrap();
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn apply_needs_derivatives() {
        let f = SampledFunction::new(Arc::new(|_, _| c(1.0, 0.0)), Some(1), None);
        let t = MeasureFunctional::new(1).with_term(3, Measure::point(0.0, c(1.0, 0.0)), false);
        assert!(matches!(t.apply(&f), Err(Error::InsufficientDerivatives { .. })));
    }

    #[test]
    fn transform_examples() {
        let ctx = ctx();
        assert!((delta(&ctx).fourier_laplace(c(3.0, -2.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let d1 = MeasureFunctional::new(1).with_term(1, Measure::point(0.0, c(1.0, 0.0)), false);
        assert!((d1.fourier_laplace(c(3.0, 0.0)).unwrap() - c(0.0, -3.0)).norm() < 1e-14);
        let box_mean = interval_mean(&ctx);
        assert!(box_mean.fourier_laplace(c(std::f64::consts::PI, 0.0)).unwrap().norm() < 1e-12);
        for z in [c(0.7, 0.3), c(-2.0, 1.5), c(4.0, -3.0)] {
            let want = 2.0 * z.sin() / z;
            assert!((box_mean.fourier_laplace(z).unwrap() - want).norm() < 1e-11 * want.norm().max(1.0));
        }
    }

    #[test]
    fn transform_growth_examples() {
        let ctx = ctx();
        let r = certify_transform_growth(&delta(&ctx), &probe_grid(5.0, 5)).unwrap();
        assert!(r.passed && r.worst_ratio <= 1.0);
        let r = certify_transform_growth(&interval_mean(&ctx), &probe_grid(20.0, 9)).unwrap();
        assert!(r.passed, "{r:?}");
        let r = certify_transform_growth(&delta(&ctx), &[c(0.0, 0.0)]).unwrap();
        assert!(r.passed && r.worst_ratio <= 1.0);
    }

    #[test]
    fn growth_violation_is_reported() {
        let ctx = ctx();
        let t = delta(&ctx).with_certificate(NormCertificate { c: 1e-6, m: 1 });
        assert!(matches!(
            certify_transform_growth(&t, &[c(0.0, 0.0)]),
            Err(Error::GrowthViolated { .. })
        ));
    }

    #[test]
    fn series_matches_direct_transform() {
        let ctx = ctx();
        for (name, t) in series_functionals(&ctx) {
            let tr = t.transform().unwrap();
            let cut = t.order().saturating_sub(1).min(30);
            for z in [c(0.5, 0.2), c(-2.0, 1.0), c(3.0, -2.5)] {
                let direct = tr.direct(z).unwrap();
                let series = tr.series(z, cut);
                let tail = tr.tail_bound(z, cut).unwrap();
                assert!(
                    (direct - series).norm() <= tail + 1e-12 * direct.norm().max(1.0),
                    "{name} at {z}: gap {} tail {tail}",
                    (direct - series).norm()
                );
            }
        }
    }

    #[test]
    fn geometric_fixture_closed_form() {
        let ctx = ctx();
        let (_, t) = series_functionals(&ctx).remove(0);
        for z in [c(1.0, 0.5), c(-3.0, 2.0)] {
            let want = (c(0.0, -1.0) * z / 4.0).exp();
            assert!((t.fourier_laplace(z).unwrap() - want).norm() < 1e-12);
        }
    }

    #[test]
    fn tail_bound_rejects_unscaled_terms() {
        let ctx = ctx();
        let tr = interval_mean(&ctx).transform().unwrap();
        assert!(tr.tail_bound(c(1.0, 0.0), 0).is_err());
    }

    #[test]
    fn factorized_round_trip() {
        let ctx = ctx();
        let opts = SynthesisOptions::default();
        let g = &decaying_transforms()[0];
        let one = EntireFunctionModel::Polynomial(vec![c(1.0, 0.0)]);
        let t = synthesize_factorized(&g.u, &one, 1, g.c_u, 1.0, &ctx, &opts).unwrap();
        assert_eq!(t.m, 2);
        assert_eq!(t.terms.len(), 1);
        for z in offset_probes() {
            let want = g.u.eval(z);
            assert!((t.fourier_laplace(z).unwrap() - want).norm() <= 1e-6 * want.norm(), "{z}");
        }
        let lin = EntireFunctionModel::Polynomial(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let t = synthesize_factorized(&g.u, &lin, 1, g.c_u, 2.0, &ctx, &opts).unwrap();
        assert_eq!(t.terms.iter().map(|x| x.k).collect::<Vec<_>>(), vec![1]);
        for z in offset_probes() {
            let want = z * g.u.eval(z);
            assert!((t.fourier_laplace(z).unwrap() - want).norm() <= 1e-6 * want.norm(), "{z}");
        }
        let cert = t.norm_certificate().unwrap();
        assert_eq!(cert.m, 2);
        assert!((cert.c - ctx.family.beta(1) * g.c_u * 2.0).abs() < 1e-12);
    }

    #[test]
    fn factorized_zero_gives_zero_functional() {
        let ctx = ctx();
        let zero = EntireFunctionModel::Polynomial(vec![c(0.0, 0.0)]);
        let one = EntireFunctionModel::Polynomial(vec![c(1.0, 0.0)]);
        let t = synthesize_factorized(&zero, &one, 1, 1.0, 1.0, &ctx, &SynthesisOptions::default()).unwrap();
        assert!(t.terms.is_empty());
        assert_eq!(t.fourier_laplace(c(1.0, 2.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn factorized_rejects_bad_bounds() {
        let ctx = ctx();
        let opts = SynthesisOptions::default();
        let g = &decaying_transforms()[0];
        let one = EntireFunctionModel::Polynomial(vec![c(1.0, 0.0)]);
        assert!(matches!(
            synthesize_factorized(&g.u, &one, 1, 1.0, 1.0, &ctx, &opts),
            Err(Error::FactorizationBoundViolated(_))
        ));
        let lin = EntireFunctionModel::Polynomial(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            synthesize_factorized(&g.u, &lin, 1, g.c_u, 1.0, &ctx, &opts),
            Err(Error::FactorizationBoundViolated(_))
        ));
    }

    #[test]
    fn recovered_density_matches_gaussians() {
        let ctx = ctx();
        let opts = SynthesisOptions::default();
        for g in decaying_transforms() {
            let rec = recover_density(|x| g.u.eval(c(x, 0.0)), 1e4, 0.0, ctx.weight(), g.c_u / 2.0, &opts)
                .unwrap()
                .unwrap();
            let Measure::Density { rule, samples } = &rec.measure else { panic!() };
            let err = rule
                .nodes
                .iter()
                .zip(samples)
                .fold(0.0f64, |a, (t, p)| a.max((p - (g.density)(*t)).norm()));
            assert!(err < 1e-9, "{}: {err}", g.name);
        }
    }

    #[test]
    fn polygrowth_constant() {
        let ctx = ctx();
        let one = EntireFunctionModel::Polynomial(vec![c(1.0, 0.0)]);
        let s = synthesize_polygrowth(&one, 1.0, 0, &[1.0, -1.0], &ctx, &SynthesisOptions::default()).unwrap();
        assert!((s.coefficients[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((s.coefficients[1] - c(0.5, 0.0)).norm() < 1e-15);
        assert!(s.exact_density);
        for z in offset_probes() {
            assert!((s.functional.fourier_laplace(z).unwrap() - c(1.0, 0.0)).norm() < 1e-6, "{z}");
        }
        assert!(s.norm_constant.is_finite() && s.norm_constant > 0.0);
    }

    #[test]
    fn polygrowth_exponential_in_node_span() {
        let ctx = ctx();
        let u = EntireFunctionModel::ExpSum(vec![(c(1.0, 0.0), 1.0)]);
        let s = synthesize_polygrowth(&u, 1.65, 0, &[1.0, -1.0], &ctx, &SynthesisOptions::default()).unwrap();
        assert!((s.coefficients[0] - c(1.0, 0.0)).norm() < 1e-14);
        assert!(s.coefficients[1].norm() < 1e-14);
        assert!(s.functional.deriv_tail.is_none());
    }

    #[test]
    fn polygrowth_node_errors() {
        let ctx = ctx();
        let one = EntireFunctionModel::Polynomial(vec![c(1.0, 0.0)]);
        let opts = SynthesisOptions::default();
        for nodes in [[1.0, 1.0], [0.0, 1.0]] {
            assert!(matches!(
                synthesize_polygrowth(&one, 1.0, 0, &nodes, &ctx, &opts),
                Err(Error::SingularNodeSystem(_))
            ));
        }
        assert!(matches!(
            synthesize_polygrowth(&one, 0.5, 0, &[1.0, -1.0], &ctx, &opts),
            Err(Error::GrowthViolated { .. })
        ));
    }

    #[test]
    fn uniqueness_probe_examples() {
        let ctx = ctx();
        let zs = probe_grid(2.0, 3);
        let r = uniqueness_probe(&MeasureFunctional::zero(1), &zs, &[0, 1, 2, 3], &[0.5]).unwrap();
        assert_eq!(r.constant, 0.0);
        let d = delta(&ctx);
        let cancel = d.combine(c(1.0, 0.0), &d, c(-1.0, 0.0)).unwrap();
        let r = uniqueness_probe(&cancel, &zs, &[0, 1, 2, 3, 4], &[0.5, -1.0]).unwrap();
        assert_eq!(r.constant, 0.0);
        assert_eq!(r.named("max_transform"), Some(0.0));
        let noise = MeasureFunctional::new(1).with_term(1, Measure::point(0.0, c(0.0, 1e-14)), false);
        let r = uniqueness_probe(&noise, &zs, &[0, 1, 2, 3], &[0.5]).unwrap();
        assert!(r.constant < 1e-12);
    }

    #[test]
    fn descriptor_round_trip() {
        let d: FunctionalDescriptor =
            serde_json::from_str(r#"{"terms":[{"k":0,"points":[[0.0,1.0]]}],"point_terms":[],"m":1}"#).unwrap();
        let t = d.build(None).unwrap();
        assert_eq!(t.fourier_laplace(c(2.0, 1.0)).unwrap(), c(1.0, 0.0));
        assert!(serde_json::from_str::<FunctionalDescriptor>(r#"{"m":1,"extra":0}"#).is_err());
        let scaled: FunctionalDescriptor =
            serde_json::from_str(r#"{"terms":[{"k":1,"points":[[0.0,1.0]],"scaled":true}],"m":1}"#).unwrap();
        assert!(scaled.build(None).is_err());
        assert!(scaled.build(Some(ctx())).is_ok());
    }

    #[test]
    fn transform_csv_has_header_and_rows() {
        let csv = delta(&ctx()).transform_csv(&[c(0.0, 0.0), c(1.0, 1.0)]).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("re_z,im_z,re_t,im_t"));
    }

    fn random_functional(pts: &[(f64, f64, f64)]) -> MeasureFunctional {
        let mut t = MeasureFunctional::new(1);
        for (k, (x, re, im)) in pts.iter().enumerate() {
            t = t.with_term(k % 3, Measure::point(*x, c(*re, *im)), false);
        }
        t
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn apply_is_linear(
            pts in prop::collection::vec((-3.0..3.0f64, -1.0..1.0f64, -1.0..1.0f64), 1..6),
            a in prop::collection::vec(-2.0..2.0f64, 4),
            b in prop::collection::vec(-2.0..2.0f64, 4),
            al in -2.0..2.0f64,
            be in -2.0..2.0f64,
        ) {
            let t = random_functional(&pts);
            let f = SampledFunction::polynomial(a.iter().map(|v| c(*v, 0.0)).collect());
            let g = SampledFunction::polynomial(b.iter().map(|v| c(0.0, *v)).collect());
            let lhs = t.apply(&f.scale(c(al, 0.0)).add(&g.scale(c(be, 0.0)))).unwrap();
            let rhs = t.apply(&f).unwrap() * al + t.apply(&g).unwrap() * be;
            prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
        }

        #[test]
        fn transform_is_linear(
            p in prop::collection::vec((-3.0..3.0f64, -1.0..1.0f64, -1.0..1.0f64), 1..5),
            q in prop::collection::vec((-3.0..3.0f64, -1.0..1.0f64, -1.0..1.0f64), 1..5),
            zr in -4.0..4.0f64,
            zi in -4.0..4.0f64,
        ) {
            let (s, t) = (random_functional(&p), random_functional(&q));
            let z = c(zr, zi);
            let (al, be) = (c(0.3, -1.0), c(-2.0, 0.5));
            let lhs = s.combine(al, &t, be).unwrap().fourier_laplace(z).unwrap();
            let rhs = al * s.fourier_laplace(z).unwrap() + be * t.fourier_laplace(z).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
        }

        #[test]
        fn derivative_shift(x in -3.0..3.0f64, k in 0usize..6, zr in -4.0..4.0f64, zi in -3.0..3.0f64) {
            let z = c(zr, zi);
            let lo = MeasureFunctional::new(1).with_term(k, Measure::point(x, c(1.0, 0.0)), false);
            let hi = MeasureFunctional::new(1).with_term(k + 1, Measure::point(x, c(1.0, 0.0)), false);
            let want = c(0.0, -1.0) * z * lo.fourier_laplace(z).unwrap();
            prop_assert!((hi.fourier_laplace(z).unwrap() - want).norm() <= 1e-12 * (1.0 + want.norm()));
        }
    }
}
