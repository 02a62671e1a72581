//! Polynomial approximation in the weighted space `ℰ(Φ)`: cutoff,
//! mollification by `h(z) = sin²(z/2)/z²`, replacement of the kernel by its
//! Taylor polynomial, and Taylor approximation of exponentials.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::convexweights::ThetaFamily;
use crate::error::{invalid, Error, Result};
use crate::jet::Jet;
use crate::optim::CompensatedSum;
use crate::quad::{linspace, PanelRule};
use crate::report::{fmt_f64, BoundReport};
use crate::spaces::{norm_ephi, SampledFunction};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (2..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// `h(x) = sin²(x/2)/x² = ∫_{-1}^{1} g(t) e^{-ixt} dt` with `g(t) = (1-|t|)/4`.
#[derive(Debug, Clone)]
pub struct MollifierKernel {
    /// `∫ h`.
    pub a: f64,
    /// Bound on the truncation error in `a`.
    pub a_error: f64,
    /// Measured `max |h^{(k)}(x)|` over the probes.
    pub c_g: f64,
    /// `2 max |g|`.
    pub c_g_density: f64,
    pub taylor: Vec<f64>,
    pub reports: Vec<BoundReport>,
}

pub fn kernel_value(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        0.25 - x2 / 48.0 + x2 * x2 / 1440.0
    } else {
        let s = (0.5 * x).sin();
        s * s / (x * x)
    }
}

pub fn kernel_density(t: f64) -> f64 {
    if t.abs() <= 1.0 {
        0.25 * (1.0 - t.abs())
    } else {
        0.0
    }
}

/// `h^{(k)}(x) = ∫ g(t) (-it)^k e^{-ixt} dt`.
pub fn kernel_derivative(k: usize, x: f64) -> f64 {
    let panels = ((x.abs() * 0.1).ceil() as usize).max(2);
    let mut breaks = linspace(-1.0, 0.0, panels + 1);
    breaks.extend(linspace(0.0, 1.0, panels + 1).into_iter().skip(1));
    let rule = PanelRule::new(&breaks);
    let mut s = CompensatedSum::new();
    for (t, w) in rule.nodes.iter().zip(&rule.kronrod_weights) {
        s += *w * kernel_density(*t) * (-I * t).powu(k as u32) * (-I * x * t).exp();
    }
    s.value().re
}

impl MollifierKernel {
    pub fn new(max_order: usize) -> Self {
        let taylor: Vec<f64> = (0..=max_order)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / (2.0 * factorial(2 * k + 2)))
            .collect();
        // ∫_0^R h on period panels; past R = 2πK the tail is 1/(2R) up to 1/(2R²)
        let periods = 20_000;
        let r = 2.0 * PI * periods as f64;
        let rule = PanelRule::new(&linspace(0.0, r, 2 * periods + 1));
        let mut s = CompensatedSum::new();
        for (x, w) in rule.nodes.iter().zip(&rule.kronrod_weights) {
            s += *w * kernel_value(*x);
        }
        let a = 2.0 * s.value().re + 1.0 / r;
        let a_error = 1.0 / (r * r);
        let mut c_g = 0.0f64;
        let mut at = (0.0, 0usize);
        for x in linspace(-40.0, 40.0, 801) {
            for k in 0..=12 {
                let v = kernel_derivative(k, x).abs();
                if v > c_g {
                    c_g = v;
                    at = (x, k);
                }
            }
        }
        let mut neg = 0.0f64;
        for x in linspace(-200.0, 200.0, 40_001) {
            neg = neg.min(kernel_value(x));
        }
        let mass = BoundReport::new("kernel-mass")
            .with_constant(a)
            .with_ratio((a - PI / 2.0).abs())
            .with_grid(format!("{} periods plus analytic tail", periods))
            .with_named("tail_error", a_error)
            .with_named("min_value", neg);
        let mass = if neg >= 0.0 && a_error < 1e-8 { mass } else { mass.failed() };
        let deriv = BoundReport::new("kernel-derivative-bound")
            .with_constant(c_g)
            .with_ratio(c_g / 0.5)
            .with_witness(vec![at.0, at.1 as f64])
            .with_grid("x in [-40, 40] x 801, k <= 12")
            .with_named("density_bound", 0.5);
        Self {
            a,
            a_error,
            c_g,
            c_g_density: 0.5,
            taylor,
            reports: vec![mass, deriv],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        kernel_value(x)
    }

    /// `P_{2N}(x) = Σ_{k ≤ N} a_k x^{2k}`.
    pub fn taylor_poly(&self, n: usize, x: f64) -> f64 {
        let x2 = x * x;
        self.taylor[..=n.min(self.taylor.len() - 1)]
            .iter()
            .rev()
            .fold(0.0, |acc, a| acc * x2 + a)
    }

    /// `∫_{|t| > T} h`.
    pub fn tail_mass(&self, t: f64) -> f64 {
        let panels = ((t / PI).ceil() as usize).max(4) * 2;
        let rule = PanelRule::new(&linspace(0.0, t, panels + 1));
        let inner: f64 = rule
            .nodes
            .iter()
            .zip(&rule.kronrod_weights)
            .map(|(x, w)| w * kernel_value(*x))
            .sum();
        (self.a - 2.0 * inner).max(0.0)
    }
}

impl Default for MollifierKernel {
    fn default() -> Self {
        Self::new(40)
    }
}

fn cutoff_jet(x: f64, order: usize) -> Jet {
    let ax = x.abs();
    if ax <= 1.0 {
        return Jet::constant(1.0, order);
    }
    if ax >= 2.0 {
        return Jet::constant(0.0, order);
    }
    let v = Jet::variable(x, order);
    let two = Jet::constant(2.0, order);
    let u = if x > 0.0 { &two - &v } else { &two + &v };
    let one = Jet::constant(1.0, order);
    let e = |t: &Jet| t.recip().scale(-1.0).exp();
    let a = e(&u);
    let b = e(&(&one - &u));
    &a / &(&a + &b)
}

/// Smooth cutoff equal to 1 on `[-1, 1]`, supported in `[-2, 2]`.
pub fn smooth_cutoff() -> SampledFunction {
    SampledFunction::new(
        Arc::new(|k, x| Complex64::new(cutoff_jet(x, k).derivative(k), 0.0)),
        None,
        Some((-2.0, 2.0)),
    )
}

/// Checks `0 ≤ γ ≤ 1`, `γ = 1` on `[-1, 1]` and `γ = 0` off `[-2, 2]` on a
/// probe grid.
pub fn check_cutoff(gamma: &SampledFunction) -> Result<()> {
    for x in linspace(-3.0, 3.0, 1201) {
        let v = gamma.eval(x);
        if v.im.abs() > 1e-14 || v.re < -1e-14 || v.re > 1.0 + 1e-14 {
            return Err(Error::BadCutoff(format!("value {v} at x = {x}")));
        }
        if x.abs() <= 1.0 && (v.re - 1.0).abs() > 1e-14 {
            return Err(Error::BadCutoff(format!("not 1 on the plateau at x = {x}")));
        }
        if x.abs() >= 2.0 && v.norm() > 1e-14 {
            return Err(Error::BadCutoff(format!("nonzero outside [-2, 2] at x = {x}")));
        }
    }
    Ok(())
}

/// `f_ν(x) = f(x) γ(x/ν)` with Leibniz-rule derivatives.
pub fn cutoff(f: &SampledFunction, nu: usize, gamma: &SampledFunction) -> Result<SampledFunction> {
    if nu == 0 {
        return invalid("cutoff index starts at 1");
    }
    check_cutoff(gamma)?;
    let nuf = nu as f64;
    let (f, g) = (f.clone(), gamma.clone());
    let max_order = match (f.max_order(), g.max_order()) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let support = match f.support() {
        Some((a, b)) => (a.max(-2.0 * nuf), b.min(2.0 * nuf)),
        None => (-2.0 * nuf, 2.0 * nuf),
    };
    Ok(SampledFunction::new(
        Arc::new(move |k, x| {
            if x.abs() >= 2.0 * nuf {
                return Complex64::new(0.0, 0.0);
            }
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..=k {
                let gk = g.raw_derivative(k - j, x / nuf);
                if gk != Complex64::new(0.0, 0.0) {
                    s += binomial(k, j) * f.raw_derivative(j, x) * gk * nuf.powi(-((k - j) as i32));
                }
            }
            s
        }),
        max_order,
        Some(support),
    ))
}

type DerivCache = Arc<std::sync::Mutex<std::collections::HashMap<(usize, u64), Complex64>>>;

/// Spectral data of a mollified function: Kronrod nodes `s` and the weights
/// `w g(s/λ) F(s) / A`.
struct Spectrum {
    s: Vec<f64>,
    weights: Vec<Complex64>,
}

impl Spectrum {
    fn derivative(&self, k: usize, x: f64) -> Complex64 {
        let mut acc = CompensatedSum::new();
        for (s, w) in self.s.iter().zip(&self.weights) {
            acc += *w * (-I * s).powu(k as u32) * Complex64::from_polar(1.0, -x * s);
        }
        acc.value()
    }
}

const SPECTRUM_CAP: f64 = 128.0;
const SPECTRUM_REL: f64 = 1e-12;

fn y_rule(a: f64, b: f64, width: f64) -> PanelRule {
    let panels = (((b - a) / width).ceil() as usize).max(1);
    PanelRule::uniform(a, b, panels)
}

fn transform_at(f: &[Complex64], rule: &PanelRule, s: f64) -> (Complex64, Complex64) {
    let (mut k, mut g) = (CompensatedSum::new(), CompensatedSum::new());
    for ((y, v), (wk, wg)) in rule.nodes.iter().zip(f).zip(rule.kronrod_weights.iter().zip(&rule.gauss_weights)) {
        let t = v * Complex64::from_polar(1.0, s * y);
        k += *wk * t;
        g += *wg * t;
    }
    (k.value(), g.value())
}

/// `f_{ν,λ}(x) = (λ/A) ∫ f_ν(y) h(λ(x-y)) dy`. Computed as
/// `(1/A) ∫ g(s/λ) F(s) (-is)^k e^{-ixs} ds` with `F(s) = ∫ f_ν(y) e^{isy} dy`,
/// which is the convolution with every derivative moved onto `f_ν`.
pub fn mollify(f_nu: &SampledFunction, lambda: f64, kernel: &MollifierKernel) -> Result<SampledFunction> {
    mollify_with_report(f_nu, lambda, kernel).map(|(f, _)| f)
}

pub fn mollify_with_report(
    f_nu: &SampledFunction,
    lambda: f64,
    kernel: &MollifierKernel,
) -> Result<(SampledFunction, BoundReport)> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return invalid(format!("mollifier scale must be positive, got {lambda}"));
    }
    let Some((a, b)) = f_nu.support() else {
        return invalid("mollify needs a compactly supported function");
    };
    // scan |F| on a fine y-rule to find where the spectrum dies out
    let fine = y_rule(a, b, 4.0 / SPECTRUM_CAP);
    let fine_vals: Vec<Complex64> = fine.nodes.iter().map(|y| f_nu.eval(*y)).collect();
    let scan = linspace(0.0, SPECTRUM_CAP, 513);
    let mut mags = Vec::with_capacity(scan.len());
    let mut worst_gk = 0.0f64;
    for &s in &scan {
        let (fk, fg) = transform_at(&fine_vals, &fine, s);
        worst_gk = worst_gk.max((fk - fg).norm());
        mags.push(fk.norm());
    }
    let peak = mags.iter().cloned().fold(0.0, f64::max);
    if worst_gk > 1e-9 * peak + 1e-15 {
        return Err(Error::QuadratureNotConverged {
            a,
            b,
            estimate: worst_gk,
        });
    }
    let last = mags.iter().rposition(|m| *m > SPECTRUM_REL * peak);
    let spec_edge = match last {
        None => 0.0,
        Some(i) if i + 1 < scan.len() => scan[i + 1],
        Some(_) => SPECTRUM_CAP,
    };
    let truncation = if spec_edge >= SPECTRUM_CAP { mags[mags.len() - 1] } else { 0.0 };
    let edge = spec_edge.min(lambda);
    let reach = a.abs().max(b.abs());
    let s_width = (1.0 / reach.max(1.0)).min(0.5);
    let mut s = Vec::new();
    let mut weights = Vec::new();
    if edge > 0.0 {
        let coarse = y_rule(a, b, (8.0 / edge).min(0.25));
        let vals: Vec<Complex64> = coarse.nodes.iter().map(|y| f_nu.eval(*y)).collect();
        let panels = ((edge / s_width).ceil() as usize).max(1);
        let mut breaks = linspace(-edge, 0.0, panels + 1);
        breaks.extend(linspace(0.0, edge, panels + 1).into_iter().skip(1));
        let rule = PanelRule::new(&breaks);
        let (mut k0, mut g0) = (CompensatedSum::new(), CompensatedSum::new());
        for ((sv, wk), wg) in rule.nodes.iter().zip(&rule.kronrod_weights).zip(&rule.gauss_weights) {
            let (fs, _) = transform_at(&vals, &coarse, *sv);
            let base = fs * kernel_density(sv / lambda) / kernel.a;
            k0 += *wk * base;
            g0 += *wg * base;
            s.push(*sv);
            weights.push(*wk * base);
        }
        let err = (k0.value() - g0.value()).norm();
        if err > 1e-9 * k0.abs_total() + 1e-15 {
            return Err(Error::QuadratureNotConverged {
                a: -edge,
                b: edge,
                estimate: err,
            });
        }
    }
    let report = BoundReport::new("mollifier-spectrum")
        .with_constant(edge)
        .with_ratio(truncation / peak.max(f64::MIN_POSITIVE))
        .with_grid(format!("{} spectral nodes", s.len()))
        .with_named("lambda", lambda)
        .with_named("spectral_edge", spec_edge)
        .with_named("truncated_magnitude", truncation);
    let spectrum = Arc::new(Spectrum { s, weights });
    let cache: DerivCache = Arc::default();
    let f = SampledFunction::new(
        Arc::new(move |k, x| {
            let key = (k, x.to_bits());
            if let Some(v) = cache.lock().unwrap().get(&key) {
                return *v;
            }
            let v = spectrum.derivative(k, x);
            cache.lock().unwrap().insert(key, v);
            v
        }),
        f_nu.max_order(),
        None,
    );
    Ok((f, report))
}

/// Real polynomial with complex coefficients `Σ c_j x^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub coeffs: Vec<Complex64>,
    /// Worst decimal digits lost to cancellation while forming a coefficient.
    pub digits_lost: f64,
}

impl Polynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
    }

    pub fn to_function(&self) -> SampledFunction {
        SampledFunction::polynomial(self.coeffs.clone())
    }

    /// Coefficients as `[[re, im], ...]`.
    pub fn to_json(&self) -> String {
        let pairs: Vec<[f64; 2]> = self.coeffs.iter().map(|c| [c.re, c.im]).collect();
        serde_json::to_string(&pairs).expect("finite coefficients serialize")
    }
}

fn moments(f: &SampledFunction, l: f64, count: usize) -> Result<Vec<Complex64>> {
    let rule = y_rule(-l, l, 4.0 / SPECTRUM_CAP);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let (mut k, mut g) = (CompensatedSum::new(), CompensatedSum::new());
        for ((y, wk), wg) in rule.nodes.iter().zip(&rule.kronrod_weights).zip(&rule.gauss_weights) {
            let v = f.eval(*y) * y.powi(i as i32);
            k += *wk * v;
            g += *wg * v;
        }
        let err = (k.value() - g.value()).norm();
        if err > 1e-10 * k.abs_total() + 1e-300 {
            return Err(Error::QuadratureNotConverged { a: -l, b: l, estimate: err });
        }
        out.push(k.value());
    }
    Ok(out)
}

pub const DEFAULT_DIGIT_BUDGET: f64 = 6.0;

/// `Q_{2N}(x) = (λ/A) ∫_{-L}^{L} f_ν(y) P_{2N}(λ(x-y)) dy` in monomial form,
/// `c_j = (λ/A) Σ_k a_k λ^{2k} C(2k, j) (-1)^j μ_{2k-j}`.
pub fn polynomialize(
    f_nu: &SampledFunction,
    lambda: f64,
    n: usize,
    kernel: &MollifierKernel,
    l: f64,
) -> Result<Polynomial> {
    polynomialize_with_budget(f_nu, lambda, n, kernel, l, DEFAULT_DIGIT_BUDGET)
}

pub fn polynomialize_with_budget(
    f_nu: &SampledFunction,
    lambda: f64,
    n: usize,
    kernel: &MollifierKernel,
    l: f64,
    max_digits_lost: f64,
) -> Result<Polynomial> {
    if n >= kernel.taylor.len() {
        return invalid(format!("kernel Taylor coefficients stop at {}", kernel.taylor.len() - 1));
    }
    match f_nu.support() {
        Some((a, b)) if a >= -l && b <= l => {}
        _ => return invalid(format!("support not inside [-{l}, {l}]")),
    }
    let mu = moments(f_nu, l, 2 * n + 1)?;
    let scale = lambda / kernel.a;
    let mut sums = Vec::with_capacity(2 * n + 1);
    for j in 0..=2 * n {
        let mut acc = CompensatedSum::new();
        for k in j.div_ceil(2)..=n {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let t = kernel.taylor[k] * lambda.powi(2 * k as i32) * binomial(2 * k, j) * sign;
            acc += t * mu[2 * k - j];
        }
        sums.push(acc);
    }
    let x = l + 1.0;
    let weight = |j: usize, s: &CompensatedSum| s.abs_total() * x.powi(j as i32);
    let top = (0..sums.len()).map(|j| weight(j, &sums[j])).fold(0.0, f64::max);
    let mut lost = 0.0f64;
    for (j, s) in sums.iter().enumerate() {
        if top == 0.0 || weight(j, s) < 1e-13 * top {
            continue;
        }
        let v = s.value().norm();
        let d = if v == 0.0 { f64::INFINITY } else { (s.abs_total() / v).log10() };
        lost = lost.max(d);
    }
    if !(lost <= max_digits_lost) {
        return Err(Error::CoefficientOverflow { digits: lost });
    }
    Ok(Polynomial {
        coeffs: sums.iter().map(|s| s.value() * scale).collect(),
        digits_lost: lost,
    })
}

/// `e^u - Σ_{j ≤ n} u^j/j!`, by the tail series when its terms decrease.
fn exp_remainder(n: usize, u: f64) -> f64 {
    if u.abs() <= (n + 1) as f64 {
        let mut term = 1.0;
        for j in 1..=n + 1 {
            term *= u / j as f64;
        }
        let mut s = 0.0f64;
        let mut j = n + 1;
        while term != 0.0 && term.abs() > 1e-18 * s.abs() {
            s += term;
            j += 1;
            term *= u / j as f64;
        }
        s
    } else {
        let mut p = 0.0;
        let mut term = 1.0;
        for j in 0..=n {
            p += term;
            term *= u / (j + 1) as f64;
        }
        u.exp() - p
    }
}

/// `P_{N,ξ}(x) = Σ_{j ≤ N} ξ^j x^j / j!` and `‖e^{ξx} - P_{N,ξ}‖_{n,m}`.
pub fn exp_taylor_approx(
    xi: f64,
    degree: usize,
    theta: &ThetaFamily,
    n: usize,
    m: usize,
) -> Result<(Polynomial, f64)> {
    let mut coeffs = Vec::with_capacity(degree + 1);
    let mut c = 1.0;
    for j in 0..=degree {
        coeffs.push(Complex64::new(c, 0.0));
        c *= xi / (j + 1) as f64;
    }
    let remainder = SampledFunction::new(
        Arc::new(move |k, x| {
            let v = if k > degree {
                xi.powi(k as i32) * (xi * x).exp()
            } else {
                xi.powi(k as i32) * exp_remainder(degree - k, xi * x)
            };
            Complex64::new(v, 0.0)
        }),
        None,
        None,
    );
    let gap = norm_ephi(&remainder, n, m, theta)?.value;
    Ok((
        Polynomial {
            coeffs,
            digits_lost: 0.0,
        },
        gap,
    ))
}

/// First index from which every successive ratio of the measured sequence is
/// below 1.
pub fn contraction_start(gaps: &[f64]) -> Option<usize> {
    if gaps.len() < 2 {
        return None;
    }
    let mut start = None;
    for i in (0..gaps.len() - 1).rev() {
        if gaps[i + 1] < gaps[i] && gaps[i + 1].is_finite() {
            start = Some(i);
        } else {
            break;
        }
    }
    start
}

/// Last maximal run `[from, to)` of strictly decreasing finite values, with
/// a trailing round-off floor left out.
pub fn decreasing_window(gaps: &[f64]) -> Option<(usize, usize)> {
    let end = (1..gaps.len()).rev().find(|&i| gaps[i].is_finite() && gaps[i] < gaps[i - 1])?;
    let mut from = end - 1;
    while from > 0 && gaps[from - 1].is_finite() && gaps[from] < gaps[from - 1] {
        from -= 1;
    }
    Some((from, end + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Cutoff,
    Mollified,
    Polynomial,
    Total,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Cutoff => "cutoff",
            Stage::Mollified => "mollified",
            Stage::Polynomial => "polynomial",
            Stage::Total => "total",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub nu: Vec<usize>,
    pub lambda: Vec<f64>,
    pub degrees: Vec<usize>,
    pub n: usize,
    pub m: usize,
    pub target: f64,
    pub max_digits_lost: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            nu: vec![1, 2, 4, 8],
            lambda: vec![10.0, 100.0, 1000.0],
            degrees: (2..=24).collect(),
            n: 2,
            m: 2,
            target: 1e-3,
            max_digits_lost: DEFAULT_DIGIT_BUDGET,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nu.is_empty() || self.lambda.is_empty() || self.degrees.is_empty() {
            return invalid("pipeline schedules must be non-empty");
        }
        if self.nu.contains(&0) || self.lambda.iter().any(|l| !(*l > 0.0)) {
            return invalid("ν and λ must be positive");
        }
        if self.m == 0 {
            return invalid("m starts at 1");
        }
        Ok(())
    }
}

/// One measured gap. `gap` is NaN when the stage could not be formed; the
/// reason is in `note`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRow {
    pub stage: Stage,
    pub nu: usize,
    pub lambda: Option<f64>,
    pub degree: Option<usize>,
    pub n: usize,
    pub m: usize,
    pub gap: f64,
    pub budget: Option<f64>,
    pub note: String,
}

/// Least-squares fit of `ln gap = ln C_4 + N ln C_5 + e (2N+1) ln(2N+1) - ln (2N+1)!`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub nu: usize,
    pub lambda: f64,
    pub points: usize,
    pub ln_c4: f64,
    pub ln_c5: f64,
    pub exponent: f64,
    pub residual: f64,
}

pub fn fit_envelope(degrees: &[usize], gaps: &[f64]) -> Option<(f64, f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = degrees
        .iter()
        .zip(gaps)
        .filter(|(_, g)| g.is_finite() && **g > 0.0)
        .map(|(n, g)| (*n as f64, *g))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let rows: Vec<[f64; 3]> = pts
        .iter()
        .map(|(n, _)| {
            let q = 2.0 * n + 1.0;
            [1.0, *n, q * q.ln()]
        })
        .collect();
    let rhs: Vec<f64> = pts
        .iter()
        .map(|(n, g)| g.ln() + ln_factorial(2 * *n as usize + 1))
        .collect();
    let a = nalgebra::DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
    let b = nalgebra::DVector::from_vec(rhs);
    let sol = a.clone().svd(true, true).solve(&b, 1e-12).ok()?;
    let resid = (&a * &sol - &b).norm() / (pts.len() as f64).sqrt();
    Some((sol[0], sol[1], sol[2], resid))
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

#[derive(Debug, Clone)]
pub struct PipelineState {
    pub rows: Vec<PipelineRow>,
    /// Smallest finite total gap as `(gap, ν, λ, N)`.
    pub best_total: Option<(f64, usize, f64, usize)>,
    pub envelope: Option<EnvelopeFit>,
    pub reports: Vec<BoundReport>,
}

impl PipelineState {
    pub fn reached_target(&self, target: f64) -> bool {
        self.best_total.is_some_and(|b| b.0 < target)
    }

    /// Total gaps along N for one `(ν, λ)` cell.
    pub fn totals(&self, nu: usize, lambda: f64) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.stage == Stage::Total && r.nu == nu && r.lambda == Some(lambda))
            .map(|r| (r.degree.unwrap_or(0), r.gap))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,nu,lambda,degree,n,m,gap,budget,note\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.stage.as_str(),
                r.nu,
                r.lambda.map(fmt_f64).unwrap_or_default(),
                r.degree.map(|d| d.to_string()).unwrap_or_default(),
                r.n,
                r.m,
                fmt_f64(r.gap),
                r.budget.map(fmt_f64).unwrap_or_default(),
                r.note
            ));
        }
        out
    }
}

fn gap_of(f: &SampledFunction, g: &SampledFunction, n: usize, m: usize, theta: &ThetaFamily) -> (f64, String) {
    match norm_ephi(&f.add(&g.scale(Complex64::new(-1.0, 0.0))), n, m, theta) {
        Ok(r) => (r.value, String::new()),
        Err(e) => (f64::NAN, e.to_string().replace(',', ";")),
    }
}

/// `K_n = max_{k ≤ n+1} sup |f_ν^{(k)}|` on the support.
fn derivative_max(f: &SampledFunction, n: usize) -> f64 {
    let (a, b) = f.support().unwrap_or((-8.0, 8.0));
    let mut k_n = 0.0f64;
    for x in linspace(a, b, 2001) {
        for k in 0..=n + 1 {
            k_n = k_n.max(f.raw_derivative(k, x).norm());
        }
    }
    k_n
}

/// Cutoff, mollification and Taylor replacement over the configured
/// schedules, with every gap measured in `‖·‖_{n,m}`.
pub fn run_pipeline(
    f: &SampledFunction,
    config: &PipelineConfig,
    theta: &ThetaFamily,
    kernel: &MollifierKernel,
) -> Result<PipelineState> {
    config.validate()?;
    let (n, m) = (config.n, config.m);
    let gamma = smooth_cutoff();
    let big_theta = theta.big_theta(m);
    let mut rows = Vec::new();
    let mut reports = kernel.reports.clone();
    let mut best: Option<(f64, usize, f64, usize)> = None;
    let mut envelope: Option<EnvelopeFit> = None;
    let mut worst_budget_ratio = 0.0f64;
    let row = |stage, nu, lambda, degree, gap, budget, note: String| PipelineRow {
        stage,
        nu,
        lambda,
        degree,
        n,
        m,
        gap,
        budget,
        note,
    };
    for &nu in &config.nu {
        let f_nu = cutoff(f, nu, &gamma)?;
        let (g1, note) = gap_of(f, &f_nu, n, m, theta);
        rows.push(row(Stage::Cutoff, nu, None, None, g1, None, note));
        let k_n = derivative_max(&f_nu, n);
        let l = 2.0 * nu as f64;
        for &lambda in &config.lambda {
            let t = lambda.cbrt();
            let budget = (2.0 * kernel.c_g * k_n / kernel.a / t + 2.0 * k_n / kernel.a * kernel.tail_mass(t)) / big_theta;
            let (f_nl, spec) = match mollify_with_report(&f_nu, lambda, kernel) {
                Ok(v) => v,
                Err(e) => {
                    rows.push(row(Stage::Mollified, nu, Some(lambda), None, f64::NAN, Some(budget), e.to_string()));
                    continue;
                }
            };
            reports.push(spec);
            let (g2, note) = gap_of(&f_nu, &f_nl, n, m, theta);
            if g2.is_finite() {
                worst_budget_ratio = worst_budget_ratio.max(g2 / budget);
            }
            rows.push(row(Stage::Mollified, nu, Some(lambda), None, g2, Some(budget), note));
            let mut stage3 = Vec::new();
            for &deg in &config.degrees {
                let q = match polynomialize_with_budget(&f_nu, lambda, deg, kernel, l, config.max_digits_lost) {
                    Ok(q) => q.to_function(),
                    Err(e) => {
                        let note = e.to_string().replace(',', ";");
                        rows.push(row(Stage::Polynomial, nu, Some(lambda), Some(deg), f64::NAN, None, note.clone()));
                        rows.push(row(Stage::Total, nu, Some(lambda), Some(deg), f64::NAN, None, note));
                        stage3.push(f64::NAN);
                        continue;
                    }
                };
                let (g3, note3) = gap_of(&f_nl, &q, n, m, theta);
                let (gt, note_t) = gap_of(f, &q, n, m, theta);
                stage3.push(g3);
                rows.push(row(Stage::Polynomial, nu, Some(lambda), Some(deg), g3, None, note3));
                rows.push(row(Stage::Total, nu, Some(lambda), Some(deg), gt, None, note_t));
                if gt.is_finite() && best.is_none_or(|b| gt < b.0) {
                    best = Some((gt, nu, lambda, deg));
                }
            }
            // the envelope only describes the decaying part of the sequence
            let (from, to) = decreasing_window(&stage3).unwrap_or((0, 0));
            if let Some((c4, c5, e, resid)) = fit_envelope(&config.degrees[from..to], &stage3[from..to]) {
                let points = to - from;
                if envelope.as_ref().is_none_or(|old| points > old.points) {
                    envelope = Some(EnvelopeFit {
                        nu,
                        lambda,
                        points,
                        ln_c4: c4,
                        ln_c5: c5,
                        exponent: e,
                        residual: resid,
                    });
                }
            }
        }
    }
    let budget = BoundReport::new("mollifier-budget")
        .with_constant(worst_budget_ratio)
        .with_ratio(worst_budget_ratio)
        .with_named("big_theta", big_theta)
        .with_named("c_g", kernel.c_g);
    reports.push(if worst_budget_ratio <= 1.0 { budget } else { budget.failed() });
    let alpha = theta.weight().alpha();
    let target_exp = 1.0 - 1.0 / alpha;
    let env = match &envelope {
        Some(fit) => {
            let rel = (fit.exponent - target_exp).abs() / target_exp;
            let r = BoundReport::new("taylor-envelope")
                .with_constant(fit.exponent)
                .with_ratio(rel)
                .with_witness(vec![fit.nu as f64, fit.lambda])
                .with_named("expected_exponent", target_exp)
                .with_named("points", fit.points as f64)
                .with_named("residual", fit.residual);
            if rel <= 0.2 { r } else { r.failed() }
        }
        None => BoundReport::new("taylor-envelope")
            .with_named("expected_exponent", target_exp)
            .with_note("no cell has four decreasing finite stage-3 gaps")
            .failed(),
    };
    reports.push(env);
    let total = BoundReport::new("polynomial-density")
        .with_constant(best.map_or(f64::NAN, |b| b.0))
        .with_ratio(best.map_or(f64::INFINITY, |b| b.0 / config.target))
        .with_witness(best.map_or(vec![], |b| vec![b.1 as f64, b.2, b.3 as f64]))
        .with_named("target", config.target);
    reports.push(if best.is_some_and(|b| b.0 < config.target) { total } else { total.failed() });
    Ok(PipelineState {
        rows,
        best_total: best,
        envelope,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::standard_context;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn theta() -> Arc<ThetaFamily> {
        standard_context().unwrap().theta
    }

    fn kernel() -> &'static MollifierKernel {
        static K: std::sync::OnceLock<MollifierKernel> = std::sync::OnceLock::new();
        K.get_or_init(MollifierKernel::default)
    }

    // independent cutoff oracle
    fn gamma_oracle(x: f64) -> f64 {
        let e = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
        let u = 2.0 - x.abs();
        if u >= 1.0 {
            1.0
        } else {
            e(u) / (e(u) + e(1.0 - u))
        }
    }

    #[test]
    fn kernel_mass_is_half_pi() {
        let k = kernel();
        assert!((k.a - PI / 2.0).abs() < 1e-8, "{}", k.a);
        assert!(k.reports.iter().all(|r| r.passed));
    }

    #[test]
    fn kernel_taylor_coefficients() {
        let k = kernel();
        assert_eq!(k.taylor[0], 0.25);
        assert!((k.taylor[1] + 1.0 / 48.0).abs() < 1e-17);
        assert!((k.taylor[2] - 1.0 / 1440.0).abs() < 1e-18);
        for x in [0.0f64, 0.3, -1.7, 4.0, 9.5] {
            for n in 0..=10 {
                let bound = k.c_g * x.abs().powi(2 * n as i32 + 1) / factorial(2 * n + 1);
                assert!((k.eval(x) - k.taylor_poly(n, x)).abs() <= bound + 1e-16, "x={x} n={n}");
            }
        }
    }

    #[test]
    fn kernel_derivatives_match_closed_forms() {
        for x in [-7.3, -1.0, 0.0, 0.5, 12.0] {
            assert!((kernel_derivative(0, x) - kernel_value(x)).abs() < 1e-13);
        }
        assert!((kernel_derivative(2, 0.0) + 1.0 / 24.0).abs() < 1e-13);
        assert!(kernel().c_g <= 0.25 + 1e-12);
    }

    #[test]
    fn kernel_has_exponential_type_one() {
        for y in [0.1f64, 1.0, 5.0, 20.0, 60.0] {
            let z = Complex64::new(0.0, y);
            let h = (z / 2.0).sin().powu(2) / (z * z);
            assert!(h.norm() * (-y).exp() <= 0.25);
        }
    }

    #[test]
    fn kernel_tail_mass() {
        let k = kernel();
        assert!((k.tail_mass(0.0) - k.a).abs() < 1e-12);
        let t = 100.0 * PI;
        // ∫_{|x|>T} sin²(x/2)/x² ≈ 1/T at multiples of 2π
        assert!((k.tail_mass(t) - 1.0 / t).abs() < 1e-5);
    }

    #[test]
    fn cutoff_examples() {
        let one = SampledFunction::constant(c(1.0));
        let f = cutoff(&one, 1, &smooth_cutoff()).unwrap();
        assert_eq!(f.eval(0.5), c(1.0));
        assert_eq!(f.eval(3.0), c(0.0));
        for x in [1.2, -1.5, 1.9] {
            assert!((f.eval(x).re - gamma_oracle(x)).abs() < 1e-14);
        }
        assert!(cutoff(&one, 0, &smooth_cutoff()).is_err());
    }

    #[test]
    fn cutoff_gap_for_identity() {
        let th = theta();
        let x_fn = SampledFunction::polynomial(vec![c(0.0), c(1.0)]);
        let f2 = cutoff(&x_fn, 2, &smooth_cutoff()).unwrap();
        let diff = x_fn.add(&f2.scale(c(-1.0)));
        let gap = norm_ephi(&diff, 0, 1, &th).unwrap().value;
        let mut oracle = 0.0f64;
        let mut plain = 0.0f64;
        for x in linspace(2.0, 8.0, 60_001) {
            let t = th.theta(1, x).unwrap();
            oracle = oracle.max(x * (1.0 - gamma_oracle(x / 2.0)) / t);
            plain = plain.max(x / t);
        }
        assert!((gap - oracle).abs() <= 1e-6 * oracle, "{gap} vs {oracle}");
        assert!(gap < plain);
    }

    #[test]
    fn bad_cutoff_is_rejected() {
        let one = SampledFunction::constant(c(1.0));
        assert!(matches!(check_cutoff(&one), Err(Error::BadCutoff(_))));
        let half = SampledFunction::constant(c(0.5));
        assert!(matches!(cutoff(&one, 1, &half), Err(Error::BadCutoff(_))));
    }

    #[test]
    fn cutoff_derivatives_are_consistent() {
        let f = cutoff(&SampledFunction::gaussian(), 2, &smooth_cutoff()).unwrap();
        let rep = f.check_derivative_consistency(&[-3.5, -2.2, 0.4, 2.7, 3.9], 3, 1e-4);
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn mollify_preserves_plateau() {
        let k = kernel();
        let plateau = cutoff(&SampledFunction::constant(c(1.0)), 8, &smooth_cutoff()).unwrap();
        for lambda in [10.0, 100.0] {
            let m = mollify(&plateau, lambda, k).unwrap();
            for x in [-1.0, 0.0, 2.5] {
                let dev = (m.eval(x) - 1.0).norm();
                let tail = k.tail_mass(lambda * (8.0 - f64::abs(x))) / k.a;
                assert!(dev <= tail + 1e-9, "λ={lambda} x={x}: {dev} > {tail}");
            }
            let t = lambda.cbrt();
            let budget = 2.0 * k.c_g / k.a / t + 2.0 / k.a * k.tail_mass(t);
            assert!((m.eval(0.0) - 1.0).norm() <= budget);
        }
    }

    #[test]
    fn mollify_zero_and_unsupported() {
        let k = kernel();
        let zero = cutoff(&SampledFunction::zero(), 1, &smooth_cutoff()).unwrap();
        let m = mollify(&zero, 50.0, k).unwrap();
        assert_eq!(m.eval(0.3), c(0.0));
        assert!(mollify(&SampledFunction::gaussian(), 10.0, k).is_err());
        assert!(mollify(&zero, -1.0, k).is_err());
    }

    #[test]
    fn mollified_derivatives_are_consistent() {
        let f = cutoff(&SampledFunction::gaussian(), 2, &smooth_cutoff()).unwrap();
        let m = mollify(&f, 20.0, kernel()).unwrap();
        let rep = m.check_derivative_consistency(&[-2.0, 0.1, 1.3], 2, 1e-4);
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn polynomial_of_degree_zero_is_the_mean() {
        let k = kernel();
        let f = cutoff(&SampledFunction::gaussian(), 4, &smooth_cutoff()).unwrap();
        let q = polynomialize(&f, 3.0, 0, k, 8.0).unwrap();
        assert_eq!(q.degree(), 0);
        let expected = 3.0 * 0.25 / k.a * PI.sqrt();
        assert!((q.coeffs[0].re - expected).abs() < 1e-7 * expected);
        let zero = cutoff(&SampledFunction::zero(), 1, &smooth_cutoff()).unwrap();
        assert!(polynomialize(&zero, 10.0, 5, k, 2.0).unwrap().is_zero());
    }

    #[test]
    fn polynomial_matches_direct_quadrature() {
        let k = kernel();
        let f = cutoff(&SampledFunction::gaussian(), 2, &smooth_cutoff()).unwrap();
        let (lambda, n) = (1.0, 3);
        let q = polynomialize(&f, lambda, n, k, 4.0).unwrap();
        // midpoint rule on the smooth compactly supported integrand
        let steps = 40_000;
        let h = 8.0 / steps as f64;
        for x in [-1.5, 0.0, 0.7, 2.2] {
            let direct: f64 = (0..steps)
                .map(|i| {
                    let y = -4.0 + (i as f64 + 0.5) * h;
                    f.eval(y).re * k.taylor_poly(n, lambda * (x - y)) * h
                })
                .sum::<f64>()
                * lambda
                / k.a;
            assert!((q.eval(x).re - direct).abs() < 1e-8 * direct.abs().max(1.0), "x={x}");
        }
        assert!(polynomialize(&f, lambda, n, k, 1.0).is_err());
    }

    #[test]
    fn coefficient_cancellation_is_reported() {
        let f = cutoff(&SampledFunction::gaussian(), 1, &smooth_cutoff()).unwrap();
        let err = polynomialize(&f, 10.0, 24, kernel(), 2.0).unwrap_err();
        assert!(matches!(err, Error::CoefficientOverflow { digits } if digits > 6.0));
    }

    #[test]
    fn polynomial_json() {
        let p = Polynomial {
            coeffs: vec![c(1.0), Complex64::new(0.0, -2.0)],
            digits_lost: 0.0,
        };
        assert_eq!(p.to_json(), "[[1.0,0.0],[0.0,-2.0]]");
        assert_eq!(p.eval(2.0), Complex64::new(1.0, -4.0));
    }

    #[test]
    fn exp_remainder_matches_direct() {
        let direct = 0.5f64.exp() - (1.0 + 0.5 + 0.125 + 0.5f64.powi(3) / 6.0);
        assert!((exp_remainder(3, 0.5) - direct).abs() < 1e-15);
        assert!((exp_remainder(0, -30.0) - ((-30.0f64).exp() - 1.0)).abs() < 1e-14);
        assert!(exp_remainder(20, 1e-3) > 0.0);
    }

    #[test]
    fn exp_taylor_trivial_and_bounded() {
        let th = theta();
        let (p, gap) = exp_taylor_approx(0.0, 5, &th, 0, 1).unwrap();
        assert_eq!(p.coeffs[0], c(1.0));
        assert!(p.coeffs[1..].iter().all(|c| c.norm() == 0.0));
        assert_eq!(gap, 0.0);

        let (_, gap) = exp_taylor_approx(1.0, 10, &th, 0, 1).unwrap();
        let mut majorant = 0.0f64;
        for x in linspace(-40.0, 40.0, 80_001) {
            let v = (1.0 + x.abs()).powi(11) * x.exp().max(1.0) / factorial(11) / th.theta(1, x).unwrap();
            majorant = majorant.max(v);
        }
        assert!(gap > 0.0 && gap <= majorant, "{gap} vs {majorant}");
    }

    #[test]
    fn exp_taylor_contracts_uniformly() {
        let th = theta();
        let degrees: Vec<usize> = (0..=24).collect();
        let mut worst = vec![0.0f64; degrees.len()];
        for xi in [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
            let gaps: Vec<f64> = degrees
                .iter()
                .map(|&d| exp_taylor_approx(xi, d, &th, 2, 2).unwrap().1)
                .collect();
            let n0 = contraction_start(&gaps).expect("gaps eventually contract");
            assert!(n0 <= 4, "ξ={xi}: N₀ = {n0}");
            for (w, g) in worst.iter_mut().zip(&gaps) {
                *w = w.max(*g);
            }
        }
        assert!(worst[24] < 1e-4 * worst[0], "{worst:?}");
        assert!(contraction_start(&worst).is_some());
    }

    #[test]
    fn windows_and_contraction() {
        assert_eq!(contraction_start(&[3.0, 4.0, 2.0, 1.0]), Some(1));
        assert_eq!(contraction_start(&[1.0, 2.0]), None);
        assert_eq!(decreasing_window(&[5.0, 6.0, 4.0, 3.0, 3.0, 3.0]), Some((1, 4)));
        assert_eq!(decreasing_window(&[1.0, 1.0]), None);
        assert_eq!(decreasing_window(&[f64::NAN, 2.0, 1.0]), Some((1, 3)));
    }

    #[test]
    fn envelope_fit_recovers_exponent() {
        let degrees: Vec<usize> = (2..=20).collect();
        let gaps: Vec<f64> = degrees
            .iter()
            .map(|&n| {
                let q = 2.0 * n as f64 + 1.0;
                (0.3f64.ln() + n as f64 * 2.0f64.ln() + 0.5 * q * q.ln() - ln_factorial(2 * n + 1)).exp()
            })
            .collect();
        let (c4, c5, e, resid) = fit_envelope(&degrees, &gaps).unwrap();
        assert!((e - 0.5).abs() < 1e-8);
        assert!((c4 - 0.3f64.ln()).abs() < 1e-6 && (c5 - 2.0f64.ln()).abs() < 1e-6);
        assert!(resid < 1e-8);
        assert!(fit_envelope(&degrees[..3], &gaps[..3]).is_none());
    }

    #[test]
    fn pipeline_recovers_rate_shape_at_small_scale() {
        let cfg = PipelineConfig {
            nu: vec![2],
            lambda: vec![2.0],
            ..Default::default()
        };
        let st = run_pipeline(&SampledFunction::gaussian(), &cfg, &theta(), kernel()).unwrap();
        let fit = st.envelope.clone().unwrap();
        assert!((fit.exponent - 0.5).abs() <= 0.1, "{fit:?}");
        let budget = st.reports.iter().find(|r| r.check == "mollifier-budget").unwrap();
        assert!(budget.passed);
        let csv = st.to_csv();
        assert!(csv.starts_with("stage,nu,lambda,degree,n,m,gap,budget,note\n"));
        assert_eq!(csv.lines().count(), 1 + 1 + 1 + 2 * 23);
    }

    #[test]
    fn pipeline_on_zero_has_zero_gaps() {
        let cfg = PipelineConfig {
            nu: vec![1],
            lambda: vec![10.0],
            degrees: vec![2, 3],
            ..Default::default()
        };
        let st = run_pipeline(&SampledFunction::zero(), &cfg, &theta(), kernel()).unwrap();
        assert!(st.rows.iter().all(|r| r.gap == 0.0), "{:?}", st.rows);
    }

    #[test]
    fn pipeline_config_json() {
        let cfg: PipelineConfig = serde_json::from_str(r#"{"nu": [1, 2]}"#).unwrap();
        assert_eq!(cfg.lambda, vec![10.0, 100.0, 1000.0]);
        assert_eq!(cfg.degrees, (2..=24).collect::<Vec<_>>());
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"nus": [1]}"#).is_err());
        let bad = PipelineConfig {
            nu: vec![],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn cutoff_is_identity_on_plateau(nu in 1usize..6, t in -1.0f64..1.0, k in 0usize..4) {
            let f = SampledFunction::gaussian();
            let g = cutoff(&f, nu, &smooth_cutoff()).unwrap();
            let x = t * nu as f64;
            prop_assert!((g.raw_derivative(k, x) - f.raw_derivative(k, x)).norm() < 1e-12);
        }

        #[test]
        fn cutoff_stays_in_unit_band(x in -3.0f64..3.0) {
            let v = smooth_cutoff().eval(x).re;
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!((v - gamma_oracle(x)).abs() < 1e-14);
        }

        #[test]
        fn exp_remainder_agrees_with_series(n in 0usize..12, u in -5.0f64..5.0) {
            let p: f64 = (0..=n).map(|j| u.powi(j as i32) / factorial(j)).sum();
            let direct = u.exp() - p;
            prop_assert!((exp_remainder(n, u) - direct).abs() <= 1e-13 * u.exp().max(1.0) * 10.0);
        }
    }
}
