//! Function representations and the three norm scales `‖f‖_{G,m}`,
//! `‖f‖_{n,m}` and `‖F‖_m`, with the membership bound for the exponentials
//! `f_z(x) = e^{-izx}`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::carleman::{certify_weight_gap, ScaledWeightFamily};
use crate::convexweights::{ConvexWeight, ThetaFamily};
use crate::error::{invalid, Error, Result};
use crate::optim::golden_max;
use crate::quad::{linspace, log_grid};
use crate::report::BoundReport;

pub type DerivativeFn = Arc<dyn Fn(usize, f64) -> Complex64 + Send + Sync>;

/// A function on the line given by closures for its derivatives.
#[derive(Clone)]
pub struct SampledFunction {
    deriv: DerivativeFn,
    max_order: Option<usize>,
    support: Option<(f64, f64)>,
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledFunction")
            .field("max_order", &self.max_order)
            .field("support", &self.support)
            .finish()
    }
}

impl SampledFunction {
    pub fn new(deriv: DerivativeFn, max_order: Option<usize>, support: Option<(f64, f64)>) -> Self {
        Self {
            deriv,
            max_order,
            support,
        }
    }

    pub fn max_order(&self) -> Option<usize> {
        self.max_order
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        self.support
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        (self.deriv)(0, x)
    }

    pub fn derivative(&self, k: usize, x: f64) -> Result<Complex64> {
        match self.max_order {
            Some(d) if k > d => Err(Error::InsufficientDerivatives {
                required: k,
                available: d,
            }),
            _ => Ok((self.deriv)(k, x)),
        }
    }

    /// k-th derivative without the order check, for composing closures.
    pub fn raw_derivative(&self, k: usize, x: f64) -> Complex64 {
        (self.deriv)(k, x)
    }

    pub fn zero() -> Self {
        Self::constant(Complex64::new(0.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(
            Arc::new(move |k, _| if k == 0 { c } else { Complex64::new(0.0, 0.0) }),
            None,
            None,
        )
    }

    /// `Σ c_j x^j`.
    pub fn polynomial(coeffs: Vec<Complex64>) -> Self {
        Self::new(
            Arc::new(move |k, x| {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in (k..coeffs.len()).rev() {
                    let falling: f64 = ((j - k + 1)..=j).map(|i| i as f64).product();
                    acc = acc * x + coeffs[j] * falling;
                }
                acc
            }),
            None,
            None,
        )
    }

    /// `f_z(x) = e^{-izx}` with `f_z^{(k)} = (-iz)^k f_z`.
    pub fn exponential_element(z: Complex64) -> Self {
        let a = Complex64::new(0.0, -1.0) * z;
        Self::new(
            Arc::new(move |k, x| a.powu(k as u32) * (a * x).exp()),
            None,
            None,
        )
    }

    /// `e^{ξx}` for real ξ.
    pub fn exponential(xi: f64) -> Self {
        Self::new(
            Arc::new(move |k, x| Complex64::new(xi.powi(k as i32) * (xi * x).exp(), 0.0)),
            None,
            None,
        )
    }

    /// `e^{-x²}`, derivatives through `(-1)^k H_k(x) e^{-x²}`.
    pub fn gaussian() -> Self {
        Self::new(
            Arc::new(|k, x| {
                let e = (-x * x).exp();
                let (mut h0, mut h1) = (1.0, 2.0 * x);
                if k == 0 {
                    return Complex64::new(e, 0.0);
                }
                for j in 1..k {
                    let h2 = 2.0 * x * h1 - 2.0 * j as f64 * h0;
                    h0 = h1;
                    h1 = h2;
                }
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::new(sign * h1 * e, 0.0)
            }),
            None,
            None,
        )
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let d = self.deriv.clone();
        Self::new(Arc::new(move |k, x| c * d(k, x)), self.max_order, self.support)
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = (self.deriv.clone(), other.deriv.clone());
        let max_order = match (self.max_order, other.max_order) {
            (Some(p), Some(q)) => Some(p.min(q)),
            (p, q) => p.or(q),
        };
        let support = match (self.support, other.support) {
            (Some(p), Some(q)) => Some((p.0.min(q.0), p.1.max(q.1))),
            _ => None,
        };
        Self::new(Arc::new(move |k, x| a(k, x) + b(k, x)), max_order, support)
    }

    /// Centered differences of `f^{(k)}` against `f^{(k+1)}` at the test
    /// points; the ratio to `h²·(1 + |f^{(k+1)}|)` is reported.
    pub fn check_derivative_consistency(&self, points: &[f64], orders: usize, h: f64) -> BoundReport {
        let top = self.max_order.map_or(orders, |d| d.min(orders));
        let mut worst = 0.0f64;
        let mut at = vec![];
        for k in 0..top {
            for &x in points {
                let fd = ((self.deriv)(k, x + h) - (self.deriv)(k, x - h)) / (2.0 * h);
                let exact = (self.deriv)(k + 1, x);
                let third = ((self.deriv)(k + 1, x + h) - 2.0 * exact + (self.deriv)(k + 1, x - h)) / (h * h);
                let scale = h * h * (1.0 + third.norm()) + 1e-12 * (1.0 + exact.norm());
                let r = (fd - exact).norm() / scale;
                if r > worst {
                    worst = r;
                    at = vec![x, k as f64];
                }
            }
        }
        let rep = BoundReport::new("derivative-consistency")
            .with_ratio(worst)
            .with_witness(at)
            .with_grid(format!("{} points, h = {h}", points.len()));
        if worst <= 1.0 {
            rep
        } else {
            rep.failed()
        }
    }
}

pub type EntireFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// Concrete entire functions.
#[derive(Clone)]
pub enum EntireFunctionModel {
    Closure(EntireFn),
    /// Coefficients in increasing degree.
    Polynomial(Vec<Complex64>),
    /// `c Π (1 - z/λ_j)^{m_j}`, zeros nonzero.
    ZeroProduct {
        prefactor: Complex64,
        zeros: Vec<(Complex64, u32)>,
    },
    /// `Σ a_k e^{-iλ_k z}`.
    ExpSum(Vec<(Complex64, f64)>),
}

impl fmt::Debug for EntireFunctionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Closure(_) => write!(f, "Closure"),
            Self::Polynomial(c) => f.debug_tuple("Polynomial").field(c).finish(),
            Self::ZeroProduct { prefactor, zeros } => f
                .debug_struct("ZeroProduct")
                .field("prefactor", prefactor)
                .field("zeros", zeros)
                .finish(),
            Self::ExpSum(t) => f.debug_tuple("ExpSum").field(t).finish(),
        }
    }
}

impl EntireFunctionModel {
    pub fn closure<F: Fn(Complex64) -> Complex64 + Send + Sync + 'static>(f: F) -> Self {
        Self::Closure(Arc::new(f))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Self::Closure(f) => f(z),
            Self::Polynomial(c) => c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * z + a),
            Self::ZeroProduct { prefactor, zeros } => zeros
                .iter()
                .fold(*prefactor, |acc, (l, m)| acc * (Complex64::new(1.0, 0.0) - z / l).powu(*m)),
            Self::ExpSum(t) => t
                .iter()
                .map(|(a, l)| a * (Complex64::new(0.0, -l) * z).exp())
                .sum(),
        }
    }

    /// `F'(z)` where the representation permits it.
    pub fn derivative(&self, z: Complex64) -> Option<Complex64> {
        match self {
            Self::Closure(_) => None,
            Self::Polynomial(c) => Some(
                c.iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(Complex64::new(0.0, 0.0), |acc, (j, a)| acc * z + a * j as f64),
            ),
            Self::ZeroProduct { zeros, .. } => {
                if let Some((_, m)) = zeros.iter().find(|(l, _)| *l == z) {
                    // F' vanishes at a multiple zero; at a simple zero use the cofactor
                    if *m > 1 {
                        return Some(Complex64::new(0.0, 0.0));
                    }
                    let rest: Vec<(Complex64, u32)> = zeros.iter().copied().filter(|(l, _)| *l != z).collect();
                    let co = Self::ZeroProduct {
                        prefactor: match self {
                            Self::ZeroProduct { prefactor, .. } => *prefactor,
                            _ => unreachable!(),
                        },
                        zeros: rest,
                    };
                    return Some(-co.eval(z) / z);
                }
                let f = self.eval(z);
                let log_d: Complex64 = zeros.iter().map(|(l, m)| *m as f64 / (z - l)).sum();
                Some(f * log_d)
            }
            Self::ExpSum(t) => Some(
                t.iter()
                    .map(|(a, l)| a * Complex64::new(0.0, -l) * (Complex64::new(0.0, -l) * z).exp())
                    .sum(),
            ),
        }
    }

    /// Taylor coefficients at the origin by the trapezoid rule on the circle
    /// `|z| = radius` with `samples` nodes (exact for polynomials).
    pub fn taylor_coefficients(&self, n: usize, radius: f64, samples: usize) -> Vec<Complex64> {
        if let Self::Polynomial(c) = self {
            return (0..n).map(|j| c.get(j).copied().unwrap_or_default()).collect();
        }
        let samples = samples.max(2 * n + 2);
        let vals: Vec<Complex64> = (0..samples)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
                self.eval(Complex64::from_polar(radius, th))
            })
            .collect();
        (0..n)
            .map(|k| {
                let s: Complex64 = vals
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let th = 2.0 * std::f64::consts::PI * (j * k % samples) as f64 / samples as f64;
                        v * Complex64::from_polar(1.0, -th)
                    })
                    .sum();
                s / (samples as f64 * radius.powi(k as i32))
            })
            .collect()
    }
}

/// Result of a norm evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    /// `(x, k)` for the real-line norms, `(Re z, Im z)` for the complex one.
    pub argsup: Vec<f64>,
    /// Half-width of the x-range (or box scale) in the final round.
    pub range: f64,
    pub max_order: usize,
    pub rounds: usize,
    pub previous: f64,
}

const STABLE_REL: f64 = 1e-3;
const MAX_ROUNDS: usize = 6;
const X_POINTS: usize = 1601;

fn stable(prev: f64, next: f64) -> bool {
    (next - prev).abs() <= STABLE_REL * next.abs().max(prev.abs()) || (prev == 0.0 && next == 0.0)
}

/// Log-scale sup over x of `max_k ln|f^{(k)}(x)| - ln_den(k) - ln θ_m(x)`.
fn real_line_sup(
    f: &SampledFunction,
    ks: std::ops::RangeInclusive<usize>,
    k_den: &dyn Fn(usize) -> f64,
    ln_theta: &dyn Fn(f64) -> Result<f64>,
    half: f64,
) -> Result<(f64, f64, usize)> {
    let (lo, hi) = match f.support() {
        Some((a, b)) => (a.max(-half), b.min(half)),
        None => (-half, half),
    };
    let xs = linspace(lo, hi, X_POINTS);
    let point = |x: f64, k: usize| -> Result<f64> {
        let v = f.derivative(k, x)?.norm();
        if v == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(v.ln() - k_den(k) - ln_theta(x)?)
    };
    let mut best = (f64::NEG_INFINITY, 0.0, 0usize);
    for &x in &xs {
        for k in ks.clone() {
            let v = point(x, k)?;
            if v > best.0 {
                best = (v, x, k);
            }
        }
    }
    if best.0.is_finite() {
        let step = (hi - lo) / (X_POINTS - 1) as f64;
        let (a, b) = ((best.1 - step).max(lo), (best.1 + step).min(hi));
        let k = best.2;
        let (x, v) = golden_max(|x| point(x, k).unwrap_or(f64::NEG_INFINITY), a, b, 1e-12);
        if v > best.0 {
            best = (v, x, k);
        }
    }
    Ok(best)
}

fn extend_real_line(
    f: &SampledFunction,
    k_range: &dyn Fn(usize) -> std::ops::RangeInclusive<usize>,
    k_den: &dyn Fn(usize) -> f64,
    ln_theta: &dyn Fn(f64) -> Result<f64>,
    x_cap: f64,
) -> Result<NormReport> {
    let mut half = 8.0f64.min(x_cap);
    let mut prev = real_line_sup(f, k_range(0), k_den, ln_theta, half)?;
    for round in 1..=MAX_ROUNDS {
        half = (2.0 * half).min(x_cap);
        let next = real_line_sup(f, k_range(round), k_den, ln_theta, half)?;
        let (p, n) = (prev.0.exp(), next.0.exp());
        if stable(p, n) {
            return Ok(NormReport {
                value: n,
                argsup: vec![next.1, next.2 as f64],
                range: half,
                max_order: *k_range(round).end(),
                rounds: round + 1,
                previous: p,
            });
        }
        prev = next;
    }
    let last = prev.0.exp();
    Err(Error::NormDiverged {
        last,
        extended: real_line_sup(f, k_range(MAX_ROUNDS + 1), k_den, ln_theta, x_cap)?.0.exp(),
    })
}

/// `‖f‖_{G,m} = sup_{x,k} |f^{(k)}(x)| / ((σ+ε_m)^k M_k θ_m(x))`.
pub fn norm_g(
    f: &SampledFunction,
    m: usize,
    family: &ScaledWeightFamily,
    theta: &ThetaFamily,
) -> Result<NormReport> {
    if m == 0 {
        return invalid("m starts at 1");
    }
    let seq = family.sequence();
    let stored = seq.len() - 1;
    let avail = f.max_order().unwrap_or(usize::MAX).min(stored);
    let ln_s = family.scale(m).ln();
    let k_den = |k: usize| k as f64 * ln_s + seq.log_m(k);
    let k_range = |round: usize| 0..=(64usize << round.min(3)).min(avail);
    let ln_theta = |x: f64| theta.ln_theta(m, x);
    let rep = extend_real_line(f, &k_range, &k_den, &ln_theta, theta.weight().half_width())?;
    let k_at = rep.argsup[1] as usize;
    if f.max_order().is_some_and(|d| k_at == d && d < 64) {
        return Err(Error::InsufficientDerivatives {
            required: k_at + 1,
            available: k_at,
        });
    }
    Ok(rep)
}

/// `‖f‖_{n,m} = sup_{x, k ≤ n} |f^{(k)}(x)| / θ_m(x)`.
pub fn norm_ephi(f: &SampledFunction, n: usize, m: usize, theta: &ThetaFamily) -> Result<NormReport> {
    if let Some(d) = f.max_order() {
        if d < n {
            return Err(Error::InsufficientDerivatives {
                required: n,
                available: d,
            });
        }
    }
    let k_den = |_: usize| 0.0;
    let k_range = |_: usize| 0..=n;
    let ln_theta = |x: f64| theta.ln_theta(m, x);
    extend_real_line(f, &k_range, &k_den, &ln_theta, theta.weight().half_width())
}

/// Rectangle `[re.0, re.1] × [im.0, im.1]` sampled on an `n_re × n_im` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexBox {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub n_re: usize,
    pub n_im: usize,
}

impl ComplexBox {
    pub fn square(half: f64, n: usize) -> Self {
        Self {
            re: (-half, half),
            im: (-half, half),
            n_re: n,
            n_im: n,
        }
    }

    /// The box scaled about its centre, with the same grid spacing.
    pub fn doubled(&self) -> Self {
        let grow = |(a, b): (f64, f64)| {
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            (c - 2.0 * h, c + 2.0 * h)
        };
        Self {
            re: grow(self.re),
            im: grow(self.im),
            n_re: 2 * self.n_re - 1,
            n_im: 2 * self.n_im - 1,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        let xs = linspace(self.re.0, self.re.1, self.n_re);
        let ys = linspace(self.im.0, self.im.1, self.n_im);
        xs.into_iter()
            .flat_map(move |x| ys.clone().into_iter().map(move |y| Complex64::new(x, y)))
    }

    fn steps(&self) -> (f64, f64) {
        (
            (self.re.1 - self.re.0) / (self.n_re - 1).max(1) as f64,
            (self.im.1 - self.im.0) / (self.n_im - 1).max(1) as f64,
        )
    }

    fn on_boundary(&self, z: Complex64) -> bool {
        let (hx, hy) = self.steps();
        (z.re - self.re.0).abs() < 0.5 * hx
            || (z.re - self.re.1).abs() < 0.5 * hx
            || (z.im - self.im.0).abs() < 0.5 * hy
            || (z.im - self.im.1).abs() < 0.5 * hy
    }
}

fn box_sup(
    f: &EntireFunctionModel,
    m: usize,
    weight: &ConvexWeight,
    family: &ScaledWeightFamily,
    bx: &ComplexBox,
) -> Result<(f64, Complex64)> {
    let ln_val = |z: Complex64| -> Result<f64> {
        let v = f.eval(z).norm();
        if v == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(v.ln() - weight.psi(z.im) - family.w_m(m, z.norm())?)
    };
    let mut best = (f64::NEG_INFINITY, Complex64::new(0.0, 0.0));
    for z in bx.points() {
        let v = ln_val(z)?;
        if v > best.0 {
            best = (v, z);
        }
    }
    // one bisection level around the best node
    let (hx, hy) = bx.steps();
    let centre = best.1;
    for i in -1..=1 {
        for j in -1..=1 {
            let z = centre + Complex64::new(0.5 * hx * i as f64, 0.5 * hy * j as f64);
            let v = ln_val(z)?;
            if v > best.0 {
                best = (v, z);
            }
        }
    }
    Ok(best)
}

/// `‖F‖_m = sup_z |F(z)| exp(-ψ(Im z) - w_m(|z|))` on a growing box.
pub fn norm_p(
    f: &EntireFunctionModel,
    m: usize,
    weight: &ConvexWeight,
    family: &ScaledWeightFamily,
    bx: ComplexBox,
) -> Result<NormReport> {
    if bx.n_re < 3 || bx.n_im < 3 || !(bx.re.1 > bx.re.0 && bx.im.1 > bx.im.0) {
        return invalid("complex box needs a nondegenerate grid");
    }
    let mut cur = bx;
    let mut prev = box_sup(f, m, weight, family, &cur)?;
    for round in 1..=MAX_ROUNDS {
        let next_box = cur.doubled();
        let next = box_sup(f, m, weight, family, &next_box)?;
        let (p, n) = (prev.0.exp(), next.0.exp());
        if stable(p, n) && !next_box.on_boundary(next.1) {
            return Ok(NormReport {
                value: n,
                argsup: vec![next.1.re, next.1.im],
                range: next_box.re.1.abs().max(next_box.re.0.abs()),
                max_order: 0,
                rounds: round + 1,
                previous: p,
            });
        }
        cur = next_box;
        prev = next;
    }
    Err(Error::NormDiverged {
        last: prev.0.exp(),
        extended: box_sup(f, m, weight, family, &cur.doubled())?.0.exp(),
    })
}

/// `q_m = b_m + Q` where `b_m` bounds the tilted conjugate and `Q` is the
/// gap between `w_m + m(α-1) ln(1+r)` and `w_{m+1}`; then
/// `‖f_z‖_{G,m} ≤ exp(ψ(Im z) + w_{m+1}(|z|) + q_m)`.
pub fn envelope_constant(
    family: &ScaledWeightFamily,
    theta: &ThetaFamily,
    m: usize,
    y_max: f64,
) -> Result<BoundReport> {
    let alpha = theta.weight().alpha();
    let b = theta.b_m(m, y_max)?;
    let grid: Vec<f64> = std::iter::once(0.0).chain(log_grid(1e-2, 1e3, 400)).collect();
    let gap = certify_weight_gap(family, m, m as f64 * (alpha - 1.0), &grid)?;
    let q = b.constant + gap.constant;
    Ok(BoundReport::new("exponential-membership")
        .with_constant(q)
        .with_named("b_m", b.constant)
        .with_named("gap", gap.constant)
        .with_named("m", m as f64)
        .with_grid(format!("{}; {}", b.grid_spec, gap.grid_spec)))
}

/// Checks the membership bound for `f_z` at each probe.
pub fn certify_exponential_membership(
    family: &ScaledWeightFamily,
    theta: &ThetaFamily,
    m: usize,
    probes: &[Complex64],
) -> Result<BoundReport> {
    let y_max = probes.iter().fold(20.0f64, |a, z| a.max(2.0 * z.im.abs()));
    let q = envelope_constant(family, theta, m, y_max)?;
    let mut worst = 0.0f64;
    let mut at = vec![];
    for &z in probes {
        let norm = norm_g(&SampledFunction::exponential_element(z), m, family, theta)?;
        let ln_bound = theta.weight().psi(z.im) + family.w_m(m + 1, z.norm())? + q.constant;
        let ratio = (norm.value.ln() - ln_bound).exp();
        if ratio > worst {
            worst = ratio;
            at = vec![z.re, z.im];
        }
    }
    let mut rep = q.with_ratio(worst).with_witness(at);
    if worst > 1.0 {
        rep = rep.failed();
    }
    Ok(rep)
}
