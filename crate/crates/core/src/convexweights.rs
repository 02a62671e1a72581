//! Young conjugation, the weight pair `(ψ, φ = ψ*)`, the tilted weights
//! `θ_m(x) = exp(φ(x) - m ln(1+|x|))` and the log-moment bound for minorants
//! of `A|x|^{α/(α-1)} - B`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::optim::{golden_max, grid_max_refine};
use crate::quad::{integrate, linspace, QuadOptions};
use crate::report::{fmt_f64, BoundReport};

pub const DEFAULT_HALF_WIDTH: f64 = 50.0;
pub const DEFAULT_GRID_POINTS: usize = (1 << 14) + 1;

/// `{"kind":"power","p":2.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum WeightDescriptor {
    Power {
        #[serde(default = "default_p")]
        p: f64,
    },
}

fn default_p() -> f64 {
    2.0
}

impl Default for WeightDescriptor {
    fn default() -> Self {
        Self::Power { p: 2.0 }
    }
}

impl WeightDescriptor {
    pub fn build(&self) -> Result<ConvexWeight> {
        match self {
            Self::Power { p } => ConvexWeight::power(*p),
        }
    }
}

/// Samples of `g*(x) = sup_y (xy - g(y))` on a sorted x-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledConjugate {
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    /// The y-grid point attaining each supremum.
    pub maximizers: Vec<f64>,
}

fn check_sorted(name: &str, v: &[f64]) -> Result<()> {
    if v.len() < 3 {
        return invalid(format!("{name} grid needs at least three points"));
    }
    if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
        return invalid(format!("{name} grid must be finite and strictly increasing"));
    }
    Ok(())
}

/// Monotone-maximizer sweep: for concave `j -> x y_j - g_j` the best index
/// never moves left as x increases.
fn sweep(g: &[f64], y: &[f64], x: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut j = 0;
    let mut values = Vec::with_capacity(x.len());
    let mut idx = Vec::with_capacity(x.len());
    for &xi in x {
        while j + 1 < y.len() && xi * y[j + 1] - g[j + 1] >= xi * y[j] - g[j] {
            j += 1;
        }
        values.push(xi * y[j] - g[j]);
        idx.push(j);
    }
    (values, idx)
}

fn check_convex_samples(x: &[f64], v: &[f64]) -> Result<()> {
    let slopes: Vec<f64> = x
        .windows(2)
        .zip(v.windows(2))
        .map(|(xs, vs)| (vs[1] - vs[0]) / (xs[1] - xs[0]))
        .collect();
    for (i, s) in slopes.windows(2).enumerate() {
        if s[1] < s[0] - 1e-9 * (1.0 + s[0].abs()) {
            return Err(Error::InvariantViolated {
                check: "conjugate-convexity".into(),
                witness: format!("x = {}", x[i + 1]),
                detail: format!("slope drops from {} to {}", s[0], s[1]),
            });
        }
    }
    Ok(())
}

/// `g*` on `x_grid` from samples of `g` on `y_grid`.
///
/// Requires `g(y)/|y|` at both ends of the y-grid to exceed the largest slope
/// queried in that direction, and a maximizer strictly inside the y-grid.
pub fn young_conjugate<G: Fn(f64) -> f64>(
    g: G,
    y_grid: &[f64],
    x_grid: &[f64],
) -> Result<SampledConjugate> {
    check_sorted("y", y_grid)?;
    check_sorted("x", x_grid)?;
    let g_vals: Vec<f64> = y_grid.iter().map(|&y| g(y)).collect();
    let (y0, yn) = (y_grid[0], y_grid[y_grid.len() - 1]);
    let x_hi = x_grid[x_grid.len() - 1].max(0.0);
    let x_lo = (-x_grid[0]).max(0.0);
    if yn > 0.0 && g_vals[g_vals.len() - 1] / yn <= x_hi {
        return Err(Error::DomainTooSmall { x: x_hi });
    }
    if y0 < 0.0 && g_vals[0] / -y0 <= x_lo {
        return Err(Error::DomainTooSmall { x: -x_lo });
    }
    let (values, idx) = sweep(&g_vals, y_grid, x_grid);
    if let Some(i) = idx.iter().position(|&j| j == 0 || j + 1 == y_grid.len()) {
        return Err(Error::DomainTooSmall { x: x_grid[i] });
    }
    // polish each grid maximizer on the continuous objective, concave between neighbours
    let mut values = values;
    let mut maximizers = Vec::with_capacity(x_grid.len());
    for (i, &j) in idx.iter().enumerate() {
        let xi = x_grid[i];
        let (y, v) = golden_max(|y| xi * y - g(y), y_grid[j - 1], y_grid[j + 1], 1e-13);
        if v > values[i] {
            values[i] = v;
            maximizers.push(y);
        } else {
            maximizers.push(y_grid[j]);
        }
    }
    check_convex_samples(x_grid, &values)?;
    Ok(SampledConjugate {
        x: x_grid.to_vec(),
        maximizers,
        values,
    })
}

/// `max |g**(y) - g(y)|` over interior y-grid points. The conjugate is taken
/// on the grid of discrete slopes of g, which contains a subgradient for every
/// interior sample.
pub fn certify_biconjugate<G: Fn(f64) -> f64>(g: G, grid: &[f64]) -> Result<BoundReport> {
    check_sorted("y", grid)?;
    let vals: Vec<f64> = grid.iter().map(|&y| g(y)).collect();
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    for i in 1..grid.len() - 1 {
        let (h0, h1) = (grid[i] - grid[i - 1], grid[i + 1] - grid[i]);
        let d2 = ((vals[i + 1] - vals[i]) / h1 - (vals[i] - vals[i - 1]) / h0) / (0.5 * (h0 + h1));
        let tol = 1e-9 * scale / (h0 * h1);
        if d2 < -tol {
            return Err(Error::NotConvex {
                y: grid[i],
                second_difference: d2,
            });
        }
    }
    let mut slopes: Vec<f64> = grid
        .windows(2)
        .zip(vals.windows(2))
        .map(|(y, v)| (v[1] - v[0]) / (y[1] - y[0]))
        .collect();
    slopes.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    let (conj, _) = sweep(&vals, grid, &slopes);
    let (back, _) = sweep(&conj, &slopes, grid);
    let mut worst = 0.0f64;
    let mut at = grid[1];
    for i in 1..grid.len() - 1 {
        let d = (back[i] - vals[i]).abs();
        if d > worst {
            worst = d;
            at = grid[i];
        }
    }
    let h = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let max_slope = slopes.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    let tol = 10.0 * h * max_slope.max(1.0);
    let mut rep = BoundReport::new("biconjugate-inversion")
        .with_constant(worst)
        .with_ratio(worst / tol)
        .with_witness(vec![at])
        .with_grid(format!("[{}, {}] x {}", grid[0], grid[grid.len() - 1], grid.len()))
        .with_named("tolerance", tol);
    if worst > tol {
        rep = rep.failed();
    }
    Ok(rep)
}

/// Convex weight `ψ(x) = |x|^p / p`, `p ∈ (1, 2]`, with `α = p`, `A_ψ = 1`
/// and `φ = ψ*` tabulated on a uniform grid over `[-L, L]`.
#[derive(Debug, Clone)]
pub struct ConvexWeight {
    p: f64,
    alpha: f64,
    a_psi: f64,
    half_width: f64,
    step: f64,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    a_phi: f64,
    b_phi: f64,
    c_psi: Option<f64>,
    reports: Vec<BoundReport>,
}

impl ConvexWeight {
    pub fn power(p: f64) -> Result<Self> {
        Self::power_with_grid(p, DEFAULT_HALF_WIDTH, DEFAULT_GRID_POINTS)
    }

    pub fn power_with_grid(p: f64, half_width: f64, points: usize) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return invalid(format!("power weight needs p in (1, 2], got {p}"));
        }
        if !(half_width > 0.0) || points < 16 {
            return invalid("weight grid too small");
        }
        let points = points | 1;
        let x = linspace(-half_width, half_width, points);
        // y sampled as the maximizer image of a uniform slope grid reaching
        // past the point where ψ(y)/|y| exceeds L
        let slope_max = 1.05 * p * half_width;
        let u = linspace(-slope_max, slope_max, 4 * points + 1);
        let y: Vec<f64> = u.iter().map(|u| u.signum() * u.abs().powf(1.0 / (p - 1.0))).collect();
        let psi = |t: f64| t.abs().powf(p) / p;
        let conj = young_conjugate(psi, &y, &x)?;
        let alpha = p;
        let q = alpha / (alpha - 1.0);
        let a_phi = 1.0 / q;
        let mut b_phi = 0.0f64;
        let mut b_at = 0.0;
        for (xi, v) in x.iter().zip(&conj.values) {
            let gap = a_phi * xi.abs().powf(q) - v;
            if gap > b_phi {
                b_phi = gap;
                b_at = *xi;
            }
        }
        let mut w = Self {
            p,
            alpha,
            a_psi: 1.0,
            half_width,
            step: 2.0 * half_width / (points - 1) as f64,
            phi: conj.values,
            dphi: conj.maximizers,
            a_phi,
            b_phi,
            c_psi: None,
            reports: Vec::new(),
        };
        let coercivity = BoundReport::new("phi-coercivity")
            .with_constant(b_phi)
            .with_named("A_phi", a_phi)
            .with_named("B_phi", b_phi)
            .with_witness(vec![b_at])
            .with_grid(format!("[-{half_width}, {half_width}] x {points}"));
        let growth = w.certify_psi_growth(201);
        let superlinear = w.certify_superlinearity();
        w.reports.extend([superlinear, growth, coercivity]);
        if w.psi_second(1.0).is_some() {
            let zs: Vec<Complex64> = [2.0, 5.0, 10.0]
                .iter()
                .flat_map(|&r| [Complex64::new(0.0, r), Complex64::new(r, 0.0)])
                .collect();
            let rep = certify_riesz_mass(&w, &zs, &[0.1, 0.5, 0.99])?;
            w.c_psi = Some(rep.constant);
            w.reports.push(rep);
        }
        Ok(w)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a_psi(&self) -> f64 {
        self.a_psi
    }

    pub fn a_phi(&self) -> f64 {
        self.a_phi
    }

    pub fn b_phi(&self) -> f64 {
        self.b_phi
    }

    /// Certified Riesz-mass constant; `None` when ψ is not twice differentiable.
    pub fn c_psi(&self) -> Option<f64> {
        self.c_psi
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn reports(&self) -> &[BoundReport] {
        &self.reports
    }

    pub fn psi(&self, x: f64) -> f64 {
        x.abs().powf(self.p) / self.p
    }

    pub fn psi_second(&self, _x: f64) -> Option<f64> {
        (self.p == 2.0).then_some(1.0)
    }

    /// `φ(x)` by cubic Hermite interpolation of the tabulated conjugate, the
    /// maximizers serving as slopes.
    pub fn phi(&self, x: f64) -> Result<f64> {
        if !(x.abs() <= self.half_width) {
            return Err(Error::DomainTooSmall { x });
        }
        let s = (x + self.half_width) / self.step;
        let i = (s.floor() as usize).min(self.phi.len() - 2);
        let t = s - i as f64;
        let (t2, t3) = (t * t, t * t * t);
        let h = self.step;
        Ok(self.phi[i] * (2.0 * t3 - 3.0 * t2 + 1.0)
            + self.dphi[i] * h * (t3 - 2.0 * t2 + t)
            + self.phi[i + 1] * (3.0 * t2 - 2.0 * t3)
            + self.dphi[i + 1] * h * (t3 - t2))
    }

    /// Tabulated `(x, φ(x))` pairs.
    pub fn phi_samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.phi
            .iter()
            .enumerate()
            .map(|(i, v)| (-self.half_width + i as f64 * self.step, *v))
    }

    pub fn phi_csv(&self, stride: usize) -> String {
        let mut out = String::from("x,phi\n");
        for (x, v) in self.phi_samples().step_by(stride.max(1)) {
            writeln!(out, "{},{}", fmt_f64(x), fmt_f64(v)).unwrap();
        }
        out
    }

    fn certify_superlinearity(&self) -> BoundReport {
        let xs = linspace(1.0, self.half_width, 50);
        let ratios: Vec<f64> = xs.iter().map(|&x| self.psi(x) / x).collect();
        let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
        let rep = BoundReport::new("psi-superlinear")
            .with_constant(ratios[ratios.len() - 1])
            .with_grid(format!("[1, {}] x 50", self.half_width));
        if increasing && self.psi(0.0) >= 0.0 {
            rep
        } else {
            rep.failed()
        }
    }

    fn certify_psi_growth(&self, n: usize) -> BoundReport {
        let xs = linspace(-self.half_width, self.half_width, n);
        let mut worst = 0.0f64;
        let mut at = vec![];
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (xs[i], xs[j]);
                let lhs = (self.psi(a) - self.psi(b)).abs();
                let rhs = self.a_psi * (1.0 + a.abs() + b.abs()).powf(self.alpha - 1.0) * (a - b).abs();
                if lhs / rhs > worst {
                    worst = lhs / rhs;
                    at = vec![a, b];
                }
            }
        }
        let rep = BoundReport::new("psi-growth")
            .with_constant(self.a_psi)
            .with_ratio(worst)
            .with_witness(at)
            .with_grid(format!("pairs of [-{0}, {0}] x {n}", self.half_width));
        if worst <= 1.0 {
            rep
        } else {
            rep.failed()
        }
    }
}

/// Riesz mass of `ψ(Im ζ)` on `D(z, t)`, `(1/2π)∬ ψ''(Im ζ) dA`, returning
/// the smallest `c_ψ` with `mass ≤ c_ψ |z|^{α-1} t` over all samples
/// (`t = fraction · |z|`).
pub fn certify_riesz_mass(
    weight: &ConvexWeight,
    z_samples: &[Complex64],
    t_fractions: &[f64],
) -> Result<BoundReport> {
    if weight.psi_second(0.5).is_none() {
        return Err(Error::NonSmoothWeight);
    }
    if z_samples.iter().any(|z| !(z.norm() > 1.0)) {
        return invalid("Riesz-mass samples need |z| > 1");
    }
    if t_fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
        return invalid("disk radii must lie in (0, |z|)");
    }
    let mut worst = 0.0f64;
    let mut at = vec![];
    for z in z_samples {
        for &f in t_fractions {
            let t = f * z.norm();
            // horizontal chords: η = Im z + t sin θ has chord 2t cos θ
            let (mass, _) = integrate(
                |th: f64| {
                    let eta = z.im + t * th.sin();
                    weight.psi_second(eta).unwrap() * 2.0 * t * t * th.cos().powi(2)
                },
                -std::f64::consts::FRAC_PI_2,
                std::f64::consts::FRAC_PI_2,
                QuadOptions::default(),
            )?;
            let mass = mass / (2.0 * std::f64::consts::PI);
            let c = mass / (z.norm().powf(weight.alpha() - 1.0) * t);
            if c > worst {
                worst = c;
                at = vec![z.re, z.im, t];
            }
        }
    }
    Ok(BoundReport::new("riesz-mass")
        .with_constant(worst)
        .with_ratio(worst)
        .with_witness(at)
        .with_grid(format!("{} centres x {} radii", z_samples.len(), t_fractions.len())))
}

/// `θ_m(x) = exp(φ(x) - m ln(1+|x|))` and `Θ_m = inf θ_m`.
#[derive(Debug)]
pub struct ThetaFamily {
    weight: Arc<ConvexWeight>,
    big_theta: Mutex<BTreeMap<usize, f64>>,
}

impl ThetaFamily {
    pub fn new(weight: Arc<ConvexWeight>) -> Self {
        Self {
            weight,
            big_theta: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn weight(&self) -> &Arc<ConvexWeight> {
        &self.weight
    }

    pub fn ln_theta(&self, m: usize, x: f64) -> Result<f64> {
        Ok(self.weight.phi(x)? - m as f64 * x.abs().ln_1p())
    }

    pub fn theta(&self, m: usize, x: f64) -> Result<f64> {
        self.ln_theta(m, x).map(f64::exp)
    }

    /// `Θ_m` as the minimum over the tabulation grid.
    pub fn big_theta(&self, m: usize) -> f64 {
        if let Some(v) = self.big_theta.lock().unwrap().get(&m) {
            return *v;
        }
        let v = self
            .weight
            .phi_samples()
            .map(|(x, p)| p - m as f64 * x.abs().ln_1p())
            .fold(f64::INFINITY, f64::min)
            .exp();
        self.big_theta.lock().unwrap().insert(m, v);
        v
    }

    /// `b_m`: sup over `|y| ≤ y_max` of
    /// `sup_x (xy - ln θ_m(x)) - ψ(y) - m(α-1) ln(1+|y|)`.
    pub fn b_m(&self, m: usize, y_max: f64) -> Result<BoundReport> {
        let l = self.weight.half_width();
        let xs = linspace(-l, l, 4001);
        let ys = linspace(-y_max, y_max, 401);
        let alpha = self.weight.alpha();
        let mut best = f64::NEG_INFINITY;
        let mut at = 0.0;
        let mut inner_edge = false;
        for &y in &ys {
            let inner = grid_max_refine(
                |x| x * y - self.ln_theta(m, x).unwrap_or(f64::INFINITY),
                &xs,
                1e-12,
            );
            inner_edge |= inner.at_boundary;
            let v = inner.value - self.weight.psi(y) - m as f64 * (alpha - 1.0) * y.abs().ln_1p();
            if v > best {
                best = v;
                at = y;
            }
        }
        if inner_edge {
            return Err(Error::DomainTooSmall { x: l });
        }
        Ok(BoundReport::new("conjugate-tilt-constant")
            .with_constant(best.max(0.0))
            .with_ratio(best)
            .with_witness(vec![at])
            .with_grid(format!("y in [-{y_max}, {y_max}] x 401, x in [-{l}, {l}] x 4001"))
            .with_named("m", m as f64))
    }
}

/// `S(m) = sup_x (m ln(1+|x|) - g(x))`, bracketing the maximizer by doubling
/// the search interval.
pub fn log_moment_sup<G: Fn(f64) -> f64>(g: &G, m: usize) -> Result<(f64, f64)> {
    let mut half = 4.0;
    for _ in 0..40 {
        let xs = linspace(-half, half, 4001);
        let best = grid_max_refine(|x| m as f64 * x.abs().ln_1p() - g(x), &xs, 1e-13);
        if !best.at_boundary {
            return Ok((best.value, best.x));
        }
        half *= 2.0;
    }
    Err(Error::MaximizerUnbounded { m: m as f64 })
}

/// Smallest `C` with `S(m) < (1 - 1/α) m ln m + C m` over `m_list`, compared
/// with the bound `max(B,0) + 2 - (1-1/α) ln((1-1/α) A e)` from the
/// minorant `g(x) > A|x|^{α/(α-1)} - B`.
pub fn log_moment_bound<G: Fn(f64) -> f64>(
    g: G,
    a: f64,
    b: f64,
    alpha: f64,
    m_list: &[usize],
) -> Result<BoundReport> {
    if !(a > 0.0) || !(alpha > 1.0) {
        return invalid("log-moment bound needs A > 0 and alpha > 1");
    }
    if m_list.is_empty() || m_list.contains(&0) {
        return invalid("m_list must contain positive integers");
    }
    let kappa = 1.0 - 1.0 / alpha;
    let mut c = f64::NEG_INFINITY;
    let mut at = 0;
    let mut rep = BoundReport::new("log-moment-bound");
    for &m in m_list {
        let (s, _) = log_moment_sup(&g, m)?;
        let mf = m as f64;
        let cm = (s - kappa * mf * mf.ln()) / mf;
        rep = rep.with_named(&format!("S({m})"), s);
        if cm > c {
            c = cm;
            at = m;
        }
    }
    let proof = b.max(0.0) + 2.0 - kappa * (kappa * a * std::f64::consts::E).ln();
    rep = rep
        .with_constant(c)
        .with_ratio(c - proof)
        .with_witness(vec![at as f64])
        .with_grid(format!("m in {:?}", m_list))
        .with_named("proof_bound", proof);
    if c >= proof {
        rep = rep.failed();
    }
    Ok(rep)
}

/// The bound applied to `g = A|x|^{α/(α-1)} - B` itself.
pub fn log_moment_bound_minorant(a: f64, b: f64, alpha: f64, m_list: &[usize]) -> Result<BoundReport> {
    let q = alpha / (alpha - 1.0);
    log_moment_bound(|x: f64| a * x.abs().powf(q) - b, a, b, alpha, m_list)
}
