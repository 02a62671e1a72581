//! Lagrange-series reconstruction from the zeros of a sine-type generator,
//! exceptional-disk lower bounds, and finite zero-shift perturbations.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::functionals::ScaleContext;
use crate::optim::CompensatedSum;
use crate::report::{fmt_f64, BoundReport};
use crate::spaces::EntireFunctionModel;

/// Exceptional radii `b |a|^{-ν}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskLaw {
    pub b: f64,
    pub nu: f64,
}

impl DiskLaw {
    pub fn radius(&self, a: Complex64) -> f64 {
        if self.nu == 0.0 {
            self.b
        } else {
            self.b * a.norm().powf(-self.nu)
        }
    }
}

/// `𝒩(z) = sin(sπz)` with zeros `a_n = n/s`, `|n| ≤ n_range`, stored by
/// increasing modulus (`0, 1, -1, 2, -2, ...`).
#[derive(Debug, Clone)]
pub struct LagrangeGenerator {
    pub scale: f64,
    pub n_range: usize,
    pub indices: Vec<i64>,
    pub zeros: Vec<Complex64>,
    pub derivs: Vec<Complex64>,
    pub disk_law: DiskLaw,
    /// Off-disk lower bound `|𝒩(z)| ≥ C_N e^{sπ|Im z|}`.
    pub c_n: f64,
    pub lower_bound: BoundReport,
}

fn sign(n: i64) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `sin(sπu)/u` with the limit sπ at 0.
fn sin_over(s: f64, u: Complex64) -> Complex64 {
    if u.norm() < 1e-8 {
        let x = s * PI;
        x * (1.0 - x * x * u * u / 6.0)
    } else {
        (s * PI * u).sin() / u
    }
}

pub fn build_cardinal_generator(scale: f64, n_range: usize) -> Result<LagrangeGenerator> {
    if !(scale > 0.0 && scale.is_finite()) {
        return invalid(format!("generator scale must be positive, got {scale}"));
    }
    let mut indices = vec![0i64];
    for n in 1..=n_range as i64 {
        indices.push(n);
        indices.push(-n);
    }
    let zeros = indices.iter().map(|&n| Complex64::new(n as f64 / scale, 0.0)).collect();
    let derivs = indices.iter().map(|&n| Complex64::new(scale * PI * sign(n), 0.0)).collect();
    let mut gen = LagrangeGenerator {
        scale,
        n_range,
        indices,
        zeros,
        derivs,
        disk_law: DiskLaw {
            b: 0.25 / scale,
            nu: 0.0,
        },
        c_n: 0.0,
        lower_bound: BoundReport::new("generator-lower-bound"),
    };
    let rep = gen.certify_lower_bound(5.0 / scale);
    gen.c_n = rep.constant;
    gen.lower_bound = rep;
    Ok(gen)
}

impl LagrangeGenerator {
    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    pub fn exponential_type(&self) -> f64 {
        self.scale * PI
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        (self.exponential_type() * z).sin()
    }

    pub fn model(&self) -> EntireFunctionModel {
        let t = self.exponential_type();
        EntireFunctionModel::closure(move |z| (t * z).sin())
    }

    /// Position of zero `n/s` in storage order.
    pub fn position(&self, n: i64) -> Option<usize> {
        if n.unsigned_abs() as usize > self.n_range {
            None
        } else if n <= 0 {
            Some(2 * n.unsigned_abs() as usize)
        } else {
            Some(2 * n as usize - 1)
        }
    }

    /// `𝒩(z)/(z - a_i)`, stable near the zero.
    pub fn kernel(&self, i: usize, z: Complex64) -> Complex64 {
        sign(self.indices[i]) * sin_over(self.scale, z - self.zeros[i])
    }

    /// Index of the exceptional disk containing z, if any.
    pub fn disk_containing(&self, z: Complex64) -> Option<usize> {
        let near = (z.re * self.scale).round() as i64;
        let i = self.position(near)?;
        let r = self.disk_law.radius(self.zeros[i]);
        ((z - self.zeros[i]).norm() < r * (1.0 - 1e-12)).then_some(i)
    }

    /// Minimizes `|𝒩(z)| e^{-sπ|Im z|}` over a rectangle `|Im z| ≤ h` and the
    /// disk boundaries of the central zeros.
    fn certify_lower_bound(&self, h: f64) -> BoundReport {
        let reach = (self.n_range.min(4) as f64 + 0.5) / self.scale;
        let t = self.exponential_type();
        let mut best = f64::INFINITY;
        let mut at = Complex64::new(0.0, 0.0);
        let mut probe = |z: Complex64| {
            if self.disk_containing(z).is_none() {
                let v = self.eval(z).norm() * (-t * z.im.abs()).exp();
                if v < best {
                    best = v;
                    at = z;
                }
            }
        };
        let (nx, ny) = (161, 101);
        for i in 0..nx {
            for j in 0..ny {
                let re = -reach + 2.0 * reach * i as f64 / (nx - 1) as f64;
                let im = -h + 2.0 * h * j as f64 / (ny - 1) as f64;
                probe(Complex64::new(re, im));
            }
        }
        let central = (reach * self.scale).floor() as i64;
        for n in -central..=central {
            let a = Complex64::new(n as f64 / self.scale, 0.0);
            let r = self.disk_law.radius(a);
            for k in 0..128 {
                probe(a + Complex64::from_polar(r, 2.0 * PI * k as f64 / 128.0));
            }
        }
        BoundReport::new("generator-lower-bound")
            .with_constant(best)
            .with_ratio(best)
            .with_witness(vec![at.re, at.im])
            .with_grid(format!("[-{reach}, {reach}] x [-{h}, {h}] ({nx}x{ny}) plus disk circles"))
            .with_named("exponential_type", t)
            .with_named("disk_radius", self.disk_law.b)
            .with_named("disk_nu", self.disk_law.nu)
    }

    /// Samples `F(a_n)` in storage order.
    pub fn sample(&self, f: &EntireFunctionModel) -> Vec<Complex64> {
        self.zeros.iter().map(|a| f.eval(*a)).collect()
    }
}

/// `|F(a_n)/𝒩'(a_n)| ≤ A_13 (1+|a_n|)^{-(α+ν+1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub decay_constant: f64,
    pub alpha: f64,
    pub nu: f64,
}

impl DecayCertificate {
    pub fn exponent(&self) -> f64 {
        self.alpha + self.nu + 1.0
    }

    /// Smallest `A_13` valid on the given samples.
    pub fn fit(samples: &[Complex64], gen: &LagrangeGenerator, alpha: f64, nu: f64) -> Self {
        let p = alpha + nu + 1.0;
        let decay_constant = samples
            .iter()
            .zip(gen.zeros.iter().zip(&gen.derivs))
            .map(|(f, (a, d))| (f / d).norm() * (1.0 + a.norm()).powf(p))
            .fold(0.0f64, f64::max);
        Self { decay_constant, alpha, nu }
    }

    pub fn check(&self, samples: &[Complex64], gen: &LagrangeGenerator) -> Result<()> {
        let p = self.exponent();
        for (i, f) in samples.iter().enumerate() {
            let ratio = (f / gen.derivs[i]).norm() * (1.0 + gen.zeros[i].norm()).powf(p);
            if ratio > self.decay_constant * (1.0 + 1e-12) {
                return Err(Error::DecayCertificateViolated {
                    index: gen.indices[i],
                    ratio,
                    bound: self.decay_constant,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconstruction {
    pub value: Complex64,
    /// Largest `|n|` summed.
    pub terms: usize,
    /// Majorant of the omitted stored terms.
    pub tail: f64,
    /// Majorant of the terms past the stored range for samples obeying the
    /// same decay certificate.
    pub unstored_tail: f64,
}

/// Majorant of `Σ_{|n| > n_0} (1+|n|/s)^{-p} / (|n|/s - |z|)`, both signs.
fn unstored_tail(scale: f64, n0: usize, p: f64, zabs: f64) -> f64 {
    let x0 = n0 as f64 / scale;
    if x0 <= zabs || p <= 1.0 {
        return f64::INFINITY;
    }
    2.0 * scale * (1.0 + x0).powf(1.0 - p) / ((p - 1.0) * (x0 - zabs))
}

/// `Σ F(a_n)/𝒩'(a_n) · 𝒩(z)/(z - a_n)` over the stored samples, summed in
/// pairs `±n` and stopped at the first `|n|` whose majorant tail is below
/// `tol`. Fails when z lies beyond the stored zeros, where the tail past the
/// stored range has no finite majorant.
pub fn reconstruct(
    samples: &[Complex64],
    gen: &LagrangeGenerator,
    z: Complex64,
    decay: &DecayCertificate,
    tol: f64,
) -> Result<Reconstruction> {
    if samples.len() != gen.len() {
        return invalid(format!("{} samples for {} zeros", samples.len(), gen.len()));
    }
    decay.check(samples, gen)?;
    if z.im == 0.0 {
        let n = z.re * gen.scale;
        if n == n.round() {
            if let Some(i) = gen.position(n as i64) {
                if gen.zeros[i] == z {
                    return Ok(Reconstruction {
                        value: samples[i],
                        terms: 0,
                        tail: 0.0,
                        unstored_tail: 0.0,
                    });
                }
            }
        }
    }
    let p = decay.exponent();
    let nz = gen.eval(z).norm();
    // majorant per pair, then suffix sums
    let pair_major: Vec<f64> = (0..=gen.n_range)
        .map(|n| {
            let idx: Vec<usize> = if n == 0 { vec![0] } else { vec![2 * n - 1, 2 * n] };
            idx.iter()
                .map(|&i| decay.decay_constant * (1.0 + gen.zeros[i].norm()).powf(-p) * gen.kernel(i, z).norm())
                .sum()
        })
        .collect();
    let beyond = decay.decay_constant * nz * unstored_tail(gen.scale, gen.n_range, p, z.norm());
    if !beyond.is_finite() {
        return Err(Error::TailNotConverged { tail: beyond, tol });
    }
    let mut suffix = vec![0.0; gen.n_range + 2];
    for n in (0..=gen.n_range).rev() {
        suffix[n] = suffix[n + 1] + pair_major[n];
    }
    let stop = (0..=gen.n_range).find(|&n| suffix[n + 1] <= tol).unwrap_or(gen.n_range);
    let mut s = CompensatedSum::new();
    for n in 0..=stop {
        let idx: &[usize] = if n == 0 { &[0] } else { &[2 * n - 1, 2 * n] };
        let mut pair = Complex64::new(0.0, 0.0);
        for &i in idx {
            pair += samples[i] / gen.derivs[i] * gen.kernel(i, z);
        }
        s += pair;
    }
    Ok(Reconstruction {
        value: s.value(),
        terms: stop,
        tail: suffix[stop + 1],
        unstored_tail: beyond,
    })
}

/// Reconstruction errors `(z_re, z_im, |err|)` as CSV.
pub fn reconstruction_error_csv(rows: &[(Complex64, f64)]) -> String {
    let mut out = String::from("z_re,z_im,abs_err\n");
    for (z, e) in rows {
        out.push_str(&format!("{},{},{}\n", fmt_f64(z.re), fmt_f64(z.im), fmt_f64(*e)));
    }
    out
}

/// Per-term envelope `|𝒩(z)/(z-a_n)| ≤ A_11 |a_n|^ν e^{ψ(Im z) + w_{m+4}(|z|)}`
/// measured over `probes`, with the summability of `(1+|a_n|)^{-(α+1)}`.
/// When `a11` is given it is enforced.
pub fn certify_series_bound(
    f: &EntireFunctionModel,
    gen: &LagrangeGenerator,
    ctx: &ScaleContext,
    m: usize,
    alpha: f64,
    probes: &[Complex64],
    a11: Option<f64>,
) -> Result<BoundReport> {
    if !(alpha > 1.0) {
        return invalid("alpha must exceed 1");
    }
    let nu = gen.disk_law.nu;
    let sampled: Vec<usize> = (0..gen.len())
        .filter(|&i| {
            let n = gen.indices[i].unsigned_abs() as usize;
            n <= 50 || n % 25 == 0 || n == gen.n_range
        })
        .collect();
    let mut worst = 0.0f64;
    let mut witness = (0i64, Complex64::new(0.0, 0.0));
    for &z in probes {
        let ln_env = ctx.weight().psi(z.im) + ctx.family.w_m(m + 4, z.norm())?;
        for &i in &sampled {
            let value = gen.kernel(i, z).norm();
            let lin = gen.zeros[i].norm().max(1.0).powf(nu);
            let ratio = value / (lin * ln_env.exp());
            if let Some(bound) = a11 {
                if ratio > bound {
                    return Err(Error::TermBoundViolated {
                        n: gen.indices[i],
                        z,
                        value: ratio,
                        bound,
                    });
                }
            }
            if ratio > worst {
                worst = ratio;
                witness = (gen.indices[i], z);
            }
        }
    }
    let p = alpha + 1.0;
    let terms: Vec<f64> = (1..=gen.n_range)
        .map(|n| 2.0 * (1.0 + n as f64 / gen.scale).powf(-p))
        .collect();
    let mut tails = vec![0.0; gen.n_range + 1];
    for n in (0..gen.n_range).rev() {
        tails[n] = tails[n + 1] + terms[n];
    }
    let monotone = tails.windows(2).all(|w| w[1] <= w[0]);
    let k = if gen.n_range >= 200 { 100 } else { gen.n_range / 2 };
    let tail_at_k = tails[k];
    let majorant = 2.0 * gen.scale * (1.0 + k as f64 / gen.scale).powf(1.0 - p) / (p - 1.0);
    let total = 1.0 + tails[0] + majorant;
    let samples = gen.sample(f);
    let decay = DecayCertificate::fit(&samples, gen, alpha, nu);
    let mut envelope_ratio = 0.0f64;
    for &z in probes {
        let ln_env = ctx.weight().psi(z.im) + ctx.family.w_m(m + 4, z.norm())?;
        let bound = decay.decay_constant * worst * total * ln_env.exp();
        envelope_ratio = envelope_ratio.max(f.eval(z).norm() / bound);
    }
    let mut rep = BoundReport::new("lagrange-term-bound")
        .with_constant(worst)
        .with_ratio(envelope_ratio)
        .with_witness(vec![witness.0 as f64, witness.1.re, witness.1.im])
        .with_grid(format!("{} probes, {} sampled zeros", probes.len(), sampled.len()))
        .with_named("A11", worst)
        .with_named("decay_constant", decay.decay_constant)
        .with_named("summability_tail", tail_at_k)
        .with_named("tail_majorant", majorant)
        .with_named("tail_start", k as f64)
        .with_named("m", m as f64);
    if !(worst.is_finite() && monotone && tail_at_k <= majorant && envelope_ratio <= 1.0) {
        rep = rep.failed();
    }
    Ok(rep)
}

/// Zeros `λ_j` of multiplicity `m_j`, shifts `t_j` and disk radii `r_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroShiftSpec {
    pub zeros: Vec<Complex64>,
    pub multiplicities: Vec<u32>,
    pub shifts: Vec<Complex64>,
    pub radii: Vec<f64>,
}

impl ZeroShiftSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.zeros.len();
        if self.multiplicities.len() != n || self.shifts.len() != n || self.radii.len() != n {
            return invalid("zero-shift fields must have equal lengths");
        }
        for j in 0..n {
            if self.zeros[j] == Complex64::new(0.0, 0.0) || !(self.radii[j] > 0.0) || self.multiplicities[j] == 0 {
                return invalid(format!("zero {j}: nonzero location, positive radius and multiplicity required"));
            }
            if !(self.shifts[j].norm() < self.radii[j]) {
                return Err(Error::ShiftLeavesDisk { index: j });
            }
            if self.zeros[j] + self.shifts[j] == Complex64::new(0.0, 0.0) {
                return invalid(format!("shifted zero {j} lands on the origin"));
            }
            for i in 0..j {
                if (self.zeros[i] - self.zeros[j]).norm() <= self.radii[i] + self.radii[j] {
                    return invalid(format!("disks {i} and {j} intersect"));
                }
            }
        }
        Ok(())
    }

    /// Partial sums of `m_j |t_j| / r_j`.
    pub fn partial_sums(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.shifts
            .iter()
            .zip(&self.radii)
            .zip(&self.multiplicities)
            .map(|((t, r), m)| {
                acc += *m as f64 * t.norm() / r;
                acc
            })
            .collect()
    }

    pub fn shift_sum(&self) -> f64 {
        self.partial_sums().last().copied().unwrap_or(0.0)
    }

    /// Same geometry with every shift multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            shifts: self.shifts.iter().map(|t| t * c).collect(),
            ..self.clone()
        }
    }

    pub fn disk_containing(&self, z: Complex64) -> Option<usize> {
        (0..self.zeros.len()).find(|&j| (z - self.zeros[j]).norm() < self.radii[j] * (1.0 - 1e-12))
    }

    /// Probe set: `k` points on every disk boundary plus the points of an
    /// `n × n` grid on `[-h, h]²` that lie outside the disks.
    pub fn outside_probes(&self, k: usize, h: f64, n: usize) -> Vec<Complex64> {
        let mut out = vec![];
        for (a, r) in self.zeros.iter().zip(&self.radii) {
            out.extend((0..k).map(|i| a + Complex64::from_polar(*r, 2.0 * PI * i as f64 / k as f64)));
        }
        for i in 0..n {
            for j in 0..n {
                let z = Complex64::new(
                    -h + 2.0 * h * i as f64 / (n - 1) as f64,
                    -h + 2.0 * h * j as f64 / (n - 1) as f64,
                );
                if self.disk_containing(z).is_none() {
                    out.push(z);
                }
            }
        }
        out
    }
}

/// Moves each listed zero of a finite product by its shift and measures
/// `C* = max | ln|f_t| - ln|f| |` over `probes`.
pub fn zero_shift(
    spec: &ZeroShiftSpec,
    base: &EntireFunctionModel,
    probes: &[Complex64],
) -> Result<(EntireFunctionModel, BoundReport)> {
    spec.validate()?;
    let EntireFunctionModel::ZeroProduct { prefactor, zeros } = base else {
        return invalid("zero shift needs a finite product model");
    };
    for (j, (l, m)) in spec.zeros.iter().zip(&spec.multiplicities).enumerate() {
        if !zeros.iter().any(|(z, k)| z == l && k == m) {
            return invalid(format!("zero {j} ({l}, multiplicity {m}) is not a factor of the base"));
        }
    }
    let moved: Vec<(Complex64, u32)> = zeros
        .iter()
        .map(|(z, k)| match spec.zeros.iter().position(|l| l == z) {
            Some(j) => (z + spec.shifts[j], *k),
            None => (*z, *k),
        })
        .collect();
    let shifted = EntireFunctionModel::ZeroProduct {
        prefactor: *prefactor,
        zeros: moved,
    };
    let one = Complex64::new(1.0, 0.0);
    let mut worst = 0.0f64;
    let mut at = Complex64::new(0.0, 0.0);
    for &z in probes {
        if let Some(index) = spec.disk_containing(z) {
            return Err(Error::ProbeInsideDisk { z, index });
        }
        let mut d = 0.0;
        for j in 0..spec.zeros.len() {
            let l = spec.zeros[j];
            let lt = l + spec.shifts[j];
            d += spec.multiplicities[j] as f64 * ((one - z / lt).norm().ln() - (one - z / l).norm().ln());
        }
        if d.abs() > worst {
            worst = d.abs();
            at = z;
        }
    }
    let rep = BoundReport::new("zero-shift")
        .with_constant(worst)
        .with_ratio(worst)
        .with_witness(vec![at.re, at.im])
        .with_grid(format!("{} probes outside the disks", probes.len()))
        .with_named("shift_sum", spec.shift_sum());
    let rep = if worst.is_finite() { rep } else { rep.failed() };
    Ok((shifted, rep))
}

/// Output of [`shift_schedule`].
#[derive(Debug, Clone)]
pub struct ShiftSchedule {
    pub spec: ZeroShiftSpec,
    pub nu: f64,
    pub b: f64,
    pub sigmas: Vec<f64>,
    pub k0: Vec<usize>,
    pub report: BoundReport,
}

/// Chooses shifts `t_j = (k_0+½)σ_j e^{i arg λ_j}` moving the λ-zeros off
/// the moduli of the exceptional disks `D(μ_k, b|μ_k|^{-ν})`, with
/// `ν` the least integer above `2α+1`, `b` half its cap and
/// `σ_j = 2^{ν+2} b A_μ |λ_j|^{1-ν}`. The disks of the returned spec are
/// `D(λ_j, d_1 |λ_j|^{1-α})`.
pub fn shift_schedule(
    mu_zeros: &[Complex64],
    lambda_zeros: &[Complex64],
    a_mu: f64,
    d1: f64,
    d2: f64,
    alpha: f64,
) -> Result<ShiftSchedule> {
    if !(a_mu > 1.0 && d1 > 0.0 && d2 > 0.0 && alpha > 1.0) {
        return invalid("need A_mu > 1, d_1, d_2 > 0 and alpha > 1");
    }
    let l = d1 + d2;
    let lam_min = (2.0 * l).max(1.0);
    if let Some(j) = lambda_zeros.iter().position(|z| !(z.norm() > lam_min)) {
        return invalid(format!("|lambda_{j}| must exceed {lam_min}"));
    }
    let mu_min = 1f64.max(4.0 * d2);
    if let Some(k) = mu_zeros.iter().position(|z| !(z.norm() > mu_min)) {
        return invalid(format!("|mu_{k}| must exceed {mu_min}"));
    }
    let mut moduli: Vec<f64> = mu_zeros.iter().map(|z| z.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    let n_mu = |r: f64| moduli.partition_point(|m| *m <= r);
    for r in &moduli {
        if !((n_mu(*r) as f64) < a_mu * r) {
            return invalid(format!("counting bound n(r) < {a_mu} r fails at r = {r}"));
        }
    }
    let nu = (2.0 * alpha + 1.0).floor() + 1.0;
    let b = 0.5 * d2.min(d1 * 2f64.powf(-(nu + 6.0)) / (a_mu * a_mu));
    let shadows: Vec<(f64, f64)> = moduli
        .iter()
        .map(|m| {
            let r = b * m.powf(-nu);
            (m - r, m + r)
        })
        .collect();
    let mut shifts = vec![];
    let mut sigmas = vec![];
    let mut k0s = vec![];
    let mut radii = vec![];
    for (j, lam) in lambda_zeros.iter().enumerate() {
        let m = lam.norm();
        let sigma = 2f64.powf(nu + 2.0) * b * a_mu * m.powf(1.0 - nu);
        let budget = (4 * n_mu(m + l)).max(1);
        let k0 = (0..budget)
            .find(|&k| {
                let (lo, hi) = (m + k as f64 * sigma, m + (k + 1) as f64 * sigma);
                shadows.iter().all(|(a, c)| *c <= lo || *a >= hi)
            })
            .ok_or(Error::NoAvoidingInterval { index: j })?;
        let t = Complex64::from_polar((k0 as f64 + 0.5) * sigma, lam.arg());
        shifts.push(t);
        sigmas.push(sigma);
        k0s.push(k0);
        radii.push(d1 * m.powf(1.0 - alpha));
    }
    let mut inside = true;
    let mut disjoint = true;
    let mut eq32 = true;
    let mut weighted = 0.0;
    let mut majorant = 0.0;
    for (j, lam) in lambda_zeros.iter().enumerate() {
        let moved = lam + shifts[j];
        let rho = b * moved.norm().powf(-nu);
        inside &= shifts[j].norm() + rho <= radii[j];
        for mu in mu_zeros {
            disjoint &= (moved - mu).norm() > rho + b * mu.norm().powf(-nu);
        }
        let cap = 2f64.powf(nu + 5.0) * b * a_mu * a_mu * lam.norm().powf(2.0 - nu);
        eq32 &= shifts[j].norm() <= cap;
        weighted += shifts[j].norm() * lam.norm().powf(alpha - 1.0);
        majorant += 2f64.powf(nu + 5.0) * b * a_mu * a_mu * lam.norm().powf(alpha + 1.0 - nu);
    }
    let spec = ZeroShiftSpec {
        zeros: lambda_zeros.to_vec(),
        multiplicities: vec![1; lambda_zeros.len()],
        shifts,
        radii,
    };
    let mut report = BoundReport::new("shift-schedule")
        .with_constant(weighted)
        .with_ratio(if majorant > 0.0 { weighted / majorant } else { 0.0 })
        .with_grid(format!("{} lambda zeros, {} mu zeros", lambda_zeros.len(), mu_zeros.len()))
        .with_named("nu", nu)
        .with_named("b", b)
        .with_named("shift_weighted_sum", weighted)
        .with_named("shift_majorant", majorant)
        .with_named("disks_nested", inside as u8 as f64)
        .with_named("disks_avoid_exceptional", disjoint as u8 as f64)
        .with_named("shift_cap_holds", eq32 as u8 as f64);
    if !(inside && disjoint && eq32 && weighted <= majorant) {
        report = report.failed();
    }
    Ok(ShiftSchedule {
        spec,
        nu,
        b,
        sigmas,
        k0: k0s,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{band_limited, standard_context, zero_shift_fixture};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn loose(alpha: f64) -> DecayCertificate {
        DecayCertificate { decay_constant: 10.0, alpha, nu: 0.0 }
    }

    #[test]
    fn cardinal_generator_examples() {
        let g = build_cardinal_generator(1.0, 10).unwrap();
        for (i, n) in g.indices.iter().enumerate() {
            assert_eq!(g.zeros[i], c(*n as f64, 0.0));
            assert!((g.derivs[i].re - PI * sign(*n)).abs() < 1e-15);
            assert!(g.eval(g.zeros[i]).norm() < 1e-14);
        }
        let g2 = build_cardinal_generator(2.0, 5).unwrap();
        let i = g2.position(3).unwrap();
        assert_eq!(g2.zeros[i], c(1.5, 0.0));
        assert!((g2.derivs[i].re + 2.0 * PI).abs() < 1e-15);
        assert_eq!(g2.position(-3).map(|i| g2.zeros[i]), Some(c(-1.5, 0.0)));
        assert_eq!(g2.position(6), None);
    }

    #[test]
    fn lower_bound_constant_matches_circle_oracle() {
        let g = build_cardinal_generator(1.0, 10).unwrap();
        // on |z| = 1/4: |sin πz|^2 = sin^2 πx + sinh^2 πy
        let oracle = (0..20000)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 20000.0;
                let (x, y) = (0.25 * t.cos(), 0.25 * t.sin());
                ((PI * x).sin().powi(2) + (PI * y).sinh().powi(2)).sqrt() * (-PI * y.abs()).exp()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(g.c_n > 0.0);
        assert!(g.c_n <= oracle + 1e-12);
        assert!(g.c_n > 0.99 * oracle, "{} vs {oracle}", g.c_n);
    }

    #[test]
    fn reconstruct_examples() {
        let g = build_cardinal_generator(1.0, 20).unwrap();
        let mut s = vec![c(0.0, 0.0); g.len()];
        s[g.position(0).unwrap()] = c(1.0, 0.0);
        let r = reconstruct(&s, &g, c(0.25, 0.0), &loose(2.0), 1e-12).unwrap();
        assert!((r.value.re - 0.900_316_316_157_106).abs() < 1e-12);
        s[g.position(1).unwrap()] = c(1.0, 0.0);
        let r = reconstruct(&s, &g, c(0.5, 0.0), &loose(2.0), 1e-12).unwrap();
        assert!((r.value - c(4.0 / PI, 0.0)).norm() < 1e-12);
        let arb: Vec<Complex64> = (0..g.len()).map(|i| c(1.0 / (1.0 + i as f64).powi(3), 0.1)).collect();
        let cert = DecayCertificate::fit(&arb, &g, 2.0, 0.0);
        let r = reconstruct(&arb, &g, c(5.0, 0.0), &cert, 1.0).unwrap();
        assert_eq!(r.value, arb[g.position(5).unwrap()]);
    }

    #[test]
    fn reconstruct_errors() {
        let g = build_cardinal_generator(1.0, 10).unwrap();
        let s = vec![c(1.0, 0.0); g.len()];
        assert!(matches!(
            reconstruct(&s, &g, c(0.5, 0.0), &loose(2.0), 1e-6),
            Err(Error::DecayCertificateViolated { .. })
        ));
        let mut s = vec![c(0.0, 0.0); g.len()];
        s[0] = c(1.0, 0.0);
        assert!(matches!(
            reconstruct(&s, &g, c(10.5, 0.0), &loose(2.0), 1e-6),
            Err(Error::TailNotConverged { .. })
        ));
        assert!(reconstruct(&s[1..], &g, c(0.5, 0.0), &loose(2.0), 1e-6).is_err());
    }

    #[test]
    fn band_limited_fixtures_reconstruct() {
        let g = build_cardinal_generator(1.0, 200).unwrap();
        for fx in band_limited() {
            let s = g.sample(&fx.f);
            let cert = DecayCertificate::fit(&s, &g, fx.alpha, fx.nu);
            for z in [c(0.3, 0.4), c(-1.7, -1.0), c(2.0, 1.0)] {
                let r = reconstruct(&s, &g, z, &cert, 1e-6).unwrap();
                let err = (r.value - fx.f.eval(z)).norm();
                assert!(err <= 1e-6, "{} at {z}: {err}", fx.name);
                assert!(err <= r.tail + r.unstored_tail + 1e-12, "{} at {z}: {err}", fx.name);
            }
        }
    }

    #[test]
    fn series_bound_examples() {
        let g = build_cardinal_generator(1.0, 200).unwrap();
        assert!((g.kernel(0, c(0.0, 1.0)).norm() - PI.sinh()).abs() < 1e-12);
        assert!((PI.sinh() - 11.548_739).abs() < 1e-6);
        let i = g.position(7).unwrap();
        assert!((g.kernel(i, g.zeros[i]).norm() - PI).abs() < 1e-14);
        let ctx = standard_context().unwrap();
        let probes: Vec<Complex64> = (0..5)
            .flat_map(|i| (0..5).map(move |j| c(-2.0 + i as f64, -1.0 + 0.5 * j as f64)))
            .collect();
        let fx = &band_limited()[2];
        let rep = certify_series_bound(&fx.f, &g, &ctx, 1, 2.0, &probes, None).unwrap();
        assert!(rep.passed, "{rep:?}");
        let tail = rep.named("summability_tail").unwrap();
        assert!(tail + 2.0 * (1.0 + 200.0f64).powi(-2) / 2.0 < 2e-4);
        let a11 = rep.named("A11").unwrap();
        assert!(matches!(
            certify_series_bound(&fx.f, &g, &ctx, 1, 2.0, &probes, Some(0.5 * a11)),
            Err(Error::TermBoundViolated { .. })
        ));
    }

    #[test]
    fn zero_shift_examples() {
        let base = EntireFunctionModel::ZeroProduct {
            prefactor: c(1.0, 0.0),
            zeros: vec![(c(1.0, 0.0), 1)],
        };
        let mut spec = ZeroShiftSpec {
            zeros: vec![c(1.0, 0.0)],
            multiplicities: vec![1],
            shifts: vec![c(0.0, 0.0)],
            radii: vec![0.5],
        };
        let (ft, rep) = zero_shift(&spec, &base, &[c(0.0, 0.0), c(2.0, 0.0), c(1.0, 3.0)]).unwrap();
        assert_eq!(rep.constant, 0.0);
        assert_eq!(ft.eval(c(0.3, 0.7)), base.eval(c(0.3, 0.7)));
        spec.shifts[0] = c(0.1, 0.0);
        let (_, rep) = zero_shift(&spec, &base, &[c(0.0, 0.0)]).unwrap();
        assert_eq!(rep.constant, 0.0);
        let (ft, rep) = zero_shift(&spec, &base, &[c(2.0, 0.0)]).unwrap();
        let want = ((1.0f64 - 2.0 / 1.1).abs().ln() - 1.0f64.ln()).abs();
        assert!((want - 0.200_670_695).abs() < 1e-8);
        assert!((rep.constant - want).abs() < 1e-14);
        assert!(ft.eval(c(1.1, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_shift_errors() {
        let (mut spec, base) = zero_shift_fixture(0.1);
        assert!(matches!(
            zero_shift(&spec, &base, &[c(1.1, 0.0)]),
            Err(Error::ProbeInsideDisk { index: 0, .. })
        ));
        spec.shifts[3] = c(0.3, 0.0);
        assert!(matches!(zero_shift(&spec, &base, &[]), Err(Error::ShiftLeavesDisk { index: 3 })));
    }

    #[test]
    fn zero_shift_nested_family() {
        let mut last = f64::INFINITY;
        for total in [0.1, 0.05, 0.025] {
            let (spec, base) = zero_shift_fixture(total);
            assert!((spec.shift_sum() - total).abs() < 1e-12);
            let (_, coarse) = zero_shift(&spec, &base, &spec.outside_probes(64, 15.0, 61)).unwrap();
            let (_, fine) = zero_shift(&spec, &base, &spec.outside_probes(256, 15.0, 121)).unwrap();
            assert!(fine.constant.is_finite());
            assert!((fine.constant - coarse.constant).abs() <= 0.01 * fine.constant);
            assert!(fine.constant <= last);
            last = fine.constant;
        }
    }

    #[test]
    fn schedule_without_mu_zeros() {
        let lam = [c(10.0, 0.0), c(0.0, -12.0), c(-15.0, 3.0)];
        let s = shift_schedule(&[], &lam, 2.0, 1.0, 1.0, 2.0).unwrap();
        assert_eq!(s.nu, 6.0);
        for j in 0..lam.len() {
            assert_eq!(s.k0[j], 0);
            let want = Complex64::from_polar(0.5 * s.sigmas[j], lam[j].arg());
            assert!((s.spec.shifts[j] - want).norm() < 1e-18);
        }
        assert!(s.report.passed, "{:?}", s.report);
    }

    #[test]
    fn schedule_shift_cap() {
        let (a_mu, d1) = (2.0, 1.0);
        let mu = [c(10.0, 0.5), c(11.0, 0.0), c(-6.0, 0.0)];
        let s = shift_schedule(&mu, &[c(10.0, 0.0)], a_mu, d1, 1.0, 2.0).unwrap();
        let cap_b = d1 * 2f64.powi(-12) / (a_mu * a_mu);
        assert!(s.b < cap_b);
        let bound = 2f64.powi(11) * s.b * a_mu * a_mu * 10f64.powi(-4);
        assert!(s.spec.shifts[0].norm() <= bound);
        assert!(s.spec.shifts[0].norm() < 1e-6);
        assert!(s.report.passed);
    }

    #[test]
    fn schedule_avoids_a_shadow() {
        let b_guess = 0.5 * 2f64.powi(-12) / 4.0;
        let sigma = 2f64.powi(8) * b_guess * 2.0 * 10f64.powi(-5);
        // a mu-zero whose shadow covers the first interval
        let mu = [c(10.0 + 0.5 * sigma, 0.0)];
        let s = shift_schedule(&mu, &[c(10.0, 0.0)], 2.0, 1.0, 1.0, 2.0).unwrap();
        assert!((s.sigmas[0] - sigma).abs() < 1e-20);
        assert_eq!(s.k0[0], 1);
    }

    #[test]
    fn schedule_preconditions() {
        assert!(shift_schedule(&[], &[c(3.0, 0.0)], 2.0, 1.0, 1.0, 2.0).is_err());
        assert!(shift_schedule(&[c(2.0, 0.0)], &[c(10.0, 0.0)], 2.0, 1.0, 1.0, 2.0).is_err());
        let crowded: Vec<Complex64> = (0..40).map(|k| c(5.0 + 0.01 * k as f64, 0.0)).collect();
        assert!(shift_schedule(&crowded, &[c(10.0, 0.0)], 2.0, 1.0, 1.0, 2.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn reconstruct_is_linear(
            a in prop::collection::vec(-1.0..1.0f64, 21),
            b in prop::collection::vec(-1.0..1.0f64, 21),
            zr in -2.0..2.0f64,
            zi in -1.0..1.0f64,
        ) {
            let g = build_cardinal_generator(1.0, 10).unwrap();
            let cert = DecayCertificate { decay_constant: 2e3, alpha: 2.0, nu: 0.0 };
            let damp = |v: &[f64]| -> Vec<Complex64> {
                v.iter().zip(&g.zeros).map(|(x, z)| c(*x / (1.0 + z.norm()).powi(4), 0.0)).collect()
            };
            let (sa, sb) = (damp(&a), damp(&b));
            let sum: Vec<Complex64> = sa.iter().zip(&sb).map(|(x, y)| x * 2.0 - y * 0.5).collect();
            let z = c(zr, zi);
            let f = |s: &[Complex64]| reconstruct(s, &g, z, &cert, 0.0).unwrap();
            let (ra, rb, rs) = (f(&sa), f(&sb), f(&sum));
            prop_assert!((rs.value - (ra.value * 2.0 - rb.value * 0.5)).norm() < 1e-12);
        }

        #[test]
        fn reconstruct_interpolates(k in -10i64..=10, vals in prop::collection::vec(-1.0..1.0f64, 21)) {
            let g = build_cardinal_generator(1.0, 10).unwrap();
            let s: Vec<Complex64> = vals.iter().zip(&g.zeros).map(|(x, z)| c(*x / (1.0 + z.norm()).powi(3), 0.0)).collect();
            let cert = DecayCertificate::fit(&s, &g, 2.0, 0.0);
            let i = g.position(k).unwrap();
            let r = reconstruct(&s, &g, g.zeros[i], &cert, 1e-6).unwrap();
            prop_assert_eq!(r.value, s[i]);
        }
    }
}
