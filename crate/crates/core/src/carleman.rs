//! Carleman sequences `M_k`, the associated weight
//! `w(r) = sup_k ln(r^k / M_k)`, its counting function and the scaled family
//! `w_m(r) = w(r / (σ + ε_m))`.
//!
//! Sequences are stored through `ln M_k` so Gevrey sequences of order several
//! thousand stay finite.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::optim::golden_max;
use crate::quad::log_grid;
use crate::report::BoundReport;

pub const DEFAULT_K_MAX: usize = 512;

/// JSON descriptor: `{"kind":"gevrey","s":1.5,"K":512}` or
/// `{"kind":"explicit","values":[...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SequenceDescriptor {
    Gevrey {
        s: f64,
        #[serde(rename = "K", default = "default_k")]
        k: usize,
    },
    Explicit {
        values: Vec<f64>,
    },
}

fn default_k() -> usize {
    DEFAULT_K_MAX
}

impl SequenceDescriptor {
    pub fn build(&self) -> Result<CarlemanSequence> {
        match self {
            Self::Gevrey { s, k } => CarlemanSequence::gevrey(*s, *k),
            Self::Explicit { values } => CarlemanSequence::explicit(values),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    /// `M_k = (k!)^s`.
    Gevrey { s: f64 },
}

#[derive(Debug, Clone)]
pub struct CarlemanSequence {
    /// `ln M_k` for every stored k (generator sequences store `2 K_max + 1` terms).
    log_values: Vec<f64>,
    /// `ln M_{k+1} - ln M_k`.
    increments: Vec<f64>,
    generator: Option<Generator>,
    k_max: usize,
    /// Increments nondecreasing in floating point, enabling the bisection argmax.
    monotone_increments: bool,
}

impl CarlemanSequence {
    pub fn gevrey(s: f64, k_max: usize) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return invalid(format!("Gevrey exponent must be positive, got {s}"));
        }
        if k_max < 2 {
            return invalid("K must be at least 2");
        }
        let stored = 2 * k_max;
        let increments: Vec<f64> = (0..stored).map(|k| s * ((k + 1) as f64).ln()).collect();
        Ok(Self::from_increments(
            increments,
            Some(Generator::Gevrey { s }),
            k_max,
        ))
    }

    pub fn explicit(values: &[f64]) -> Result<Self> {
        if values.len() < 3 {
            return invalid("explicit sequence needs at least three terms");
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return invalid(format!("sequence values must be positive, got {v}"));
        }
        if (values[0] - 1.0).abs() > 1e-12 {
            return invalid(format!("M_0 must equal 1, got {}", values[0]));
        }
        if let Some(k) = (1..values.len()).find(|&k| values[k] < values[k - 1]) {
            return invalid(format!("sequence decreases at k = {k}"));
        }
        let increments: Vec<f64> = values.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
        Ok(Self::from_increments(increments, None, values.len() - 1))
    }

    fn from_increments(increments: Vec<f64>, generator: Option<Generator>, k_max: usize) -> Self {
        let mut log_values = Vec::with_capacity(increments.len() + 1);
        log_values.push(0.0);
        let mut acc = 0.0;
        for d in &increments {
            acc += d;
            log_values.push(acc);
        }
        let monotone_increments = increments.windows(2).all(|w| w[1] >= w[0]);
        Self {
            log_values,
            increments,
            generator,
            k_max,
            monotone_increments,
        }
    }

    pub fn generator(&self) -> Option<Generator> {
        self.generator
    }

    /// Number of stored terms.
    pub fn len(&self) -> usize {
        self.log_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_values.is_empty()
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn log_m(&self, k: usize) -> f64 {
        self.log_values[k]
    }

    pub fn m(&self, k: usize) -> f64 {
        self.log_values[k].exp()
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    /// Smallest maximizer of `k ln r - ln M_k` over `0..=upto`.
    fn argmax(&self, ln_r: f64, upto: usize) -> (usize, f64) {
        if self.monotone_increments {
            // the objective is concave in k: it rises while increment < ln r
            let k = self.increments[..upto].partition_point(|&d| d < ln_r);
            return (k, k as f64 * ln_r - self.log_values[k]);
        }
        let mut best = (0usize, 0.0f64);
        for k in 1..=upto {
            let v = k as f64 * ln_r - self.log_values[k];
            if v > best.1 {
                best = (k, v);
            }
        }
        best
    }

    /// `(w(r), N(r))`, with one automatic doubling of the truncation order.
    pub fn weight_and_count(&self, r: f64) -> Result<(f64, usize)> {
        if !(r >= 0.0) || r.is_infinite() {
            return invalid(format!("radius must be finite and nonnegative, got {r}"));
        }
        if r == 0.0 {
            return Ok((0.0, 0));
        }
        let ln_r = r.ln();
        let (k, v) = self.argmax(ln_r, self.k_max);
        if k < self.k_max {
            return Ok((v, k));
        }
        let last = self.len() - 1;
        if last > self.k_max {
            let (k2, v2) = self.argmax(ln_r, last);
            if k2 < last {
                return Ok((v2, k2));
            }
            return Err(Error::TruncationNotConverged { k: k2, r });
        }
        Err(Error::TruncationNotConverged { k, r })
    }

    pub fn weight_eval(&self, r: f64) -> Result<f64> {
        self.weight_and_count(r).map(|(w, _)| w)
    }

    pub fn counting_function(&self, r: f64) -> Result<usize> {
        if !(r > 0.0) {
            return invalid(format!("counting function needs r > 0, got {r}"));
        }
        self.weight_and_count(r).map(|(_, k)| k)
    }

    /// Truncated supremum over all stored terms. Always a lower bound for w.
    pub fn weight_lower_bound(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.argmax(r.ln(), self.len() - 1).1
    }

    /// `M_k · inf_{r>0} e^{w(r)} / r^k`, computed on a log-spaced bracket
    /// `[1e-3, 1e6]` and refined by golden section in `ln r`.
    pub fn dual_identity_ratio(&self, k: usize) -> Result<f64> {
        if k >= self.len() {
            return invalid(format!("k = {k} exceeds stored terms"));
        }
        let objective = |u: f64| -> (f64, bool) {
            let r = u.exp();
            match self.weight_eval(r) {
                Ok(w) => (w - k as f64 * u, true),
                Err(_) => (self.weight_lower_bound(r) - k as f64 * u, false),
            }
        };
        let grid: Vec<f64> = log_grid(1e-3, 1e6, 241).iter().map(|r| r.ln()).collect();
        let mut best = 0;
        let mut best_v = f64::INFINITY;
        for (i, &u) in grid.iter().enumerate() {
            let (v, _) = objective(u);
            if v < best_v {
                best_v = v;
                best = i;
            }
        }
        let lo = grid[best.saturating_sub(1)];
        let hi = grid[(best + 1).min(grid.len() - 1)];
        let (u, neg) = golden_max(|u| -objective(u).0, lo, hi, 1e-10);
        let (v, exact) = objective(u);
        if !exact {
            return Err(Error::TruncationNotConverged {
                k: self.len() - 1,
                r: u.exp(),
            });
        }
        let min = v.min(-neg).min(best_v);
        Ok((self.log_m(k) + min).exp())
    }

    /// Condition i): `M_k² ≤ M_{k-1} M_{k+1}`.
    pub fn certify_log_convexity(&self) -> BoundReport {
        let mut worst = f64::NEG_INFINITY;
        let mut at = 0;
        for k in 1..self.len() - 1 {
            let excess = 2.0 * self.log_values[k] - self.log_values[k - 1] - self.log_values[k + 1];
            let scaled = excess / (1.0 + self.log_values[k].abs());
            if scaled > worst {
                worst = scaled;
                at = k;
            }
        }
        let mut rep = BoundReport::new("log-convexity")
            .with_constant(worst)
            .with_ratio(worst)
            .with_witness(vec![at as f64])
            .with_grid(format!("k=1..{}", self.len() - 2));
        if worst > 1e-12 {
            rep = rep.failed().with_note(format!("M_k^2 > M_(k-1) M_(k+1) at k = {at}"));
        }
        rep
    }

    /// Condition ii) on the stored range: `(M_{k+1}/M_k)^{1/k}` decreases toward 1.
    pub fn certify_ratio_root(&self) -> BoundReport {
        let roots: Vec<f64> = (1..self.increments.len())
            .map(|k| (self.increments[k] / k as f64).exp())
            .collect();
        let mut worst = 0.0f64;
        let mut at = 0;
        for (i, w) in roots.windows(2).enumerate() {
            let rise = (w[1] - w[0]) / w[0];
            if rise > worst {
                worst = rise;
                at = i + 2;
            }
        }
        let first = roots[0];
        let last = *roots.last().unwrap();
        let approaching = (last - 1.0).abs() < (first - 1.0).abs() || first == 1.0;
        let mut rep = BoundReport::new("ratio-root-limit")
            .with_constant(last)
            .with_ratio(worst)
            .with_witness(vec![at as f64])
            .with_grid(format!("k=1..{}", roots.len()))
            .with_named("first_root", first);
        if worst > 1e-12 || !approaching {
            rep = rep.failed().with_note("ratio roots are not decreasing toward 1");
        }
        rep
    }

    /// Condition iii): `M_k ≥ Q1 Q2^k k!`. Reports the largest `Q2` for which
    /// `Q1 = 1` works on the stored range and fails when
    /// `(ln M_k - ln k!)/k` keeps falling at the end of the range.
    pub fn certify_factorial_minorant(&self) -> BoundReport {
        let mut ln_fact = 0.0;
        let mut slopes = Vec::with_capacity(self.len());
        for k in 1..self.len() {
            ln_fact += (k as f64).ln();
            slopes.push((self.log_values[k] - ln_fact) / k as f64);
        }
        let (argmin, &min) = slopes
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let k_min = argmin + 1;
        let n = slopes.len();
        let three_quarter = slopes[(3 * n) / 4];
        let falling = k_min > (3 * n) / 4 && min < three_quarter - 1e-9;
        let q2 = min.exp();
        let mut rep = BoundReport::new("factorial-minorant")
            .with_constant(q2)
            .with_named("q1", 1.0)
            .with_named("q2", q2)
            .with_ratio(min)
            .with_witness(vec![k_min as f64])
            .with_grid(format!("k=0..{}", self.len() - 1));
        if falling {
            rep = rep
                .failed()
                .with_note("ln(M_k/k!)/k decreases without bound over the stored range");
        }
        rep
    }

    pub fn certify_conditions(&self) -> Vec<BoundReport> {
        vec![
            self.certify_log_convexity(),
            self.certify_ratio_root(),
            self.certify_factorial_minorant(),
        ]
    }
}

const CACHE_LIMIT: usize = 1 << 16;

/// The associated weight together with its certified linear-growth constant
/// `A_w` (`w(r) ≤ A_w r`).
#[derive(Debug)]
pub struct AssociatedWeight {
    sequence: Arc<CarlemanSequence>,
    a_w: f64,
    growth_report: BoundReport,
    cache: Mutex<HashMap<u64, (f64, usize)>>,
}

impl AssociatedWeight {
    /// Certifies `A_w` on a 400-point log grid over `[1e-2, 1e3]` (points whose
    /// truncation does not converge are skipped and counted).
    pub fn new(sequence: Arc<CarlemanSequence>) -> Self {
        Self::with_grid(sequence, &log_grid(1e-2, 1e3, 400))
    }

    pub fn with_grid(sequence: Arc<CarlemanSequence>, grid: &[f64]) -> Self {
        let mut best = 0.0f64;
        let mut at = 0.0;
        let mut skipped = 0usize;
        for &r in grid.iter().filter(|r| **r > 0.0) {
            match sequence.weight_eval(r) {
                Ok(w) => {
                    if w / r > best {
                        best = w / r;
                        at = r;
                    }
                }
                Err(_) => skipped += 1,
            }
        }
        // w vanishes on [0, M_1]; any positive constant then works there
        let raw = if best > 0.0 { best } else { 1.0 };
        let a_w = 1.05 * raw;
        let growth_report = BoundReport::new("weight-linear-growth")
            .with_constant(a_w)
            .with_ratio(best / a_w)
            .with_witness(vec![at])
            .with_grid(format!("log grid, {} points", grid.len()))
            .with_named("max_w_over_r", best)
            .with_named("skipped_points", skipped as f64);
        Self {
            sequence,
            a_w,
            growth_report,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn sequence(&self) -> &Arc<CarlemanSequence> {
        &self.sequence
    }

    pub fn a_w(&self) -> f64 {
        self.a_w
    }

    pub fn growth_report(&self) -> &BoundReport {
        &self.growth_report
    }

    pub fn eval_with_count(&self, r: f64) -> Result<(f64, usize)> {
        let key = r.to_bits();
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = self.sequence.weight_and_count(r)?;
        let mut cache = self.cache.lock().unwrap();
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, v);
        Ok(v)
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        self.eval_with_count(r).map(|v| v.0)
    }

    pub fn count(&self, r: f64) -> Result<usize> {
        if !(r > 0.0) {
            return invalid(format!("counting function needs r > 0, got {r}"));
        }
        self.eval_with_count(r).map(|v| v.1)
    }
}

/// Decreasing-to-zero sequence `ε_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase", deny_unknown_fields)]
pub enum EpsilonRule {
    /// `ε_m = 1/m`.
    Harmonic,
    /// Explicit strictly decreasing values for `m = 1, 2, ...`; continued
    /// geometrically past the end of the list.
    Explicit { values: Vec<f64> },
}

impl Default for EpsilonRule {
    fn default() -> Self {
        Self::Harmonic
    }
}

impl EpsilonRule {
    pub fn validate(&self) -> Result<()> {
        if let Self::Explicit { values } = self {
            if values.len() < 2 {
                return invalid("explicit epsilon rule needs at least two values");
            }
            if values.iter().any(|v| !(*v > 0.0)) || values.windows(2).any(|w| w[1] >= w[0]) {
                return invalid("epsilon values must be positive and strictly decreasing");
            }
        }
        Ok(())
    }

    pub fn eps(&self, m: usize) -> f64 {
        assert!(m >= 1, "epsilon index starts at 1");
        match self {
            Self::Harmonic => 1.0 / m as f64,
            Self::Explicit { values } => {
                let n = values.len();
                if m <= n {
                    values[m - 1]
                } else {
                    let q = values[n - 1] / values[n - 2];
                    values[n - 1] * q.powi((m - n) as i32)
                }
            }
        }
    }
}

/// `w_m(r) = w(r / (σ + ε_m))`.
#[derive(Debug, Clone)]
pub struct ScaledWeightFamily {
    base: Arc<AssociatedWeight>,
    sigma: f64,
    epsilons: EpsilonRule,
}

impl ScaledWeightFamily {
    pub fn new(base: Arc<AssociatedWeight>, sigma: f64, epsilons: EpsilonRule) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return invalid(format!("sigma must be positive, got {sigma}"));
        }
        epsilons.validate()?;
        Ok(Self {
            base,
            sigma,
            epsilons,
        })
    }

    pub fn base(&self) -> &Arc<AssociatedWeight> {
        &self.base
    }

    pub fn sequence(&self) -> &CarlemanSequence {
        self.base.sequence()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eps(&self, m: usize) -> f64 {
        self.epsilons.eps(m)
    }

    /// `σ + ε_m`.
    pub fn scale(&self, m: usize) -> f64 {
        self.sigma + self.eps(m)
    }

    pub fn w_m(&self, m: usize, r: f64) -> Result<f64> {
        self.base.eval(r / self.scale(m))
    }

    /// `β_m = (σ + ε_m) / (ε_m - ε_{m+1})`.
    pub fn beta(&self, m: usize) -> f64 {
        self.scale(m) / (self.eps(m) - self.eps(m + 1))
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|r| !(*r >= 0.0) || r.is_infinite()) {
        return invalid("radius grid must be finite and nonnegative");
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return invalid("radius grid must be sorted");
    }
    Ok(())
}

/// `|w(r2) - w(r1)| ≤ A_w e |r2 - r1|` over all grid pairs, and
/// `N(r) ≤ A_w e r` for `r > 1/e`.
pub fn certify_lipschitz(weight: &AssociatedWeight, radius_grid: &[f64]) -> Result<BoundReport> {
    check_grid(radius_grid)?;
    let lip = weight.a_w() * std::f64::consts::E;
    let vals: Vec<(f64, usize)> = radius_grid
        .iter()
        .map(|&r| weight.eval_with_count(r))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    let mut witness = vec![];
    for i in 0..radius_grid.len() {
        for j in i + 1..radius_grid.len() {
            let dr = radius_grid[j] - radius_grid[i];
            if dr == 0.0 {
                continue;
            }
            let ratio = (vals[j].0 - vals[i].0).abs() / (lip * dr);
            if ratio > worst {
                worst = ratio;
                witness = vec![radius_grid[i], radius_grid[j]];
            }
        }
    }
    let mut count_worst = 0.0f64;
    let mut count_at = f64::NAN;
    for (&r, &(_, n)) in radius_grid.iter().zip(&vals) {
        if r > std::f64::consts::E.recip() {
            let ratio = n as f64 / (lip * r);
            if ratio > count_worst {
                count_worst = ratio;
                count_at = r;
            }
        }
    }
    if worst > 1.0 {
        return Err(Error::InvariantViolated {
            check: "weight-lipschitz".into(),
            witness: format!("r1 = {}, r2 = {}", witness[0], witness[1]),
            detail: format!("ratio {worst}"),
        });
    }
    if count_worst > 1.0 {
        return Err(Error::InvariantViolated {
            check: "counting-function-growth".into(),
            witness: format!("r = {count_at}"),
            detail: format!("ratio {count_worst}"),
        });
    }
    Ok(BoundReport::new("weight-lipschitz")
        .with_constant(weight.a_w())
        .with_ratio(worst)
        .with_witness(witness)
        .with_grid(grid_spec(radius_grid))
        .with_named("counting_ratio", count_worst))
}

fn grid_spec(grid: &[f64]) -> String {
    match (grid.first(), grid.last()) {
        (Some(a), Some(b)) => format!("[{a}, {b}] x {}", grid.len()),
        _ => "empty".into(),
    }
}

fn gap_sup(family: &ScaledWeightFamily, m: usize, a: f64, grid: &[f64]) -> Result<(f64, f64)> {
    let mut q = 0.0f64;
    let mut at = 0.0;
    for &r in grid {
        let v = family.w_m(m, r)? + a * r.ln_1p() - family.w_m(m + 1, r)?;
        if v > q {
            q = v;
            at = r;
        }
    }
    Ok((q, at))
}

/// Smallest `Q ≥ 0` with `w_m + A ln(1+r) ≤ w_{m+1} + Q` on the grid; fails
/// with `GapUnbounded` when doubling the radius range moves Q by more than 1%.
pub fn certify_weight_gap(
    family: &ScaledWeightFamily,
    m: usize,
    a: f64,
    radius_grid: &[f64],
) -> Result<BoundReport> {
    if m == 0 {
        return invalid("m starts at 1");
    }
    if !(a > 0.0) {
        return invalid(format!("A must be positive, got {a}"));
    }
    check_grid(radius_grid)?;
    let (q, at) = gap_sup(family, m, a, radius_grid)?;
    let mut extended: Vec<f64> = radius_grid.to_vec();
    extended.extend(radius_grid.iter().map(|r| 2.0 * r));
    extended.sort_by(f64::total_cmp);
    let (q_ext, at_ext) = gap_sup(family, m, a, &extended)?;
    if (q_ext - q).abs() > 0.01 * q + 1e-8 {
        return Err(Error::GapUnbounded { q, q_ext });
    }
    Ok(BoundReport::new("weight-gap")
        .with_constant(q_ext)
        .with_ratio(q_ext - q)
        .with_witness(vec![if q_ext > q { at_ext } else { at }])
        .with_grid(grid_spec(radius_grid))
        .with_named("m", m as f64)
        .with_named("A", a)
        .with_named("q_base", q))
}

/// `w(r) - w(1) = ∫_1^r N(x)/x dx` evaluated exactly on the step function
/// `N`; used as an independent route to `w`.
pub fn weight_from_counting(seq: &CarlemanSequence, r: f64) -> Result<f64> {
    // breakpoints of N are where ln r crosses an increment
    if r < 1.0 {
        return invalid("integral representation is stated for r >= 1");
    }
    let (w1, _) = seq.weight_and_count(1.0)?;
    let (_, _) = seq.weight_and_count(r)?;
    let (lo, hi) = (0.0, r.ln());
    let mut acc = 0.0;
    let mut u = lo;
    let mut k = seq.counting_function(1.0)?;
    let breaks: Vec<f64> = (0..seq.len() - 1).map(|j| seq.log_m(j + 1) - seq.log_m(j)).collect();
    while u < hi {
        // next point where the maximizing index increases
        let next = breaks.get(k).copied().unwrap_or(f64::INFINITY).min(hi);
        let next = if next <= u { u } else { next };
        acc += k as f64 * (next - u);
        u = next;
        if u < hi {
            k += 1;
        }
    }
    Ok(w1 + acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fact() -> CarlemanSequence {
        CarlemanSequence::gevrey(1.0, DEFAULT_K_MAX).unwrap()
    }

    /// Brute-force oracle over k ≤ 100 with `ln k!` accumulated directly.
    fn brute_weight(r: f64) -> (f64, usize) {
        let mut best = (0.0, 0usize);
        let mut ln_fact = 0.0;
        for k in 1..=100usize {
            ln_fact += (k as f64).ln();
            let v = k as f64 * r.ln() - ln_fact;
            if v > best.0 {
                best = (v, k);
            }
        }
        best
    }

    #[test]
    fn weight_examples() {
        let s = fact();
        assert_eq!(s.weight_eval(0.5).unwrap(), 0.0);
        assert_eq!(s.weight_eval(0.0).unwrap(), 0.0);
        let e = std::f64::consts::E;
        let (oracle, k) = brute_weight(e);
        assert_eq!(k, 2);
        assert!((oracle - (2.0 - 2f64.ln())).abs() < 1e-15);
        assert!((s.weight_eval(e).unwrap() - oracle).abs() < 1e-13);
    }

    #[test]
    fn counting_examples() {
        let s = fact();
        assert_eq!(s.counting_function(1.0).unwrap(), 0);
        assert_eq!(s.counting_function(std::f64::consts::E).unwrap(), 2);
        assert_eq!(s.counting_function(0.5).unwrap(), 0);
        assert!(s.counting_function(0.0).is_err());
    }

    #[test]
    fn fast_argmax_matches_scan() {
        let s = CarlemanSequence::gevrey(1.5, 64).unwrap();
        let vals: Vec<f64> = s.log_values().iter().map(|l| l.exp()).take(60).collect();
        let e = CarlemanSequence::explicit(&vals).unwrap();
        for r in log_grid(0.1, 200.0, 97) {
            let a = s.weight_and_count(r).unwrap();
            let b = e.weight_and_count(r).unwrap();
            assert_eq!(a.1, b.1, "r = {r}");
            assert!((a.0 - b.0).abs() < 1e-9);
        }
    }

    #[test]
    fn truncation_doubles_then_fails() {
        let s = CarlemanSequence::gevrey(1.0, 16).unwrap();
        // N(r) = floor(r) for k!; 20 needs the doubled range
        assert_eq!(s.counting_function(20.5).unwrap(), 20);
        assert!(matches!(
            s.weight_eval(40.0),
            Err(Error::TruncationNotConverged { .. })
        ));
    }

    #[test]
    fn explicit_validation() {
        assert!(CarlemanSequence::explicit(&[2.0, 3.0, 4.0]).is_err());
        assert!(CarlemanSequence::explicit(&[1.0, 3.0, 2.0]).is_err());
        assert!(CarlemanSequence::explicit(&[1.0, -1.0, 2.0]).is_err());
    }

    #[test]
    fn planted_log_convexity_violation() {
        let s = CarlemanSequence::explicit(&[1.0, 2.0, 3.0, 20.0, 30.0]).unwrap();
        let rep = s.certify_log_convexity();
        assert!(!rep.passed);
        assert_eq!(rep.witness_point, vec![3.0]);
    }

    #[test]
    fn gevrey_conditions_pass() {
        for s in [1.0, 1.5, 2.0] {
            let seq = CarlemanSequence::gevrey(s, DEFAULT_K_MAX).unwrap();
            for rep in seq.certify_conditions() {
                assert!(rep.passed, "s = {s}: {rep:?}");
            }
        }
        let sub = CarlemanSequence::gevrey(0.5, DEFAULT_K_MAX).unwrap();
        assert!(!sub.certify_factorial_minorant().passed);
    }

    #[test]
    fn dual_identity_for_factorial() {
        let s = fact();
        for k in 0..=20 {
            let ratio = s.dual_identity_ratio(k).unwrap();
            assert!((ratio - 1.0).abs() < 1e-6, "k = {k}: {ratio}");
        }
    }

    #[test]
    fn integral_representation_agrees() {
        let s = fact();
        for r in [1.0, 1.7, 2.0, 10.5, 57.3, 100.0] {
            let direct = s.weight_eval(r).unwrap();
            let integral = weight_from_counting(&s, r).unwrap();
            assert!((direct - integral).abs() < 1e-9, "r = {r}");
        }
    }

    #[test]
    fn lipschitz_examples() {
        let w = AssociatedWeight::new(Arc::new(fact()));
        let rep = certify_lipschitz(&w, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(rep.worst_ratio, 0.0);
        let e = std::f64::consts::E;
        let rep = certify_lipschitz(&w, &[e, e]).unwrap();
        assert_eq!(rep.worst_ratio, 0.0);
        let rep = certify_lipschitz(&w, &log_grid(0.1, 1e3, 400)).unwrap();
        assert!(rep.worst_ratio <= 1.0);
        assert!(certify_lipschitz(&w, &[1.0, 0.5]).is_err());
    }

    fn family(k: usize) -> ScaledWeightFamily {
        let seq = Arc::new(CarlemanSequence::gevrey(1.0, k).unwrap());
        ScaledWeightFamily::new(Arc::new(AssociatedWeight::new(seq)), 1.0, EpsilonRule::Harmonic)
            .unwrap()
    }

    #[test]
    fn weight_gap_examples() {
        let fam = family(1024);
        let grid: Vec<f64> = std::iter::once(0.0).chain(log_grid(1e-2, 1e3, 300)).collect();
        let rep = certify_weight_gap(&fam, 1, 1.0, &grid).unwrap();
        assert!(rep.constant.is_finite() && rep.constant > 0.0);
        // oracle: direct grid maximum of w_1 + ln(1+r) - w_2
        let direct = grid
            .iter()
            .map(|&r| fam.w_m(1, r).unwrap() + r.ln_1p() - fam.w_m(2, r).unwrap())
            .fold(0.0, f64::max);
        assert!((rep.named("q_base").unwrap() - direct).abs() < 1e-12);

        let tiny = certify_weight_gap(&fam, 1, 1e-9, &grid).unwrap();
        assert!(tiny.constant < 1e-7);
        let zero = certify_weight_gap(&fam, 1, 1.0, &[0.0]).unwrap();
        assert_eq!(zero.constant, 0.0);
    }

    #[test]
    fn scaled_family_is_monotone_in_m() {
        let fam = family(512);
        for r in log_grid(0.1, 300.0, 50) {
            for m in 1..5 {
                assert!(fam.w_m(m, r).unwrap() <= fam.w_m(m + 1, r).unwrap());
            }
        }
    }

    #[test]
    fn epsilon_rules() {
        assert_eq!(EpsilonRule::Harmonic.eps(4), 0.25);
        let e = EpsilonRule::Explicit {
            values: vec![0.5, 0.25],
        };
        assert_eq!(e.eps(3), 0.125);
        assert!(EpsilonRule::Explicit {
            values: vec![0.5, 0.6]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn descriptor_json() {
        let d: SequenceDescriptor = serde_json::from_str(r#"{"kind":"gevrey","s":1.5,"K":64}"#).unwrap();
        assert_eq!(d, SequenceDescriptor::Gevrey { s: 1.5, k: 64 });
        let d: SequenceDescriptor =
            serde_json::from_str(r#"{"kind":"explicit","values":[1,1,2,6]}"#).unwrap();
        assert!(d.build().is_ok());
        assert!(serde_json::from_str::<SequenceDescriptor>(r#"{"kind":"gevrey","s":1,"x":2}"#).is_err());
    }
}
