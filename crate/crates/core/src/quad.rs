//! Gauss–Kronrod quadrature: a globally adaptive driver and a fixed composite
//! panel rule used to discretize densities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Kronrod abscissae on [0, 1]; odd indices are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// The 15 Kronrod nodes and weights mapped to `[a, b]`, with the embedded
/// Gauss weights (zero where the node is not a Gauss node).
pub fn kronrod_nodes(a: f64, b: f64) -> [(f64, f64, f64); 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0, 0.0); 15];
    for j in 0..7 {
        let g = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        out[2 * j] = (c - h * XGK[j], h * WGK[j], h * g);
        out[2 * j + 1] = (c + h * XGK[j], h * WGK[j], h * g);
    }
    out[14] = (c, h * WGK[7], h * WG[3]);
    out
}

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let mut k = Complex64::new(0.0, 0.0);
    let mut g = Complex64::new(0.0, 0.0);
    for (x, wk, wg) in kronrod_nodes(a, b) {
        let v = f(x);
        k += v * wk;
        g += v * wg;
    }
    (k, (k - g).norm())
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub intervals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive GK15 integration of a complex integrand over the
/// interval partition given by `breaks` (sorted, at least two points).
pub fn integrate_complex_with_breaks<F>(
    mut f: F,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult>
where
    F: FnMut(f64) -> Complex64,
{
    if breaks.len() < 2 {
        return Err(Error::InvalidInput("quadrature needs an interval".into()));
    }
    let (lo, hi) = (breaks[0], breaks[breaks.len() - 1]);
    let mut heap = BinaryHeap::new();
    let mut total = Complex64::new(0.0, 0.0);
    let mut total_err = 0.0;
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = gk15(&mut f, w[0], w[1]);
        total += v;
        total_err += e;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    while total_err > opts.abs_tol.max(opts.rel_tol * total.norm()) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::QuadratureNotConverged {
                a: lo,
                b: hi,
                estimate: total_err,
            });
        }
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval cannot be split further in floating point
            heap.push(seg);
            return Err(Error::QuadratureNotConverged {
                a: lo,
                b: hi,
                estimate: total_err,
            });
        }
        let (v1, e1) = gk15(&mut f, seg.a, mid);
        let (v2, e2) = gk15(&mut f, mid, seg.b);
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed accumulated rounding from the running updates
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    let intervals = heap.len();
    for s in heap {
        value += s.value;
        error += s.error;
    }
    Ok(QuadResult {
        value,
        error,
        intervals,
    })
}

pub fn integrate_complex<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64) -> Complex64,
{
    integrate_complex_with_breaks(f, &[a, b], opts)
}

/// Real-valued convenience wrapper; returns `(value, error_estimate)`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let r = integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, opts)?;
    Ok((r.value.re, r.error))
}

/// Composite GK15 rule on a fixed panel partition. Densities are sampled once
/// at the Kronrod nodes; the embedded Gauss rule gives an error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRule {
    pub nodes: Vec<f64>,
    pub kronrod_weights: Vec<f64>,
    pub gauss_weights: Vec<f64>,
}

impl PanelRule {
    pub fn new(breaks: &[f64]) -> Self {
        let mut nodes = Vec::with_capacity(15 * breaks.len());
        let mut kronrod_weights = Vec::with_capacity(nodes.capacity());
        let mut gauss_weights = Vec::with_capacity(nodes.capacity());
        for w in breaks.windows(2) {
            for (x, wk, wg) in kronrod_nodes(w[0], w[1]) {
                nodes.push(x);
                kronrod_weights.push(wk);
                gauss_weights.push(wg);
            }
        }
        Self {
            nodes,
            kronrod_weights,
            gauss_weights,
        }
    }

    pub fn uniform(a: f64, b: f64, panels: usize) -> Self {
        let panels = panels.max(1);
        let breaks: Vec<f64> = (0..=panels)
            .map(|i| a + (b - a) * i as f64 / panels as f64)
            .collect();
        Self::new(&breaks)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Nodes of a log-spaced grid on `[lo, hi]` (both positive).
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let (v, _) = integrate(|x| x.powi(6) - 3.0 * x, -1.0, 2.0, QuadOptions::default()).unwrap();
        let exact = (2f64.powi(7) + 1.0) / 7.0 - 1.5 * (4.0 - 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_fourier_integral() {
        // ∫_{-1}^{1} e^{-ixz} dx = 2 sin z / z
        let z = 7.3;
        let r = integrate_complex(
            |x| Complex64::new(0.0, -x * z).exp(),
            -1.0,
            1.0,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value.re - 2.0 * z.sin() / z).abs() < 1e-12);
        assert!(r.value.im.abs() < 1e-12);
    }

    #[test]
    fn kink_needs_subdivision() {
        let (v, _) = integrate(|x: f64| x.abs(), -1.0, 3.0, QuadOptions::default()).unwrap();
        assert!((v - 5.0).abs() < 1e-10);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let opts = QuadOptions {
            max_intervals: 4,
            ..Default::default()
        };
        let r = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, opts);
        assert!(matches!(r, Err(Error::QuadratureNotConverged { .. })));
    }

    #[test]
    fn panel_rule_integrates_gaussian() {
        let rule = PanelRule::uniform(-8.0, 8.0, 16);
        let s: f64 = rule
            .nodes
            .iter()
            .zip(&rule.kronrod_weights)
            .map(|(x, w)| w * (-x * x).exp())
            .sum();
        assert!((s - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }
}
