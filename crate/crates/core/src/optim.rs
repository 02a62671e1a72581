//! One-dimensional maximization helpers and compensated summation.

use std::ops::AddAssign;

use num_complex::Complex64;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
/// Stops when the bracket is below `rel_tol * (1 + |x|)`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= rel_tol * (1.0 + c.abs().max(d.abs())) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Result of a bracketed maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    /// True when the best grid point was an endpoint of the search interval.
    pub at_boundary: bool,
}

/// Scans `grid` for the best point, then refines by golden section on the
/// two neighbouring cells. Non-finite samples are skipped.
pub fn grid_max_refine<F: FnMut(f64) -> f64>(mut f: F, grid: &[f64], rel_tol: f64) -> Maximum {
    let mut best = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &x) in grid.iter().enumerate() {
        let v = f(x);
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    let n = grid.len();
    let at_boundary = best == 0 || best + 1 == n;
    if n < 3 || !best_v.is_finite() {
        return Maximum {
            x: grid.get(best).copied().unwrap_or(0.0),
            value: best_v,
            at_boundary,
        };
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(n - 1)];
    let (x, v) = golden_max(&mut f, lo, hi, rel_tol);
    if v >= best_v {
        Maximum {
            x,
            value: v,
            at_boundary,
        }
    } else {
        Maximum {
            x: grid[best],
            value: best_v,
            at_boundary,
        }
    }
}

/// Neumaier compensated sum of complex terms.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
    abs_sum: f64,
}

fn two_sum(s: f64, c: &mut f64, v: f64) -> f64 {
    let t = s + v;
    if s.abs() >= v.abs() {
        *c += (s - t) + v;
    } else {
        *c += (v - t) + s;
    }
    t
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }

    /// Sum of the moduli of all added terms (cancellation diagnostics).
    pub fn abs_total(&self) -> f64 {
        self.abs_sum
    }
}

impl AddAssign<Complex64> for CompensatedSum {
    fn add_assign(&mut self, v: Complex64) {
        self.sum.re = two_sum(self.sum.re, &mut self.comp.re, v.re);
        self.sum.im = two_sum(self.sum.im, &mut self.comp.im, v.im);
        self.abs_sum += v.norm();
    }
}

impl AddAssign<f64> for CompensatedSum {
    fn add_assign(&mut self, v: f64) {
        *self += Complex64::new(v, 0.0);
    }
}
