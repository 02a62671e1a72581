//! Named fixtures shared by the command line tool and the test suites.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::carleman::{AssociatedWeight, CarlemanSequence, EpsilonRule, ScaledWeightFamily};
use crate::convexweights::{ConvexWeight, ThetaFamily};
use crate::error::Result;
use crate::functionals::{Measure, MeasureFunctional, ScaleContext};
use crate::quad::PanelRule;
use crate::spaces::EntireFunctionModel;

const SQRT_PI: f64 = 1.772_453_850_905_516;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `M_k = k!`, `ψ = x²/2`, `σ = 1`, `ε_m = 1/m`.
pub fn standard_context() -> Result<ScaleContext> {
    static CTX: OnceLock<ScaleContext> = OnceLock::new();
    if let Some(ctx) = CTX.get() {
        return Ok(ctx.clone());
    }
    let ctx = context_for(CarlemanSequence::gevrey(1.0, 1024)?, ConvexWeight::power(2.0)?, 1.0)?;
    Ok(CTX.get_or_init(|| ctx).clone())
}

pub fn context_for(seq: CarlemanSequence, weight: ConvexWeight, sigma: f64) -> Result<ScaleContext> {
    let base = Arc::new(AssociatedWeight::new(Arc::new(seq)));
    let family = Arc::new(ScaledWeightFamily::new(base, sigma, EpsilonRule::Harmonic)?);
    Ok(ScaleContext::new(family, Arc::new(ThetaFamily::new(Arc::new(weight)))))
}

/// An entire `U` decaying like `e^{ψ(Im z)}/(1+|z|²)` for `ψ = x²/2`,
/// with its bound and the density it is the transform of.
#[derive(Debug, Clone)]
pub struct DecayingTransform {
    pub name: &'static str,
    pub u: EntireFunctionModel,
    /// Sup of `|U|(1+|z|²)e^{-ψ(Im z)}`, rounded up.
    pub c_u: f64,
    pub density: fn(f64) -> Complex64,
}

/// Gaussian, shifted Gaussian and odd Gaussian transform pairs.
pub fn decaying_transforms() -> Vec<DecayingTransform> {
    vec![
        DecayingTransform {
            name: "gauss",
            u: EntireFunctionModel::closure(|z| SQRT_PI * (-z * z / 4.0).exp()),
            c_u: 3.35,
            density: |t| c((-t * t).exp(), 0.0),
        },
        DecayingTransform {
            name: "shifted-gauss",
            u: EntireFunctionModel::closure(|z| SQRT_PI * (c(0.0, -1.0) * z - z * z / 4.0).exp()),
            c_u: 37.82,
            density: |t| c((-(t - 1.0) * (t - 1.0)).exp(), 0.0),
        },
        DecayingTransform {
            name: "odd-gauss",
            u: EntireFunctionModel::closure(|z| c(0.0, -0.5) * z * SQRT_PI * (-z * z / 4.0).exp()),
            c_u: 3.42,
            density: |t| c(t * (-t * t).exp(), 0.0),
        },
    ]
}

pub fn decaying_transform(name: &str) -> Option<DecayingTransform> {
    decaying_transforms().into_iter().find(|f| f.name == name)
}

/// Scaled normal-form functionals used to check the series expansion of
/// the transform.
pub fn series_functionals(ctx: &ScaleContext) -> Vec<(&'static str, MeasureFunctional)> {
    let mut geometric = MeasureFunctional::new(1).with_context(ctx.clone());
    for k in 0..=60 {
        geometric = geometric.with_term(k, Measure::point(0.0, c(0.5f64.powi(k as i32), 0.0)), true);
    }
    let mixed = MeasureFunctional::new(1)
        .with_context(ctx.clone())
        .with_term(0, Measure::uniform(-1.0, 1.0, 16, c(0.5, 0.0)), true)
        .with_term(
            1,
            Measure::density(PanelRule::uniform(-3.0, 3.0, 24), |x| c(x * (-x * x).exp(), 0.0)),
            true,
        )
        .with_term(2, Measure::Points(vec![(0.5, c(0.3, 0.0)), (-0.5, c(-0.3, 0.0))]), true);
    let mut two_point = MeasureFunctional::new(1).with_context(ctx.clone());
    for k in 0..=40 {
        let m = Measure::Points(vec![
            (0.3, c((-0.5f64).powi(k as i32), 0.0)),
            (-0.7, c(0.2f64.powi(k as i32), 0.0)),
        ]);
        two_point = two_point.with_term(k, m, true);
    }
    vec![("geometric", geometric), ("mixed", mixed), ("two-point", two_point)]
}

/// Evaluation at 0, used as the default functional.
pub fn delta(ctx: &ScaleContext) -> MeasureFunctional {
    MeasureFunctional::new(1)
        .with_context(ctx.clone())
        .with_term(0, Measure::point(0.0, c(1.0, 0.0)), false)
}

/// `f ↦ ∫_{-1}^{1} f`.
pub fn interval_mean(ctx: &ScaleContext) -> MeasureFunctional {
    MeasureFunctional::new(1)
        .with_context(ctx.clone())
        .with_term(0, Measure::uniform(-1.0, 1.0, 16, c(1.0, 0.0)), false)
}

/// `n × n` probe points on `[-h, h]²`.
pub fn probe_grid(h: f64, n: usize) -> Vec<Complex64> {
    let step = if n > 1 { 2.0 * h / (n - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let re = if n > 1 { -h + step * i as f64 } else { 0.0 };
            let im = if n > 1 { -h + step * j as f64 } else { 0.0 };
            out.push(c(re, im));
        }
    }
    out
}

fn sinc(w: Complex64) -> Complex64 {
    let x = std::f64::consts::PI * w;
    if x.norm() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Band-limited entire function with summable samples on the integers and
/// the decay exponents `(α, ν)` its samples satisfy.
#[derive(Debug, Clone)]
pub struct BandLimited {
    pub name: &'static str,
    pub f: EntireFunctionModel,
    pub alpha: f64,
    pub nu: f64,
}

pub fn band_limited() -> Vec<BandLimited> {
    vec![
        BandLimited {
            name: "sinc",
            f: EntireFunctionModel::closure(sinc),
            alpha: 2.0,
            nu: 0.0,
        },
        BandLimited {
            name: "sinc4-wide",
            f: EntireFunctionModel::closure(|z| sinc(z / 5.0).powu(4)),
            alpha: 2.0,
            nu: 1.0,
        },
        BandLimited {
            name: "shifted-sinc3",
            f: EntireFunctionModel::closure(|z| sinc((z - 0.3) / 3.0).powu(3)),
            alpha: 2.0,
            nu: 0.0,
        },
    ]
}

/// Finite product with zeros `1..=12` and a double zero at `-2.5`, disks of
/// radius 1/4, shifts in varying directions normalized so that
/// `Σ m_j |t_j| / r_j = total`.
pub fn zero_shift_fixture(total: f64) -> (crate::lagrange::ZeroShiftSpec, EntireFunctionModel) {
    let mut zeros: Vec<Complex64> = (1..=12).map(|j| c(j as f64, 0.0)).collect();
    zeros.push(c(-2.5, 0.0));
    let mut multiplicities = vec![1u32; 12];
    multiplicities.push(2);
    let radii = vec![0.25; zeros.len()];
    let raw: Vec<Complex64> = (0..zeros.len())
        .map(|j| Complex64::from_polar(1.0 / ((j + 1) * (j + 1)) as f64, j as f64))
        .collect();
    let s: f64 = raw
        .iter()
        .zip(&multiplicities)
        .zip(&radii)
        .map(|((t, m), r)| *m as f64 * t.norm() / r)
        .sum();
    let shifts = raw.iter().map(|t| t * (total / s)).collect();
    let base = EntireFunctionModel::ZeroProduct {
        prefactor: c(1.0, 0.0),
        zeros: zeros.iter().copied().zip(multiplicities.iter().copied()).collect(),
    };
    (
        crate::lagrange::ZeroShiftSpec {
            zeros,
            multiplicities,
            shifts,
            radii,
        },
        base,
    )
}
