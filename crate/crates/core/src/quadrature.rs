//! Composite Gauss–Legendre quadrature for wavelength-scale oscillatory
//! integrands.
//!
//! Panels are laid out on a fixed schedule: an interval of length `b - a`
//! whose integrand oscillates with period `osc_wavelength` is split into
//! `ceil((b - a) / osc_wavelength * points_per_wavelength / nodes_per_panel)`
//! equal panels, each carrying a `nodes_per_panel`-point Gauss–Legendre rule.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub points_per_wavelength: f64,
    pub nodes_per_panel: usize,
    pub max_panels: usize,
    /// Threshold used by [`convergence_check`].
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            points_per_wavelength: 8.0,
            nodes_per_panel: 8,
            max_panels: 1_000_000,
            rel_tol: 1e-6,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.points_per_wavelength >= 2.0) || !self.points_per_wavelength.is_finite() {
            return Err(Error::Config(format!(
                "points_per_wavelength must be >= 2, got {}",
                self.points_per_wavelength
            )));
        }
        if self.nodes_per_panel < 2 {
            return Err(Error::Config(format!(
                "nodes_per_panel must be >= 2, got {}",
                self.nodes_per_panel
            )));
        }
        if self.max_panels == 0 {
            return Err(Error::Config("max_panels must be positive".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Config("rel_tol must be positive".into()));
        }
        Ok(())
    }

    /// Copy with the sampling density doubled.
    pub fn refined(&self) -> Self {
        Self {
            points_per_wavelength: 2.0 * self.points_per_wavelength,
            ..*self
        }
    }

    pub fn panel_count(&self, a: f64, b: f64, osc_wavelength: f64) -> Result<usize> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Interval { a, b });
        }
        if !(osc_wavelength > 0.0) {
            return Err(Error::Config(format!(
                "oscillation wavelength must be positive, got {osc_wavelength}"
            )));
        }
        let raw = ((b - a) / osc_wavelength * self.points_per_wavelength
            / self.nodes_per_panel as f64)
            .ceil();
        if !(raw <= self.max_panels as f64) {
            return Err(Error::PanelCap {
                required: if raw.is_finite() { raw as usize } else { usize::MAX },
                cap: self.max_panels,
            });
        }
        Ok((raw as usize).max(1))
    }

    /// Nodes and weights of the composite rule on `[a, b]`.
    pub fn rule(&self, a: f64, b: f64, osc_wavelength: f64) -> Result<PanelRule> {
        self.validate()?;
        let panels = self.panel_count(a, b, osc_wavelength)?;
        Ok(PanelRule::composite(
            &GaussLegendre::new(self.nodes_per_panel),
            a,
            b,
            panels,
        ))
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from Chebyshev initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Flattened nodes and weights of a composite rule on one interval.
#[derive(Clone, Debug)]
pub struct PanelRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PanelRule {
    pub fn composite(base: &GaussLegendre, a: f64, b: f64, panels: usize) -> Self {
        let width = (b - a) / panels as f64;
        let half = 0.5 * width;
        let count = panels * base.nodes.len();
        let mut nodes = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * width;
            for (x, w) in base.nodes.iter().zip(&base.weights) {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> C64>(&self, mut f: F) -> C64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(C64::new(0.0, 0.0), |acc, (&x, &w)| acc + f(x) * w)
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }
}

/// Composite Gauss–Legendre integral of `f` over `[a, b]`.
pub fn integrate_1d<F: Fn(f64) -> C64>(
    f: F,
    a: f64,
    b: f64,
    osc_wavelength: f64,
    spec: &QuadratureSpec,
) -> Result<C64> {
    Ok(spec.rule(a, b, osc_wavelength)?.integrate(f))
}

/// Tensor-product composite Gauss–Legendre integral over a rectangle.
///
/// The inner sum runs over `y` for each fixed `x` node, then the outer sum
/// accumulates in node order.
pub fn integrate_2d<F: Fn(f64, f64) -> C64>(
    f: F,
    domain: Rect,
    osc_wavelengths: (f64, f64),
    spec: &QuadratureSpec,
) -> Result<C64> {
    let rx = spec.rule(domain.x0, domain.x1, osc_wavelengths.0)?;
    let ry = spec.rule(domain.y0, domain.y1, osc_wavelengths.1)?;
    Ok(rx.integrate(|x| ry.integrate(|y| f(x, y))))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub coarse: f64,
    pub fine: f64,
    pub rel_change: f64,
    pub converged: bool,
}

/// Evaluates a scalar figure of merit (typically a Frobenius norm) at `spec`
/// and at `spec` with doubled sampling density, and compares the two.
pub fn convergence_check<F>(spec: &QuadratureSpec, mut metric: F) -> Result<ConvergenceReport>
where
    F: FnMut(&QuadratureSpec) -> Result<f64>,
{
    let coarse = metric(spec)?;
    let fine = metric(&spec.refined())?;
    let scale = fine.abs().max(f64::MIN_POSITIVE);
    let rel_change = (coarse - fine).abs() / scale;
    Ok(ConvergenceReport {
        coarse,
        fine,
        rel_change,
        converged: rel_change < spec.rel_tol,
    })
}
