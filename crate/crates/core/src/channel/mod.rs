//! Fourier-basis WDM channel: mode bases, coupling matrix `H`, EMI
//! correlation `R`, noise covariance `C`, and the whitened channel.
//!
//! `H` and `R` are evaluated on a single tensor-product Gauss–Legendre grid
//! shared by all `(n, m)` entries. Each entry is the same sum
//! [`crate::quadrature::integrate_2d`] would produce for that entry alone; the
//! kernel is evaluated once per node pair instead of once per entry.

mod file;

pub use file::{cache_key, load_matching, read_channel_file, write_channel_file, ChannelHeader};

use std::f64::consts::TAU;

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em_field::{sinc, EmConstants, GzKernel, Z0};
use crate::geometry::{LinkGeometry, Vec3};
use crate::quadrature::QuadratureSpec;
use crate::{CMatrix, Error, Result, C64};

/// Integration support used for the EMI correlation matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmiSupport {
    /// `r, r'` over the receive segment `[d_z - L_r/2, d_z + L_r/2]`.
    #[default]
    Shifted,
    /// `r, r'` over `[-L_r/2, L_r/2]` regardless of `d_z`.
    Centered,
}

impl EmiSupport {
    pub fn as_str(&self) -> &'static str {
        match self {
            EmiSupport::Shifted => "shifted",
            EmiSupport::Centered => "centered",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WdmConfig {
    pub wavelength: f64,
    pub n_modes: usize,
    /// Source power constraint in A².
    pub p_s: f64,
    /// EMI variance in V²/m².
    pub sigma2_emi: f64,
    /// Hardware noise variance in V²/m².
    pub sigma2_hdw: f64,
    pub quadrature: QuadratureSpec,
    pub emi_support: EmiSupport,
}

impl WdmConfig {
    pub fn new(
        wavelength: f64,
        n_modes: usize,
        p_s: f64,
        sigma2_emi: f64,
        sigma2_hdw: f64,
        quadrature: QuadratureSpec,
    ) -> Result<Self> {
        let cfg = Self {
            wavelength,
            n_modes,
            p_s,
            sigma2_emi,
            sigma2_hdw,
            quadrature,
            emi_support: EmiSupport::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Noise levels from `P / σ²_emi` and, optionally, `P / σ²_hdw` in dB,
    /// with `P = (κ Z0)² P_s`. Without a hardware ratio `σ²_hdw = 0`.
    pub fn from_snr_db(
        wavelength: f64,
        n_modes: usize,
        p_s: f64,
        snr_emi_db: Option<f64>,
        snr_hdw_db: Option<f64>,
        quadrature: QuadratureSpec,
    ) -> Result<Self> {
        let k = EmConstants::new(wavelength)?;
        let p = power_from_source(p_s, &k);
        let sigma = |db: Option<f64>| db.map_or(0.0, |db| p * 10f64.powf(-db / 10.0));
        Self::new(
            wavelength,
            n_modes,
            p_s,
            sigma(snr_emi_db),
            sigma(snr_hdw_db),
            quadrature,
        )
    }

    pub fn with_emi_support(mut self, support: EmiSupport) -> Self {
        self.emi_support = support;
        self
    }

    pub fn constants(&self) -> Result<EmConstants> {
        EmConstants::new(self.wavelength)
    }

    pub fn validate(&self) -> Result<()> {
        EmConstants::new(self.wavelength)?;
        self.quadrature.validate()?;
        if self.n_modes == 0 {
            return Err(Error::Config("mode count must be at least 1".into()));
        }
        if !(self.p_s > 0.0) || !self.p_s.is_finite() {
            return Err(Error::Config(format!("P_s must be positive, got {}", self.p_s)));
        }
        if !(self.sigma2_emi >= 0.0) || !(self.sigma2_hdw >= 0.0) {
            return Err(Error::Config("noise variances must be non-negative".into()));
        }
        if !(self.sigma2_emi + self.sigma2_hdw > 0.0) {
            return Err(Error::Config(
                "at least one of sigma2_emi, sigma2_hdw must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Full validation including the mode-count limit set by `L_s`.
    pub fn validate_for(&self, geom: &LinkGeometry) -> Result<()> {
        self.validate()?;
        let n_max = max_modes(geom.l_s(), self.wavelength);
        if self.n_modes > n_max {
            return Err(Error::Config(format!(
                "N = {} exceeds N_max = {n_max} for L_s = {} and wavelength {}",
                self.n_modes,
                geom.l_s(),
                self.wavelength
            )));
        }
        Ok(())
    }

    pub fn kappas(&self, l_s: f64) -> Vec<f64> {
        (1..=self.n_modes)
            .map(|n| spatial_frequency(n, self.n_modes, l_s))
            .collect()
    }
}

/// `2 floor(L_s / λ) + 1`.
pub fn max_modes(l_s: f64, wavelength: f64) -> usize {
    2 * (l_s / wavelength).floor() as usize + 1
}

/// `κ_n = 2π / L_s (n - (N + 1) / 2)`.
pub fn spatial_frequency(n: usize, n_modes: usize, l_s: f64) -> f64 {
    TAU / l_s * (n as f64 - 0.5 * (n_modes as f64 + 1.0))
}

/// Transmit basis `e^{jκ_n s} / sqrt(L_s)` on `|s| <= L_s/2`, zero elsewhere.
pub fn tx_basis(n: usize, s: f64, cfg: &WdmConfig, geom: &LinkGeometry) -> C64 {
    if s.abs() > 0.5 * geom.l_s() {
        return C64::new(0.0, 0.0);
    }
    let kappa = spatial_frequency(n, cfg.n_modes, geom.l_s());
    C64::from_polar(1.0 / geom.l_s().sqrt(), kappa * s)
}

/// Receive basis `e^{jκ_n r}` on `|r - d_z| <= L_r/2`, zero elsewhere.
/// Unit modulus, not normalized by the segment length.
pub fn rx_basis(n: usize, r: f64, cfg: &WdmConfig, geom: &LinkGeometry) -> C64 {
    if (r - geom.d_z()).abs() > 0.5 * geom.l_r() {
        return C64::new(0.0, 0.0);
    }
    let kappa = spatial_frequency(n, cfg.n_modes, geom.l_s());
    C64::from_polar(1.0, kappa * r)
}

/// `P = (κ Z0)² P_s` in V²/m².
pub fn total_power(cfg: &WdmConfig) -> Result<f64> {
    Ok(power_from_source(cfg.p_s, &cfg.constants()?))
}

pub(crate) fn power_from_source(p_s: f64, k: &EmConstants) -> f64 {
    let a = k.wavenumber() * Z0;
    a * a * p_s
}

/// `T[i][m] = Σ_j k(x_i, y_j) b_m(y_j)` followed by
/// `M[n][m] = Σ_i w_i conj(a_n(x_i)) T[i][m]`; rows of `T` in parallel.
fn contract<K>(
    outer: &crate::quadrature::PanelRule,
    outer_basis: &[C64],
    inner_weighted: &[C64],
    n_inner: usize,
    n_modes: usize,
    kernel: K,
) -> CMatrix
where
    K: Fn(f64, usize) -> C64 + Sync,
{
    let rows: Vec<Vec<C64>> = outer
        .nodes
        .par_iter()
        .map(|&x| {
            let mut t = vec![C64::new(0.0, 0.0); n_modes];
            for j in 0..n_inner {
                let g = kernel(x, j);
                let b = &inner_weighted[j * n_modes..(j + 1) * n_modes];
                for (tm, bm) in t.iter_mut().zip(b) {
                    *tm += g * bm;
                }
            }
            t
        })
        .collect();
    let mut out = CMatrix::zeros(n_modes, n_modes);
    for (i, t) in rows.iter().enumerate() {
        let w = outer.weights[i];
        for n in 0..n_modes {
            let c = outer_basis[i * n_modes + n].conj() * w;
            for (m, tm) in t.iter().enumerate() {
                out[(n, m)] += c * tm;
            }
        }
    }
    out
}

fn phase_table(nodes: &[f64], kappas: &[f64], amp: f64, weights: Option<&[f64]>) -> Vec<C64> {
    let mut out = Vec::with_capacity(nodes.len() * kappas.len());
    for (j, &x) in nodes.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[j]);
        out.extend(kappas.iter().map(|&k| C64::from_polar(amp * w, k * x)));
    }
    out
}

/// Coupling matrix `H` with the far-field scalar kernel.
pub fn assemble_h(geom: &LinkGeometry, cfg: &WdmConfig) -> Result<CMatrix> {
    let k = cfg.constants()?;
    let kernel = GzKernel::for_geometry(geom, &k);
    assemble_h_with_kernel(geom, cfg, |u| kernel.eval(u))
}

/// Coupling matrix for an arbitrary scalar kernel `g(u)`, `u = r - s ŝ`.
pub fn assemble_h_with_kernel<K>(geom: &LinkGeometry, cfg: &WdmConfig, kernel: K) -> Result<CMatrix>
where
    K: Fn(&Vec3) -> C64 + Sync,
{
    cfg.validate_for(geom)?;
    let osc = 0.5 * cfg.wavelength;
    let (r0, r1) = geom.receive_interval();
    let (s0, s1) = geom.source_interval();
    let r_rule = cfg.quadrature.rule(r0, r1, osc)?;
    let s_rule = cfg.quadrature.rule(s0, s1, osc)?;
    let kappas = cfg.kappas(geom.l_s());
    let n = cfg.n_modes;

    let tx = phase_table(
        &s_rule.nodes,
        &kappas,
        1.0 / geom.l_s().sqrt(),
        Some(&s_rule.weights),
    );
    let rx = phase_table(&r_rule.nodes, &kappas, 1.0, None);
    let dir = geom.source_direction();
    let d_x = geom.d_x();
    let s_nodes = &s_rule.nodes;
    Ok(contract(&r_rule, &rx, &tx, s_nodes.len(), n, |r_z, j| {
        kernel(&(Vec3::new(d_x, 0.0, r_z) - s_nodes[j] * dir))
    }))
}

/// Smallest separation between the two segments, sampled on the `H` grid.
pub fn min_separation(geom: &LinkGeometry, cfg: &WdmConfig) -> Result<f64> {
    let osc = 0.5 * cfg.wavelength;
    let (r0, r1) = geom.receive_interval();
    let (s0, s1) = geom.source_interval();
    let r_rule = cfg.quadrature.rule(r0, r1, osc)?;
    let s_rule = cfg.quadrature.rule(s0, s1, osc)?;
    let dir = geom.source_direction();
    let mut best = f64::INFINITY;
    for &r_z in &r_rule.nodes {
        let r = Vec3::new(geom.d_x(), 0.0, r_z);
        for &s in &s_rule.nodes {
            best = best.min((r - s * dir).norm());
        }
    }
    Ok(best)
}

/// EMI correlation matrix with `ρ(r) = sinc(2|r| / λ)`, symmetrized.
pub fn assemble_r(geom: &LinkGeometry, cfg: &WdmConfig) -> Result<CMatrix> {
    cfg.validate_for(geom)?;
    let (a, b) = match cfg.emi_support {
        EmiSupport::Shifted => geom.receive_interval(),
        EmiSupport::Centered => (-0.5 * geom.l_r(), 0.5 * geom.l_r()),
    };
    // sinc(2x/λ) has period λ; with the basis phases the rate is at most 2κ.
    let rule = cfg.quadrature.rule(a, b, 0.5 * cfg.wavelength)?;
    let kappas = cfg.kappas(geom.l_s());
    let n = cfg.n_modes;
    let inner = phase_table(&rule.nodes, &kappas, 1.0, Some(&rule.weights));
    let outer = phase_table(&rule.nodes, &kappas, 1.0, None);
    let scale = 2.0 / cfg.wavelength;
    let nodes = &rule.nodes;
    let r = contract(&rule, &outer, &inner, nodes.len(), n, |x, j| {
        C64::new(sinc(scale * (nodes[j] - x).abs()), 0.0)
    });
    Ok(hermitian_part(&r))
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Matrices of one link: `H`, `R`, `C = σ²_emi R + σ²_hdw I`, its lower
/// Cholesky factor `L`, and `H̃ = L⁻¹ H`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    pub h: CMatrix,
    pub r: CMatrix,
    pub c: CMatrix,
    pub l: CMatrix,
    pub h_tilde: CMatrix,
    /// Some source/receive node pair is closer than ten wavelengths.
    pub below_far_field: bool,
}

impl ChannelSet {
    pub fn build(geom: &LinkGeometry, cfg: &WdmConfig) -> Result<Self> {
        let h = assemble_h(geom, cfg)?;
        let r = assemble_r(geom, cfg)?;
        let mut set = whiten(h, r, cfg)?;
        set.below_far_field = min_separation(geom, cfg)? < cfg.constants()?.far_field_distance();
        Ok(set)
    }

    pub fn n_modes(&self) -> usize {
        self.h.nrows()
    }
}

/// Cholesky whitening `L Lᴴ = C`, `H̃ = L⁻¹ H` by forward substitution.
pub fn whiten(h: CMatrix, r: CMatrix, cfg: &WdmConfig) -> Result<ChannelSet> {
    let n = h.nrows();
    if h.ncols() != n || r.nrows() != n || r.ncols() != n {
        return Err(Error::Config(format!(
            "H is {}x{}, R is {}x{}",
            h.nrows(),
            h.ncols(),
            r.nrows(),
            r.ncols()
        )));
    }
    let c = r.scale(cfg.sigma2_emi) + CMatrix::identity(n, n).scale(cfg.sigma2_hdw);
    let chol = match c.clone().cholesky() {
        Some(chol) => chol,
        None => {
            let min_eigenvalue = SymmetricEigen::new(c.clone())
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            return Err(Error::NotPositiveDefinite { min_eigenvalue });
        }
    };
    let l = chol.l();
    let h_tilde = l
        .solve_lower_triangular(&h)
        .ok_or_else(|| Error::Singular("Cholesky factor has a zero pivot".into()))?;
    Ok(ChannelSet {
        h,
        r,
        c,
        l,
        h_tilde,
        below_far_field: false,
    })
}
