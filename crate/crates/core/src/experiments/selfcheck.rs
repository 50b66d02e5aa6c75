//! Quadrature-convergence and oracle harnesses behind `wdmsim selfcheck`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{assemble_h, assemble_r, rx_basis, total_power, tx_basis, ChannelSet, WdmConfig};
use crate::em_field::{green_dyadic_ff, EmConstants, GzKernel};
use crate::geometry::{LinkGeometry, Vec3};
use crate::quadrature::{convergence_check, QuadratureSpec};
use crate::receivers::{scheme_matrices, sinr, spectral_efficiency_with, waterfill, MmseForm, Scheme};
use crate::{CMatrix, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

/// Desk profile at boresight.
pub fn desk_link() -> Result<(LinkGeometry, WdmConfig)> {
    let geom = LinkGeometry::new(0.2, 1.0, 2.0, 0.0, 0.0, 0.0)?;
    let cfg = WdmConfig::from_snr_db(0.02, 21, 1e-7, Some(90.0), None, QuadratureSpec::default())?;
    Ok((geom, cfg))
}

/// λ = 0.1 m, L_s = 0.2 m, L_r = 0.5 m, d_x = 1 m, N = 3.
pub fn reduced_link() -> Result<(LinkGeometry, WdmConfig)> {
    let geom = LinkGeometry::new(0.2, 0.5, 1.0, 0.0, 0.0, 0.0)?;
    let cfg = WdmConfig::from_snr_db(0.1, 3, 1e-7, Some(90.0), None, QuadratureSpec::default())?;
    Ok((geom, cfg))
}

/// Coupling matrix by the 2D midpoint rule on `nr x ns` cells.
pub fn midpoint_h(geom: &LinkGeometry, cfg: &WdmConfig, nr: usize, ns: usize) -> Result<CMatrix> {
    let k = cfg.constants()?;
    let kernel = GzKernel::for_geometry(geom, &k);
    let dir = geom.source_direction();
    let (r0, r1) = geom.receive_interval();
    let (s0, s1) = geom.source_interval();
    let (hr, hs) = ((r1 - r0) / nr as f64, (s1 - s0) / ns as f64);
    let n = cfg.n_modes;
    let s_pts: Vec<f64> = (0..ns).map(|j| s0 + (j as f64 + 0.5) * hs).collect();
    let tx: Vec<Vec<C64>> = s_pts
        .iter()
        .map(|&s| (1..=n).map(|m| tx_basis(m, s, cfg, geom)).collect())
        .collect();
    let mut h = CMatrix::zeros(n, n);
    for i in 0..nr {
        let r_z = r0 + (i as f64 + 0.5) * hr;
        let r = Vec3::new(geom.d_x(), 0.0, r_z);
        let mut t = vec![C64::new(0.0, 0.0); n];
        for (s, phi) in s_pts.iter().zip(&tx) {
            let g = kernel.eval(&(r - *s * dir));
            for (tm, pm) in t.iter_mut().zip(phi) {
                *tm += g * pm;
            }
        }
        for row in 0..n {
            let psi = rx_basis(row + 1, r_z, cfg, geom).conj();
            for (col, tm) in t.iter().enumerate() {
                h[(row, col)] += psi * tm;
            }
        }
    }
    Ok(h.scale(hr * hs))
}

fn convergence(
    name: &'static str,
    geom: &LinkGeometry,
    cfg: &WdmConfig,
    assemble: fn(&LinkGeometry, &WdmConfig) -> Result<CMatrix>,
) -> Result<Check> {
    let report = convergence_check(&cfg.quadrature, |q| {
        let mut c = *cfg;
        c.quadrature = *q;
        Ok(assemble(geom, &c)?.norm())
    })?;
    Ok(Check::new(
        name,
        report.converged,
        format!("relative change {:.3e}", report.rel_change),
    ))
}

fn dyadic_consistency(samples: usize, seed: u64) -> Result<Check> {
    let k = EmConstants::new(0.01)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let theta = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let u = Vec3::new(
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        );
        if u.norm() < 0.1 {
            continue;
        }
        let dir = crate::geometry::source_direction(theta, phi);
        let g = green_dyadic_ff(&u, &Vec3::zeros(), &k)?.matrix;
        let oracle: C64 = (0..3).map(|j| g[(2, j)] * dir[j]).sum();
        let value = GzKernel::new(theta, phi, &k).eval(&u);
        let scale = 1.0 / (4.0 * std::f64::consts::PI * u.norm());
        worst = worst.max((value - oracle).norm() / scale);
    }
    Ok(Check::new(
        "kernel matches dyadic projection",
        worst < 1e-12,
        format!("max scaled error {worst:.3e}"),
    ))
}

fn waterfill_kkt(trials: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut kkt = true;
    for _ in 0..trials {
        let n = rng.random_range(1..12);
        let chi: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect();
        let total = 10f64.powf(rng.random_range(-2.0..2.0));
        let (p, mu) = waterfill(&chi, total)?;
        let sum: f64 = p.iter().sum();
        worst = worst.max((sum - total).abs() / total);
        for (pi, ci) in p.iter().zip(&chi) {
            let floor = 1.0 / ci;
            let ok = if *pi > 0.0 {
                (pi + floor - mu).abs() <= 1e-9 * mu
            } else {
                floor >= mu * (1.0 - 1e-12)
            };
            kkt &= ok;
        }
    }
    Ok(Check::new(
        "water-filling budget and KKT",
        kkt && worst < 1e-9,
        format!("max budget error {worst:.3e}"),
    ))
}

fn svd_sinr(set: &ChannelSet, p_total: f64) -> Result<Check> {
    let res = spectral_efficiency_with(Scheme::Svd, &set.h_tilde, p_total, MmseForm::Standard)?;
    let m = scheme_matrices(Scheme::Svd, &set.h_tilde, &res.p, MmseForm::Standard)?;
    let h_eff = &set.h_tilde * &m.a;
    let mut worst: f64 = 0.0;
    let mut se = 0.0;
    for i in 0..res.p.len() {
        let col: Vec<C64> = m.b_tilde.column(i).iter().copied().collect();
        let s = sinr(&col, &h_eff, &res.p, i)?;
        let closed = res.p[i] * m.chi[i];
        worst = worst.max((s - closed).abs() / closed.max(1.0));
        se += (1.0 + s).log2();
    }
    let se_err = (se - res.se_total).abs() / res.se_total.max(1.0);
    Ok(Check::new(
        "SVD SINR matches closed form",
        worst < 1e-9 && se_err < 1e-9,
        format!("max SINR error {worst:.3e}, SE error {se_err:.3e}"),
    ))
}

/// Runs every harness. Errors inside a harness are reported as failures.
pub fn run_all() -> Result<Vec<Check>> {
    let (desk_geom, desk_cfg) = desk_link()?;
    let (red_geom, red_cfg) = reduced_link()?;
    let mut checks = Vec::new();
    let mut push = |name: &'static str, r: Result<Check>| match r {
        Ok(c) => checks.push(c),
        Err(e) => checks.push(Check::new(name, false, e.to_string())),
    };
    push(
        "H converged under refinement",
        convergence("H converged under refinement", &desk_geom, &desk_cfg, assemble_h),
    );
    push(
        "R converged under refinement",
        convergence("R converged under refinement", &desk_geom, &desk_cfg, assemble_r),
    );
    push("H matches midpoint oracle", (|| {
        let h = assemble_h(&red_geom, &red_cfg)?;
        let oracle = midpoint_h(&red_geom, &red_cfg, 4000, 1600)?;
        let err = (&h - &oracle).norm() / oracle.norm();
        Ok(Check::new(
            "H matches midpoint oracle",
            err < 1e-4,
            format!("relative Frobenius error {err:.3e}"),
        ))
    })());
    push("kernel matches dyadic projection", dyadic_consistency(1000, 7));
    push("water-filling budget and KKT", waterfill_kkt(500, 11));
    push("SVD SINR matches closed form", (|| {
        let set = ChannelSet::build(&desk_geom, &desk_cfg)?;
        svd_sinr(&set, total_power(&desk_cfg)?)
    })());
    Ok(checks)
}
