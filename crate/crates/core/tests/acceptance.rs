//! Acceptance criteria 1-12. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wdm_los::channel::{
    assemble_h, assemble_r, max_modes, spatial_frequency, total_power, ChannelSet, WdmConfig,
};
use wdm_los::em_field::{peak_location_boresight, radiation_pattern, EmConstants};
use wdm_los::experiments::{
    avg_sweep_csv, evaluate_point, run_avg_sweep, run_field, run_pattern, run_sweep, sweep_csv,
    ExperimentSpec, Preset, SweepParam,
};
use wdm_los::geometry::{rotation_matrix, source_direction, LinkGeometry};
use wdm_los::quadrature::QuadratureSpec;
use wdm_los::receivers::{
    scheme_matrices, sinr, spectral_efficiency_with, waterfill, MmseForm, Scheme,
};
use wdm_los::CMatrix;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn desk_geom() -> LinkGeometry {
    LinkGeometry::new(0.2, 1.0, 2.0, 0.0, 0.0, 0.0).unwrap()
}

fn desk_cfg() -> WdmConfig {
    WdmConfig::from_snr_db(0.02, 21, 1e-7, Some(90.0), None, QuadratureSpec::default()).unwrap()
}

fn mode_count() -> Outcome {
    let n = max_modes(0.2, 0.01);
    let spacing = spatial_frequency(22, 41, 0.2) - spatial_frequency(21, 41, 0.2);
    outcome(
        n == 41 && (spacing - 31.41).abs() < 1e-2,
        format!("N_max = {n}, spacing = {spacing:.5} rad/m"),
    )
}

fn rotation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut orth, mut det, mut align) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let t = rng.random_range(0.0..PI);
        let p = rng.random_range(0.0..TAU);
        let q = rotation_matrix(t, p);
        orth = orth.max((q.transpose() * q - Matrix3::identity()).norm());
        det = det.max((q.determinant() - 1.0).abs());
        // Direction written out independently of the library.
        let s = Vector3::new(p.cos() * t.sin(), p.sin() * t.sin(), t.cos());
        align = align.max((q * s - Vector3::z()).norm());
    }
    let identity = [0.0, 0.4, 1.3, 2.9, 4.4, 6.1]
        .iter()
        .all(|&p| rotation_matrix(0.0, p) == Matrix3::identity());
    outcome(
        orth < 1e-12 && det < 1e-12 && align < 1e-12 && identity,
        format!("orth {orth:.1e}, det {det:.1e}, align {align:.1e}, Q(0, phi) = I: {identity}"),
    )
}

fn pattern() -> Outcome {
    let spec = {
        let mut s = ExperimentSpec::preset(Preset::Full);
        s.sweep.mode_offsets = (-20..=20).collect();
        s
    };
    let k = EmConstants::new(0.01).unwrap();
    let table = run_pattern(&spec).unwrap();
    let (mut value_err, mut angle_err) = (0.0f64, 0.0f64);
    for (m, row) in table.modes.iter().zip(&table.values) {
        // gamma from the mode index directly.
        let gamma = (TAU / 0.2) * (m.n() as f64 - 21.0) / (TAU / 0.01);
        let at_peak = radiation_pattern(gamma.acos(), m, &spec.geometry, &k);
        value_err = value_err.max((at_peak - (1.0 - gamma * gamma)).abs());
        if gamma.abs() <= 0.9 {
            let (i, _) = row
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
            angle_err = angle_err.max((table.theta_deg[i] - gamma.acos().to_degrees()).abs());
        }
    }
    outcome(
        value_err <= 1e-12 && angle_err <= 0.5,
        format!("peak value error {value_err:.1e}, argmax error {angle_err:.2} deg"),
    )
}

fn field_peaks() -> Outcome {
    let mut spec = ExperimentSpec::preset(Preset::Desk);
    spec.sweep.mode_offsets = (-10..=10).collect();
    spec.sweep.field_points = 2001;
    let lambda = spec.config.wavelength;
    let table = run_field(&spec).unwrap();
    let step = table.offsets[1] - table.offsets[0];
    let tol = lambda.max(2.0 * step);
    let d_x = spec.geometry.d_x();
    let half = 0.5 * spec.geometry.l_r();

    let (mut worst_pos, mut worst_val, mut checked) = (0.0f64, 0.0f64, 0);
    for (i, m) in table.modes.iter().enumerate() {
        let g = m.gamma();
        let predicted = d_x * g / (1.0 - g * g).sqrt();
        if predicted.abs() >= half {
            continue;
        }
        assert!(peak_location_boresight(m, &spec.geometry).unwrap().in_segment);
        let (at, value) = table.argmax(i);
        worst_pos = worst_pos.max((at - predicted).abs());
        if g.abs() <= 0.7 {
            let expected = (1.0 - g * g).powf(1.5);
            worst_val = worst_val.max((value - expected).abs() / expected);
        }
        checked += 1;
    }

    let theta = 10f64.to_radians();
    spec.geometry = spec.geometry.with_angles(theta, 0.0).unwrap();
    spec.sweep.mode_offsets = vec![0];
    let tilted = run_field(&spec).unwrap();
    let (at, value) = tilted.argmax(0);
    let tilt_pos = (at + d_x * theta.tan()).abs();
    let tilt_val = (value - theta.cos().powi(2)).abs() / theta.cos().powi(2);

    outcome(
        checked >= 5 && worst_pos <= tol && worst_val <= 0.05 && tilt_pos <= tol && tilt_val <= 0.05,
        format!(
            "{checked} modes: position error {worst_pos:.4} m (tol {tol:.3}), value error {:.2}%; \
             tilted: position error {tilt_pos:.4} m, value error {:.2}%",
            100.0 * worst_val,
            100.0 * tilt_val
        ),
    )
}

/// `H` by the 2D midpoint rule with the kernel taken from the full dyadic
/// `(I - p̂p̂ᵀ) e^{jκ|p|} / (4π|p|)` contracted with `ẑ` and `ŝ`.
fn midpoint_oracle(geom: &LinkGeometry, lambda: f64, n_modes: usize, nr: usize, ns: usize) -> CMatrix {
    let kappa = TAU / lambda;
    let s_hat = source_direction(geom.theta_s(), geom.phi_s());
    let (l_s, l_r) = (geom.l_s(), geom.l_r());
    let (hr, hs) = (l_r / nr as f64, l_s / ns as f64);
    let freqs: Vec<f64> = (1..=n_modes)
        .map(|n| TAU / l_s * (n as f64 - (n_modes as f64 + 1.0) / 2.0))
        .collect();
    let s_pts: Vec<f64> = (0..ns).map(|j| -0.5 * l_s + (j as f64 + 0.5) * hs).collect();
    let mut h = CMatrix::zeros(n_modes, n_modes);
    for i in 0..nr {
        let r_z = geom.d_z() - 0.5 * l_r + (i as f64 + 0.5) * hr;
        let r = Vector3::new(geom.d_x(), 0.0, r_z);
        let mut acc = vec![C64::new(0.0, 0.0); n_modes];
        for &s in &s_pts {
            let p = r - s * s_hat;
            let d = p.norm();
            let ph = p / d;
            let proj = s_hat.z - ph.z * ph.dot(&s_hat);
            let g = C64::from_polar(proj / (4.0 * PI * d), kappa * d);
            for (a, f) in acc.iter_mut().zip(&freqs) {
                *a += g * C64::from_polar(1.0 / l_s.sqrt(), f * s);
            }
        }
        for (row, fr) in freqs.iter().enumerate() {
            let psi = C64::from_polar(1.0, -fr * r_z);
            for (col, a) in acc.iter().enumerate() {
                h[(row, col)] += psi * a;
            }
        }
    }
    h.scale(hr * hs)
}

fn channel_oracle() -> Outcome {
    let geom = LinkGeometry::new(0.2, 0.5, 1.0, 0.0, 0.0, 0.0).unwrap();
    let cfg = WdmConfig::from_snr_db(0.1, 3, 1e-7, Some(90.0), None, QuadratureSpec::default()).unwrap();
    let h = assemble_h(&geom, &cfg).unwrap();
    let (nr, ns) = (2500, 1000);
    let oracle = midpoint_oracle(&geom, 0.1, 3, nr, ns);
    let err = (&h - &oracle).norm() / oracle.norm();
    outcome(
        err < 1e-4,
        format!("relative Frobenius error {err:.2e} against {} midpoint nodes", nr * ns),
    )
}

fn convergence() -> Outcome {
    let geom = desk_geom();
    let cfg = desk_cfg();
    let mut fine = cfg;
    fine.quadrature.points_per_wavelength *= 2.0;
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    let dh = rel(assemble_h(&geom, &cfg).unwrap().norm(), assemble_h(&geom, &fine).unwrap().norm());
    let dr = rel(assemble_r(&geom, &cfg).unwrap().norm(), assemble_r(&geom, &fine).unwrap().norm());
    outcome(
        dh < 1e-6 && dr < 1e-6,
        format!("||H|| change {dh:.2e}, ||R|| change {dr:.2e}"),
    )
}

fn noise_model() -> Outcome {
    let set = ChannelSet::build(&desk_geom(), &desk_cfg()).unwrap();
    let herm = (&set.r - set.r.adjoint()).norm();
    let eig = SymmetricEigen::new(set.r.clone()).eigenvalues;
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let recon = (&set.l * set.l.adjoint() - &set.c).norm() / set.c.norm();
    outcome(
        herm == 0.0 && lo >= -1e-10 * hi && recon < 1e-12,
        format!("||R - R^H|| = {herm:.1e}, eig range [{lo:.3e}, {hi:.3e}], ||LL^H - C||/||C|| = {recon:.1e}"),
    )
}

fn water_filling() -> Outcome {
    let (p, _) = waterfill(&[2.0, 1.0], 1.0).unwrap();
    let exact = p == vec![0.75, 0.25];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut budget, mut kkt) = (0.0f64, true);
    for _ in 0..1000 {
        let n = rng.random_range(1..16);
        let chi: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-4.0..4.0))).collect();
        let total = 10f64.powf(rng.random_range(-3.0..3.0));
        let (p, mu) = waterfill(&chi, total).unwrap();
        budget = budget.max((p.iter().sum::<f64>() - total).abs() / total);
        for (pi, ci) in p.iter().zip(&chi) {
            kkt &= *pi >= 0.0;
            kkt &= if *pi > 0.0 {
                (pi + 1.0 / ci - mu).abs() <= 1e-9 * mu
            } else {
                1.0 / ci >= mu * (1.0 - 1e-12)
            };
        }
    }
    outcome(
        exact && budget < 1e-9 && kkt,
        format!("(2,1),P=1 -> {p:?}; budget error {budget:.1e}; KKT {kkt}"),
    )
}

fn random_channel(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let scale = 10f64.powf(rng.random_range(-1.0..1.0));
    DMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale
    })
}

fn receiver_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut sinr_err, mut se_err, mut scale_err) = (0.0f64, 0.0f64, 0.0f64);
    let desk = ChannelSet::build(&desk_geom(), &desk_cfg()).unwrap();
    let p_desk = total_power(&desk_cfg()).unwrap();
    let mut cases: Vec<(CMatrix, f64)> = (0..20)
        .map(|_| {
            let n = rng.random_range(2..9);
            (random_channel(&mut rng, n), 10f64.powf(rng.random_range(-1.0..2.0)))
        })
        .collect();
    cases.push((desk.h_tilde.clone(), p_desk));
    for (h, p_total) in &cases {
        let res = spectral_efficiency_with(Scheme::Svd, h, *p_total, MmseForm::Standard).unwrap();
        let m = scheme_matrices(Scheme::Svd, h, &res.p, MmseForm::Standard).unwrap();
        let h_eff = h * &m.a;
        let mut se = 0.0;
        for i in 0..res.p.len() {
            let b: Vec<C64> = m.b_tilde.column(i).iter().copied().collect();
            let s = sinr(&b, &h_eff, &res.p, i).unwrap();
            let sigma = m.chi[i].sqrt();
            let closed = res.p[i] * sigma * sigma;
            sinr_err = sinr_err.max((s - closed).abs() / closed.max(1.0));
            se += (1.0 + s).log2();
        }
        se_err = se_err.max((se - res.se_total).abs() / res.se_total.max(1.0));

        for kind in [Scheme::Mmse, Scheme::Mr, Scheme::Plain] {
            let r = spectral_efficiency_with(kind, h, *p_total, MmseForm::Standard).unwrap();
            let m = scheme_matrices(kind, h, &r.p, MmseForm::Standard).unwrap();
            let h_eff = h * &m.a;
            for i in 0..r.p.len() {
                let c = C64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
                let b: Vec<C64> = m.b_tilde.column(i).iter().copied().collect();
                let scaled: Vec<C64> = b.iter().map(|z| z * c).collect();
                let s0 = sinr(&b, &h_eff, &r.p, i).unwrap();
                let s1 = sinr(&scaled, &h_eff, &r.p, i).unwrap();
                scale_err = scale_err.max((s0 - s1).abs() / s0.max(f64::MIN_POSITIVE));
            }
        }
    }
    outcome(
        sinr_err < 1e-9 && se_err < 1e-9 && scale_err < 1e-12,
        format!("SVD SINR error {sinr_err:.1e}, SE error {se_err:.1e}, scaling error {scale_err:.1e}"),
    )
}

fn ordered(se: &[f64; 4]) -> bool {
    // Scheme::ALL order: SVD, MMSE, MR, PLAIN.
    se[0] >= se[1] && se[1] >= se[2]
}

fn scheme_ordering() -> Outcome {
    let spec = ExperimentSpec::preset(Preset::Desk);
    let sweep = run_sweep(&spec).unwrap();
    let sweep_ok = sweep.iter().all(|r| r.se.as_ref().is_some_and(ordered));
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut random_ok = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..12);
        let h = random_channel(&mut rng, n);
        let p = 10f64.powf(rng.random_range(-2.0..3.0));
        let se: Vec<f64> = Scheme::ALL
            .iter()
            .map(|&k| spectral_efficiency_with(k, &h, p, MmseForm::Standard).unwrap().se_total)
            .collect();
        random_ok += usize::from(ordered(&[se[0], se[1], se[2], se[3]]));
    }
    outcome(
        sweep_ok && random_ok == 100,
        format!(
            "d_z sweep ({} points) ordered: {sweep_ok}; random channels ordered: {random_ok}/100",
            sweep.len()
        ),
    )
}

fn trends() -> Outcome {
    let spec = ExperimentSpec::preset(Preset::Desk);
    let sweep = run_sweep(&spec).unwrap();
    let first = sweep.first().unwrap().se.unwrap();
    let last = sweep.last().unwrap().se.unwrap();
    let dz_ok = (0..4).all(|i| last[i] < first[i]);

    let cfg = spec.config;
    let at = |theta_deg: f64, phi_deg: f64| {
        let g = spec
            .geometry
            .with_angles(theta_deg.to_radians(), phi_deg.to_radians())
            .unwrap();
        evaluate_point(&g, &cfg, MmseForm::Standard, None).unwrap().se[3]
    };
    let plain_0 = at(0.0, 0.0);
    let plain_30 = at(30.0, 0.0);
    let plain_30_90 = at(30.0, 90.0);
    outcome(
        dz_ok && plain_30 < plain_0 && plain_30_90 > plain_30,
        format!(
            "d_z: SE(0) {first:.3?} -> SE({:.1}) {last:.3?}; PLAIN theta 0/30 (phi 0): {plain_0:.3}/{plain_30:.3}; \
             PLAIN theta 30 phi 90: {plain_30_90:.3}",
            sweep.last().unwrap().value
        ),
    )
}

fn determinism() -> Outcome {
    let mut spec = ExperimentSpec::preset(Preset::Desk);
    spec.sweep.parameter = SweepParam::Dx;
    spec.sweep.values = vec![2.0, 3.0];
    spec.sweep.ensemble = 2;
    spec.sweep.seed = 42;
    let a = avg_sweep_csv(SweepParam::Dx, &run_avg_sweep(&spec).unwrap());
    let b = avg_sweep_csv(SweepParam::Dx, &run_avg_sweep(&spec).unwrap());
    let mut dz = ExperimentSpec::preset(Preset::Desk);
    dz.sweep.values = vec![0.0, 0.7, 1.4];
    let c = sweep_csv(SweepParam::Dz, &run_sweep(&dz).unwrap());
    let d = sweep_csv(SweepParam::Dz, &run_sweep(&dz).unwrap());
    outcome(
        a == b && c == d,
        format!("averaged sweep identical: {}; sweep identical: {}", a == b, c == d),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("mode count", mode_count),
        ("rotation matrix", rotation),
        ("radiation pattern", pattern),
        ("field peaks", field_peaks),
        ("channel oracle", channel_oracle),
        ("quadrature convergence", convergence),
        ("noise model", noise_model),
        ("water-filling", water_filling),
        ("receiver consistency", receiver_consistency),
        ("scheme ordering", scheme_ordering),
        ("trend reproduction", trends),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check)
            .unwrap_or_else(|_| outcome(false, "panicked"));
        println!(
            "criterion {:>2} {:<24} {}  ({:.1} s) {}",
            i + 1,
            name,
            if result.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            result.detail
        );
        if !result.passed {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
