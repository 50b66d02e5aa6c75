use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{linspace, ExperimentSpec, SweepParam};
use crate::channel::{cache_key, load_matching, total_power, write_channel_file, ChannelHeader, ChannelSet, WdmConfig};
use crate::em_field::{radiation_pattern, received_field_profile, reference_peak, EmConstants, ModeIndex};
use crate::geometry::LinkGeometry;
use crate::receivers::{spectral_efficiency_with, MmseForm, Scheme};
use crate::{Error, Result};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "WDM_WORKERS";

/// Runs `f` on a pool of `workers` threads (or the `WDM_WORKERS` override).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let env = std::env::var(WORKERS_ENV).ok();
    let count = match env.as_deref().map(str::parse::<usize>) {
        Some(Ok(n)) => Some(n),
        Some(Err(_)) => {
            return Err(Error::Config(format!(
                "{WORKERS_ENV} must be a positive integer"
            )))
        }
        None => workers,
    };
    match count {
        None => Ok(f()),
        Some(0) => Err(Error::Config("worker count must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn modes_for(spec: &ExperimentSpec, k: &EmConstants) -> Result<Vec<ModeIndex>> {
    spec.sweep
        .mode_offsets
        .iter()
        .map(|&off| ModeIndex::from_offset(off, spec.config.n_modes, spec.geometry.l_s(), k))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternTable {
    pub theta_deg: Vec<f64>,
    pub modes: Vec<ModeIndex>,
    /// `values[i][j]`: mode `i` at `theta_deg[j]`.
    pub values: Vec<Vec<f64>>,
}

/// Radiation pattern on a 0.1° grid over `[0°, 180°]`.
pub fn run_pattern(spec: &ExperimentSpec) -> Result<PatternTable> {
    spec.validate()?;
    let k = spec.config.constants()?;
    let modes = modes_for(spec, &k)?;
    let theta_deg: Vec<f64> = (0..=1800).map(|i| i as f64 / 10.0).collect();
    let values = modes
        .iter()
        .map(|m| {
            theta_deg
                .iter()
                .map(|t| radiation_pattern(t.to_radians(), m, &spec.geometry, &k))
                .collect()
        })
        .collect();
    Ok(PatternTable {
        theta_deg,
        modes,
        values,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldTable {
    /// `r_z - d_z` in meters.
    pub offsets: Vec<f64>,
    pub modes: Vec<ModeIndex>,
    /// `|e_z| / e0`, one row per mode.
    pub values: Vec<Vec<f64>>,
    pub e0: f64,
    pub below_far_field: bool,
}

impl FieldTable {
    /// `(r_z - d_z, value)` at the grid maximum of mode row `i`.
    pub fn argmax(&self, i: usize) -> (f64, f64) {
        self.offsets
            .iter()
            .zip(&self.values[i])
            .fold((f64::NAN, f64::NEG_INFINITY), |best, (&x, &v)| {
                if v > best.1 {
                    (x, v)
                } else {
                    best
                }
            })
    }
}

/// Normalized `|e_z|` along the receive segment.
pub fn run_field(spec: &ExperimentSpec) -> Result<FieldTable> {
    spec.validate()?;
    let k = spec.config.constants()?;
    let modes = modes_for(spec, &k)?;
    let g = &spec.geometry;
    let half = 0.5 * g.l_r();
    let offsets = linspace(-half, half, spec.sweep.field_points);
    let grid: Vec<f64> = offsets.iter().map(|o| o + g.d_z()).collect();
    let q = &spec.config.quadrature;
    let e0 = reference_peak(g, &k, &offsets, q)?;
    let mut below = false;
    let mut values = Vec::with_capacity(modes.len());
    for m in &modes {
        let prof = received_field_profile(m, g, &k, &grid, q)?;
        below |= prof.below_far_field;
        values.push(prof.values.iter().map(|v| v.norm() / e0).collect());
    }
    Ok(FieldTable {
        offsets,
        modes,
        values,
        e0,
        below_far_field: below,
    })
}

/// Spectral efficiencies of the four schemes at one geometry, in
/// [`Scheme::ALL`] order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointOutcome {
    pub se: [f64; 4],
    pub below_far_field: bool,
}

/// Builds (or loads from `cache_dir`) the channel and scores every scheme.
pub fn evaluate_point(
    geom: &LinkGeometry,
    cfg: &WdmConfig,
    form: MmseForm,
    cache_dir: Option<&Path>,
) -> Result<PointOutcome> {
    let set = match cache_dir {
        Some(dir) => cached_channel(geom, cfg, dir)?,
        None => ChannelSet::build(geom, cfg)?,
    };
    let p = total_power(cfg)?;
    let mut se = [0.0; 4];
    for (slot, kind) in se.iter_mut().zip(Scheme::ALL) {
        *slot = spectral_efficiency_with(kind, &set.h_tilde, p, form)?.se_total;
    }
    if let Some(bad) = se.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Singular(format!("non-finite spectral efficiency {bad}")));
    }
    Ok(PointOutcome {
        se,
        below_far_field: set.below_far_field,
    })
}

fn cached_channel(geom: &LinkGeometry, cfg: &WdmConfig, dir: &Path) -> Result<ChannelSet> {
    let header = ChannelHeader {
        geometry: *geom,
        config: *cfg,
    };
    let path = dir.join(format!("{}.chan", cache_key(&header)));
    if path.exists() {
        return load_matching(&path, geom, cfg);
    }
    let set = ChannelSet::build(geom, cfg)?;
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    write_channel_file(&path, &header, &set)?;
    Ok(set)
}

/// One grid point of a sweep. A failed point keeps its row with `error` set.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub value: f64,
    pub se: Option<[f64; 4]>,
    pub below_far_field: bool,
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn se_of(&self, scheme: Scheme) -> Option<f64> {
        let i = Scheme::ALL.iter().position(|s| *s == scheme)?;
        self.se.map(|se| se[i])
    }
}

pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let param = spec.sweep.parameter;
    let cache = spec.output.cache_dir.as_deref();
    Ok(spec
        .sweep
        .values
        .par_iter()
        .map(|&value| {
            let outcome = param
                .apply(&spec.geometry, value)
                .and_then(|g| evaluate_point(&g, &spec.config, spec.mmse_form, cache));
            match outcome {
                Ok(o) => SweepRecord {
                    value,
                    se: Some(o.se),
                    below_far_field: o.below_far_field,
                    error: None,
                },
                Err(e) => SweepRecord {
                    value,
                    se: None,
                    below_far_field: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

/// Orientation-averaged sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct AvgRecord {
    pub value: f64,
    pub mean: Option<[f64; 4]>,
    /// Standard error of the mean; zero for a single sample.
    pub std_err: Option<[f64; 4]>,
    pub samples: usize,
    pub failures: usize,
    pub error: Option<String>,
}

/// Polar angles drawn uniformly from `(0, theta_max)`, `ensemble` per azimuth.
fn draw_orientations(spec: &ExperimentSpec) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.sweep.seed);
    let theta_max = spec.sweep.theta_max_deg.to_radians();
    let mut out = Vec::with_capacity(spec.sweep.phi_set_deg.len() * spec.sweep.ensemble);
    for &phi in &spec.sweep.phi_set_deg {
        for _ in 0..spec.sweep.ensemble {
            let theta = if theta_max == 0.0 {
                0.0
            } else {
                loop {
                    let u: f64 = rng.random();
                    if u > 0.0 {
                        break u * theta_max;
                    }
                }
            };
            out.push((theta, phi.to_radians()));
        }
    }
    out
}

/// Sweep averaged over source orientations. The same seeded ensemble of
/// `(theta_s, phi_s)` is reused at every grid point.
pub fn run_avg_sweep(spec: &ExperimentSpec) -> Result<Vec<AvgRecord>> {
    spec.validate()?;
    let param = spec.sweep.parameter;
    if matches!(param, SweepParam::Theta | SweepParam::Phi) {
        return Err(Error::Config(
            "averaged sweeps draw the angles; sweep d_x or d_z".into(),
        ));
    }
    let ensemble = draw_orientations(spec);
    let cache = spec.output.cache_dir.as_deref();
    let jobs: Vec<(f64, f64, f64)> = spec
        .sweep
        .values
        .iter()
        .flat_map(|&v| ensemble.iter().map(move |&(t, p)| (v, t, p)))
        .collect();
    let outcomes: Vec<Result<[f64; 4]>> = jobs
        .par_iter()
        .map(|&(value, theta, phi)| {
            let g = param
                .apply(&spec.geometry, value)?
                .with_angles(theta, phi)?;
            evaluate_point(&g, &spec.config, spec.mmse_form, cache).map(|o| o.se)
        })
        .collect();

    let per_point = ensemble.len();
    Ok(spec
        .sweep
        .values
        .iter()
        .enumerate()
        .map(|(i, &value)| {
            let chunk = &outcomes[i * per_point..(i + 1) * per_point];
            let ok: Vec<[f64; 4]> = chunk.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
            let first_err = chunk.iter().find_map(|r| r.as_ref().err().map(|e| e.to_string()));
            let failures = chunk.len() - ok.len();
            if ok.is_empty() {
                return AvgRecord {
                    value,
                    mean: None,
                    std_err: None,
                    samples: 0,
                    failures,
                    error: first_err,
                };
            }
            let n = ok.len() as f64;
            let mut mean = [0.0; 4];
            let mut std_err = [0.0; 4];
            for s in 0..4 {
                let m = ok.iter().map(|r| r[s]).sum::<f64>() / n;
                mean[s] = m;
                if ok.len() > 1 {
                    let var = ok.iter().map(|r| (r[s] - m).powi(2)).sum::<f64>() / (n - 1.0);
                    std_err[s] = (var / n).sqrt();
                }
            }
            AvgRecord {
                value,
                mean: Some(mean),
                std_err: Some(std_err),
                samples: ok.len(),
                failures,
                error: first_err,
            }
        })
        .collect())
}

/// Assembles the base-geometry channel and writes it to `path`.
pub fn run_channel_dump(spec: &ExperimentSpec, path: &Path) -> Result<ChannelSet> {
    spec.validate()?;
    let set = ChannelSet::build(&spec.geometry, &spec.config)?;
    let header = ChannelHeader {
        geometry: spec.geometry,
        config: spec.config,
    };
    write_channel_file(path, &header, &set)?;
    Ok(set)
}
