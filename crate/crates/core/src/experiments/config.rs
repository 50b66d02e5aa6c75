//! Experiment configuration.
//!
//! TOML with sections `[geometry]`, `[wdm]`, `[quadrature]`, `[sweep]` and
//! `[output]`. Lengths in meters, angles in degrees, powers in A², ratios in
//! dB. Every key is optional; missing keys come from the preset named by the
//! top-level `preset` key (default `desk`).
//!
//! ```toml
//! preset = "desk"
//!
//! [geometry]
//! l_s = 0.2          # transmit segment length
//! l_r = 1.0          # receive segment length
//! d_x = 2.0          # horizontal offset of the receive segment
//! d_z = 0.0          # vertical offset of the receive segment centre
//! theta_s = 0.0      # polar angle of the source, degrees
//! phi_s = 0.0        # azimuth of the source, degrees
//!
//! [wdm]
//! wavelength = 0.02
//! modes = 21         # default: maximum mode count for l_s and wavelength
//! p_s = 1e-7
//! snr_emi_db = 90.0  # P / sigma2_emi
//! snr_hdw_db = 120.0 # P / sigma2_hdw; omit for sigma2_hdw = 0
//! emi_support = "shifted"   # or "centered"
//! mmse_form = "standard"    # or "power-first"
//!
//! [quadrature]
//! points_per_wavelength = 8.0
//! nodes_per_panel = 8
//! max_panels = 1000000
//! rel_tol = 1e-6
//!
//! [sweep]
//! parameter = "d_z"  # d_x, d_z, theta_s, phi_s
//! values = [0.0, 0.5, 1.0]          # or start/stop/points
//! start = 0.0
//! stop = 2.0
//! points = 21
//! mode_offsets = [-2, 0, 5]         # pattern and field runs
//! field_points = 1001
//! seed = 1
//! ensemble = 20                     # theta draws per phi (avg-sweep)
//! phi_set = [0.0, 22.5, 45.0, 77.5, 90.0]
//! theta_max = 30.0
//!
//! [output]
//! csv = "out.csv"
//! svg = "out.svg"
//! cache_dir = "cache"
//! workers = 8
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Deserialize;

use crate::channel::{max_modes, EmiSupport, WdmConfig};
use crate::geometry::LinkGeometry;
use crate::quadrature::QuadratureSpec;
use crate::receivers::MmseForm;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// λ = 0.02 m, L_s = 0.2 m, L_r = 1 m, N = 21, d_x = 2 m.
    Desk,
    /// λ = 0.01 m, L_s = 0.2 m, L_r = 3 m, N = 41, d_x = 5 m.
    Full,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "full" => Ok(Preset::Full),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "d_x")]
    Dx,
    #[serde(rename = "d_z")]
    Dz,
    #[serde(rename = "theta_s")]
    Theta,
    #[serde(rename = "phi_s")]
    Phi,
}

impl SweepParam {
    pub fn column(&self) -> &'static str {
        match self {
            SweepParam::Dx => "d_x_m",
            SweepParam::Dz => "d_z_m",
            SweepParam::Theta => "theta_s_deg",
            SweepParam::Phi => "phi_s_deg",
        }
    }

    /// Geometry with this parameter set to `value` (meters or degrees).
    pub fn apply(&self, geom: &LinkGeometry, value: f64) -> Result<LinkGeometry> {
        match self {
            SweepParam::Dx => geom.with_d_x(value),
            SweepParam::Dz => geom.with_d_z(value),
            SweepParam::Theta => geom.with_angles(value.to_radians(), geom.phi_s()),
            SweepParam::Phi => geom.with_angles(geom.theta_s(), value.to_radians()),
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d_x" | "dx" => Ok(SweepParam::Dx),
            "d_z" | "dz" => Ok(SweepParam::Dz),
            "theta_s" | "theta" => Ok(SweepParam::Theta),
            "phi_s" | "phi" => Ok(SweepParam::Phi),
            other => Err(Error::Config(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::Dx => "d_x",
            SweepParam::Dz => "d_z",
            SweepParam::Theta => "theta_s",
            SweepParam::Phi => "phi_s",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    /// Meters for distances, degrees for angles.
    pub values: Vec<f64>,
    pub mode_offsets: Vec<i64>,
    pub field_points: usize,
    pub seed: u64,
    pub ensemble: usize,
    pub phi_set_deg: Vec<f64>,
    pub theta_max_deg: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputSpec {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub geometry: LinkGeometry,
    pub config: WdmConfig,
    pub mmse_form: MmseForm,
    pub sweep: SweepSpec,
    pub output: OutputSpec,
}

/// Evenly spaced grid including both ends.
pub(crate) fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..points)
            .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

impl ExperimentSpec {
    pub fn preset(preset: Preset) -> Self {
        let (l_r, d_x, wavelength, dz_stop) = match preset {
            Preset::Desk => (1.0, 2.0, 0.02, 2.0),
            Preset::Full => (3.0, 5.0, 0.01, 5.0),
        };
        let l_s = 0.2;
        let geometry = LinkGeometry::new(l_s, l_r, d_x, 0.0, 0.0, 0.0).expect("preset geometry");
        let config = WdmConfig::from_snr_db(
            wavelength,
            max_modes(l_s, wavelength),
            1e-7,
            Some(90.0),
            None,
            QuadratureSpec::default(),
        )
        .expect("preset config");
        Self {
            geometry,
            config,
            mmse_form: MmseForm::Standard,
            sweep: SweepSpec {
                parameter: SweepParam::Dz,
                values: linspace(0.0, dz_stop, 21),
                mode_offsets: vec![-2, 0, 5],
                field_points: 1001,
                seed: 1,
                ensemble: 20,
                phi_set_deg: vec![0.0, 22.5, 45.0, 77.5, 90.0],
                theta_max_deg: 30.0,
            },
            output: OutputSpec::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: FileConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        file.resolve(None)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate_for(&self.geometry)?;
        if self.sweep.values.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        for &v in &self.sweep.values {
            self.sweep.parameter.apply(&self.geometry, v)?;
        }
        if self.sweep.field_points < 2 {
            return Err(Error::Config("field_points must be at least 2".into()));
        }
        if self.sweep.ensemble == 0 {
            return Err(Error::Config("ensemble must be at least 1".into()));
        }
        if self.sweep.phi_set_deg.is_empty() {
            return Err(Error::Config("phi_set is empty".into()));
        }
        if !(0.0..=180.0).contains(&self.sweep.theta_max_deg) {
            return Err(Error::Config("theta_max must lie in [0, 180]".into()));
        }
        for &phi in &self.sweep.phi_set_deg {
            self.geometry.with_angles(0.0, phi.to_radians())?;
        }
        Ok(())
    }
}

/// On-disk form of [`ExperimentSpec`]; every key optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<Preset>,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub wdm: WdmSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub l_s: Option<f64>,
    pub l_r: Option<f64>,
    pub d_x: Option<f64>,
    pub d_z: Option<f64>,
    pub theta_s: Option<f64>,
    pub phi_s: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WdmSection {
    pub wavelength: Option<f64>,
    pub modes: Option<usize>,
    pub p_s: Option<f64>,
    pub snr_emi_db: Option<f64>,
    pub snr_hdw_db: Option<f64>,
    pub emi_support: Option<EmiSupport>,
    pub mmse_form: Option<MmseForm>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub points_per_wavelength: Option<f64>,
    pub nodes_per_panel: Option<usize>,
    pub max_panels: Option<usize>,
    pub rel_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: Option<SweepParam>,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    pub mode_offsets: Option<Vec<i64>>,
    pub field_points: Option<usize>,
    pub seed: Option<u64>,
    pub ensemble: Option<usize>,
    pub phi_set: Option<Vec<f64>>,
    pub theta_max: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    /// Overlays this file on a preset. `preset_override` wins over the
    /// file's own `preset` key.
    pub fn resolve(&self, preset_override: Option<Preset>) -> Result<ExperimentSpec> {
        let preset = preset_override.or(self.preset).unwrap_or(Preset::Desk);
        let base = ExperimentSpec::preset(preset);
        let g = &self.geometry;
        let b = &base.geometry;
        let geometry = LinkGeometry::new(
            g.l_s.unwrap_or(b.l_s()),
            g.l_r.unwrap_or(b.l_r()),
            g.d_x.unwrap_or(b.d_x()),
            g.d_z.unwrap_or(b.d_z()),
            g.theta_s.map_or(b.theta_s(), f64::to_radians),
            g.phi_s.map_or(b.phi_s(), f64::to_radians),
        )?;

        let q = &self.quadrature;
        let bq = base.config.quadrature;
        let quadrature = QuadratureSpec {
            points_per_wavelength: q.points_per_wavelength.unwrap_or(bq.points_per_wavelength),
            nodes_per_panel: q.nodes_per_panel.unwrap_or(bq.nodes_per_panel),
            max_panels: q.max_panels.unwrap_or(bq.max_panels),
            rel_tol: q.rel_tol.unwrap_or(bq.rel_tol),
        };

        let w = &self.wdm;
        let wavelength = w.wavelength.unwrap_or(base.config.wavelength);
        let modes = w
            .modes
            .unwrap_or_else(|| max_modes(geometry.l_s(), wavelength));
        let config = WdmConfig::from_snr_db(
            wavelength,
            modes,
            w.p_s.unwrap_or(base.config.p_s),
            Some(w.snr_emi_db.unwrap_or(90.0)),
            w.snr_hdw_db,
            quadrature,
        )?
        .with_emi_support(w.emi_support.unwrap_or_default());

        let s = &self.sweep;
        let bs = base.sweep;
        let values = match (&s.values, s.start, s.stop, s.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(z), Some(n)) => linspace(a, z, n),
            (None, None, None, None) => bs.values,
            _ => {
                return Err(Error::Config(
                    "sweep grid: give either `values` or all of `start`, `stop`, `points`".into(),
                ))
            }
        };
        let sweep = SweepSpec {
            parameter: s.parameter.unwrap_or(bs.parameter),
            values,
            mode_offsets: s.mode_offsets.clone().unwrap_or(bs.mode_offsets),
            field_points: s.field_points.unwrap_or(bs.field_points),
            seed: s.seed.unwrap_or(bs.seed),
            ensemble: s.ensemble.unwrap_or(bs.ensemble),
            phi_set_deg: s.phi_set.clone().unwrap_or(bs.phi_set_deg),
            theta_max_deg: s.theta_max.unwrap_or(bs.theta_max_deg),
        };

        let o = &self.output;
        let spec = ExperimentSpec {
            geometry,
            config,
            mmse_form: w.mmse_form.unwrap_or_default(),
            sweep,
            output: OutputSpec {
                csv: o.csv.clone(),
                svg: o.svg.clone(),
                cache_dir: o.cache_dir.clone(),
                workers: o.workers,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}
