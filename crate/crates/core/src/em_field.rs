//! Far-field radiation of a Fourier-mode current on the transmit segment.

use std::f64::consts::{PI, TAU};

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::geometry::{LinkGeometry, Vec3};
use crate::quadrature::QuadratureSpec;
use crate::{Error, Result, C64};

/// Free-space intrinsic impedance in Ohm.
pub const Z0: f64 = 376.73;

/// Separations below this many wavelengths set the far-field warning flag.
pub const FAR_FIELD_WAVELENGTHS: f64 = 10.0;

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmConstants {
    wavelength: f64,
    wavenumber: f64,
}

impl EmConstants {
    pub fn new(wavelength: f64) -> Result<Self> {
        if !(wavelength > 0.0) || !wavelength.is_finite() {
            return Err(Error::Config(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        Ok(Self {
            wavelength,
            wavenumber: TAU / wavelength,
        })
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn z0(&self) -> f64 {
        Z0
    }

    pub fn far_field_distance(&self) -> f64 {
        FAR_FIELD_WAVELENGTHS * self.wavelength
    }
}

/// One Fourier mode `n` of `n_modes`, with its spatial frequency `kappa`
/// and normalized direction cosine `gamma = kappa / wavenumber`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeIndex {
    n: usize,
    n_modes: usize,
    kappa: f64,
    gamma: f64,
}

impl ModeIndex {
    pub fn new(n: usize, n_modes: usize, l_s: f64, k: &EmConstants) -> Result<Self> {
        if n == 0 || n > n_modes {
            return Err(Error::Config(format!(
                "mode index {n} outside 1..={n_modes}"
            )));
        }
        let kappa = TAU / l_s * (n as f64 - 0.5 * (n_modes as f64 + 1.0));
        Ok(Self {
            n,
            n_modes,
            kappa,
            gamma: kappa / k.wavenumber(),
        })
    }

    /// Mode at offset `n_star` from the centre mode `(N + 1) / 2`. `N` must be odd.
    pub fn from_offset(n_star: i64, n_modes: usize, l_s: f64, k: &EmConstants) -> Result<Self> {
        if n_modes.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "mode offsets need an odd mode count, got {n_modes}"
            )));
        }
        let n = (n_modes as i64 + 1) / 2 + n_star;
        if n < 1 {
            return Err(Error::Config(format!(
                "mode offset {n_star} outside 1..={n_modes}"
            )));
        }
        Self::new(n as usize, n_modes, l_s, k)
    }

    /// The zero-frequency (broadside) mode.
    pub fn broadside(l_s: f64, k: &EmConstants) -> Self {
        Self::new(1, 1, l_s, k).expect("single mode is always valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Signed offset from the centre mode.
    pub fn offset(&self) -> f64 {
        self.n as f64 - 0.5 * (self.n_modes as f64 + 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DyadicValue {
    pub matrix: Matrix3<C64>,
    pub below_far_field: bool,
}

/// Far-field dyadic Green's function `e^{jκ|p|} / (4π|p|) (I - p̂p̂ᵀ)`, `p = r - s`.
pub fn green_dyadic_ff(r: &Vec3, s: &Vec3, k: &EmConstants) -> Result<DyadicValue> {
    let p = r - s;
    let dist = p.norm();
    if dist == 0.0 {
        return Err(Error::ZeroDistance);
    }
    let p_hat = p / dist;
    let projector = Matrix3::<f64>::identity() - p_hat * p_hat.transpose();
    let scale = C64::from_polar(1.0 / (4.0 * PI * dist), k.wavenumber() * dist);
    Ok(DyadicValue {
        matrix: projector.map(|v| scale * v),
        below_far_field: dist < k.far_field_distance(),
    })
}

/// Scalar kernel `ẑᵀ g(u, 0) ŝ` with the source direction fixed.
#[derive(Clone, Copy, Debug)]
pub struct GzKernel {
    dir: Vec3,
    wavenumber: f64,
}

impl GzKernel {
    pub fn new(theta_s: f64, phi_s: f64, k: &EmConstants) -> Self {
        Self {
            dir: crate::geometry::source_direction(theta_s, phi_s),
            wavenumber: k.wavenumber(),
        }
    }

    pub fn for_geometry(geom: &LinkGeometry, k: &EmConstants) -> Self {
        Self::new(geom.theta_s(), geom.phi_s(), k)
    }

    /// Caller guarantees `u != 0`.
    #[inline]
    pub fn eval(&self, u: &Vec3) -> C64 {
        let rho2 = u.x * u.x + u.y * u.y;
        let norm2 = rho2 + u.z * u.z;
        let norm = norm2.sqrt();
        let bracket =
            -u.x * u.z * self.dir.x - u.y * u.z * self.dir.y + rho2 * self.dir.z;
        C64::from_polar(bracket / (4.0 * PI * norm2 * norm), self.wavenumber * norm)
    }
}

pub fn gz_kernel(u: &Vec3, theta_s: f64, phi_s: f64, k: &EmConstants) -> Result<C64> {
    if u.norm() == 0.0 {
        return Err(Error::ZeroDistance);
    }
    Ok(GzKernel::new(theta_s, phi_s, k).eval(u))
}

/// Normalized far-field power pattern of mode `n` at angle `theta_bar` from `ŝ`.
pub fn radiation_pattern(
    theta_bar: f64,
    mode: &ModeIndex,
    geom: &LinkGeometry,
    k: &EmConstants,
) -> f64 {
    let sin_t = theta_bar.sin();
    let arg = 2.0 * geom.l_s() / k.wavelength() * (mode.gamma() - theta_bar.cos());
    let s = sinc(arg);
    sin_t * sin_t * s * s
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldProfile {
    /// `e_z` at each requested `r_z`, unit current amplitude.
    pub values: Vec<C64>,
    pub below_far_field: bool,
}

impl FieldProfile {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }
}

/// z-component of the field radiated by mode `n` at the receive points
/// `(d_x, 0, r_z)`.
pub fn received_field_profile(
    mode: &ModeIndex,
    geom: &LinkGeometry,
    k: &EmConstants,
    grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<FieldProfile> {
    let half = 0.5 * geom.l_r();
    if let Some(&bad) = grid.iter().find(|&&z| !((z - geom.d_z()).abs() <= half)) {
        return Err(Error::OutsideSegment {
            what: "r_z - d_z",
            value: bad - geom.d_z(),
            half_length: half,
        });
    }
    let (s0, s1) = geom.source_interval();
    // Phase rate along s is bounded by kappa + |kappa_n| <= 2 kappa.
    let rule = spec.rule(s0, s1, 0.5 * k.wavelength())?;
    let kernel = GzKernel::for_geometry(geom, k);
    let dir = geom.source_direction();
    let amp = 1.0 / geom.l_s().sqrt();
    let basis: Vec<C64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&s, &w)| C64::from_polar(amp * w, mode.kappa() * s))
        .collect();
    let prefactor = C64::new(0.0, k.wavenumber() * Z0);
    let d_x = geom.d_x();

    let values: Vec<(C64, f64)> = grid
        .par_iter()
        .map(|&r_z| {
            let r = Vec3::new(d_x, 0.0, r_z);
            let mut acc = C64::new(0.0, 0.0);
            let mut min_dist = f64::INFINITY;
            for (&s, b) in rule.nodes.iter().zip(&basis) {
                let u = r - s * dir;
                min_dist = min_dist.min(u.norm());
                acc += kernel.eval(&u) * b;
            }
            (prefactor * acc, min_dist)
        })
        .collect();
    let below = values
        .iter()
        .any(|(_, d)| *d < k.far_field_distance());
    Ok(FieldProfile {
        values: values.into_iter().map(|(v, _)| v).collect(),
        below_far_field: below,
    })
}

/// Normalization constant `e0`: the peak of `|e_z|` for the broadside mode with
/// a vertical source and a centred receive segment, over the same offsets
/// `r_z - d_z` as the profile being normalized.
pub fn reference_peak(
    geom: &LinkGeometry,
    k: &EmConstants,
    offsets: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    let reference = LinkGeometry::new(geom.l_s(), geom.l_r(), geom.d_x(), 0.0, 0.0, 0.0)?;
    let mode = ModeIndex::broadside(geom.l_s(), k);
    let profile = received_field_profile(&mode, &reference, k, offsets, spec)?;
    Ok(profile
        .values
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakLocation {
    pub r_z: f64,
    /// `|r_z - d_z| < L_r / 2`.
    pub in_segment: bool,
}

/// Peak of `|e_z|` for a vertical source, `r_z = d_x γ / sqrt(1 - γ²)`.
pub fn peak_location_boresight(mode: &ModeIndex, geom: &LinkGeometry) -> Result<PeakLocation> {
    let g = mode.gamma();
    let denom = 1.0 - g * g;
    if !(denom > 0.0) {
        return Err(Error::ParallelDirection);
    }
    let r_z = geom.d_x() * g / denom.sqrt();
    Ok(PeakLocation {
        r_z,
        in_segment: geom.in_receive_segment(r_z),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeakSolution {
    pub peaks: Vec<PeakLocation>,
    /// `cos²θ_s = γ²`: the closed form is singular and the roots came from
    /// the surviving linear equation.
    pub degenerate: bool,
}

const DEGENERATE_TOL: f64 = 1e-12;

/// Intersections of the maximum-radiation cone of mode `n` with the receive
/// line `(d_x, 0, r_z)`.
///
/// Roots of `z²(c² - γ²) + 2 d_x a c z + d_x²(a² - γ²) = 0` with
/// `a = cos φ_s sin θ_s`, `c = cos θ_s`, kept when `d_x a + c z` carries the
/// sign of `γ` so that `r̂·ŝ = γ` rather than `-γ`.
pub fn peak_locations_general(mode: &ModeIndex, geom: &LinkGeometry) -> PeakSolution {
    let g = mode.gamma();
    let (sin_t, cos_t) = geom.theta_s().sin_cos();
    let (sin_p, cos_p) = geom.phi_s().sin_cos();
    let a = cos_p * sin_t;
    let c = cos_t;
    let d_x = geom.d_x();
    let delta = 1.0 - sin_p * sin_p * sin_t * sin_t - g * g;

    let denom = c * c - g * g;
    let degenerate = denom.abs() < DEGENERATE_TOL;
    let mut roots = Vec::with_capacity(2);
    if degenerate {
        let lin = 2.0 * a * c;
        if lin.abs() > DEGENERATE_TOL {
            roots.push(-d_x * (a * a - g * g) / lin);
        }
    } else if delta >= 0.0 {
        let sq = g.abs() * delta.sqrt();
        let minus = d_x * (-a * c - sq) / denom;
        let plus = d_x * (-a * c + sq) / denom;
        roots.push(minus);
        if plus != minus {
            roots.push(plus);
        }
    }

    let peaks = roots
        .into_iter()
        .filter(|&z| {
            let proj = d_x * a + c * z;
            if g > 0.0 {
                proj >= 0.0
            } else if g < 0.0 {
                proj <= 0.0
            } else {
                true
            }
        })
        .map(|r_z| PeakLocation {
            r_z,
            in_segment: geom.in_receive_segment(r_z),
        })
        .collect();
    PeakSolution { peaks, degenerate }
}
