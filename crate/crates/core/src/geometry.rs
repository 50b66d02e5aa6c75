//! Link geometry: the transmit segment through the origin along `ŝ`, the
//! receive segment parallel to `ẑ` centred at `(d_x, 0, d_z)`.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Position or direction in the global frame.
pub type Vec3 = Vector3<f64>;

/// Real 3×3 matrix.
pub type Mat3 = Matrix3<f64>;

/// Lengths in meters, angles in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    l_s: f64,
    l_r: f64,
    d_x: f64,
    d_z: f64,
    theta_s: f64,
    phi_s: f64,
}

impl LinkGeometry {
    pub fn new(l_s: f64, l_r: f64, d_x: f64, d_z: f64, theta_s: f64, phi_s: f64) -> Result<Self> {
        let all_finite = [l_s, l_r, d_x, d_z, theta_s, phi_s]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Geometry("non-finite parameter".into()));
        }
        if l_s <= 0.0 || l_r <= 0.0 {
            return Err(Error::Geometry(format!(
                "segment lengths must be positive (L_s = {l_s}, L_r = {l_r})"
            )));
        }
        // d_x = 0 lets the receive line pass through the source.
        if d_x <= 0.0 {
            return Err(Error::Geometry(format!("d_x must be positive, got {d_x}")));
        }
        if !(0.0..=PI).contains(&theta_s) {
            return Err(Error::Geometry(format!(
                "theta_s must lie in [0, pi], got {theta_s}"
            )));
        }
        if !(0.0..TAU).contains(&phi_s) {
            return Err(Error::Geometry(format!(
                "phi_s must lie in [0, 2pi), got {phi_s}"
            )));
        }
        Ok(Self {
            l_s,
            l_r,
            d_x,
            d_z,
            theta_s,
            phi_s,
        })
    }

    /// Same as [`LinkGeometry::new`] with the two angles given in degrees.
    pub fn from_degrees(
        l_s: f64,
        l_r: f64,
        d_x: f64,
        d_z: f64,
        theta_s_deg: f64,
        phi_s_deg: f64,
    ) -> Result<Self> {
        Self::new(
            l_s,
            l_r,
            d_x,
            d_z,
            theta_s_deg.to_radians(),
            phi_s_deg.to_radians(),
        )
    }

    pub fn l_s(&self) -> f64 {
        self.l_s
    }

    pub fn l_r(&self) -> f64 {
        self.l_r
    }

    pub fn d_x(&self) -> f64 {
        self.d_x
    }

    pub fn d_z(&self) -> f64 {
        self.d_z
    }

    pub fn theta_s(&self) -> f64 {
        self.theta_s
    }

    pub fn phi_s(&self) -> f64 {
        self.phi_s
    }

    pub fn with_d_x(&self, d_x: f64) -> Result<Self> {
        Self::new(self.l_s, self.l_r, d_x, self.d_z, self.theta_s, self.phi_s)
    }

    pub fn with_d_z(&self, d_z: f64) -> Result<Self> {
        Self::new(self.l_s, self.l_r, self.d_x, d_z, self.theta_s, self.phi_s)
    }

    pub fn with_angles(&self, theta_s: f64, phi_s: f64) -> Result<Self> {
        Self::new(self.l_s, self.l_r, self.d_x, self.d_z, theta_s, phi_s)
    }

    pub fn source_direction(&self) -> Vec3 {
        source_direction(self.theta_s, self.phi_s)
    }

    pub fn rotation(&self) -> Mat3 {
        rotation_matrix(self.theta_s, self.phi_s)
    }

    /// Receive segment as `(lower, upper)` bounds on `r_z`.
    pub fn receive_interval(&self) -> (f64, f64) {
        (self.d_z - 0.5 * self.l_r, self.d_z + 0.5 * self.l_r)
    }

    /// Transmit segment as bounds on the source coordinate along `ŝ`.
    pub fn source_interval(&self) -> (f64, f64) {
        (-0.5 * self.l_s, 0.5 * self.l_s)
    }

    /// Whether `r_z` lies strictly inside the receive segment.
    pub fn in_receive_segment(&self, r_z: f64) -> bool {
        (r_z - self.d_z).abs() < 0.5 * self.l_r
    }
}

/// Unit vector along the transmit segment.
pub fn source_direction(theta_s: f64, phi_s: f64) -> Vec3 {
    let (sin_t, cos_t) = theta_s.sin_cos();
    let (sin_p, cos_p) = phi_s.sin_cos();
    Vec3::new(cos_p * sin_t, sin_p * sin_t, cos_t)
}

/// Rotation taking global coordinates to the source frame whose `z'` axis is `ŝ`.
pub fn rotation_matrix(theta_s: f64, phi_s: f64) -> Mat3 {
    let (sin_t, cos_t) = theta_s.sin_cos();
    let (sin_p, cos_p) = phi_s.sin_cos();
    let vers = 1.0 - cos_t;
    let off = -sin_p * cos_p * vers;
    Mat3::new(
        1.0 - cos_p * cos_p * vers,
        off,
        -cos_p * sin_t,
        off,
        1.0 - sin_p * sin_p * vers,
        -sin_p * sin_t,
        cos_p * sin_t,
        sin_p * sin_t,
        cos_t,
    )
}

/// Point of the transmit segment at signed distance `rho_s` from the origin.
pub fn source_point(rho_s: f64, geom: &LinkGeometry) -> Result<Vec3> {
    let half = 0.5 * geom.l_s;
    if !(rho_s.abs() <= half) {
        return Err(Error::OutsideSegment {
            what: "rho_s",
            value: rho_s,
            half_length: half,
        });
    }
    Ok(rho_s * geom.source_direction())
}

/// Point of the receive segment at height `r_z`.
pub fn receive_point(r_z: f64, geom: &LinkGeometry) -> Result<Vec3> {
    let half = 0.5 * geom.l_r;
    if !((r_z - geom.d_z).abs() <= half) {
        return Err(Error::OutsideSegment {
            what: "r_z - d_z",
            value: r_z - geom.d_z,
            half_length: half,
        });
    }
    Ok(Vec3::new(geom.d_x, 0.0, r_z))
}
