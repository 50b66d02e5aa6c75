//! Linear processing architectures on the whitened channel `H̃`.
//!
//! | scheme | precoder `A` | combiner `B̃`                 | gain `χ_n`      |
//! |--------|--------------|------------------------------|-----------------|
//! | SVD    | `V`          | `U`                          | `σ_n²`          |
//! | MMSE   | `I`          | `(H̃ P H̃ᴴ + I)⁻¹ H̃`          | `‖h̃_n‖²`        |
//! | MR     | `I`          | `H̃`                          | `‖h̃_n‖²`        |
//! | Plain  | `I`          | `I`                          | `|[H̃]_nn|²`     |
//!
//! Powers come from water-filling over `χ_n`, then every scheme is scored by
//! `Σ log2(1 + SINR_n)`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::{CMatrix, Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Svd,
    Mmse,
    Mr,
    Plain,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Svd, Scheme::Mmse, Scheme::Mr, Scheme::Plain];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Svd => "svd",
            Scheme::Mmse => "mmse",
            Scheme::Mr => "mr",
            Scheme::Plain => "plain",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Operand order of the MMSE combiner.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MmseForm {
    /// `(H̃ P H̃ᴴ + I)⁻¹ H̃`.
    #[default]
    Standard,
    /// `(P H̃ H̃ᴴ + I)⁻¹ H̃`.
    PowerFirst,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeResult {
    pub scheme: Scheme,
    pub p: Vec<f64>,
    pub sinr: Vec<f64>,
    /// Bits per channel use.
    pub se_total: f64,
    pub mu: f64,
    pub a: CMatrix,
    pub b_tilde: CMatrix,
}

/// Water-filling `p_n = max(0, μ - 1/χ_n)` with `Σ p_n = total_power`.
///
/// Exact: gains are sorted, and the active set is the largest prefix whose
/// water level stays above the weakest member's floor.
pub fn waterfill(chi: &[f64], total_power: f64) -> Result<(Vec<f64>, f64)> {
    if !(total_power > 0.0) || !total_power.is_finite() {
        return Err(Error::WaterFilling);
    }
    if chi.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
        return Err(Error::WaterFilling);
    }
    let mut order: Vec<usize> = (0..chi.len()).filter(|&i| chi[i] > 0.0).collect();
    if order.is_empty() {
        return Err(Error::WaterFilling);
    }
    // Strongest first; stable so equal gains keep their input order.
    order.sort_by(|&a, &b| chi[b].partial_cmp(&chi[a]).unwrap_or(Ordering::Equal));

    let mut floor_sum = 0.0;
    let mut mu = 0.0;
    for (k, &i) in order.iter().enumerate() {
        let floor = 1.0 / chi[i];
        let candidate = (total_power + floor_sum + floor) / (k + 1) as f64;
        if k > 0 && candidate <= floor {
            break;
        }
        floor_sum += floor;
        mu = candidate;
    }
    let p = chi
        .iter()
        .map(|&c| if c > 0.0 { (mu - 1.0 / c).max(0.0) } else { 0.0 })
        .collect();
    Ok((p, mu))
}

/// Gains `χ_n` of a scheme; for SVD also the sorted decomposition.
pub fn scheme_gains(kind: Scheme, h_tilde: &CMatrix) -> Result<Vec<f64>> {
    Ok(match kind {
        Scheme::Svd => {
            let svd = sorted_svd(h_tilde)?;
            svd.singular_values.iter().map(|s| s * s).collect()
        }
        Scheme::Mmse | Scheme::Mr => h_tilde.column_iter().map(|c| c.norm_squared()).collect(),
        Scheme::Plain => (0..h_tilde.ncols().min(h_tilde.nrows()))
            .map(|i| h_tilde[(i, i)].norm_sqr())
            .collect(),
    })
}

pub struct SortedSvd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

/// SVD with singular values in descending order; ties keep the order the
/// decomposition returned them in.
pub fn sorted_svd(m: &CMatrix) -> Result<SortedSvd> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Svd("matrix has non-finite entries".into()));
    }
    let svd = m
        .clone()
        .try_svd_unordered(true, true, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Svd("iteration did not converge".into()))?;
    let u = svd.u.ok_or_else(|| Error::Svd("missing U".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Svd("missing Vᴴ".into()))?;
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap_or(Ordering::Equal));
    let v = v_t.adjoint();
    Ok(SortedSvd {
        u: CMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]),
        singular_values: order.iter().map(|&i| sv[i]).collect(),
        v: CMatrix::from_fn(v.nrows(), order.len(), |i, j| v[(i, order[j])]),
    })
}

pub struct SchemeMatrices {
    pub a: CMatrix,
    pub b_tilde: CMatrix,
    pub chi: Vec<f64>,
}

/// Precoder, combiner and gains for `kind` given the allocated powers `p`.
pub fn scheme_matrices(
    kind: Scheme,
    h_tilde: &CMatrix,
    p: &[f64],
    form: MmseForm,
) -> Result<SchemeMatrices> {
    let n = h_tilde.nrows();
    let eye = CMatrix::identity(n, n);
    match kind {
        Scheme::Svd => {
            let svd = sorted_svd(h_tilde)?;
            Ok(SchemeMatrices {
                chi: svd.singular_values.iter().map(|s| s * s).collect(),
                a: svd.v,
                b_tilde: svd.u,
            })
        }
        Scheme::Mmse => {
            let pd = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                p.len(),
                p.iter().map(|&x| C64::new(x, 0.0)),
            ));
            let gram = match form {
                MmseForm::Standard => h_tilde * &pd * h_tilde.adjoint(),
                MmseForm::PowerFirst => &pd * h_tilde * h_tilde.adjoint(),
            };
            let b_tilde = (gram + &eye)
                .lu()
                .solve(h_tilde)
                .ok_or_else(|| Error::Singular("MMSE system matrix is singular".into()))?;
            Ok(SchemeMatrices {
                a: eye,
                b_tilde,
                chi: scheme_gains(kind, h_tilde)?,
            })
        }
        Scheme::Mr => Ok(SchemeMatrices {
            a: eye,
            b_tilde: h_tilde.clone(),
            chi: scheme_gains(kind, h_tilde)?,
        }),
        Scheme::Plain => Ok(SchemeMatrices {
            a: eye.clone(),
            b_tilde: eye,
            chi: scheme_gains(kind, h_tilde)?,
        }),
    }
}

/// SINR of stream `n` with combiner column `b` over the effective channel
/// `h_eff = H̃ A`.
pub fn sinr(b: &[C64], h_eff: &CMatrix, p: &[f64], n: usize) -> Result<f64> {
    let noise: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    if noise == 0.0 {
        return Err(Error::ZeroCombiner(n));
    }
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (m, col) in h_eff.column_iter().enumerate() {
        let proj: C64 = b.iter().zip(col.iter()).map(|(bi, hi)| bi.conj() * hi).sum();
        let g = proj.norm_sqr() * p[m];
        if m == n {
            signal = g;
        } else {
            interference += g;
        }
    }
    Ok(signal / (interference + noise))
}

/// Full pipeline with the standard MMSE combiner.
pub fn spectral_efficiency(kind: Scheme, ch: &ChannelSet, total_power: f64) -> Result<SchemeResult> {
    spectral_efficiency_with(kind, &ch.h_tilde, total_power, MmseForm::default())
}

pub fn spectral_efficiency_with(
    kind: Scheme,
    h_tilde: &CMatrix,
    total_power: f64,
    form: MmseForm,
) -> Result<SchemeResult> {
    let chi = scheme_gains(kind, h_tilde)?;
    let (p, mu) = waterfill(&chi, total_power)?;
    let m = scheme_matrices(kind, h_tilde, &p, form)?;
    let n = h_tilde.ncols();

    let (sinr_v, se_total) = if kind == Scheme::Svd {
        let sinr_v: Vec<f64> = p.iter().zip(&m.chi).map(|(p, c)| p * c).collect();
        let se = sinr_v.iter().map(|s| (1.0 + s).log2()).sum();
        (sinr_v, se)
    } else {
        let h_eff = h_tilde * &m.a;
        let sinr_v = (0..n)
            .map(|i| {
                let col: Vec<C64> = m.b_tilde.column(i).iter().copied().collect();
                sinr(&col, &h_eff, &p, i)
            })
            .collect::<Result<Vec<f64>>>()?;
        let se = sinr_v.iter().map(|s| (1.0 + s).log2()).sum();
        (sinr_v, se)
    };
    Ok(SchemeResult {
        scheme: kind,
        p,
        sinr: sinr_v,
        se_total,
        mu,
        a: m.a,
        b_tilde: m.b_tilde,
    })
}
