//! Plain-text channel file.
//!
//! ```text
//! # wdm-los channel file
//! format = 1
//! [geometry]
//! l_s = 0.2
//! ...
//! [wdm]
//! ...
//! [quadrature]
//! ...
//! [flags]
//! below_far_field = false
//! [matrix h 21 21]
//! <re> <im> <re> <im> ...      one line per row, row-major
//! [matrix r 21 21]
//! ...
//! ```
//!
//! Matrices `h`, `r`, `c`, `l` and `h_tilde` follow in that order. Floats are
//! written in shortest round-trip form, so a reload reproduces every entry
//! bit for bit. Angles in the header are radians.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{ChannelSet, EmiSupport, WdmConfig};
use crate::geometry::LinkGeometry;
use crate::quadrature::QuadratureSpec;
use crate::{CMatrix, Error, Result, C64};

const MAGIC: &str = "# wdm-los channel file";
const FORMAT: u32 = 1;
const MATRICES: [&str; 5] = ["h", "r", "c", "l", "h_tilde"];

/// Provenance recorded ahead of the matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelHeader {
    pub geometry: LinkGeometry,
    pub config: WdmConfig,
}

impl ChannelHeader {
    fn render(&self) -> String {
        let g = &self.geometry;
        let c = &self.config;
        let q = &c.quadrature;
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "format = {FORMAT}");
        let _ = writeln!(s, "[geometry]");
        let _ = writeln!(s, "l_s = {:?}", g.l_s());
        let _ = writeln!(s, "l_r = {:?}", g.l_r());
        let _ = writeln!(s, "d_x = {:?}", g.d_x());
        let _ = writeln!(s, "d_z = {:?}", g.d_z());
        let _ = writeln!(s, "theta_s = {:?}", g.theta_s());
        let _ = writeln!(s, "phi_s = {:?}", g.phi_s());
        let _ = writeln!(s, "[wdm]");
        let _ = writeln!(s, "wavelength = {:?}", c.wavelength);
        let _ = writeln!(s, "n_modes = {}", c.n_modes);
        let _ = writeln!(s, "p_s = {:?}", c.p_s);
        let _ = writeln!(s, "sigma2_emi = {:?}", c.sigma2_emi);
        let _ = writeln!(s, "sigma2_hdw = {:?}", c.sigma2_hdw);
        let _ = writeln!(s, "emi_support = {}", c.emi_support.as_str());
        let _ = writeln!(s, "[quadrature]");
        let _ = writeln!(s, "points_per_wavelength = {:?}", q.points_per_wavelength);
        let _ = writeln!(s, "nodes_per_panel = {}", q.nodes_per_panel);
        let _ = writeln!(s, "max_panels = {}", q.max_panels);
        let _ = writeln!(s, "rel_tol = {:?}", q.rel_tol);
        s
    }

    /// Describes the first differing field, if any.
    fn mismatch(&self, other: &ChannelHeader) -> Option<String> {
        let a = self.render();
        let b = other.render();
        a.lines()
            .zip(b.lines())
            .find(|(x, y)| x != y)
            .map(|(x, y)| format!("file has `{x}`, requested `{y}`"))
    }
}

/// Hex digest of the header, usable as a cache file stem.
pub fn cache_key(header: &ChannelHeader) -> String {
    let digest = Sha256::digest(header.render().as_bytes());
    digest.iter().take(12).map(|b| format!("{b:02x}")).collect()
}

pub fn write_channel_file(path: &Path, header: &ChannelHeader, set: &ChannelSet) -> Result<()> {
    let mut out = header.render();
    let _ = writeln!(out, "[flags]");
    let _ = writeln!(out, "below_far_field = {}", set.below_far_field);
    for (name, m) in MATRICES.iter().zip(matrices(set)) {
        let _ = writeln!(out, "[matrix {name} {} {}]", m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols())
                .map(|j| format!("{:?} {:?}", m[(i, j)].re, m[(i, j)].im))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    // Write-then-rename keeps concurrent readers from seeing a partial file.
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, out).map_err(|e| Error::io(format!("writing {}", tmp.display()), e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(format!("renaming to {}", path.display()), e))
}

fn matrices(set: &ChannelSet) -> [&CMatrix; 5] {
    [&set.h, &set.r, &set.c, &set.l, &set.h_tilde]
}

pub fn read_channel_file(path: &Path) -> Result<(ChannelHeader, ChannelSet)> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse(&text).map_err(|reason| Error::ChannelFile {
        path: path.to_path_buf(),
        reason,
    })
}

/// Reads a channel file and checks its header against the requested setup.
pub fn load_matching(path: &Path, geom: &LinkGeometry, cfg: &WdmConfig) -> Result<ChannelSet> {
    let (header, set) = read_channel_file(path)?;
    let wanted = ChannelHeader {
        geometry: *geom,
        config: *cfg,
    };
    match header.mismatch(&wanted) {
        Some(diff) => Err(Error::HeaderMismatch(diff)),
        None => Ok(set),
    }
}

struct Fields<'a> {
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Fields<'a> {
    fn get(&self, key: &str) -> Result<&'a str, String> {
        self.pairs
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| format!("missing key `{key}`"))
    }

    fn f64(&self, key: &str) -> Result<f64, String> {
        let v = self.get(key)?;
        v.parse().map_err(|_| format!("bad number for `{key}`: {v}"))
    }

    fn usize(&self, key: &str) -> Result<usize, String> {
        let v = self.get(key)?;
        v.parse().map_err(|_| format!("bad integer for `{key}`: {v}"))
    }
}

fn parse(text: &str) -> Result<(ChannelHeader, ChannelSet), String> {
    let mut lines = text.lines().peekable();
    if lines.next() != Some(MAGIC) {
        return Err("missing magic line".into());
    }
    let mut pairs = Vec::new();
    while let Some(line) = lines.peek() {
        if line.starts_with("[matrix ") {
            break;
        }
        let line = lines.next().unwrap_or_default().trim();
        if line.is_empty() || line.starts_with('[') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("malformed header line `{line}`"))?;
        pairs.push((k.trim(), v.trim()));
    }
    let f = Fields { pairs };
    if f.usize("format")? != FORMAT as usize {
        return Err(format!("unsupported format {}", f.get("format")?));
    }
    let geometry = LinkGeometry::new(
        f.f64("l_s")?,
        f.f64("l_r")?,
        f.f64("d_x")?,
        f.f64("d_z")?,
        f.f64("theta_s")?,
        f.f64("phi_s")?,
    )
    .map_err(|e| e.to_string())?;
    let emi_support = match f.get("emi_support")? {
        "shifted" => EmiSupport::Shifted,
        "centered" => EmiSupport::Centered,
        other => return Err(format!("unknown emi_support `{other}`")),
    };
    let quadrature = QuadratureSpec {
        points_per_wavelength: f.f64("points_per_wavelength")?,
        nodes_per_panel: f.usize("nodes_per_panel")?,
        max_panels: f.usize("max_panels")?,
        rel_tol: f.f64("rel_tol")?,
    };
    let config = WdmConfig::new(
        f.f64("wavelength")?,
        f.usize("n_modes")?,
        f.f64("p_s")?,
        f.f64("sigma2_emi")?,
        f.f64("sigma2_hdw")?,
        quadrature,
    )
    .map_err(|e| e.to_string())?
    .with_emi_support(emi_support);
    let below_far_field = match f.get("below_far_field")? {
        "true" => true,
        "false" => false,
        other => return Err(format!("bad flag `{other}`")),
    };

    let mut mats = Vec::with_capacity(MATRICES.len());
    for name in MATRICES {
        let head = lines
            .next()
            .ok_or_else(|| format!("missing matrix `{name}`"))?;
        let dims: Vec<&str> = head
            .trim_start_matches("[matrix ")
            .trim_end_matches(']')
            .split_whitespace()
            .collect();
        if dims.len() != 3 || dims[0] != name {
            return Err(format!("expected matrix `{name}`, found `{head}`"));
        }
        let rows: usize = dims[1].parse().map_err(|_| format!("bad row count in `{head}`"))?;
        let cols: usize = dims[2].parse().map_err(|_| format!("bad column count in `{head}`"))?;
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| format!("matrix `{name}` truncated at row {i}"))?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| format!("bad number in matrix `{name}` row {i}"))?;
            if vals.len() != 2 * cols {
                return Err(format!("matrix `{name}` row {i} has {} values", vals.len()));
            }
            for j in 0..cols {
                m[(i, j)] = C64::new(vals[2 * j], vals[2 * j + 1]);
            }
        }
        mats.push(m);
    }
    let mut it = mats.into_iter();
    let mut next = || it.next().expect("five matrices parsed");
    let set = ChannelSet {
        h: next(),
        r: next(),
        c: next(),
        l: next(),
        h_tilde: next(),
        below_far_field,
    };
    Ok((ChannelHeader { geometry, config }, set))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (LinkGeometry, WdmConfig) {
        let g = LinkGeometry::from_degrees(0.2, 0.5, 1.0, 0.1, 17.0, 33.0).unwrap();
        let cfg = WdmConfig::from_snr_db(0.1, 3, 1e-7, Some(90.0), Some(120.0), QuadratureSpec::default())
            .unwrap();
        (g, cfg)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (g, cfg) = setup();
        let set = ChannelSet::build(&g, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ch.txt");
        let header = ChannelHeader { geometry: g, config: cfg };
        write_channel_file(&path, &header, &set).unwrap();
        let (h2, s2) = read_channel_file(&path).unwrap();
        assert_eq!(h2, header);
        assert_eq!(s2, set);
        assert_eq!(load_matching(&path, &g, &cfg).unwrap(), set);
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let (g, cfg) = setup();
        let set = ChannelSet::build(&g, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ch.txt");
        write_channel_file(&path, &ChannelHeader { geometry: g, config: cfg }, &set).unwrap();
        let moved = g.with_d_z(0.2).unwrap();
        let err = load_matching(&path, &moved, &cfg).unwrap_err();
        assert!(matches!(err, Error::HeaderMismatch(ref m) if m.contains("d_z")), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn corrupt_files_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        fs::write(&path, "hello\n").unwrap();
        assert!(matches!(read_channel_file(&path), Err(Error::ChannelFile { .. })));
        let missing = dir.path().join("missing.txt");
        let err = read_channel_file(&missing).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn cache_key_tracks_header() {
        let (g, cfg) = setup();
        let a = cache_key(&ChannelHeader { geometry: g, config: cfg });
        let b = cache_key(&ChannelHeader {
            geometry: g.with_d_x(1.5).unwrap(),
            config: cfg,
        });
        assert_eq!(a.len(), 24);
        assert_ne!(a, b);
    }
}
