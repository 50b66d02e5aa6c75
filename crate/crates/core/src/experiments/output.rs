use std::fmt::Write as _;
use std::path::Path;

use super::run::{AvgRecord, FieldTable, PatternTable, SweepRecord};
use super::SweepParam;
use crate::receivers::Scheme;
use crate::{Error, Result};

/// Nine significant digits in scientific notation.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.8e}")
    } else {
        String::from("nan")
    }
}

fn clean(msg: &str) -> String {
    msg.replace([',', '\n', '\r'], ";")
}

fn scheme_header(out: &mut String, suffix: &str) {
    for s in Scheme::ALL {
        let _ = write!(out, ",se_{}{suffix}", s.name().to_ascii_lowercase());
    }
}

fn push_row(out: &mut String, values: Option<&[f64; 4]>) {
    for i in 0..4 {
        out.push(',');
        if let Some(v) = values {
            out.push_str(&fmt_float(v[i]));
        }
    }
}

pub fn pattern_csv(table: &PatternTable) -> String {
    let mut out = String::from("theta_deg");
    for m in &table.modes {
        let _ = write!(out, ",n{}", m.n());
    }
    out.push('\n');
    for (j, t) in table.theta_deg.iter().enumerate() {
        out.push_str(&format!("{t:.1}"));
        for row in &table.values {
            out.push(',');
            out.push_str(&fmt_float(row[j]));
        }
        out.push('\n');
    }
    out
}

pub fn field_csv(table: &FieldTable) -> String {
    let mut out = String::from("offset_m");
    for m in &table.modes {
        let _ = write!(out, ",n{}", m.n());
    }
    out.push('\n');
    for (j, x) in table.offsets.iter().enumerate() {
        out.push_str(&fmt_float(*x));
        for row in &table.values {
            out.push(',');
            out.push_str(&fmt_float(row[j]));
        }
        out.push('\n');
    }
    out
}

pub fn sweep_csv(param: SweepParam, records: &[SweepRecord]) -> String {
    let mut out = String::from(param.column());
    scheme_header(&mut out, "");
    out.push_str(",below_far_field,error\n");
    for r in records {
        out.push_str(&fmt_float(r.value));
        push_row(&mut out, r.se.as_ref());
        let _ = writeln!(
            out,
            ",{},{}",
            u8::from(r.below_far_field),
            clean(r.error.as_deref().unwrap_or(""))
        );
    }
    out
}

pub fn avg_sweep_csv(param: SweepParam, records: &[AvgRecord]) -> String {
    let mut out = String::from(param.column());
    scheme_header(&mut out, "_mean");
    scheme_header(&mut out, "_stderr");
    out.push_str(",samples,failures,error\n");
    for r in records {
        out.push_str(&fmt_float(r.value));
        push_row(&mut out, r.mean.as_ref());
        push_row(&mut out, r.std_err.as_ref());
        let _ = writeln!(
            out,
            ",{},{},{}",
            r.samples,
            r.failures,
            clean(r.error.as_deref().unwrap_or(""))
        );
    }
    out
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
