//! Snapshot files and small file helpers.
//!
//! A snapshot is whitespace-separated columns `x rho u m E z w`, preceded by
//! `#` header lines naming the model, the run and the time. Values are
//! written with 17 significant digits so reading a snapshot back yields the
//! exact state.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::field_values;
use crate::grid::Grid1D;
use crate::model::GasModel;
use crate::monitor::fmt_f64;
use crate::profile::DeviceProfile;
use crate::state::HydroState;

pub fn format_snapshot(
    state: &HydroState,
    step: usize,
    label: &str,
    model: &GasModel,
    profile: &DeviceProfile,
    grid: &Grid1D,
) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# model gamma={} delta={} convention={:?}",
        fmt_f64(model.gamma()),
        fmt_f64(model.delta()),
        model.convention()
    );
    let _ = writeln!(out, "# run {label}");
    let _ = writeln!(out, "# time {}", fmt_f64(state.time));
    let _ = writeln!(out, "# step {step}");
    out.push_str("# x rho u m E z w\n");
    let e = field_values(&state.rho, profile, grid.dx(), model.floor());
    for (i, e_i) in e.iter().enumerate() {
        let (rho, m) = (state.rho[i], state.mom[i]);
        let u = m / rho;
        let h = model.h(rho);
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {}",
            fmt_f64(grid.center(i)),
            fmt_f64(rho),
            fmt_f64(u),
            fmt_f64(m),
            fmt_f64(*e_i),
            fmt_f64(h - u),
            fmt_f64(h + u)
        );
    }
    out
}

/// Parses a snapshot back into `(state, step)`.
pub fn parse_snapshot(text: &str, origin: &Path) -> Result<(HydroState, usize)> {
    let err = |detail: String| Error::Parse {
        path: origin.to_path_buf(),
        detail,
    };
    let mut time = None;
    let mut step = None;
    let mut rho = Vec::new();
    let mut mom = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("time ") {
                time = Some(
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| err(format!("line {}: {e}", ln + 1)))?,
                );
            } else if let Some(v) = rest.strip_prefix("step ") {
                step = Some(
                    v.trim()
                        .parse::<usize>()
                        .map_err(|e| err(format!("line {}: {e}", ln + 1)))?,
                );
            }
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 7 {
            return Err(err(format!(
                "line {}: expected 7 columns, found {}",
                ln + 1,
                cols.len()
            )));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| err(format!("line {}: {e}", ln + 1)));
        rho.push(parse(cols[1])?);
        mom.push(parse(cols[3])?);
    }
    let time = time.ok_or_else(|| err("missing '# time' header".into()))?;
    let step = step.ok_or_else(|| err("missing '# step' header".into()))?;
    Ok((HydroState::new(rho, mom, time)?, step))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize to JSON");
    text.push('\n');
    write_text(path, &text)
}

/// Columns `x` followed by one column per named array.
pub fn format_columns(x: &[f64], columns: &[(&str, &[f64])]) -> String {
    let mut out = String::from("x");
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, xv) in x.iter().enumerate() {
        out.push_str(&fmt_f64(*xv));
        for (_, col) in columns {
            out.push(',');
            out.push_str(&fmt_f64(col.get(i).copied().unwrap_or(f64::NAN)));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use crate::model::PressureConvention;

    #[test]
    fn snapshot_round_trip_is_exact() {
        let g = Grid1D::new(-1.0, 1.0, 16, Boundary::Outflow).unwrap();
        let m = GasModel::new(1.4, 0.05, PressureConvention::OneOverGamma).unwrap();
        let p = DeviceProfile::uniform(&g, 1.0, 0.0, 0.1).unwrap();
        let rho: Vec<f64> = g.centers().iter().map(|x| 0.1 + (1.0 / 3.0) * (-x * x).exp()).collect();
        let mom = rho.iter().map(|r| r * std::f64::consts::PI / 7.0).collect();
        let s = HydroState::new(rho, mom, 0.123456789).unwrap();
        let text = format_snapshot(&s, 42, "test", &m, &p, &g);
        let (back, step) = parse_snapshot(&text, Path::new("snap")).unwrap();
        assert_eq!(back, s);
        assert_eq!(step, 42);
    }

    #[test]
    fn broken_snapshot_is_a_parse_error() {
        assert!(parse_snapshot("# time 0\n# step 0\n1 2 3\n", Path::new("s")).is_err());
        assert!(parse_snapshot("1 2 3 4 5 6 7\n", Path::new("s")).is_err());
    }
}
