//! Flat-file formats: profile curves, snapshot dumps, run manifests and
//! series CSVs.
//!
//! Numbers are written with Rust's shortest-round-trip formatting, so
//! write/read cycles reproduce every f64 bit-exactly and identical runs
//! produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exponents::ExponentSet;
use crate::grid::LogGrid;
use crate::metrics::{ConvergenceSeries, NormSeries};
use crate::pde::{RadialField, Trajectory};
use crate::profile::{ProfileCurve, ProfileVariable, SelfSimilarProfile};

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Serialises a solved profile as columnar text (radius, f, df/dr) with a
/// header recording the exponents, the normalisation constants and any
/// extra solver metadata handed in.
pub fn write_profile(
    path: &Path,
    p: &SelfSimilarProfile,
    extra_meta: &[(String, String)],
) -> Result<()> {
    let mut out = String::new();
    let e = &p.exps;
    writeln!(out, "# fde-singular profile v{LIBRARY_VERSION}").unwrap();
    for (k, v) in [
        ("n", format!("{}", e.n)),
        ("m", format!("{}", e.m)),
        ("gamma", format!("{}", e.gamma)),
        ("rho1", format!("{}", e.rho1)),
        ("eta", format!("{}", p.f1.eta.unwrap_or(1.0))),
        ("a0", format!("{}", p.a0)),
        ("a0_uncertainty", format!("{}", p.far.uncertainty)),
        ("plateau_r_max", format!("{}", p.far.r_max)),
        ("d1", format!("{}", p.d1)),
        ("lambda", format!("{}", p.lambda)),
        ("a", format!("{}", p.a)),
        ("d_a", format!("{}", p.d_a)),
    ] {
        writeln!(out, "# {k} = {v}").unwrap();
    }
    for (k, v) in extra_meta {
        writeln!(out, "# {k} = {v}").unwrap();
    }
    writeln!(out, "# columns: radius f dfdr").unwrap();
    for i in 0..p.f1.len() {
        writeln!(out, "{} {} {}", p.f1.radii[i], p.f1.values[i], p.f1.derivs[i]).unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// A profile file read back: header key/values plus the curve.
#[derive(Debug, Clone)]
pub struct ProfileFile {
    pub meta: Vec<(String, String)>,
    pub curve: ProfileCurve,
}

pub fn read_profile(path: &Path) -> Result<ProfileFile> {
    let text = fs::read_to_string(path)?;
    let mut meta = Vec::new();
    let mut radii = Vec::new();
    let mut values = Vec::new();
    let mut derivs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        let mut parts = line.split_ascii_whitespace();
        let mut next = |name: &str| -> Result<f64> {
            parts
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing {name}", lineno + 1)))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
        };
        radii.push(next("radius")?);
        values.push(next("f")?);
        derivs.push(next("dfdr")?);
    }
    if radii.is_empty() {
        return Err(Error::Parse("profile file holds no samples".into()));
    }
    let get = |key: &str| -> Result<f64> {
        meta.iter()
            .find(|(k, _)| k == key)
            .ok_or_else(|| Error::Parse(format!("missing header key {key}")))?
            .1
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("header key {key}: {e}")))
    };
    let exps = ExponentSet::derive_with(get("n")? as u32, get("m")?, get("gamma")?, get("rho1")?, 0.0)?;
    let eta = get("eta").ok();
    Ok(ProfileFile {
        meta,
        curve: ProfileCurve {
            variable: ProfileVariable::F,
            radii,
            values,
            derivs,
            exps,
            eta,
        },
    })
}

/// One columnar snapshot file (radius, u).
pub fn write_snapshot(path: &Path, field: &RadialField) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "# t = {}", field.time).unwrap();
    writeln!(out, "# columns: radius u").unwrap();
    for (r, u) in field.grid.radii().iter().zip(&field.values) {
        writeln!(out, "{r} {u}").unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Dumps every snapshot of a trajectory as snapshot_000.txt, ... under
/// `dir`, returning the file names.
pub fn write_trajectory_snapshots(dir: &Path, traj: &Trajectory) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for (k, &t) in traj.times.iter().enumerate() {
        let name = format!("snapshot_{k:03}.txt");
        let field = RadialField {
            grid: traj.grid.clone(),
            values: traj.snapshots[k].clone(),
            time: t,
            exps: traj.exps,
        };
        write_snapshot(&dir.join(&name), &field)?;
        names.push(name);
    }
    Ok(names)
}

/// Key/value manifest, written in the order given.
pub fn write_manifest(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut out = String::new();
    for (k, v) in entries {
        writeln!(out, "{k} = {v}").unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

fn csv_header() -> &'static str {
    "tau_or_t,weighted_l1,positive_part,sup_compact,tail_bound\n"
}

/// Contraction series CSV (no compact-sup column for these).
pub fn write_norm_series(path: &Path, s: &NormSeries) -> Result<()> {
    let mut out = String::from(csv_header());
    for k in 0..s.times.len() {
        // tail bound column carries the per-interval flux correction,
        // attributed to the interval start
        let flux = if k < s.flux_correction.len() {
            format!("{}", s.flux_correction[k])
        } else {
            String::new()
        };
        writeln!(
            out,
            "{},{},{},,{}",
            s.times[k], s.total[k], s.positive_part[k], flux
        )
        .unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Convergence series CSV.
pub fn write_convergence_series(path: &Path, s: &ConvergenceSeries) -> Result<()> {
    let mut out = String::from(csv_header());
    for k in 0..s.taus.len() {
        writeln!(
            out,
            "{},{},,{},{}",
            s.taus[k], s.l1[k], s.sup_compact[k], s.tail_bound[k]
        )
        .unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Columnar dump of a grid/series pair, used for refinement tables.
pub fn write_table(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "{header}").unwrap();
    for row in rows {
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a snapshot file back (radius, u columns with `# t = ...`).
pub fn read_snapshot(path: &Path, exps: ExponentSet) -> Result<RadialField> {
    let text = fs::read_to_string(path)?;
    let mut time = None;
    let mut radii = Vec::new();
    let mut values = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                if k.trim() == "t" {
                    time = v.trim().parse::<f64>().ok();
                }
            }
            continue;
        }
        let mut parts = line.split_ascii_whitespace();
        let r: f64 = parts
            .next()
            .ok_or_else(|| Error::Parse("missing radius".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("{e}")))?;
        let u: f64 = parts
            .next()
            .ok_or_else(|| Error::Parse("missing value".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("{e}")))?;
        radii.push(r);
        values.push(u);
    }
    if radii.len() < 2 {
        return Err(Error::Parse("snapshot holds fewer than two samples".into()));
    }
    let ppd = (std::f64::consts::LN_10 / (radii[1] / radii[0]).ln()).round() as usize;
    let grid = LogGrid::new(radii[0], *radii.last().unwrap(), ppd)?;
    if grid.len() != radii.len() {
        return Err(Error::Parse("snapshot radii are not log-uniform".into()));
    }
    Ok(RadialField {
        grid,
        values,
        time: time.ok_or_else(|| Error::Parse("missing # t = header".into()))?,
        exps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{solve_profile, SolveOptions};

    #[test]
    fn snapshot_round_trip() {
        use crate::grid::LogGrid;
        let e = ExponentSet::derive(3, 0.2, 2.75).unwrap();
        let grid = LogGrid::annulus(10.0, 64).unwrap();
        let field = RadialField {
            values: grid.radii().iter().map(|r| r.powf(-2.75)).collect(),
            grid,
            time: 1.5,
            exps: e,
        };
        let dir = std::env::temp_dir().join("fde_singular_snap_test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("snap.txt");
        write_snapshot(&path, &field).unwrap();
        let back = read_snapshot(&path, e).unwrap();
        assert_eq!(back.time.to_bits(), field.time.to_bits());
        assert_eq!(back.values.len(), field.values.len());
        for (a, b) in back.values.iter().zip(&field.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn profile_file_round_trip_is_bit_exact() {
        let e = ExponentSet::derive(3, 0.2, 2.75).unwrap();
        let p = solve_profile(1.0, &e, &SolveOptions::default()).unwrap();
        let dir = std::env::temp_dir().join("fde_singular_io_test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("profile.txt");
        write_profile(&path, &p, &[("solver_rtol".into(), "1e-10".into())]).unwrap();
        let back = read_profile(&path).unwrap();
        assert_eq!(back.curve.len(), p.f1.len());
        for i in 0..p.f1.len() {
            assert_eq!(back.curve.radii[i].to_bits(), p.f1.radii[i].to_bits());
            assert_eq!(back.curve.values[i].to_bits(), p.f1.values[i].to_bits());
            assert_eq!(back.curve.derivs[i].to_bits(), p.f1.derivs[i].to_bits());
        }
        assert!(back.meta.iter().any(|(k, v)| k == "solver_rtol" && v == "1e-10"));
        fs::remove_dir_all(&dir).ok();
    }
}
