use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::dynamics::{compute_p_sink, Trajectory, ValiditySummary};
use crate::scenarios::{RunOutput, Scenario, SweepResult};
use crate::{Error, Result};

/// Formats a value with 12 significant digits.
pub fn format_value(x: f64) -> String {
    format!("{x:.11e}")
}

fn write_table(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record(r.iter().map(|&x| format_value(x)))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(format!("{other:?}")),
        },
    }
}

/// Header and numeric rows of a CSV written by this module.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::Io {
                    path: path.to_path_buf(),
                    source: std::io::Error::new(
                        std::io::ErrorKind::InvalidData,
                        format!("not a number: `{s}`"),
                    ),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// File-name-safe form of a bipartition name: `(1-2)|(3-7)` → `1-2__3-7`.
pub fn file_stem(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars() {
        match c {
            '|' => out.push_str("__"),
            c if c.is_ascii_alphanumeric() || c == '-' || c == '.' => out.push(c),
            ',' | ' ' | '_' if !out.ends_with('_') => out.push('_'),
            _ => {}
        }
    }
    out
}

fn with_time(times: &[f64], cols: impl Fn(usize) -> Vec<f64>) -> Vec<Vec<f64>> {
    (0..times.len())
        .map(|i| {
            let mut r = vec![times[i]];
            r.extend(cols(i));
            r
        })
        .collect()
}

/// Writes one CSV per observable group and returns the files written.
///
/// `populations.csv` always exists; the other groups only when recorded.
pub fn write_timeseries(traj: &Trajectory, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = Vec::new();
    let t = &traj.times;

    let mut header = vec!["time_ps".to_string()];
    header.extend(traj.site_labels.iter().cloned());
    let has_system = !traj.site_labels.is_empty();
    if has_system {
        header.extend(["ground".to_string(), "p_sink".to_string()]);
    }
    let integral = match traj.sink_source {
        Some(_) if has_system => {
            header.push("p_sink_integral".into());
            Some(compute_p_sink(traj, traj.sink_rate)?)
        }
        _ => None,
    };
    let rows = with_time(t, |i| {
        let mut r = traj.site_populations[i].clone();
        if has_system {
            r.push(traj.ground_population[i]);
            r.push(traj.sink_population[i]);
        }
        if let Some(p) = &integral {
            r.push(p[i]);
        }
        r
    });
    let path = out_dir.join("populations.csv");
    write_table(&path, &header, &rows)?;
    files.push(path);

    if !traj.negativities.is_empty() {
        let mut header = vec!["time_ps".to_string()];
        header.extend(traj.negativities.iter().map(|s| s.name.clone()));
        let rows = with_time(t, |i| {
            traj.negativities.iter().map(|s| s.values[i]).collect()
        });
        let path = out_dir.join("negativity.csv");
        write_table(&path, &header, &rows)?;
        files.push(path);
    }
    if let Some(ex) = &traj.exciton_populations {
        let n = ex.first().map_or(0, Vec::len);
        let mut header = vec!["time_ps".to_string()];
        header.extend((1..=n).map(|k| format!("exciton{k}")));
        let rows = with_time(t, |i| ex[i].clone());
        let path = out_dir.join("excitons.csv");
        write_table(&path, &header, &rows)?;
        files.push(path);
    }
    if !traj.mode_labels.is_empty() {
        let mut header = vec!["time_ps".to_string()];
        header.extend(traj.mode_labels.iter().cloned());
        let rows = with_time(t, |i| traj.mode_populations[i].clone());
        let path = out_dir.join("modes.csv");
        write_table(&path, &header, &rows)?;
        files.push(path);
    }
    {
        let header: Vec<String> = [
            "time_ps",
            "trace_deviation",
            "hermiticity_deviation",
            "min_eigenvalue",
        ]
        .map(String::from)
        .to_vec();
        // unchecked eigenvalues are written as NaN
        let rows = with_time(t, |i| {
            let r = &traj.validity[i];
            vec![
                r.trace_deviation,
                r.hermiticity_deviation,
                r.min_eigenvalue.unwrap_or(f64::NAN),
            ]
        });
        let path = out_dir.join("validity.csv");
        write_table(&path, &header, &rows)?;
        files.push(path);
    }
    for snap in &traj.snapshots {
        let layout = snap.state.layout();
        let modes = layout.modes();
        let header = vec!["time_ps".to_string()]
            .into_iter()
            .chain(modes.iter().cloned())
            .collect::<Vec<_>>();
        let mut row = vec![snap.time];
        for m in &modes {
            row.push(snap.state.occupation(m)?);
        }
        let fs_label = (snap.time * 1000.0).round() as i64;
        let path = out_dir.join(format!("snapshot_{fs_label}fs.csv"));
        write_table(&path, &header, &[row])?;
        files.push(path);
    }
    Ok(files)
}

/// Writes each sweep point into its own subdirectory plus long-format
/// `(time_ps, axis, value)` contour files.
pub fn write_sweep(sweep: &SweepResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = Vec::new();
    for (k, (v, tr)) in sweep.values.iter().zip(&sweep.trajectories).enumerate() {
        let dir = out_dir.join(point_dir(&sweep.parameter.to_string(), k, *v));
        files.extend(write_timeseries(tr, &dir)?);
    }
    let axis = sweep.parameter.to_string();
    for name in sweep.grid_names() {
        let Some(grid) = sweep.grid(&name) else {
            continue;
        };
        let header = vec!["time_ps".to_string(), axis.clone(), "value".to_string()];
        let mut rows = Vec::new();
        for (i, v) in sweep.values.iter().enumerate() {
            let times = &sweep.trajectories[i].times;
            for (k, &t) in times.iter().enumerate() {
                rows.push(vec![t, *v, grid[i][k]]);
            }
        }
        let stem = if name == "p_sink" {
            "p_sink".to_string()
        } else {
            format!("negativity_{}", file_stem(&name))
        };
        let path = out_dir.join(format!("contour_{stem}.csv"));
        write_table(&path, &header, &rows)?;
        files.push(path);
    }
    Ok(files)
}

/// Subdirectory of sweep point `k`, e.g. `f_03_1.00000e0`.
pub fn point_dir(parameter: &str, k: usize, value: f64) -> String {
    format!("{parameter}_{k:02}_{value:.5e}")
}

/// Metadata written next to the results as `manifest.txt`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub scenario: String,
    pub config_digest: String,
    pub units: String,
    pub integrator: String,
    pub tool_version: String,
    pub wall_clock: Duration,
    pub validity: ValiditySummary,
    /// Axis values of a sweep.
    pub sweep: Option<(String, Vec<f64>)>,
}

impl RunManifest {
    pub fn new(scenario: &Scenario, output: &RunOutput, wall_clock: Duration) -> Self {
        let validity = output
            .trajectories()
            .iter()
            .map(|t| t.validity_summary())
            .fold(None, |acc: Option<ValiditySummary>, s| {
                Some(match acc {
                    None => s,
                    Some(a) => ValiditySummary {
                        max_trace_deviation: a.max_trace_deviation.max(s.max_trace_deviation),
                        max_hermiticity_deviation: a
                            .max_hermiticity_deviation
                            .max(s.max_hermiticity_deviation),
                        min_eigenvalue: a.min_eigenvalue.min(s.min_eigenvalue),
                        eigen_checks: a.eigen_checks + s.eigen_checks,
                    },
                })
            })
            .unwrap_or(ValiditySummary {
                max_trace_deviation: 0.0,
                max_hermiticity_deviation: 0.0,
                min_eigenvalue: f64::INFINITY,
                eigen_checks: 0,
            });
        let i = &scenario.integrator;
        RunManifest {
            scenario: scenario.name.clone(),
            config_digest: scenario.digest(),
            units: "time ps; energies rad/ps; rates 1/ps; negativity ebits (log2)".into(),
            integrator: format!(
                "{:?} dt={} adaptive_tol={} t_end={} record_every={}",
                i.method, i.dt, i.adaptive_tol, i.t_end, i.record_every
            )
            .to_lowercase(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_clock,
            validity,
            sweep: scenario
                .sweep
                .as_ref()
                .map(|s| (s.parameter.to_string(), s.values.clone())),
        }
    }

    /// Flat `key = value` text.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let v = &self.validity;
        let _ = writeln!(s, "scenario = {}", self.scenario);
        let _ = writeln!(s, "config_digest = sha256:{}", self.config_digest);
        let _ = writeln!(s, "units = {}", self.units);
        let _ = writeln!(s, "integrator = {}", self.integrator);
        let _ = writeln!(s, "tool_version = fmo-core {}", self.tool_version);
        let _ = writeln!(s, "wall_clock_s = {:.3}", self.wall_clock.as_secs_f64());
        if let Some((p, vals)) = &self.sweep {
            let list: Vec<String> = vals.iter().map(|x| format_value(*x)).collect();
            let _ = writeln!(s, "sweep_parameter = {p}");
            let _ = writeln!(s, "sweep_values = {}", list.join(","));
        }
        let _ = writeln!(s, "max_trace_deviation = {:.3e}", v.max_trace_deviation);
        let _ = writeln!(
            s,
            "max_hermiticity_deviation = {:.3e}",
            v.max_hermiticity_deviation
        );
        let _ = writeln!(s, "min_eigenvalue = {:.3e}", v.min_eigenvalue);
        let _ = writeln!(s, "eigenvalue_checks = {}", v.eigen_checks);
        s
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let path = out_dir.join("manifest.txt");
        fs::write(&path, self.render()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// Writes a run's results and manifest under `out_dir`.
pub fn write_run(
    scenario: &Scenario,
    output: &RunOutput,
    wall_clock: Duration,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut files = match output {
        RunOutput::Single(t) => write_timeseries(t, out_dir)?,
        RunOutput::Sweep(s) => write_sweep(s, out_dir)?,
    };
    files.push(RunManifest::new(scenario, output, wall_clock).write(out_dir)?);
    Ok(files)
}
