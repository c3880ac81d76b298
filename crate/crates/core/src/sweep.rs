//! Parameter sweeps: the Cartesian product of declared axis values, one
//! independent run per combination, aggregated into `sweep.csv` and an
//! overlay plot of the `max u` curves.

use crate::config::{set_param, ConfigFile};
use crate::diagnostics::{compare_blowup_times, BlowupVerdict, CompareReport};
use crate::error::{Error, Result};
use crate::output::{svg_line_plot, write_run_outputs};
use crate::stepper::run_simulation;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// One row of the sweep summary.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub index: usize,
    /// `axis=value` pairs joined with spaces.
    pub label: String,
    pub values: Vec<(String, String)>,
    pub verdict: Option<BlowupVerdict>,
    /// Error text when the run failed outright.
    pub status: String,
    /// Output subdirectory of the run, relative to the sweep directory.
    pub dir: String,
    /// `(t, max u)` curve for the overlay plot.
    pub curve: Vec<(f64, f64)>,
}

/// Cartesian product of the axis values, first axis slowest.
pub fn combinations(axes: &[(String, Vec<String>)]) -> Vec<Vec<(String, String)>> {
    let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (name, values) in axes {
        let mut next = Vec::with_capacity(combos.len() * values.len());
        for combo in &combos {
            for v in values {
                let mut c = combo.clone();
                c.push((name.clone(), v.clone()));
                next.push(c);
            }
        }
        combos = next;
    }
    combos
}

fn run_one(cfg: &ConfigFile, combo: &[(String, String)], dir: &Path) -> Result<SweepRow> {
    let mut run_cfg = cfg.run.clone();
    for (key, value) in combo {
        set_param(&mut run_cfg.params, key, value)?;
    }
    run_cfg.validate()?;
    let single = ConfigFile {
        run: run_cfg.clone(),
        sweep_axes: Vec::new(),
    };
    let output = run_simulation(&run_cfg)?;
    let verdict = write_run_outputs(dir, &single, &output)?;
    let curve = output.series.rows().iter().map(|r| (r.t, r.max_u)).collect();
    Ok(SweepRow {
        index: 0,
        label: String::new(),
        values: combo.to_vec(),
        verdict: Some(verdict),
        status: "ok".into(),
        dir: String::new(),
        curve,
    })
}

/// Executes every combination (worker pool of `workers` threads), writes
/// per-run outputs into subdirectories of `out_dir` plus the aggregate
/// `sweep.csv` and `maxu_overlay.svg`, and returns the rows in
/// combination order. Per-run failures are recorded in their row; the
/// sweep continues.
pub fn run_sweep(cfg: &ConfigFile, out_dir: &Path, workers: usize) -> Result<Vec<SweepRow>> {
    if cfg.sweep_axes.is_empty() {
        return Err(Error::ConfigMsg(
            "sweep needs a [sweep] section with at least one axis".into(),
        ));
    }
    fs::create_dir_all(out_dir)?;
    let combos = combinations(&cfg.sweep_axes);
    let n = combos.len();
    let slots: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; n]);
    let next: AtomicUsize = AtomicUsize::new(0);
    let workers = workers.clamp(1, n.max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let combo = &combos[i];
                let label = combo
                    .iter()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                let dir_name = format!(
                    "run_{i:03}_{}",
                    combo
                        .iter()
                        .map(|(k, v)| format!("{k}={v}"))
                        .collect::<Vec<_>>()
                        .join("_")
                );
                let row = match run_one(cfg, combo, &out_dir.join(&dir_name)) {
                    Ok(mut row) => {
                        row.index = i;
                        row.label = label;
                        row.dir = dir_name;
                        row
                    }
                    Err(e) => SweepRow {
                        index: i,
                        label,
                        values: combo.clone(),
                        verdict: None,
                        status: format!("error: {e}"),
                        dir: dir_name,
                        curve: Vec::new(),
                    },
                };
                slots.lock().unwrap()[i] = Some(row);
            });
        }
    });

    let rows: Vec<SweepRow> = slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every combination produces a row"))
        .collect();

    fs::write(out_dir.join("sweep.csv"), sweep_csv(&cfg.sweep_axes, &rows))?;

    let overlay: Vec<(String, Vec<(f64, f64)>)> = rows
        .iter()
        .filter(|r| !r.curve.is_empty())
        .map(|r| (r.label.clone(), r.curve.clone()))
        .collect();
    fs::write(
        out_dir.join("maxu_overlay.svg"),
        svg_line_plot("max u over time", "t", "max u", &overlay, true),
    )?;

    if let Some(report) = compare_report(&cfg.sweep_axes, &rows) {
        fs::write(out_dir.join("compare.txt"), report.text())?;
    }

    Ok(rows)
}

/// Aggregate CSV: declared parameters plus verdict fields per run.
pub fn sweep_csv(axes: &[(String, Vec<String>)], rows: &[SweepRow]) -> String {
    let mut out = String::from("index");
    for (name, _) in axes {
        let _ = write!(out, ",{name}");
    }
    out.push_str(",blew_up,peak_value,t_max_estimate,status,dir\n");
    for row in rows {
        let _ = write!(out, "{}", row.index);
        for (_, value) in &row.values {
            let _ = write!(out, ",{value}");
        }
        match &row.verdict {
            Some(v) => {
                let _ = write!(
                    out,
                    ",{},{},{}",
                    v.blew_up,
                    v.peak_value,
                    v.t_max_estimate.map_or(String::new(), |t| t.to_string())
                );
            }
            None => out.push_str(",,,"),
        }
        let _ = writeln!(out, ",{},{}", row.status, row.dir);
    }
    out
}

/// Blow-up-time ordering against the first axis, when it is numeric and
/// every run blew up.
pub fn compare_report(
    axes: &[(String, Vec<String>)],
    rows: &[SweepRow],
) -> Option<CompareReport> {
    if axes.is_empty() || rows.len() < 2 {
        return None;
    }
    let axis = &axes[0].0;
    let mut entries = Vec::new();
    for row in rows {
        let value: f64 = row
            .values
            .iter()
            .find(|(k, _)| k == axis)
            .and_then(|(_, v)| v.parse().ok())?;
        entries.push((row.label.clone(), value, row.verdict.clone()?));
    }
    compare_blowup_times(&entries).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use tempfile::tempdir;

    #[test]
    fn combinations_are_a_cartesian_product_in_order() {
        let axes = vec![
            ("gamma".to_string(), vec!["1.1".into(), "1.4".into(), "1.75".into()]),
            ("c".to_string(), vec!["0".into(), "1e-3".into(), "1".into()]),
        ];
        let combos = combinations(&axes);
        assert_eq!(combos.len(), 9);
        assert_eq!(combos[0], vec![("gamma".to_string(), "1.1".to_string()), ("c".to_string(), "0".to_string())]);
        assert_eq!(combos[1][1].1, "1e-3");
        assert_eq!(combos[8], vec![("gamma".to_string(), "1.75".to_string()), ("c".to_string(), "1".to_string())]);
    }

    #[test]
    fn sweep_runs_all_combinations_and_records_failures() {
        // Tiny equilibrium-style sweep; one axis value is invalid
        // (rho > k) and must be recorded, not fatal.
        let text = "\
[params]
n = 2
chi = 0
xi = 0
c = 0

[mesh]
kind = box
lengths = 1, 1
cells = 4, 4

[time]
dt = 1e-3
t_end = 5e-3

[initial]
u0 = constant(1)

[sweep]
rho = 1.0, 7.5
";
        let cfg = parse_config(text, &[]).unwrap();
        let dir = tempdir().unwrap();
        let rows = run_sweep(&cfg, dir.path(), 2).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].status, "ok");
        assert!(rows[1].status.starts_with("error:"));
        assert!(dir.path().join("sweep.csv").exists());
        assert!(dir.path().join("maxu_overlay.svg").exists());
        assert!(dir.path().join(&rows[0].dir).join("series.csv").exists());

        let csv = sweep_csv(&cfg.sweep_axes, &rows);
        assert!(csv.starts_with("index,rho,blew_up"));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
    }
}
