//! Per-step diagnostics and the blow-up detector.
//!
//! Blow-up of the discrete solution cannot show up as a true infinity:
//! on a fixed mesh the maximum saturates once the mass has piled into a
//! few cells. The detector therefore looks for a large growth of
//! `max u` followed by a stabilization plateau, and treats a CFL
//! rejection after such growth as equivalent evidence (the face
//! velocities scale with chemical gradients, which diverge in a
//! collapse).

use crate::error::{Error, Result};

/// One recorded diagnostics row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSeriesRow {
    pub t: f64,
    pub max_u: f64,
    pub min_u: f64,
    pub mass: f64,
    pub max_v: f64,
    pub max_w: f64,
    /// Mass removed by the positivity clamp since the previous row
    /// (largest per-step value in the interval).
    pub clamped_mass: f64,
    /// Total linear-solver iterations of the recorded step.
    pub solver_iters: usize,
}

/// Diagnostics trajectory of one run, strictly increasing in `t`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    rows: Vec<TimeSeriesRow>,
}

/// How a simulation ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// Reached `t_end`.
    Completed,
    /// The detector saw a post-growth plateau and stopped early.
    EarlySaturation { t: f64 },
    /// A convective CFL violation rejected the next step.
    StepRejected { t: f64, face: usize, cfl: f64 },
}

impl TimeSeries {
    pub fn new() -> TimeSeries {
        TimeSeries { rows: Vec::new() }
    }

    pub fn push(&mut self, row: TimeSeriesRow) {
        if let Some(last) = self.rows.last() {
            assert!(
                row.t > last.t,
                "time series must be strictly increasing in t ({} after {})",
                row.t,
                last.t
            );
        }
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[TimeSeriesRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TimeSeriesRow> {
        self.rows.last()
    }

    pub const CSV_HEADER: &'static str = "t,max_u,min_u,mass,max_v,max_w,clamped_mass,solver_iters";

    /// Serializes with 17 significant digits so values round-trip
    /// bit-exactly through the text form.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                r.t, r.max_u, r.min_u, r.mass, r.max_v, r.max_w, r.clamped_mass, r.solver_iters
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<TimeSeries> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == Self::CSV_HEADER => {}
            _ => {
                return Err(Error::ConfigMsg(format!(
                    "series CSV must start with the header '{}'",
                    Self::CSV_HEADER
                )))
            }
        }
        let mut series = TimeSeries::new();
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 8 {
                return Err(Error::Config {
                    line: lineno + 1,
                    msg: format!("expected 8 columns, found {}", fields.len()),
                });
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim().parse::<f64>().map_err(|e| Error::Config {
                    line: lineno + 1,
                    msg: format!("bad float '{s}': {e}"),
                })
            };
            series.push(TimeSeriesRow {
                t: parse(fields[0])?,
                max_u: parse(fields[1])?,
                min_u: parse(fields[2])?,
                mass: parse(fields[3])?,
                max_v: parse(fields[4])?,
                max_w: parse(fields[5])?,
                clamped_mass: parse(fields[6])?,
                solver_iters: fields[7].trim().parse().map_err(|e| Error::Config {
                    line: lineno + 1,
                    msg: format!("bad iteration count '{}': {e}", fields[7]),
                })?,
            });
        }
        Ok(series)
    }
}

/// Detector thresholds; the knobs are config-exposed and echoed into
/// the verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Required growth of `max u` over its initial value.
    pub growth_factor: f64,
    /// Number of consecutive samples forming a plateau.
    pub window: usize,
    /// Maximum relative variation of `max u` inside a plateau window.
    pub plateau_tol: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            growth_factor: 100.0,
            window: 20,
            plateau_tol: 0.02,
        }
    }
}

/// Outcome of the blow-up detection.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupVerdict {
    pub blew_up: bool,
    /// Estimated blow-up time; present iff `blew_up`.
    pub t_max_estimate: Option<f64>,
    /// Largest `max u` seen over the whole run.
    pub peak_value: f64,
    pub rationale: String,
}

impl BlowupVerdict {
    /// Flat `key = value` block, including the detector thresholds.
    pub fn to_key_value_block(&self, cfg: &DetectorConfig) -> String {
        let mut out = String::new();
        out.push_str(&format!("blew_up = {}\n", self.blew_up));
        match self.t_max_estimate {
            Some(t) => out.push_str(&format!("t_max_estimate = {t}\n")),
            None => out.push_str("t_max_estimate = none\n"),
        }
        out.push_str(&format!("peak_value = {}\n", self.peak_value));
        out.push_str(&format!("rationale = {}\n", self.rationale));
        out.push_str(&format!("growth_factor = {}\n", cfg.growth_factor));
        out.push_str(&format!("window = {}\n", cfg.window));
        out.push_str(&format!("plateau_tol = {}\n", cfg.plateau_tol));
        out
    }
}

/// Applies the stabilization criterion to a recorded series.
///
/// Blow-up holds iff `max u` exceeds `growth_factor` times its initial
/// value and afterwards either (a) a window of `window` samples varies
/// by less than `plateau_tol` relatively — the estimate is the first
/// such window's start — or (b) the run was terminated by a CFL
/// rejection, in which case the rejection time is the estimate.
pub fn detect_blowup(
    series: &TimeSeries,
    termination: &Termination,
    cfg: &DetectorConfig,
) -> BlowupVerdict {
    assert!(cfg.growth_factor > 1.0, "growth_factor must exceed 1");
    assert!(cfg.window >= 3, "window must be at least 3 samples");
    assert!(
        cfg.plateau_tol > 0.0 && cfg.plateau_tol < 1.0,
        "plateau_tol must lie in (0,1)"
    );
    let rows = series.rows();
    assert!(!rows.is_empty(), "series must be nonempty");

    let peak_value = rows.iter().map(|r| r.max_u).fold(f64::NEG_INFINITY, f64::max);
    let base = rows[0].max_u;
    let threshold = cfg.growth_factor * base;
    let growth_at = rows.iter().position(|r| r.max_u > threshold);

    let Some(start) = growth_at else {
        return BlowupVerdict {
            blew_up: false,
            t_max_estimate: None,
            peak_value,
            rationale: format!(
                "max u never exceeded {} x its initial value {base}",
                cfg.growth_factor
            ),
        };
    };

    // First plateau window at or after the growth index.
    for i in start..(rows.len() + 1).saturating_sub(cfg.window) {
        let window = &rows[i..i + cfg.window];
        let hi = window.iter().map(|r| r.max_u).fold(f64::NEG_INFINITY, f64::max);
        let lo = window.iter().map(|r| r.max_u).fold(f64::INFINITY, f64::min);
        if hi > 0.0 && (hi - lo) / hi < cfg.plateau_tol {
            return BlowupVerdict {
                blew_up: true,
                t_max_estimate: Some(rows[i].t),
                peak_value,
                rationale: format!(
                    "max u grew {:.1}x and stabilized within {:.1}% over {} samples",
                    peak_value / base.max(f64::MIN_POSITIVE),
                    100.0 * cfg.plateau_tol,
                    cfg.window
                ),
            };
        }
    }

    if let Termination::StepRejected { t, face, cfl } = termination {
        return BlowupVerdict {
            blew_up: true,
            t_max_estimate: Some(*t),
            peak_value,
            rationale: format!(
                "CFL collapse after growth (face {face}, CFL {cfl:.2} at t={t:.3e})"
            ),
        };
    }

    BlowupVerdict {
        blew_up: false,
        t_max_estimate: None,
        peak_value,
        rationale: "growth without stabilization; run completed".into(),
    }
}

/// Blow-up times of several runs ordered against a declared parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    /// `(label, parameter value, t_max_estimate)` sorted by `t_max`.
    pub by_t_max: Vec<(String, f64, f64)>,
    /// Sorting by `t_max` leaves the parameter nondecreasing.
    pub matches_parameter_order: bool,
    /// `t_max` is strictly increasing when sorted by the parameter.
    pub strictly_increasing_with_parameter: bool,
    /// Some estimates coincide exactly.
    pub has_ties: bool,
}

impl CompareReport {
    pub fn text(&self) -> String {
        let mut out = String::from("label,param,t_max_estimate\n");
        for (label, param, t) in &self.by_t_max {
            out.push_str(&format!("{label},{param},{t}\n"));
        }
        out.push_str(&format!(
            "matches_parameter_order = {}\n",
            self.matches_parameter_order
        ));
        out.push_str(&format!(
            "strictly_increasing_with_parameter = {}\n",
            self.strictly_increasing_with_parameter
        ));
        if self.has_ties {
            out.push_str("ordering = equal (ties present)\n");
        }
        out
    }
}

/// Orders blow-up verdicts by their time estimate and checks the
/// ordering against a declared parameter value per run. Errors unless
/// every verdict reports blow-up.
pub fn compare_blowup_times(entries: &[(String, f64, BlowupVerdict)]) -> Result<CompareReport> {
    if entries.len() < 2 {
        return Err(Error::NotComparable(
            "need at least two blow-up verdicts".into(),
        ));
    }
    for (label, _, v) in entries {
        if !v.blew_up {
            return Err(Error::NotComparable(format!(
                "run '{label}' did not blow up"
            )));
        }
    }
    let mut by_t_max: Vec<(String, f64, f64)> = entries
        .iter()
        .map(|(l, p, v)| (l.clone(), *p, v.t_max_estimate.expect("blew_up implies estimate")))
        .collect();
    by_t_max.sort_by(|a, b| a.2.partial_cmp(&b.2).expect("t_max must be comparable"));
    let matches_parameter_order = by_t_max.windows(2).all(|w| w[0].1 <= w[1].1);
    let has_ties = by_t_max.windows(2).any(|w| w[0].2 == w[1].2);

    let mut by_param = by_t_max.clone();
    by_param.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("parameter must be comparable"));
    let strictly_increasing_with_parameter = by_param.windows(2).all(|w| w[0].2 < w[1].2);

    Ok(CompareReport {
        by_t_max,
        matches_parameter_order,
        strictly_increasing_with_parameter,
        has_ties,
    })
}
