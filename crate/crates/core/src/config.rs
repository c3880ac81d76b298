//! Flat `key = value` run configuration with `[sections]` and `#`
//! comments, plus the canonical echo used for reproducibility.
//!
//! Everything funnels through one list of `(section, key, value, line)`
//! pairs: file text, built-in presets and `--override` flags all append
//! to the same list before the model is built, so they share identical
//! semantics and error reporting.

use crate::diagnostics::DetectorConfig;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::stepper::{ChemInit, InitialCondition, MeshSpec, RunConfig};
use std::path::Path;

/// A parsed configuration: the run itself plus optional sweep axes
/// (parameter name and its value list, in declaration order).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub run: RunConfig,
    pub sweep_axes: Vec<(String, Vec<String>)>,
}

type Pair = (String, String, String, usize);

fn split_pairs(text: &str, pairs: &mut Vec<Pair>) -> Result<()> {
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Config {
                line,
                msg: format!("expected 'key = value', found '{content}'"),
            });
        };
        if section.is_empty() {
            return Err(Error::Config {
                line,
                msg: "key outside of any [section]".into(),
            });
        }
        pairs.push((
            section.clone(),
            key.trim().to_string(),
            value.trim().to_string(),
            line,
        ));
    }
    Ok(())
}

fn parse_f64(value: &str, line: usize, key: &str) -> Result<f64> {
    value.parse().map_err(|e| Error::Config {
        line,
        msg: format!("bad number for '{key}': '{value}' ({e})"),
    })
}

fn parse_usize(value: &str, line: usize, key: &str) -> Result<usize> {
    value.parse().map_err(|e| Error::Config {
        line,
        msg: format!("bad integer for '{key}': '{value}' ({e})"),
    })
}

fn parse_bool(value: &str, line: usize, key: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config {
            line,
            msg: format!("bad boolean for '{key}': '{value}' (expected true/false)"),
        }),
    }
}

fn parse_list_f64(value: &str, line: usize, key: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse_f64(v.trim(), line, key))
        .collect()
}

/// Assigns one [`ModelParams`] field by name; shared by the `[params]`
/// section and sweep axes.
pub fn set_param(params: &mut ModelParams, key: &str, value: &str) -> Result<()> {
    let bad = |e: String| Error::ConfigMsg(format!("bad value for params.{key}: {e}"));
    let f = || -> Result<f64> { value.parse().map_err(|e| bad(format!("{e}"))) };
    match key {
        "n" => params.n = value.parse().map_err(|e| bad(format!("{e}")))?,
        "tau" => params.tau = value.parse().map_err(|e| bad(format!("{e}")))?,
        "nonlocal" => {
            params.nonlocal = match value {
                "true" => true,
                "false" => false,
                _ => return Err(bad("expected true/false".into())),
            }
        }
        "chi" => params.chi = f()?,
        "xi" => params.xi = f()?,
        "lambda" => params.lambda = f()?,
        "mu" => params.mu = f()?,
        "c" => params.c = f()?,
        "rho" => params.rho = f()?,
        "k" => params.k = f()?,
        "gamma" => params.gamma = f()?,
        "m1" => params.m1 = f()?,
        "m2" => params.m2 = f()?,
        "m3" => params.m3 = f()?,
        "alpha" => params.alpha = f()?,
        "beta" => params.beta = f()?,
        "f1_coeff" => params.f1_coeff = f()?,
        "f2_lo" => params.f2_lo = f()?,
        "f2_hi" => params.f2_hi = f()?,
        _ => {
            return Err(Error::ConfigMsg(format!(
                "unknown model parameter '{key}'"
            )))
        }
    }
    Ok(())
}

#[derive(Default)]
struct MeshDraft {
    kind: Option<String>,
    dim: Option<usize>,
    lengths: Option<Vec<f64>>,
    cells: Option<Vec<usize>>,
    radius: Option<f64>,
    h: Option<f64>,
}

fn build_config(pairs: &[Pair]) -> Result<ConfigFile> {
    // Dimension first: the parameter baseline needs it.
    let n: u32 = pairs
        .iter()
        .find(|(s, k, _, _)| s == "params" && k == "n")
        .map(|(_, _, v, line)| {
            v.parse().map_err(|e| Error::Config {
                line: *line,
                msg: format!("bad n: {e}"),
            })
        })
        .transpose()?
        .unwrap_or(2);

    let mut params = ModelParams::baseline(n);
    let mut mesh = MeshDraft::default();
    let mut dt: Option<f64> = None;
    let mut t_end: Option<f64> = None;
    let mut u0 = InitialCondition::Constant(1.0);
    let mut v0 = ChemInit::QuasiSteady;
    let mut w0 = ChemInit::QuasiSteady;
    let mut record_every = 1usize;
    let mut snapshot_every: Option<usize> = None;
    let mut detector = DetectorConfig::default();
    let mut cfl_max = 0.9f64;
    let mut solver_tol = 1e-9f64;
    let mut eps_damp = 1e-8f64;
    let mut stop_on_saturation = true;
    let mut seed = 0u64;
    let mut sweep_axes: Vec<(String, Vec<String>)> = Vec::new();

    for (section, key, value, line) in pairs {
        let (key, value, line) = (key.as_str(), value.as_str(), *line);
        match section.as_str() {
            "params" => set_param(&mut params, key, value).map_err(|e| match e {
                Error::ConfigMsg(msg) => Error::Config { line, msg },
                other => other,
            })?,
            "mesh" => match key {
                "kind" => mesh.kind = Some(value.to_string()),
                "dim" => mesh.dim = Some(parse_usize(value, line, key)?),
                "lengths" => mesh.lengths = Some(parse_list_f64(value, line, key)?),
                "cells" => {
                    mesh.cells = Some(
                        value
                            .split(',')
                            .map(|v| parse_usize(v.trim(), line, key))
                            .collect::<Result<_>>()?,
                    )
                }
                "radius" => mesh.radius = Some(parse_f64(value, line, key)?),
                "h" => mesh.h = Some(parse_f64(value, line, key)?),
                _ => {
                    return Err(Error::Config {
                        line,
                        msg: format!("unknown mesh key '{key}'"),
                    })
                }
            },
            "time" => match key {
                "dt" => dt = Some(parse_f64(value, line, key)?),
                "t_end" => t_end = Some(parse_f64(value, line, key)?),
                _ => {
                    return Err(Error::Config {
                        line,
                        msg: format!("unknown time key '{key}'"),
                    })
                }
            },
            "initial" => match key {
                "u0" => {
                    u0 = InitialCondition::parse(value).map_err(|e| Error::Config {
                        line,
                        msg: format!("{e}"),
                    })?
                }
                "v0" => {
                    v0 = ChemInit::parse(value).map_err(|e| Error::Config {
                        line,
                        msg: format!("{e}"),
                    })?
                }
                "w0" => {
                    w0 = ChemInit::parse(value).map_err(|e| Error::Config {
                        line,
                        msg: format!("{e}"),
                    })?
                }
                _ => {
                    return Err(Error::Config {
                        line,
                        msg: format!("unknown initial key '{key}'"),
                    })
                }
            },
            "output" => match key {
                "record_every" => record_every = parse_usize(value, line, key)?,
                "snapshot_every" => {
                    snapshot_every = if value == "none" {
                        None
                    } else {
                        Some(parse_usize(value, line, key)?)
                    }
                }
                _ => {
                    return Err(Error::Config {
                        line,
                        msg: format!("unknown output key '{key}'"),
                    })
                }
            },
            "detector" => match key {
                "growth_factor" => detector.growth_factor = parse_f64(value, line, key)?,
                "window" => detector.window = parse_usize(value, line, key)?,
                "plateau_tol" => detector.plateau_tol = parse_f64(value, line, key)?,
                _ => {
                    return Err(Error::Config {
                        line,
                        msg: format!("unknown detector key '{key}'"),
                    })
                }
            },
            "solver" => match key {
                "cfl_max" => cfl_max = parse_f64(value, line, key)?,
                "tol" => solver_tol = parse_f64(value, line, key)?,
                "eps_damp" => eps_damp = parse_f64(value, line, key)?,
                "stop_on_saturation" => stop_on_saturation = parse_bool(value, line, key)?,
                "seed" => {
                    seed = value.parse().map_err(|e| Error::Config {
                        line,
                        msg: format!("bad seed: {e}"),
                    })?
                }
                _ => {
                    return Err(Error::Config {
                        line,
                        msg: format!("unknown solver key '{key}'"),
                    })
                }
            },
            "sweep" => {
                let values: Vec<String> =
                    value.split(',').map(|v| v.trim().to_string()).collect();
                if values.is_empty() || values.iter().any(|v| v.is_empty()) {
                    return Err(Error::Config {
                        line,
                        msg: format!("sweep axis '{key}' needs a nonempty value list"),
                    });
                }
                // Validate the axis name and every value right away.
                let mut probe = params;
                for v in &values {
                    set_param(&mut probe, key, v).map_err(|e| match e {
                        Error::ConfigMsg(msg) => Error::Config { line, msg },
                        other => other,
                    })?;
                }
                sweep_axes.retain(|(k, _)| k != key);
                sweep_axes.push((key.to_string(), values));
            }
            _ => {
                return Err(Error::Config {
                    line,
                    msg: format!("unknown section '[{section}]'"),
                })
            }
        }
    }

    let mesh_spec = {
        let kind = mesh
            .kind
            .ok_or_else(|| Error::ConfigMsg("missing [mesh] kind = box|ball".into()))?;
        let dim = mesh.dim.unwrap_or(params.n as usize);
        match kind.as_str() {
            "box" => MeshSpec::Box {
                dim,
                lengths: mesh
                    .lengths
                    .ok_or_else(|| Error::ConfigMsg("box mesh needs 'lengths'".into()))?,
                cells: mesh
                    .cells
                    .ok_or_else(|| Error::ConfigMsg("box mesh needs 'cells'".into()))?,
            },
            "ball" => MeshSpec::Ball {
                dim,
                radius: mesh
                    .radius
                    .ok_or_else(|| Error::ConfigMsg("ball mesh needs 'radius'".into()))?,
                h: mesh
                    .h
                    .ok_or_else(|| Error::ConfigMsg("ball mesh needs 'h'".into()))?,
            },
            other => {
                return Err(Error::ConfigMsg(format!(
                    "unknown mesh kind '{other}' (expected box or ball)"
                )))
            }
        }
    };

    let run = RunConfig {
        params,
        mesh: mesh_spec,
        dt: dt.ok_or_else(|| Error::ConfigMsg("missing [time] dt".into()))?,
        t_end: t_end.ok_or_else(|| Error::ConfigMsg("missing [time] t_end".into()))?,
        u0,
        v0,
        w0,
        record_every,
        snapshot_every,
        detector,
        cfl_max,
        solver_tol,
        eps_damp,
        stop_on_saturation,
        seed,
    };
    run.validate()?;
    Ok(ConfigFile { run, sweep_axes })
}

/// Parses configuration text plus `--override section.key=value` pairs
/// (appended after the file, so they win).
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ConfigFile> {
    let mut pairs = Vec::new();
    split_pairs(text, &mut pairs)?;
    for (i, ov) in overrides.iter().enumerate() {
        let Some((path, value)) = ov.split_once('=') else {
            return Err(Error::ConfigMsg(format!(
                "override '{ov}' must look like section.key=value"
            )));
        };
        let Some((section, key)) = path.trim().split_once('.') else {
            return Err(Error::ConfigMsg(format!(
                "override key '{path}' must be section.key (e.g. params.gamma)"
            )));
        };
        pairs.push((
            section.trim().to_string(),
            key.trim().to_string(),
            value.trim().to_string(),
            usize::MAX - overrides.len() + i,
        ));
    }
    build_config(&pairs)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, overrides)
}

fn fmt_f64_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Canonical, complete echo of a configuration. Floats use the
/// shortest round-trip representation, so re-parsing the echo
/// reproduces the configuration exactly.
pub fn config_echo(cfg: &ConfigFile) -> String {
    let run = &cfg.run;
    let p = &run.params;
    let mut out = String::new();
    out.push_str("[params]\n");
    out.push_str(&format!("n = {}\n", p.n));
    out.push_str(&format!("tau = {}\n", p.tau));
    out.push_str(&format!("nonlocal = {}\n", p.nonlocal));
    out.push_str(&format!("chi = {}\n", p.chi));
    out.push_str(&format!("xi = {}\n", p.xi));
    out.push_str(&format!("lambda = {}\n", p.lambda));
    out.push_str(&format!("mu = {}\n", p.mu));
    out.push_str(&format!("c = {}\n", p.c));
    out.push_str(&format!("rho = {}\n", p.rho));
    out.push_str(&format!("k = {}\n", p.k));
    out.push_str(&format!("gamma = {}\n", p.gamma));
    out.push_str(&format!("m1 = {}\n", p.m1));
    out.push_str(&format!("m2 = {}\n", p.m2));
    out.push_str(&format!("m3 = {}\n", p.m3));
    out.push_str(&format!("alpha = {}\n", p.alpha));
    out.push_str(&format!("beta = {}\n", p.beta));
    out.push_str(&format!("f1_coeff = {}\n", p.f1_coeff));
    out.push_str(&format!("f2_lo = {}\n", p.f2_lo));
    out.push_str(&format!("f2_hi = {}\n", p.f2_hi));
    out.push_str("\n[mesh]\n");
    match &run.mesh {
        MeshSpec::Box { dim, lengths, cells } => {
            out.push_str("kind = box\n");
            out.push_str(&format!("dim = {dim}\n"));
            out.push_str(&format!("lengths = {}\n", fmt_f64_list(lengths)));
            out.push_str(&format!(
                "cells = {}\n",
                cells
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
        MeshSpec::Ball { dim, radius, h } => {
            out.push_str("kind = ball\n");
            out.push_str(&format!("dim = {dim}\n"));
            out.push_str(&format!("radius = {radius}\n"));
            out.push_str(&format!("h = {h}\n"));
        }
    }
    out.push_str("\n[time]\n");
    out.push_str(&format!("dt = {}\n", run.dt));
    out.push_str(&format!("t_end = {}\n", run.t_end));
    out.push_str("\n[initial]\n");
    out.push_str(&format!("u0 = {}\n", run.u0.to_config_string()));
    out.push_str(&format!("v0 = {}\n", run.v0.to_config_string()));
    out.push_str(&format!("w0 = {}\n", run.w0.to_config_string()));
    out.push_str("\n[output]\n");
    out.push_str(&format!("record_every = {}\n", run.record_every));
    match run.snapshot_every {
        Some(s) => out.push_str(&format!("snapshot_every = {s}\n")),
        None => out.push_str("snapshot_every = none\n"),
    }
    out.push_str("\n[detector]\n");
    out.push_str(&format!("growth_factor = {}\n", run.detector.growth_factor));
    out.push_str(&format!("window = {}\n", run.detector.window));
    out.push_str(&format!("plateau_tol = {}\n", run.detector.plateau_tol));
    out.push_str("\n[solver]\n");
    out.push_str(&format!("cfl_max = {}\n", run.cfl_max));
    out.push_str(&format!("tol = {}\n", run.solver_tol));
    out.push_str(&format!("eps_damp = {}\n", run.eps_damp));
    out.push_str(&format!("stop_on_saturation = {}\n", run.stop_on_saturation));
    out.push_str(&format!("seed = {}\n", run.seed));
    if !cfg.sweep_axes.is_empty() {
        out.push_str("\n[sweep]\n");
        for (key, values) in &cfg.sweep_axes {
            out.push_str(&format!("{key} = {}\n", values.join(", ")));
        }
    }
    out
}
