//! IMEX time integration of the coupled system: chemicals first, then
//! the cell density with implicit two-point diffusion, explicit upwind
//! chemotactic convection and positivity-preserving source splitting.
//!
//! Splitting of the density equation, per step of size `dt`:
//!
//! ```text
//! (V/dt + L_diff + V*(damp + death)) u_new
//!     = V * (u_old/dt - Conv(u_old, v, w) + lambda u_old^rho)
//! ```
//!
//! * `L_diff`: implicit stiffness with face coefficients frozen at
//!   `u_old` (harmonic mean of `(u_old+1)^(m1-1)`), one Picard sweep —
//!   the step stays linear;
//! * `Conv`: explicit upwind divergence of the attraction and repulsion
//!   fluxes;
//! * `damp = c |grad u_old|^gamma / max(u_old, eps)`: the gradient
//!   damping rewritten as an absorption coefficient so it can act
//!   implicitly without breaking positivity; the deviation from the
//!   plain sink is logged per step;
//! * `death = mu u_old^(k-1)` semi-implicit, growth explicit.
//!
//! After the solve the update is re-applied in flux form (fluxes
//! evaluated at the solved iterate), which makes the transport part of
//! the step conservative to rounding regardless of solver tolerance;
//! the result is clamped at zero and the clamped mass logged.

use crate::chemical::{
    chemical_kind, solve_elliptic_chemical, solve_nonlocal_chemical, step_parabolic_chemical,
    ChemicalKind,
};
use crate::diagnostics::{
    detect_blowup, DetectorConfig, Termination, TimeSeries, TimeSeriesRow,
};
use crate::error::{Error, Result};
use crate::field::{stable_sum, Field};
use crate::mesh::{build_ball_mesh, build_box_mesh, Mesh};
use crate::operators::{
    divergence, face_diffusivities, gradient_magnitude, upwind_chemotactic_flux,
};
use crate::params::ModelParams;
use crate::sparse::{default_max_iter, solve_spd, stiffness_builder};

/// Mesh recipe; kept declarative so configs echo and rebuild exactly.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    Box {
        dim: usize,
        lengths: Vec<f64>,
        cells: Vec<usize>,
    },
    Ball {
        dim: usize,
        radius: f64,
        h: f64,
    },
}

impl MeshSpec {
    pub fn build(&self) -> Result<Mesh> {
        match self {
            MeshSpec::Box { dim, lengths, cells } => build_box_mesh(*dim, lengths, cells),
            MeshSpec::Ball { dim, radius, h } => build_ball_mesh(*dim, *radius, *h),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MeshSpec::Box { dim, .. } | MeshSpec::Ball { dim, .. } => *dim,
        }
    }
}

/// Initial cell-density profile, evaluated at cell centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// `500 exp(-35 r^2)` (3D experiments).
    Gauss3d,
    /// `500 exp(-35 r^2)` (2D experiments).
    Gauss2d,
    Constant(f64),
    /// `amplitude * exp(-rate * r^2)`.
    Gaussian { amplitude: f64, rate: f64 },
}

impl InitialCondition {
    pub fn parse(text: &str) -> Result<InitialCondition> {
        let t = text.trim();
        match t {
            "gauss3d" => return Ok(InitialCondition::Gauss3d),
            "gauss2d" => return Ok(InitialCondition::Gauss2d),
            _ => {}
        }
        if let Some(arg) = t.strip_prefix("constant(").and_then(|s| s.strip_suffix(')')) {
            let c: f64 = arg
                .trim()
                .parse()
                .map_err(|e| Error::ConfigMsg(format!("bad constant '{arg}': {e}")))?;
            if c < 0.0 {
                return Err(Error::ConfigMsg("initial condition must be nonnegative".into()));
            }
            return Ok(InitialCondition::Constant(c));
        }
        if let Some(args) = t.strip_prefix("gaussian(").and_then(|s| s.strip_suffix(')')) {
            let parts: Vec<&str> = args.split(',').collect();
            if parts.len() == 2 {
                let amplitude: f64 = parts[0].trim().parse().map_err(|e| {
                    Error::ConfigMsg(format!("bad gaussian amplitude '{}': {e}", parts[0]))
                })?;
                let rate: f64 = parts[1].trim().parse().map_err(|e| {
                    Error::ConfigMsg(format!("bad gaussian rate '{}': {e}", parts[1]))
                })?;
                if amplitude < 0.0 {
                    return Err(Error::ConfigMsg("gaussian amplitude must be >= 0".into()));
                }
                return Ok(InitialCondition::Gaussian { amplitude, rate });
            }
        }
        Err(Error::ConfigMsg(format!(
            "unknown initial condition preset '{t}' \
             (expected gauss3d, gauss2d, constant(c) or gaussian(a,r))"
        )))
    }

    pub fn to_config_string(&self) -> String {
        match self {
            InitialCondition::Gauss3d => "gauss3d".into(),
            InitialCondition::Gauss2d => "gauss2d".into(),
            InitialCondition::Constant(c) => format!("constant({c})"),
            InitialCondition::Gaussian { amplitude, rate } => {
                format!("gaussian({amplitude},{rate})")
            }
        }
    }

    pub fn evaluate(&self, mesh: &Mesh) -> Field {
        let gaussian = |amplitude: f64, rate: f64| {
            Field::from_fn(mesh, move |c| {
                let r2: f64 = c.iter().map(|x| x * x).sum();
                amplitude * (-rate * r2).exp()
            })
        };
        match self {
            InitialCondition::Gauss3d | InitialCondition::Gauss2d => gaussian(500.0, 35.0),
            InitialCondition::Constant(c) => Field::constant(mesh, *c),
            InitialCondition::Gaussian { amplitude, rate } => gaussian(*amplitude, *rate),
        }
    }
}

/// Cell-center evaluation of a named initial-condition preset.
pub fn initial_condition(mesh: &Mesh, preset: &str) -> Result<Field> {
    Ok(InitialCondition::parse(preset)?.evaluate(mesh))
}

/// Initialization of the parabolic chemicals (`tau = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChemInit {
    /// Solve the elliptic equation for the initial density.
    QuasiSteady,
    Constant(f64),
}

impl ChemInit {
    pub fn parse(text: &str) -> Result<ChemInit> {
        let t = text.trim();
        if t == "quasi_steady" {
            return Ok(ChemInit::QuasiSteady);
        }
        if let Some(arg) = t.strip_prefix("constant(").and_then(|s| s.strip_suffix(')')) {
            let c: f64 = arg
                .trim()
                .parse()
                .map_err(|e| Error::ConfigMsg(format!("bad constant '{arg}': {e}")))?;
            return Ok(ChemInit::Constant(c));
        }
        Err(Error::ConfigMsg(format!(
            "unknown chemical initialization '{t}' (expected quasi_steady or constant(c))"
        )))
    }

    pub fn to_config_string(&self) -> String {
        match self {
            ChemInit::QuasiSteady => "quasi_steady".into(),
            ChemInit::Constant(c) => format!("constant({c})"),
        }
    }
}

/// Complete description of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub mesh: MeshSpec,
    pub dt: f64,
    pub t_end: f64,
    pub u0: InitialCondition,
    /// Initialization of v when `tau = 1`.
    pub v0: ChemInit,
    /// Initialization of w when `tau = 1`.
    pub w0: ChemInit,
    /// Diagnostics cadence in steps.
    pub record_every: usize,
    /// Snapshot cadence in steps; `None` disables snapshots.
    pub snapshot_every: Option<usize>,
    pub detector: DetectorConfig,
    /// Maximum admissible per-face convective CFL number.
    pub cfl_max: f64,
    /// Relative tolerance of all linear solves.
    pub solver_tol: f64,
    /// Density floor in the damping absorption coefficient.
    pub eps_damp: f64,
    /// Stop once the detector sees a post-growth plateau.
    pub stop_on_saturation: bool,
    /// Reserved for future stochastic variants; unused.
    pub seed: u64,
}

impl RunConfig {
    /// Baseline configuration; callers override what they need.
    pub fn new(params: ModelParams, mesh: MeshSpec, dt: f64, t_end: f64) -> RunConfig {
        RunConfig {
            params,
            mesh,
            dt,
            t_end,
            u0: InitialCondition::Constant(1.0),
            v0: ChemInit::QuasiSteady,
            w0: ChemInit::QuasiSteady,
            record_every: 1,
            snapshot_every: None,
            detector: DetectorConfig::default(),
            cfl_max: 0.9,
            solver_tol: 1e-9,
            eps_damp: 1e-8,
            stop_on_saturation: true,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.dt > 0.0) {
            return Err(Error::ConfigMsg(format!("dt must be > 0 (got {})", self.dt)));
        }
        if !(self.t_end > self.dt) {
            return Err(Error::ConfigMsg(format!(
                "t_end must exceed dt (got t_end={}, dt={})",
                self.t_end, self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(Error::ConfigMsg("record_every must be >= 1".into()));
        }
        if self.snapshot_every == Some(0) {
            return Err(Error::ConfigMsg("snapshot_every must be >= 1".into()));
        }
        if !(self.cfl_max > 0.0) {
            return Err(Error::ConfigMsg("cfl_max must be > 0".into()));
        }
        if !(self.solver_tol > 0.0) {
            return Err(Error::ConfigMsg("solver_tol must be > 0".into()));
        }
        if !(self.eps_damp > 0.0) {
            return Err(Error::ConfigMsg("eps_damp must be > 0".into()));
        }
        if !(self.detector.growth_factor > 1.0)
            || self.detector.window < 3
            || !(self.detector.plateau_tol > 0.0 && self.detector.plateau_tol < 1.0)
        {
            return Err(Error::ConfigMsg(
                "detector needs growth_factor > 1, window >= 3, plateau_tol in (0,1)".into(),
            ));
        }
        let d = self.mesh.dim();
        let pd = self.params.n as usize;
        if d != pd {
            return Err(Error::ConfigMsg(format!(
                "mesh dimension {d} does not match params.n = {pd}"
            )));
        }
        Ok(())
    }

    /// Number of steps to reach `t_end` (exact multiples stay exact).
    pub fn n_steps(&self) -> u64 {
        (self.t_end / self.dt - 1e-9).ceil().max(1.0) as u64
    }
}

/// Solution triple plus simulation clock.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Field,
    pub v: Field,
    pub w: Field,
    pub t: f64,
    pub step_index: u64,
}

/// Per-step scalars fed into logs and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub solver_iters: usize,
    pub v_iters: usize,
    pub w_iters: usize,
    pub u_iters: usize,
    pub density_residual: f64,
    pub max_cfl: f64,
    pub clamped_mass: f64,
    /// Volume integral of `c |grad u|^gamma (1 - u/max(u, eps))`, the
    /// deviation of the absorption form from the plain sink.
    pub damp_residual: f64,
}

fn production(exponent: f64) -> impl Fn(f64) -> f64 + Copy {
    move |s: f64| s.powf(exponent)
}

/// Computes the chemical pair `(v, w)` from the density per the
/// structural case of `params`. `previous` seeds the iterative solves
/// (and supplies `z_old` in the parabolic case).
pub fn solve_chemicals(
    u: &Field,
    previous: Option<(&Field, &Field)>,
    params: &ModelParams,
    mesh: &Mesh,
    dt: f64,
    tol: f64,
) -> Result<(Field, Field, usize, usize)> {
    let max_iter = default_max_iter(mesh.n_cells());
    let f1 = production(params.alpha);
    let f2 = production(params.beta);
    let kind = chemical_kind(params.tau, params.nonlocal);
    let (pv, pw) = match previous {
        Some((v, w)) => (Some(v), Some(w)),
        None => (None, None),
    };
    let ((v, sv), (w, sw)) = match kind {
        ChemicalKind::Elliptic => (
            solve_elliptic_chemical(u, f1, mesh, pv, tol, max_iter)?,
            solve_elliptic_chemical(u, f2, mesh, pw, tol, max_iter)?,
        ),
        ChemicalKind::NonlocalPoisson => (
            solve_nonlocal_chemical(u, f1, mesh, pv, tol, max_iter)?,
            solve_nonlocal_chemical(u, f2, mesh, pw, tol, max_iter)?,
        ),
        ChemicalKind::Parabolic => {
            let v_old = pv.ok_or_else(|| {
                Error::ConfigMsg("parabolic chemicals need previous fields".into())
            })?;
            let w_old = pw.expect("previous pair is complete");
            (
                step_parabolic_chemical(v_old, u, f1, mesh, dt, tol, max_iter)?,
                step_parabolic_chemical(w_old, u, f2, mesh, dt, tol, max_iter)?,
            )
        }
    };
    Ok((v, w, sv.iterations, sw.iterations))
}

/// Outcome of the explicit/implicit density update.
#[derive(Debug)]
pub struct DensityUpdate {
    pub u_new: Field,
    pub u_iters: usize,
    pub residual: f64,
    pub max_cfl: f64,
    pub clamped_mass: f64,
    pub damp_residual: f64,
}

/// Advances the cell density one step given already-computed chemicals.
///
/// Exposed separately from [`imex_step`] so the linear system can be
/// checked against hand-assembled oracles with prescribed chemicals.
pub fn density_update(
    u_old: &Field,
    v: &Field,
    w: &Field,
    cfg: &RunConfig,
    mesh: &Mesh,
    t: f64,
) -> Result<DensityUpdate> {
    let params = &cfg.params;
    let dt = cfg.dt;
    let uv = u_old.values();
    let volumes = mesh.volumes();

    // Explicit upwind convection and its CFL guard.
    let q_attr = upwind_chemotactic_flux(u_old, v, mesh, 1, params.m2, params.chi);
    let q_rep = upwind_chemotactic_flux(u_old, w, mesh, -1, params.m3, params.xi);
    let mut max_cfl = 0.0f64;
    let mut worst_face = 0usize;
    for (fi, f) in mesh.faces().iter().enumerate() {
        let dv = (v.values()[f.neighbor] - v.values()[f.owner]) / f.distance;
        let dw = (w.values()[f.neighbor] - w.values()[f.owner]) / f.distance;
        let speed = (params.chi * dv.abs()).max(params.xi * dw.abs());
        let cfl = speed * dt / f.distance;
        if cfl > max_cfl {
            max_cfl = cfl;
            worst_face = fi;
        }
    }
    if max_cfl > cfg.cfl_max {
        return Err(Error::StepRejected {
            t,
            face: worst_face,
            cfl: max_cfl,
            cfl_max: cfg.cfl_max,
        });
    }
    let conv: Vec<f64> = {
        let da = divergence(&q_attr, mesh);
        let dr = divergence(&q_rep, mesh);
        da.values()
            .iter()
            .zip(dr.values())
            .map(|(a, r)| a + r)
            .collect()
    };

    // Absorption coefficients frozen at the old iterate.
    let grad = gradient_magnitude(u_old, mesh);
    let mut damp_residual = 0.0;
    let damp: Vec<f64> = uv
        .iter()
        .zip(grad.values())
        .zip(&volumes)
        .map(|((&ui, &gi), vol)| {
            let sink = params.c * gi.powf(params.gamma);
            let floor = ui.max(cfg.eps_damp);
            damp_residual += sink * (1.0 - ui / floor) * vol;
            sink / floor
        })
        .collect();
    let death: Vec<f64> = uv.iter().map(|&ui| params.mu * ui.powf(params.k - 1.0)).collect();
    let growth: Vec<f64> = uv.iter().map(|&ui| params.lambda * ui.powf(params.rho)).collect();

    // Implicit system with diffusion coefficients frozen at u_old.
    let face_d = face_diffusivities(u_old, mesh, params.m1);
    let mut builder = stiffness_builder(mesh, &face_d);
    let diag: Vec<f64> = volumes
        .iter()
        .zip(&damp)
        .zip(&death)
        .map(|((vol, da), de)| vol * (1.0 / dt + da + de))
        .collect();
    builder.add_diagonal(&diag);
    let a = builder.build();
    let b: Vec<f64> = (0..mesh.n_cells())
        .map(|i| volumes[i] * (uv[i] / dt - conv[i] + growth[i]))
        .collect();
    let (u_solved, stats) = solve_spd(
        &a,
        &b,
        Some(uv),
        cfg.solver_tol,
        default_max_iter(mesh.n_cells()),
    )?;

    // Re-apply in flux form: the two-point fluxes evaluated at the
    // solved iterate telescope exactly, so transport conserves mass to
    // rounding independent of the solver tolerance.
    let mut u_new = uv.to_vec();
    for (f, d) in mesh.faces().iter().zip(&face_d) {
        let q = dt * f.area * d * (u_solved[f.neighbor] - u_solved[f.owner]) / f.distance;
        u_new[f.owner] += q / volumes[f.owner];
        u_new[f.neighbor] -= q / volumes[f.neighbor];
    }
    for fluxes in [&q_attr, &q_rep] {
        for (f, &q) in mesh.faces().iter().zip(fluxes.values()) {
            u_new[f.owner] -= dt * q / volumes[f.owner];
            u_new[f.neighbor] += dt * q / volumes[f.neighbor];
        }
    }
    for i in 0..u_new.len() {
        u_new[i] += dt * (growth[i] - (damp[i] + death[i]) * u_solved[i]);
    }

    // Positivity clamp; the removed mass is logged, expected ~0.
    let mut clamped_mass = 0.0;
    for (ui, vol) in u_new.iter_mut().zip(&volumes) {
        if *ui < 0.0 {
            clamped_mass += -*ui * vol;
            *ui = 0.0;
        }
    }

    Ok(DensityUpdate {
        u_new: Field::from_values(mesh, u_new),
        u_iters: stats.iterations,
        residual: stats.residual,
        max_cfl,
        clamped_mass,
        damp_residual,
    })
}

/// One full IMEX step: chemicals from the old density, then the density
/// update, then the clock.
pub fn imex_step(state: &State, cfg: &RunConfig, mesh: &Mesh) -> Result<(State, StepStats)> {
    let (v, w, v_iters, w_iters) = solve_chemicals(
        &state.u,
        Some((&state.v, &state.w)),
        &cfg.params,
        mesh,
        cfg.dt,
        cfg.solver_tol,
    )?;
    let update = density_update(&state.u, &v, &w, cfg, mesh, state.t)?;
    let step_index = state.step_index + 1;
    let stats = StepStats {
        solver_iters: v_iters + w_iters + update.u_iters,
        v_iters,
        w_iters,
        u_iters: update.u_iters,
        density_residual: update.residual,
        max_cfl: update.max_cfl,
        clamped_mass: update.clamped_mass,
        damp_residual: update.damp_residual,
    };
    Ok((
        State {
            u: update.u_new,
            v,
            w,
            t: step_index as f64 * cfg.dt,
            step_index,
        },
        stats,
    ))
}

/// Builds the initial state: density from the preset, chemicals from
/// the structural case (quasi-steady elliptic solve by default).
pub fn initial_state(cfg: &RunConfig, mesh: &Mesh) -> Result<State> {
    let u = cfg.u0.evaluate(mesh);
    let max_iter = default_max_iter(mesh.n_cells());
    let f1 = production(cfg.params.alpha);
    let f2 = production(cfg.params.beta);

    // Constant volume-weighted-mean guess: exact for constant
    // productions, which keeps uniform equilibria fixed points to
    // machine precision.
    let mean_guess = |f: &dyn Fn(f64) -> f64| {
        let s: Vec<f64> = u.values().iter().map(|&ui| f(ui)).collect();
        let mean = stable_sum(s.iter().zip(mesh.cells()).map(|(si, c)| si * c.volume))
            / mesh.domain_volume();
        Field::constant(mesh, mean)
    };

    let kind = chemical_kind(cfg.params.tau, cfg.params.nonlocal);
    let (v, w) = match kind {
        ChemicalKind::Elliptic => {
            let gv = mean_guess(&f1);
            let gw = mean_guess(&f2);
            (
                solve_elliptic_chemical(&u, f1, mesh, Some(&gv), cfg.solver_tol, max_iter)?.0,
                solve_elliptic_chemical(&u, f2, mesh, Some(&gw), cfg.solver_tol, max_iter)?.0,
            )
        }
        ChemicalKind::NonlocalPoisson => (
            solve_nonlocal_chemical(&u, f1, mesh, None, cfg.solver_tol, max_iter)?.0,
            solve_nonlocal_chemical(&u, f2, mesh, None, cfg.solver_tol, max_iter)?.0,
        ),
        ChemicalKind::Parabolic => {
            let init = |spec: &ChemInit, f: &dyn Fn(f64) -> f64| -> Result<Field> {
                match spec {
                    ChemInit::QuasiSteady => {
                        let guess = mean_guess(f);
                        Ok(solve_elliptic_chemical(
                            &u,
                            f,
                            mesh,
                            Some(&guess),
                            cfg.solver_tol,
                            max_iter,
                        )?
                        .0)
                    }
                    ChemInit::Constant(c) => Ok(Field::constant(mesh, *c)),
                }
            };
            (init(&cfg.v0, &f1)?, init(&cfg.w0, &f2)?)
        }
    };

    Ok(State {
        u,
        v,
        w,
        t: 0.0,
        step_index: 0,
    })
}

/// Per-step entry of the run log (solver statistics in CSV form).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLogRow {
    pub step: u64,
    pub t: f64,
    pub stats: StepStats,
}

/// Everything a finished (or interrupted) run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub mesh: Mesh,
    pub state: State,
    pub series: TimeSeries,
    pub termination: Termination,
    pub snapshots: Vec<(u64, Field)>,
    pub step_log: Vec<StepLogRow>,
}

impl RunOutput {
    /// Run-log CSV: one row per step with solver iteration counts,
    /// residuals and the positivity bookkeeping.
    pub fn step_log_csv(&self) -> String {
        let mut out = String::from(
            "step,t,v_iters,w_iters,u_iters,density_residual,max_cfl,clamped_mass,damp_residual\n",
        );
        for row in &self.step_log {
            out.push_str(&format!(
                "{},{:.16e},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                row.step,
                row.t,
                row.stats.v_iters,
                row.stats.w_iters,
                row.stats.u_iters,
                row.stats.density_residual,
                row.stats.max_cfl,
                row.stats.clamped_mass,
                row.stats.damp_residual,
            ));
        }
        out
    }
}

fn record_row(state: &State, mesh: &Mesh, clamped: f64, iters: usize) -> TimeSeriesRow {
    TimeSeriesRow {
        t: state.t,
        max_u: state.u.max(),
        min_u: state.u.min(),
        mass: state.u.mass(mesh),
        max_v: state.v.max(),
        max_w: state.w.max(),
        clamped_mass: clamped,
        solver_iters: iters,
    }
}

/// Drives [`imex_step`] until `t_end`, a detector plateau or a step
/// rejection; deterministic for a fixed configuration.
pub fn run_simulation(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mesh = cfg.mesh.build()?;
    let mut state = initial_state(cfg, &mesh)?;
    if state.u.min() < 0.0 {
        return Err(Error::ConfigMsg("initial density must be nonnegative".into()));
    }

    let mut series = TimeSeries::new();
    series.push(record_row(&state, &mesh, 0.0, 0));
    let mut snapshots = Vec::new();
    if cfg.snapshot_every.is_some() {
        snapshots.push((0, state.u.clone()));
    }
    let mut step_log = Vec::new();

    let n_steps = cfg.n_steps();
    let mut termination = Termination::Completed;
    let mut clamped_since_record = 0.0f64;

    for step in 1..=n_steps {
        match imex_step(&state, cfg, &mesh) {
            Ok((next, stats)) => {
                state = next;
                step_log.push(StepLogRow {
                    step,
                    t: state.t,
                    stats,
                });
                clamped_since_record = clamped_since_record.max(stats.clamped_mass);
                let record = step % cfg.record_every as u64 == 0 || step == n_steps;
                if record {
                    series.push(record_row(
                        &state,
                        &mesh,
                        clamped_since_record,
                        stats.solver_iters,
                    ));
                    clamped_since_record = 0.0;
                }
                if let Some(every) = cfg.snapshot_every {
                    if step % every as u64 == 0 || step == n_steps {
                        snapshots.push((step, state.u.clone()));
                    }
                }
                if record && cfg.stop_on_saturation {
                    let verdict = detect_blowup(&series, &Termination::Completed, &cfg.detector);
                    if verdict.blew_up {
                        termination = Termination::EarlySaturation { t: state.t };
                        break;
                    }
                }
            }
            Err(Error::StepRejected { t, face, cfl, .. }) => {
                // Rejection is itself a blow-up symptom: recorded, not
                // swallowed.
                termination = Termination::StepRejected { t, face, cfl };
                if series.last().map(|r| r.t) != Some(state.t) {
                    series.push(record_row(&state, &mesh, clamped_since_record, 0));
                }
                break;
            }
            Err(e) => return Err(e),
        }
    }

    Ok(RunOutput {
        mesh,
        state,
        series,
        termination,
        snapshots,
        step_log,
    })
}
