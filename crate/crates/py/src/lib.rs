//! Python bindings: model parameters and regime analysis, mesh
//! construction, preset/config simulation runs and the blow-up
//! detector.

use chemotax::config::{parse_config, ConfigFile};
use chemotax::diagnostics::{
    detect_blowup as detect_blowup_core, DetectorConfig, Termination, TimeSeries, TimeSeriesRow,
};
use chemotax::output::write_run_outputs;
use chemotax::presets::{preset_config, preset_list};
use chemotax::stepper::run_simulation;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: chemotax::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Model coefficients and structural switches, with the closed-form
/// regime operations.
#[pyclass(name = "ModelParams", skip_from_py_object)]
#[derive(Clone)]
struct PyModelParams {
    #[pyo3(get, set)]
    n: u32,
    #[pyo3(get, set)]
    tau: u32,
    #[pyo3(get, set)]
    nonlocal_model: bool,
    #[pyo3(get, set)]
    chi: f64,
    #[pyo3(get, set)]
    xi: f64,
    #[pyo3(get, set)]
    lambda_: f64,
    #[pyo3(get, set)]
    mu: f64,
    #[pyo3(get, set)]
    c: f64,
    #[pyo3(get, set)]
    rho: f64,
    #[pyo3(get, set)]
    k: f64,
    #[pyo3(get, set)]
    gamma: f64,
    #[pyo3(get, set)]
    m1: f64,
    #[pyo3(get, set)]
    m2: f64,
    #[pyo3(get, set)]
    m3: f64,
    #[pyo3(get, set)]
    alpha: f64,
    #[pyo3(get, set)]
    beta: f64,
    #[pyo3(get, set)]
    f1_coeff: f64,
    #[pyo3(get, set)]
    f2_lo: f64,
    #[pyo3(get, set)]
    f2_hi: f64,
}

impl PyModelParams {
    fn to_core(&self) -> PyResult<chemotax::ModelParams> {
        let p = chemotax::ModelParams {
            n: self.n,
            tau: self.tau,
            nonlocal: self.nonlocal_model,
            chi: self.chi,
            xi: self.xi,
            lambda: self.lambda_,
            mu: self.mu,
            c: self.c,
            rho: self.rho,
            k: self.k,
            gamma: self.gamma,
            m1: self.m1,
            m2: self.m2,
            m3: self.m3,
            alpha: self.alpha,
            beta: self.beta,
            f1_coeff: self.f1_coeff,
            f2_lo: self.f2_lo,
            f2_hi: self.f2_hi,
        };
        p.validate().map_err(err)?;
        Ok(p)
    }
}

#[pymethods]
impl PyModelParams {
    /// Baseline parameters: every coefficient 1 except k = 1.1.
    #[new]
    #[pyo3(signature = (n=2))]
    fn new(n: u32) -> Self {
        let p = chemotax::ModelParams::baseline(n);
        PyModelParams {
            n: p.n,
            tau: p.tau,
            nonlocal_model: p.nonlocal,
            chi: p.chi,
            xi: p.xi,
            lambda_: p.lambda,
            mu: p.mu,
            c: p.c,
            rho: p.rho,
            k: p.k,
            gamma: p.gamma,
            m1: p.m1,
            m2: p.m2,
            m3: p.m3,
            alpha: p.alpha,
            beta: p.beta,
            f1_coeff: p.f1_coeff,
            f2_lo: p.f2_lo,
            f2_hi: p.f2_hi,
        }
    }

    fn validate(&self) -> PyResult<()> {
        self.to_core().map(|_| ())
    }

    /// max(1, n/(n+1)(m2+alpha), tau*n/(n+1)(m3+beta))
    fn theta_cap(&self) -> PyResult<f64> {
        Ok(self.to_core()?.theta_cap())
    }

    /// Threshold with both chemical terms enforced regardless of tau.
    fn theta_cap_tau1(&self) -> PyResult<f64> {
        Ok(self.to_core()?.theta_cap_tau1())
    }

    /// True iff theta_cap < gamma <= 2.
    fn gamma_condition_satisfied(&self) -> PyResult<bool> {
        Ok(self.to_core()?.gamma_condition_satisfied())
    }

    /// Uniform-in-time mass bound (requires k > rho and mu > 0).
    fn mass_bound(&self, initial_mass: f64, domain_volume: f64) -> PyResult<f64> {
        self.to_core()?
            .mass_bound(initial_mass, domain_volume)
            .map_err(err)
    }

    fn default_q(&self) -> PyResult<f64> {
        Ok(self.to_core()?.default_q())
    }

    /// The nine interpolation exponents at (p, q) as a dict.
    fn gn_exponents<'py>(
        &self,
        py: Python<'py>,
        p: f64,
        q: f64,
    ) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
        let e = self.to_core()?.gn_exponents(p, q).map_err(err)?;
        let d = pyo3::types::PyDict::new(py);
        d.set_item("theta", e.theta)?;
        d.set_item("sigma", e.sigma)?;
        d.set_item("theta_bar", e.theta_bar)?;
        d.set_item("sigma_bar", e.sigma_bar)?;
        d.set_item("theta_hat", e.theta_hat)?;
        d.set_item("sigma_hat", e.sigma_hat)?;
        d.set_item("theta_tilde", e.theta_tilde)?;
        d.set_item("theta_under", e.theta_under)?;
        d.set_item("sigma_under", e.sigma_under)?;
        d.set_item("p", e.p)?;
        d.set_item("q", e.q)?;
        Ok(d)
    }

    /// The ten interval checks at (p, q), in table order.
    fn verify_gn_inequalities(&self, p: f64, q: f64) -> PyResult<Vec<bool>> {
        let core = self.to_core()?;
        let e = core.gn_exponents(p, q).map_err(err)?;
        Ok(e.interval_checks(core.gamma).to_vec())
    }

    /// Grid-scan threshold past which the required checks hold; None if
    /// the scan exhausts p_max.
    #[pyo3(signature = (q=None, p_max=1e6))]
    fn find_pbar(&self, q: Option<f64>, p_max: f64) -> PyResult<Option<f64>> {
        let core = self.to_core()?;
        let q = q.unwrap_or_else(|| core.default_q());
        chemotax::params::find_pbar(&core, q, p_max).map_err(err)
    }

    /// Flat key = value regime report.
    #[pyo3(signature = (initial_mass=None, domain_volume=None))]
    fn regime_report(
        &self,
        initial_mass: Option<f64>,
        domain_volume: Option<f64>,
    ) -> PyResult<String> {
        let core = self.to_core()?;
        Ok(chemotax::RegimeReport::evaluate(&core, initial_mass, domain_volume)
            .to_key_value_block())
    }

    fn __repr__(&self) -> String {
        format!(
            "ModelParams(n={}, tau={}, nonlocal={}, chi={}, xi={}, gamma={}, c={})",
            self.n, self.tau, self.nonlocal_model, self.chi, self.xi, self.gamma, self.c
        )
    }
}

/// Finite-volume mesh handle.
#[pyclass(name = "Mesh")]
struct PyMesh {
    inner: chemotax::Mesh,
}

#[pymethods]
impl PyMesh {
    /// Uniform Cartesian box mesh.
    #[staticmethod]
    fn build_box(lengths: Vec<f64>, cells: Vec<usize>) -> PyResult<Self> {
        let dim = lengths.len();
        chemotax::mesh::build_box_mesh(dim, &lengths, &cells)
            .map(|inner| PyMesh { inner })
            .map_err(err)
    }

    /// Masked Cartesian disk (dim 2) or ball (dim 3) mesh.
    #[staticmethod]
    fn build_ball(dim: usize, radius: f64, h: f64) -> PyResult<Self> {
        chemotax::mesh::build_ball_mesh(dim, radius, h)
            .map(|inner| PyMesh { inner })
            .map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.inner.n_cells()
    }

    #[getter]
    fn n_faces(&self) -> usize {
        self.inner.n_faces()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }

    #[getter]
    fn domain_volume(&self) -> f64 {
        self.inner.domain_volume()
    }

    fn cell_centers(&self) -> Vec<[f64; 3]> {
        self.inner.cells().iter().map(|c| c.center).collect()
    }

    fn summary(&self) -> String {
        self.inner.summary()
    }

    fn __repr__(&self) -> String {
        self.inner.summary()
    }
}

/// Result of one simulation run.
#[pyclass(name = "RunResult")]
struct PyRunResult {
    #[pyo3(get)]
    termination: String,
    #[pyo3(get)]
    blew_up: bool,
    #[pyo3(get)]
    t_max_estimate: Option<f64>,
    #[pyo3(get)]
    peak_value: f64,
    #[pyo3(get)]
    rationale: String,
    #[pyo3(get)]
    t: Vec<f64>,
    #[pyo3(get)]
    max_u: Vec<f64>,
    #[pyo3(get)]
    min_u: Vec<f64>,
    #[pyo3(get)]
    mass: Vec<f64>,
    #[pyo3(get)]
    series_csv: String,
}

#[pymethods]
impl PyRunResult {
    fn __repr__(&self) -> String {
        format!(
            "RunResult(termination={}, blew_up={}, peak_value={:.6e}, rows={})",
            self.termination,
            self.blew_up,
            self.peak_value,
            self.t.len()
        )
    }
}

fn execute(cfg: &ConfigFile, out: Option<String>) -> PyResult<PyRunResult> {
    if !cfg.sweep_axes.is_empty() {
        return Err(PyValueError::new_err(
            "configuration declares sweep axes; run combinations individually via overrides",
        ));
    }
    let output = run_simulation(&cfg.run).map_err(err)?;
    let verdict = match &out {
        Some(dir) => write_run_outputs(std::path::Path::new(dir), cfg, &output).map_err(err)?,
        None => detect_blowup_core(&output.series, &output.termination, &cfg.run.detector),
    };
    let rows = output.series.rows();
    Ok(PyRunResult {
        termination: format!("{:?}", output.termination),
        blew_up: verdict.blew_up,
        t_max_estimate: verdict.t_max_estimate,
        peak_value: verdict.peak_value,
        rationale: verdict.rationale,
        t: rows.iter().map(|r| r.t).collect(),
        max_u: rows.iter().map(|r| r.max_u).collect(),
        min_u: rows.iter().map(|r| r.min_u).collect(),
        mass: rows.iter().map(|r| r.mass).collect(),
        series_csv: output.series.to_csv(),
    })
}

/// Runs a built-in preset, optionally applying `section.key=value`
/// overrides and writing the standard output files into `out`.
#[pyfunction]
#[pyo3(signature = (name, overrides=vec![], out=None))]
fn run_preset(name: &str, overrides: Vec<String>, out: Option<String>) -> PyResult<PyRunResult> {
    let cfg = preset_config(name, &overrides).map_err(err)?;
    execute(&cfg, out)
}

/// Runs a configuration given as flat key = value text.
#[pyfunction]
#[pyo3(signature = (text, overrides=vec![], out=None))]
fn run_config_text(
    text: &str,
    overrides: Vec<String>,
    out: Option<String>,
) -> PyResult<PyRunResult> {
    let cfg = parse_config(text, &overrides).map_err(err)?;
    execute(&cfg, out)
}

/// `(name, description)` pairs of the built-in presets.
#[pyfunction]
fn presets() -> Vec<(String, String)> {
    preset_list()
        .into_iter()
        .map(|(n, d)| (n.to_string(), d.to_string()))
        .collect()
}

/// Applies the stabilization blow-up criterion to a recorded
/// `max u` trajectory. Returns
/// `(blew_up, t_max_estimate, peak_value, rationale)`.
#[pyfunction]
#[pyo3(signature = (t, max_u, growth_factor=100.0, window=20, plateau_tol=0.02, rejected_at=None))]
fn detect_blowup(
    t: Vec<f64>,
    max_u: Vec<f64>,
    growth_factor: f64,
    window: usize,
    plateau_tol: f64,
    rejected_at: Option<f64>,
) -> PyResult<(bool, Option<f64>, f64, String)> {
    if t.len() != max_u.len() || t.is_empty() {
        return Err(PyValueError::new_err(
            "t and max_u must be nonempty and of equal length",
        ));
    }
    let mut series = TimeSeries::new();
    for (&ti, &ui) in t.iter().zip(&max_u) {
        series.push(TimeSeriesRow {
            t: ti,
            max_u: ui,
            min_u: 0.0,
            mass: 1.0,
            max_v: 0.0,
            max_w: 0.0,
            clamped_mass: 0.0,
            solver_iters: 0,
        });
    }
    let termination = match rejected_at {
        Some(tr) => Termination::StepRejected {
            t: tr,
            face: 0,
            cfl: f64::NAN,
        },
        None => Termination::Completed,
    };
    let cfg = DetectorConfig {
        growth_factor,
        window,
        plateau_tol,
    };
    let v = detect_blowup_core(&series, &termination, &cfg);
    Ok((v.blew_up, v.t_max_estimate, v.peak_value, v.rationale))
}

#[pymodule]
fn chemotax_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(run_preset, m)?)?;
    m.add_function(wrap_pyfunction!(run_config_text, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(detect_blowup, m)?)?;
    Ok(())
}
