//! Model coefficients and the closed-form regime analysis: the damping
//! exponent threshold, the mass bound and the Gagliardo-Nirenberg
//! interpolation exponents that drive the boundedness criterion.

use crate::error::{Error, Result};

/// All scalar coefficients and exponents of the PDE system, plus the
/// structural switches (`tau`, `nonlocal`).
///
/// The density equation is
/// `u_t = div((u+1)^(m1-1) grad u - chi u(u+1)^(m2-1) grad v + xi u(u+1)^(m3-1) grad w)
///        + lambda u^rho - mu u^k - c |grad u|^gamma`
/// with chemical productions `f1(u) = u^alpha` and `f2(u) = u^beta` by
/// default. `tau` selects elliptic (0) or parabolic (1) chemical
/// equations; `nonlocal` switches to the mean-corrected Poisson form
/// where the chemicals are zero-mean deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Spatial dimension (1, 2 or 3).
    pub n: u32,
    /// Chemical-equation switch: 0 = elliptic, 1 = parabolic.
    pub tau: u32,
    /// Mean-corrected Poisson chemicals instead of screened ones.
    pub nonlocal: bool,
    /// Chemoattractant sensitivity.
    pub chi: f64,
    /// Chemorepellent sensitivity.
    pub xi: f64,
    /// Growth coefficient of the logistic source.
    pub lambda: f64,
    /// Death coefficient of the logistic source.
    pub mu: f64,
    /// Gradient-damping coefficient (0 disables damping).
    pub c: f64,
    /// Growth exponent, `rho >= 1`.
    pub rho: f64,
    /// Death exponent, `k >= rho`.
    pub k: f64,
    /// Gradient-damping exponent, `gamma >= 1`.
    pub gamma: f64,
    /// Diffusion exponent.
    pub m1: f64,
    /// Attraction sensitivity exponent.
    pub m2: f64,
    /// Repulsion sensitivity exponent.
    pub m3: f64,
    /// Chemoattractant production exponent, `> 0`.
    pub alpha: f64,
    /// Chemorepellent production exponent, `> 0`.
    pub beta: f64,
    /// Upper production-bound constant for `f1` (`k1`).
    pub f1_coeff: f64,
    /// Lower production-bound constant for `f2` (`k2`).
    pub f2_lo: f64,
    /// Upper production-bound constant for `f2` (`k3`).
    pub f2_hi: f64,
}

impl ModelParams {
    /// Reference parameter set of the numerical experiments: every
    /// coefficient 1 except `k = 1.1`, elliptic local chemicals.
    pub fn baseline(n: u32) -> Self {
        ModelParams {
            n,
            tau: 0,
            nonlocal: false,
            chi: 1.0,
            xi: 1.0,
            lambda: 1.0,
            mu: 1.0,
            c: 1.0,
            rho: 1.0,
            k: 1.1,
            gamma: 1.75,
            m1: 1.0,
            m2: 1.0,
            m3: 1.0,
            alpha: 1.0,
            beta: 1.0,
            f1_coeff: 1.0,
            f2_lo: 1.0,
            f2_hi: 1.0,
        }
    }

    /// Checks the structural invariants; every constructor path goes
    /// through here before a parameter set is used.
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Params(msg));
        if !(1..=3).contains(&self.n) {
            return err(format!("n must be 1, 2 or 3 (got {})", self.n));
        }
        if self.tau > 1 {
            return err(format!("tau must be 0 or 1 (got {})", self.tau));
        }
        if self.nonlocal && self.tau != 0 {
            return err("nonlocal model requires tau = 0".into());
        }
        let nonneg = [
            ("chi", self.chi),
            ("xi", self.xi),
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("c", self.c),
        ];
        for (name, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return err(format!("{name} must be finite and >= 0 (got {v})"));
            }
        }
        if !self.rho.is_finite() || self.rho < 1.0 {
            return err(format!("rho must be >= 1 (got {})", self.rho));
        }
        if !self.k.is_finite() || self.k < self.rho {
            return err(format!("k must be >= rho (got k={}, rho={})", self.k, self.rho));
        }
        if !self.gamma.is_finite() || self.gamma < 1.0 {
            return err(format!("gamma must be >= 1 (got {})", self.gamma));
        }
        for (name, v) in [("m1", self.m1), ("m2", self.m2), ("m3", self.m3)] {
            if !v.is_finite() {
                return err(format!("{name} must be finite (got {v})"));
            }
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !v.is_finite() || v <= 0.0 {
                return err(format!("{name} must be > 0 (got {v})"));
            }
        }
        if !(self.f2_lo > 0.0) {
            return err(format!("f2_lo (k2) must be > 0 (got {})", self.f2_lo));
        }
        if self.f1_coeff < self.f2_lo || self.f2_hi < self.f2_lo {
            return err(format!(
                "production bounds need k1, k3 >= k2 (got k1={}, k2={}, k3={})",
                self.f1_coeff, self.f2_lo, self.f2_hi
            ));
        }
        Ok(())
    }

    /// Threshold `max(1, n/(n+1)(m2+alpha), tau * n/(n+1)(m3+beta))` on
    /// the damping exponent.
    pub fn theta_cap(&self) -> f64 {
        let frac = self.n as f64 / (self.n as f64 + 1.0);
        let attraction = frac * (self.m2 + self.alpha);
        let repulsion = self.tau as f64 * frac * (self.m3 + self.beta);
        1.0f64.max(attraction).max(repulsion)
    }

    /// Threshold with both chemical terms enforced regardless of `tau`.
    pub fn theta_cap_tau1(&self) -> f64 {
        let frac = self.n as f64 / (self.n as f64 + 1.0);
        1.0f64
            .max(frac * (self.m2 + self.alpha))
            .max(frac * (self.m3 + self.beta))
    }

    /// True iff `theta_cap < gamma <= 2`, the sufficient condition for
    /// global boundedness.
    pub fn gamma_condition_satisfied(&self) -> bool {
        self.theta_cap() < self.gamma && self.gamma <= 2.0
    }

    /// Uniform-in-time bound on the total mass when `k > rho`:
    /// `max(initial_mass, (lambda/mu * |Omega|^(k-rho))^(1/(k-rho)))`.
    pub fn mass_bound(&self, initial_mass: f64, domain_volume: f64) -> Result<f64> {
        if self.k <= self.rho {
            return Err(Error::Params(format!(
                "mass bound requires k > rho (got k={}, rho={})",
                self.k, self.rho
            )));
        }
        if self.mu <= 0.0 {
            return Err(Error::Params("mass bound requires mu > 0".into()));
        }
        if initial_mass < 0.0 {
            return Err(Error::Params(format!(
                "initial mass must be >= 0 (got {initial_mass})"
            )));
        }
        if domain_volume <= 0.0 {
            return Err(Error::Params(format!(
                "domain volume must be > 0 (got {domain_volume})"
            )));
        }
        let d = self.k - self.rho;
        let equilibrium = (self.lambda / self.mu * domain_volume.powf(d)).powf(1.0 / d);
        Ok(initial_mass.max(equilibrium))
    }

    /// Default auxiliary integrability exponent for [`find_pbar`]:
    /// `max(beta, m3 + beta - 1) + 1`.
    pub fn default_q(&self) -> f64 {
        self.beta.max(self.m3 + self.beta - 1.0) + 1.0
    }

    /// Interpolation exponents at integrability level `p` with auxiliary
    /// exponent `q`.
    pub fn gn_exponents(&self, p: f64, q: f64) -> Result<GnExponents> {
        GnExponents::compute(self, p, q)
    }
}

/// The nine interpolation exponents evaluated at a given `(p, q)`.
///
/// Membership of these (and four derived products) in the open unit
/// interval is what the boundedness argument needs for all large `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnExponents {
    pub theta: f64,
    pub sigma: f64,
    pub theta_bar: f64,
    pub sigma_bar: f64,
    pub theta_hat: f64,
    pub sigma_hat: f64,
    pub theta_tilde: f64,
    pub theta_under: f64,
    pub sigma_under: f64,
    pub p: f64,
    pub q: f64,
}

impl GnExponents {
    fn compute(params: &ModelParams, p: f64, q: f64) -> Result<Self> {
        let gamma = params.gamma;
        let n = params.n as f64;
        if !(p > 1.0) {
            return Err(Error::DegenerateExponent(format!("p must be > 1 (got {p})")));
        }
        if !(q > 1.0) {
            return Err(Error::DegenerateExponent(format!("q must be > 1 (got {q})")));
        }
        let a_bar = p + params.m2 + params.alpha - 1.0;
        let a_hat = p + params.m3 + params.beta - 1.0;
        if a_bar <= 0.0 {
            return Err(Error::DegenerateExponent(format!(
                "p + m2 + alpha - 1 = {a_bar} <= 0"
            )));
        }
        if a_hat <= 0.0 {
            return Err(Error::DegenerateExponent(format!(
                "p + m3 + beta - 1 = {a_hat} <= 0"
            )));
        }
        // big = (p+gamma-1)/gamma, the shared power of the interpolated norm.
        let big = (p + gamma - 1.0) / gamma;
        let denom = big - 1.0 / gamma + 1.0 / n;
        if denom == 0.0 || big == 0.0 || params.beta == 0.0 {
            return Err(Error::DegenerateExponent(
                "zero denominator in exponent formulas".into(),
            ));
        }
        Ok(GnExponents {
            theta: (big - big / p) / denom,
            sigma: p * gamma / (p + gamma - 1.0),
            theta_bar: (big - big / a_bar) / denom,
            sigma_bar: gamma * a_bar / (p + gamma - 1.0),
            theta_hat: (big - big / a_hat) / denom,
            sigma_hat: gamma * a_hat / (p + gamma - 1.0),
            theta_tilde: (big - big / params.beta) / denom,
            theta_under: (big - big / q) / denom,
            sigma_under: gamma * (p + q) / (p + gamma - 1.0),
            p,
            q,
        })
    }

    /// The ten interval checks, in table order:
    /// `theta`, `sigma*theta/gamma`, `theta_bar`, `sigma_bar*theta_bar/gamma`,
    /// `theta_hat`, `sigma_hat*theta_hat/gamma`, `theta_tilde`,
    /// `sigma_hat*theta_tilde/gamma`, `theta_under`,
    /// `sigma_under*theta_under/gamma` — each tested against the open
    /// interval (0, 1).
    pub fn interval_checks(&self, gamma: f64) -> [bool; 10] {
        let open = |x: f64| x > 0.0 && x < 1.0;
        [
            open(self.theta),
            open(self.sigma * self.theta / gamma),
            open(self.theta_bar),
            open(self.sigma_bar * self.theta_bar / gamma),
            open(self.theta_hat),
            open(self.sigma_hat * self.theta_hat / gamma),
            open(self.theta_tilde),
            open(self.sigma_hat * self.theta_tilde / gamma),
            open(self.theta_under),
            open(self.sigma_under * self.theta_under / gamma),
        ]
    }
}

/// One boolean per interval check, in the table order of
/// [`GnExponents::interval_checks`]. The `theta_tilde` pair (entries 6
/// and 7) is reported always but only required when `beta > 1`.
pub fn verify_gn_inequalities(e: &GnExponents, params: &ModelParams) -> [bool; 10] {
    e.interval_checks(params.gamma)
}

/// Folds the ten checks into the subset the regime argument needs.
pub fn gn_required_hold(checks: &[bool; 10], beta_gt_one: bool) -> bool {
    checks
        .iter()
        .enumerate()
        .all(|(i, &ok)| ok || (!beta_gt_one && (i == 6 || i == 7)))
}

/// Grid ratio of the `p` scan.
const PBAR_GRID_RATIO: f64 = 1.1;
/// First grid point of the `p` scan.
const PBAR_GRID_START: f64 = 2.0;
/// Number of additional grid points on which the inequalities must keep
/// holding before a candidate is accepted.
const PBAR_STABILITY_WINDOW: usize = 10;

/// Scans the geometric grid `{2, 2r, 2r^2, ...}` (r = 1.1) for the
/// smallest `p <= p_max` at which every required interval check holds
/// and keeps holding on the next [`PBAR_STABILITY_WINDOW`] grid points.
///
/// No precondition is enforced; this is the raw scan used both by
/// [`find_pbar`] and as an independent falsification probe.
pub fn scan_pbar(params: &ModelParams, q: f64, p_max: f64) -> Option<f64> {
    let beta_gt_one = params.beta > 1.0;
    let holds = |p: f64| -> bool {
        params
            .gn_exponents(p, q)
            .map(|e| gn_required_hold(&e.interval_checks(params.gamma), beta_gt_one))
            .unwrap_or(false)
    };
    let mut p = PBAR_GRID_START;
    while p <= p_max {
        if holds(p) {
            let stable = (1..=PBAR_STABILITY_WINDOW)
                .all(|j| holds(p * PBAR_GRID_RATIO.powi(j as i32)));
            if stable {
                return Some(p);
            }
        }
        p *= PBAR_GRID_RATIO;
    }
    None
}

/// Finds the integrability threshold `pbar > 1` past which all required
/// interval checks hold, by grid scan up to `p_max`.
///
/// Requires the boundedness condition with both chemical terms enforced
/// (`theta_cap_tau1 < gamma <= 2`) and, when `beta > 1`,
/// `q > max(beta, m3 + beta - 1)`. Returns `Ok(None)` if the scan
/// exhausts `p_max` without a stable candidate.
pub fn find_pbar(params: &ModelParams, q: f64, p_max: f64) -> Result<Option<f64>> {
    let cap = params.theta_cap_tau1();
    if !(cap < params.gamma && params.gamma <= 2.0) {
        return Err(Error::PreconditionViolated(format!(
            "need theta_cap < gamma <= 2 with both chemical terms (theta_cap={cap}, gamma={})",
            params.gamma
        )));
    }
    if !(q > 1.0) {
        return Err(Error::PreconditionViolated(format!("q must be > 1 (got {q})")));
    }
    if params.beta > 1.0 && q <= params.beta.max(params.m3 + params.beta - 1.0) {
        return Err(Error::PreconditionViolated(format!(
            "q must exceed max(beta, m3+beta-1) = {} when beta > 1 (got q={q})",
            params.beta.max(params.m3 + params.beta - 1.0)
        )));
    }
    Ok(scan_pbar(params, q, p_max))
}

/// Closed-form regime evaluation for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    /// The damping-exponent threshold.
    pub theta_cap: f64,
    /// Whether `theta_cap < gamma <= 2` holds.
    pub gamma_ok: bool,
    /// Mass bound, when `k > rho`, `mu > 0` and an initial mass is known.
    pub mass_bound: Option<f64>,
    /// Human-readable condition evaluations.
    pub notes: Vec<String>,
}

impl RegimeReport {
    /// Evaluates the boundedness regime of `params`. `initial_mass` and
    /// `domain_volume`, when available, enable the mass bound.
    pub fn evaluate(
        params: &ModelParams,
        initial_mass: Option<f64>,
        domain_volume: Option<f64>,
    ) -> Self {
        let theta_cap = params.theta_cap();
        let gamma_ok = params.gamma_condition_satisfied();
        let mut notes = Vec::new();
        notes.push(format!(
            "model: {} chemicals, tau={}",
            if params.nonlocal { "nonlocal zero-mean" } else { "local" },
            params.tau
        ));
        notes.push(format!(
            "damping condition: theta_cap={theta_cap:.6} {} gamma={} <= 2 is {}",
            if theta_cap < params.gamma { "<" } else { ">=" },
            params.gamma,
            if gamma_ok { "satisfied" } else { "violated" },
        ));
        if gamma_ok {
            notes.push("global boundedness guaranteed for any c > 0".into());
        } else if params.gamma > 2.0 {
            notes.push("gamma exceeds 2: boundedness criterion not applicable".into());
        } else {
            notes.push("boundedness not guaranteed: collapse may occur for small c".into());
        }
        let mass_bound = match (initial_mass, domain_volume) {
            (Some(m0), Some(vol)) => match params.mass_bound(m0, vol) {
                Ok(mb) => {
                    notes.push(format!(
                        "k={} > rho={}: mass uniformly bounded by {mb:.6}",
                        params.k, params.rho
                    ));
                    Some(mb)
                }
                Err(e) => {
                    notes.push(format!("mass bound unavailable: {e}"));
                    None
                }
            },
            _ => {
                notes.push("mass bound needs an initial mass and domain volume".into());
                None
            }
        };
        RegimeReport {
            theta_cap,
            gamma_ok,
            mass_bound,
            notes,
        }
    }

    /// Flat `key = value` block, one entry per line.
    pub fn to_key_value_block(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("theta_cap = {}\n", self.theta_cap));
        out.push_str(&format!("gamma_ok = {}\n", self.gamma_ok));
        match self.mass_bound {
            Some(mb) => out.push_str(&format!("mass_bound = {mb}\n")),
            None => out.push_str("mass_bound = none\n"),
        }
        for (i, note) in self.notes.iter().enumerate() {
            out.push_str(&format!("note_{i} = {note}\n"));
        }
        out
    }

    pub fn csv_header() -> &'static str {
        "theta_cap,gamma_ok,mass_bound"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{}",
            self.theta_cap,
            self.gamma_ok,
            self.mass_bound.map_or(String::from(""), |m| m.to_string())
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params_3d_fig1() -> ModelParams {
        let mut p = ModelParams::baseline(3);
        p.chi = 5.0;
        p.xi = 0.0;
        p.c = 0.0;
        p
    }

    #[test]
    fn theta_cap_matches_stated_bounds() {
        // n=3, m2=1, alpha=1, tau=0 -> 1.5
        let p = params_3d_fig1();
        assert_relative_eq!(p.theta_cap(), 1.5, epsilon = 1e-12);

        // n=2, m2=1, alpha=1.5, tau=0 -> 5/3
        let mut p2 = ModelParams::baseline(2);
        p2.alpha = 1.5;
        assert_relative_eq!(p2.theta_cap(), 5.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn theta_cap_tau_zero_drops_repulsion_term() {
        let mut p = ModelParams::baseline(2);
        p.tau = 0;
        p.m3 = 50.0;
        p.beta = 10.0;
        // The repulsion term is multiplied by tau and contributes nothing.
        assert_relative_eq!(p.theta_cap(), 2.0 / 3.0 * (p.m2 + p.alpha), epsilon = 1e-12);
    }

    #[test]
    fn theta_cap_floor_is_one() {
        let mut p = ModelParams::baseline(1);
        p.m2 = 0.5;
        p.alpha = 0.5; // m2 + alpha = 1, n/(n+1) = 1/2
        assert_relative_eq!(p.theta_cap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gamma_condition_boundaries() {
        let mut p = params_3d_fig1();
        p.gamma = 1.75;
        assert!(p.gamma_condition_satisfied());
        p.gamma = 1.4;
        assert!(!p.gamma_condition_satisfied());
        p.gamma = 2.0;
        assert!(p.gamma_condition_satisfied());
        p.gamma = 2.5;
        assert!(!p.gamma_condition_satisfied());
    }

    #[test]
    fn mass_bound_examples() {
        // lambda = mu = 1, |Omega| = 1: the equilibrium term is 1.
        let p = ModelParams::baseline(2);
        assert_relative_eq!(p.mass_bound(2.0, 1.0).unwrap(), 2.0, epsilon = 1e-12);

        // lambda = mu = 1, |Omega| = pi, k = 1.1, rho = 1:
        // (pi^0.1)^10 = pi.
        let mut p = ModelParams::baseline(2);
        p.k = 1.1;
        p.rho = 1.0;
        assert_relative_eq!(
            p.mass_bound(0.0, std::f64::consts::PI).unwrap(),
            std::f64::consts::PI,
            epsilon = 1e-12
        );

        // lambda=2, mu=1, |Omega|=1, k=2, rho=1 -> 2.
        let mut p = ModelParams::baseline(2);
        p.lambda = 2.0;
        p.k = 2.0;
        assert_relative_eq!(p.mass_bound(0.0, 1.0).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn mass_bound_rejects_k_equal_rho() {
        let mut p = ModelParams::baseline(2);
        p.k = 1.0;
        p.rho = 1.0;
        assert!(p.mass_bound(1.0, 1.0).is_err());
    }

    #[test]
    fn mass_bound_equals_one_when_lambda_eq_mu_unit_volume() {
        for k in [1.05, 1.5, 2.0, 3.0] {
            let mut p = ModelParams::baseline(2);
            p.k = k;
            assert_relative_eq!(p.mass_bound(0.0, 1.0).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gn_exponents_hand_evaluated_point() {
        // p=2, gamma=2, n=2: big = 3/2, denom = 3/2 - 1/2 + 1/2 = 3/2,
        // theta = (3/2 - 3/4)/(3/2) = 1/2, sigma = 4/3, sigma*theta/gamma = 1/3.
        let mut p = ModelParams::baseline(2);
        p.gamma = 2.0;
        let e = p.gn_exponents(2.0, 2.0).unwrap();
        assert_relative_eq!(e.theta, 0.5, epsilon = 1e-15);
        assert_relative_eq!(e.sigma, 4.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(e.sigma * e.theta / p.gamma, 1.0 / 3.0, epsilon = 1e-15);

        let checks = verify_gn_inequalities(&e, &p);
        assert!(checks[0] && checks[1]);
    }

    #[test]
    fn gn_exponents_large_p_limits() {
        let mut p = ModelParams::baseline(2);
        p.gamma = 1.75;
        for q in [2.0, 5.0, 10.0] {
            let e = p.gn_exponents(1e8, q).unwrap();
            assert!((e.theta - 1.0).abs() < 1e-6);
            assert!((e.theta_under - (1.0 - 1.0 / q)).abs() < 1e-6);
        }
        // beta > 1: theta_tilde tends to 1 - 1/beta.
        let mut pb = p;
        pb.beta = 2.0;
        let e = pb.gn_exponents(1e8, 4.0).unwrap();
        assert!((e.theta_tilde - 0.5).abs() < 1e-6);
    }

    #[test]
    fn interval_checks_are_open_intervals() {
        let p = ModelParams::baseline(2);
        let mut e = p.gn_exponents(2.0, 2.0).unwrap();
        e.theta = 1.0;
        assert!(!e.interval_checks(p.gamma)[0]);
        e.theta = 0.0;
        assert!(!e.interval_checks(p.gamma)[0]);
    }

    #[test]
    fn gn_exponents_degenerate_argument_rejected() {
        let mut p = ModelParams::baseline(2);
        p.m2 = -3.0;
        // p + m2 + alpha - 1 = 2 - 3 + 1 - 1 = -1 <= 0.
        assert!(matches!(
            p.gn_exponents(2.0, 2.0),
            Err(Error::DegenerateExponent(_))
        ));
        let p2 = ModelParams::baseline(2);
        assert!(p2.gn_exponents(0.5, 2.0).is_err());
        assert!(p2.gn_exponents(2.0, 1.0).is_err());
    }

    #[test]
    fn gamma_below_threshold_breaks_sigma_bar_check_for_large_p() {
        // gamma = 1.2 < (2/3)(m2+alpha) = 4/3 with tau=1 semantics: the
        // attraction product must fail (exceed 1) for all large p.
        let mut p = ModelParams::baseline(2);
        p.tau = 1;
        p.gamma = 1.2;
        for exp in 1..=6 {
            let pp = 10f64.powi(exp);
            let e = p.gn_exponents(pp, 2.0).unwrap();
            assert!(
                e.sigma_bar * e.theta_bar / p.gamma >= 1.0,
                "expected failure at p = {pp}"
            );
        }
    }

    #[test]
    fn find_pbar_succeeds_in_regime() {
        // n=2, gamma=2, m2=m3=0, alpha=beta=1, q=2: threshold is 1 < 2.
        let mut p = ModelParams::baseline(2);
        p.gamma = 2.0;
        p.m2 = 0.0;
        p.m3 = 0.0;
        let pbar = find_pbar(&p, 2.0, 1e6).unwrap().expect("pbar should exist");
        assert!(pbar > 1.0);
        // Stability: the checks keep holding well past the threshold.
        for factor in [2.0, 10.0] {
            let e = p.gn_exponents(factor * pbar, 2.0).unwrap();
            assert!(gn_required_hold(&e.interval_checks(p.gamma), p.beta > 1.0));
        }
    }

    #[test]
    fn find_pbar_rejects_gamma_outside_regime() {
        let mut p = ModelParams::baseline(2);
        p.gamma = 1.2; // below (2/3)(m2+alpha) = 4/3
        assert!(matches!(
            find_pbar(&p, 2.0, 1e6),
            Err(Error::PreconditionViolated(_))
        ));
        // The raw scan (independent probe) confirms no grid point works.
        assert_eq!(scan_pbar(&p, 2.0, 1e6), None);
    }

    #[test]
    fn validate_catches_structural_mistakes() {
        let mut p = ModelParams::baseline(2);
        assert!(p.validate().is_ok());
        p.k = 0.5;
        assert!(p.validate().is_err());
        p = ModelParams::baseline(2);
        p.tau = 1;
        p.nonlocal = true;
        assert!(p.validate().is_err());
        p = ModelParams::baseline(2);
        p.alpha = 0.0;
        assert!(p.validate().is_err());
        p = ModelParams::baseline(4);
        assert!(p.validate().is_err());
    }

    #[test]
    fn regime_report_shapes() {
        let mut p = params_3d_fig1();
        p.gamma = 1.75;
        p.c = 1e-3;
        let r = RegimeReport::evaluate(&p, Some(42.0), Some(4.19));
        assert!(r.gamma_ok);
        assert_eq!(r.gamma_ok, r.theta_cap < p.gamma && p.gamma <= 2.0);
        assert!(r.mass_bound.is_some());
        let block = r.to_key_value_block();
        assert!(block.contains("theta_cap = 1.5"));
        assert!(block.contains("gamma_ok = true"));
    }

    proptest! {
        #[test]
        fn theta_cap_monotone_in_each_argument(
            m2 in -1.0f64..2.0,
            alpha in 0.1f64..2.0,
            m3 in -1.0f64..2.0,
            beta in 0.1f64..2.0,
            bump in 0.0f64..1.0,
        ) {
            let mut p = ModelParams::baseline(2);
            p.tau = 1;
            p.m2 = m2;
            p.alpha = alpha;
            p.m3 = m3;
            p.beta = beta;
            let base = p.theta_cap();
            for field in 0..5 {
                let mut q = p;
                match field {
                    0 => q.m2 += bump,
                    1 => q.alpha += bump,
                    2 => q.m3 += bump,
                    3 => q.beta += bump,
                    _ => q.n = 3,
                }
                prop_assert!(q.theta_cap() >= base - 1e-15);
            }
        }

        #[test]
        fn mass_bound_at_least_initial_mass(
            m0 in 0.0f64..100.0,
            vol in 0.01f64..50.0,
            k in 1.01f64..3.0,
        ) {
            let mut p = ModelParams::baseline(2);
            p.k = k;
            let mb = p.mass_bound(m0, vol).unwrap();
            prop_assert!(mb >= m0);
        }
    }
}
