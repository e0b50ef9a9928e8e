//! Closed-loop simulation, the S(t) monitor and outcome classification.

use std::fmt;

use thiserror::Error;

use crate::certify::{k0_bound, k_prime, select_c, zk, CertifyError};
use crate::control::{ng_control, npi_control, pi_error, z_dot_bound_check, ControlError, ControllerConfig, ZDotCheck};
use crate::gains::{GainError, GainSpec};
use crate::ode::rk4_step;
use crate::plant::{PlantConfig, PlantKind};

pub const DEFAULT_GUARD: f64 = 1e6;
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Gain(#[from] GainError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("the S monitor needs a perturbed plant under nonlinear PI control")]
    NoSFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Monitors {
    pub s_monitor: bool,
    pub z_bound_monitor: bool,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub plant: PlantConfig,
    pub controller: ControllerConfig,
    /// Ignored for unperturbed plants, whose x column stays 0.
    pub x0: f64,
    pub y0: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Record every `sample_stride`-th step.
    pub sample_stride: usize,
    pub divergence_guard: f64,
    pub monitors: Monitors,
}

impl Scenario {
    pub fn new(id: impl Into<String>, plant: PlantConfig, controller: ControllerConfig, x0: f64, y0: f64) -> Self {
        Self {
            id: id.into(),
            plant,
            controller,
            x0,
            y0,
            t_end: 50.0,
            dt: 1e-3,
            sample_stride: 1,
            divergence_guard: DEFAULT_GUARD,
            monitors: Monitors::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Invalid(m.to_string()));
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive");
        }
        if !(self.dt > 0.0 && self.dt <= self.t_end / 100.0) {
            return bad("dt must be positive and at most t_end / 100");
        }
        if !(self.x0.is_finite() && self.y0.is_finite()) {
            return bad("initial conditions must be finite");
        }
        if self.sample_stride == 0 {
            return bad("sample_stride must be at least 1");
        }
        if !(self.divergence_guard > 0.0) {
            return bad("divergence_guard must be positive");
        }
        if (self.t_end / self.dt).round() > 1e9 {
            return bad("too many steps");
        }
        self.plant.validate().map_err(|e| SimError::Invalid(e.to_string()))?;
        self.controller.validate()?;
        Ok(())
    }

    /// Number of RK4 steps; the effective step is `t_end / steps`.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }

    fn is_pi(&self) -> bool {
        matches!(self.controller, ControllerConfig::NonlinearPi { .. })
    }

    fn initial_state(&self) -> [f64; 3] {
        let x0 = match self.plant.kind {
            PlantKind::Perturbed => self.x0,
            PlantKind::Unperturbed => 0.0,
        };
        let w0 = match &self.controller {
            ControllerConfig::NussbaumGain { zeta0 } => *zeta0,
            ControllerConfig::NonlinearPi { .. } => 0.0,
        };
        [x0, self.y0, w0]
    }

    /// Control input and the controller's scheduling variable (z or ζ).
    fn control(&self, s: &[f64; 3]) -> (f64, f64) {
        match &self.controller {
            ControllerConfig::NussbaumGain { .. } => (ng_control(s[1], s[2]).0, s[2]),
            ControllerConfig::NonlinearPi { lambda, gain } => {
                let out = npi_control(s[1], s[2], *lambda, gain);
                (out.u, out.z)
            }
        }
    }

    /// Closed-loop right-hand side on the state (x, y, q) or (x, y, ζ).
    fn rhs(&self, s: &[f64; 3]) -> [f64; 3] {
        let (u, _) = self.control(s);
        let (dx, dy) = self.plant.rates(s[0], s[1], u);
        [dx, dy, s[1] * s[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    /// z for nonlinear PI runs, ζ for Nussbaum-gain runs.
    pub w: f64,
    pub u: f64,
    /// ∫₀ᵗy², nonlinear PI runs only.
    pub q: Option<f64>,
    /// S(t), filled in by the S monitor.
    pub s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Time at which the divergence guard tripped.
    pub guard_tripped_at: Option<f64>,
    pub t_end: f64,
    /// Raw integrator state at the last completed step.
    pub final_state: [f64; 3],
}

impl Trajectory {
    pub fn diverged(&self) -> bool {
        self.guard_tripped_at.is_some()
    }

    pub fn has_s(&self) -> bool {
        self.samples.first().is_some_and(|s| s.s.is_some())
    }

    pub fn has_q(&self) -> bool {
        self.samples.first().is_some_and(|s| s.q.is_some())
    }
}

fn integrate(sc: &Scenario, steps: usize, record: bool) -> Trajectory {
    let h = sc.t_end / steps as f64;
    let pi = sc.is_pi();
    let mut state = sc.initial_state();
    let mut samples = Vec::new();
    let sample = |i: usize, s: &[f64; 3]| {
        let (u, w) = sc.control(s);
        Sample {
            t: if i == steps { sc.t_end } else { h * i as f64 },
            x: s[0],
            y: s[1],
            w,
            u,
            q: pi.then_some(s[2]),
            s: None,
        }
    };
    if record {
        samples.reserve(steps / sc.sample_stride + 2);
        samples.push(sample(0, &state));
    }
    let f = |s: &[f64; 3]| sc.rhs(s);
    let mut guard_tripped_at = None;
    for i in 1..=steps {
        let next = rk4_step(&f, &state, h);
        let blown = next.iter().any(|v| !v.is_finite() || v.abs() > sc.divergence_guard);
        if blown {
            guard_tripped_at = Some(h * i as f64);
            if record && next.iter().all(|v| v.is_finite()) {
                samples.push(sample(i, &next));
            }
            break;
        }
        state = next;
        if record && (i % sc.sample_stride == 0 || i == steps) {
            samples.push(sample(i, &state));
        }
    }
    Trajectory {
        samples,
        guard_tripped_at,
        t_end: sc.t_end,
        final_state: state,
    }
}

/// Integrates the closed loop with fixed-step RK4.
pub fn simulate(sc: &Scenario) -> Result<Trajectory, SimError> {
    sc.validate()?;
    Ok(integrate(sc, sc.steps(), true))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalvingCheck {
    pub ok: bool,
    /// max-norm difference of the final states.
    pub difference: f64,
    pub tolerance: f64,
}

/// Reruns at half the step and compares the states at t_end. Returns `None`
/// when either run diverged.
pub fn step_halving_check(sc: &Scenario, rel_tol: f64) -> Result<Option<HalvingCheck>, SimError> {
    sc.validate()?;
    let n = sc.steps();
    let coarse = integrate(sc, n, false);
    let fine = integrate(sc, 2 * n, false);
    if coarse.diverged() || fine.diverged() {
        return Ok(None);
    }
    let a = coarse.final_state;
    let b = fine.final_state;
    let difference = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let norm = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tolerance = rel_tol * (1.0 + norm);
    Ok(Some(HalvingCheck {
        ok: difference <= tolerance,
        difference,
        tolerance,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Converged,
    BoundedNotConverged,
    Diverged,
    /// Not diverged, but the step-halving rerun disagrees: the fixed step
    /// does not resolve the trajectory, so no claim about its limit is made.
    Unresolved,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::BoundedNotConverged => "bounded_not_converged",
            Self::Diverged => "diverged",
            Self::Unresolved => "unresolved",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub verdict: Verdict,
    pub sup_abs_y: f64,
    /// max(|x|, |y|) over samples in the last 10% of the horizon.
    pub tail_max: f64,
}

pub fn detect_outcome(tr: &Trajectory, tol: f64) -> Outcome {
    let sup_abs_y = tr.samples.iter().map(|s| s.y.abs()).fold(0.0, f64::max);
    let cutoff = 0.9 * tr.t_end;
    let tail_max = tr
        .samples
        .iter()
        .filter(|s| s.t >= cutoff)
        .map(|s| s.x.abs().max(s.y.abs()))
        .fold(f64::NAN, f64::max);
    let tail_max = if tr.diverged() { f64::INFINITY } else { tail_max };
    let verdict = if tr.diverged() {
        Verdict::Diverged
    } else if tail_max < tol {
        Verdict::Converged
    } else {
        Verdict::BoundedNotConverged
    };
    Outcome {
        verdict,
        sup_abs_y,
        tail_max,
    }
}

/// Parameters of the S function.
#[derive(Debug, Clone)]
pub struct SParams<'a> {
    pub epsilon: f64,
    pub lambda: f64,
    pub b: f64,
    pub c: f64,
    pub gain: &'a GainSpec,
}

impl SParams<'_> {
    /// (λ/2)x² + ½M(1−ελ)(x−y)², the quadratic part of S.
    pub fn quadratic(&self, x: f64, y: f64) -> f64 {
        let m = 1.0 / self.epsilon;
        0.5 * self.lambda * x * x + 0.5 * m * (1.0 - self.epsilon * self.lambda) * (x - y).powi(2)
    }

    pub fn eval(&self, x: f64, y: f64, z: f64) -> Result<f64, GainError> {
        Ok(self.quadratic(x, y) + self.epsilon * self.c * z - self.b * self.gain.integral(z)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SSeries {
    pub values: Vec<f64>,
    /// max over i of (S(t_{i+1}) − S(t_i)) / Δt.
    pub max_forward_difference: f64,
    pub max_abs: f64,
    /// Largest violation of λx² + M(1−ελ)(x−y)² ≤ 2S(0) − 2εcz + 2b∫κ.
    pub max_bound_excess: f64,
}

impl SSeries {
    pub fn nonincreasing(&self, rel_tol: f64) -> bool {
        self.max_forward_difference <= rel_tol * self.max_abs
    }

    /// The integrated bound, up to rounding in the evaluation of S.
    pub fn bound_holds(&self) -> bool {
        self.max_bound_excess <= 1e-9 * (1.0 + self.max_abs)
    }
}

pub fn s_series(tr: &Trajectory, p: &SParams<'_>) -> Result<SSeries, GainError> {
    let mut values = Vec::with_capacity(tr.samples.len());
    for s in &tr.samples {
        values.push(p.eval(s.x, s.y, s.w)?);
    }
    let mut max_fd = f64::NEG_INFINITY;
    for (pair, v) in tr.samples.windows(2).zip(values.windows(2)) {
        let dt = pair[1].t - pair[0].t;
        if dt > 0.0 {
            max_fd = max_fd.max((v[1] - v[0]) / dt);
        }
    }
    let max_abs = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let s0 = values.first().copied().unwrap_or(0.0);
    let mut max_excess = f64::NEG_INFINITY;
    for (s, v) in tr.samples.iter().zip(&values) {
        let lhs = 2.0 * p.quadratic(s.x, s.y);
        // v − quadratic = εcz − b∫κ
        let rhs = 2.0 * s0 - 2.0 * (v - p.quadratic(s.x, s.y));
        max_excess = max_excess.max(lhs - rhs);
    }
    Ok(SSeries {
        values,
        max_forward_difference: if max_fd.is_finite() { max_fd } else { 0.0 },
        max_abs,
        max_bound_excess: if max_excess.is_finite() { max_excess } else { 0.0 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZBoundCheck {
    pub k_prime: u64,
    pub z_bound: f64,
    pub z_max: f64,
    pub ok: bool,
}

/// z(t) ≤ z_{k'} for unperturbed nonlinear PI runs with a cos-template gain.
pub fn unperturbed_z_bound(tr: &Trajectory, sc: &Scenario) -> Result<ZBoundCheck, SimError> {
    let (lambda, gain) = match &sc.controller {
        ControllerConfig::NonlinearPi { lambda, gain } => (*lambda, gain),
        ControllerConfig::NussbaumGain { .. } => return Err(ControlError::NotPi.into()),
    };
    if sc.plant.kind != PlantKind::Unperturbed {
        return Err(ControlError::PerturbedPlant.into());
    }
    let k0 = k0_bound(gain, sc.plant.b, sc.plant.f.alpha1(), sc.plant.f.alpha2(), lambda)?;
    let kp = k_prime(k0, sc.y0);
    let z_bound = zk(kp, sc.plant.b);
    let z_max = tr.samples.iter().map(|s| s.w).fold(f64::NEG_INFINITY, f64::max);
    Ok(ZBoundCheck {
        k_prime: kp,
        z_bound,
        z_max,
        ok: z_max <= z_bound,
    })
}

/// Everything a single scenario run produces.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub trajectory: Trajectory,
    /// Final verdict; `Unresolved` when step halving fails.
    pub outcome: Outcome,
    /// Classification of the dt trajectory alone, before the halving check.
    pub raw_verdict: Verdict,
    pub halving: Option<HalvingCheck>,
    pub s_monitor: Option<(f64, SSeries)>,
    pub z_bound: Option<(ZBoundCheck, ZDotCheck)>,
}

/// Relative tolerance for the step-halving comparison.
pub const HALVING_TOL: f64 = 1e-6;
/// Forward differences of S may not exceed this fraction of max|S|.
pub const S_MONITOR_TOL: f64 = 1e-3;

/// Simulates, classifies and runs whichever monitors the scenario enables.
/// The S monitor uses c from [`select_c`] with ε0 = 0.5.
pub fn run_scenario(sc: &Scenario) -> Result<RunReport, SimError> {
    let mut trajectory = simulate(sc)?;
    let mut outcome = detect_outcome(&trajectory, DEFAULT_CONVERGENCE_TOL);
    let raw_verdict = outcome.verdict;
    let halving = if trajectory.diverged() {
        None
    } else {
        step_halving_check(sc, HALVING_TOL)?
    };
    match halving {
        Some(h) if !h.ok => outcome.verdict = Verdict::Unresolved,
        // the half-step rerun tripped the guard while the dt run did not
        None if !trajectory.diverged() => outcome.verdict = Verdict::Unresolved,
        _ => {}
    }
    let s_monitor = if sc.monitors.s_monitor {
        let (lambda, gain) = match (&sc.controller, sc.plant.kind) {
            (ControllerConfig::NonlinearPi { lambda, gain }, PlantKind::Perturbed) => (*lambda, gain),
            _ => return Err(SimError::NoSFunction),
        };
        let f = &sc.plant.f;
        let c = select_c(sc.plant.epsilon, lambda, f.alpha1(), f.alpha2(), 0.5)?;
        let params = SParams {
            epsilon: sc.plant.epsilon,
            lambda,
            b: sc.plant.b,
            c,
            gain,
        };
        let series = s_series(&trajectory, &params)?;
        for (s, v) in trajectory.samples.iter_mut().zip(&series.values) {
            s.s = Some(*v);
        }
        Some((c, series))
    } else {
        None
    };
    let z_bound = if sc.monitors.z_bound_monitor {
        let bound = unperturbed_z_bound(&trajectory, sc)?;
        let (lambda, gain) = (sc.controller.lambda().unwrap(), sc.controller.gain().unwrap());
        let zdot = z_dot_bound_check(&trajectory, lambda, gain, &sc.plant, 0.05, 1e-3)?;
        Some((bound, zdot))
    } else {
        None
    };
    Ok(RunReport {
        trajectory,
        outcome,
        raw_verdict,
        halving,
        s_monitor,
        z_bound,
    })
}

/// Checks z = ½y² + λq sample by sample; returns the worst relative error.
pub fn z_identity_error(tr: &Trajectory, lambda: f64) -> f64 {
    tr.samples
        .iter()
        .filter_map(|s| s.q.map(|q| (s.w, pi_error(s.y, q, lambda))))
        .map(|(z, want)| (z - want).abs() / (1.0 + want.abs()))
        .fold(0.0, f64::max)
}
