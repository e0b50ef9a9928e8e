//! The two controller families: the classical Nussbaum-gain law and the
//! nonlinear PI law u = κ(z)y with z = ½y² + λ∫y².

use thiserror::Error;

use crate::certify::zk;
use crate::gains::GainSpec;
use crate::plant::{PlantConfig, PlantKind};
use crate::sim::Trajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("lambda must be positive and finite for a nonlinear PI controller (got {0})")]
    BadLambda(f64),
    #[error("the z-derivative bound only applies to unperturbed plants")]
    PerturbedPlant,
    #[error("gain {0:?} has no alpha0 cos(z) decomposition")]
    NoEnvelope(String),
    #[error("the z-derivative bound applies to nonlinear PI runs only")]
    NotPi,
}

#[derive(Debug, Clone)]
pub enum ControllerConfig {
    /// u = ζ²cos(ζ)y, ζ̇ = y².
    NussbaumGain { zeta0: f64 },
    NonlinearPi { lambda: f64, gain: GainSpec },
}

impl ControllerConfig {
    pub fn nussbaum_gain() -> Self {
        Self::NussbaumGain { zeta0: 0.0 }
    }

    pub fn nonlinear_pi(lambda: f64, gain: GainSpec) -> Result<Self, ControlError> {
        let c = Self::NonlinearPi { lambda, gain };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        match self {
            Self::NonlinearPi { lambda, .. } if !(*lambda > 0.0 && lambda.is_finite()) => {
                Err(ControlError::BadLambda(*lambda))
            }
            _ => Ok(()),
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            Self::NonlinearPi { lambda, .. } => Some(*lambda),
            Self::NussbaumGain { .. } => None,
        }
    }

    pub fn gain(&self) -> Option<&GainSpec> {
        match self {
            Self::NonlinearPi { gain, .. } => Some(gain),
            Self::NussbaumGain { .. } => None,
        }
    }

    /// Short label used in file names and tables.
    pub fn label(&self) -> String {
        match self {
            Self::NussbaumGain { .. } => "ng".to_string(),
            Self::NonlinearPi { gain, .. } => format!("npi_{}", gain.id()),
        }
    }
}

/// Returns (u, ζ̇).
pub fn ng_control(y: f64, zeta: f64) -> (f64, f64) {
    (zeta * zeta * zeta.cos() * y, y * y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiOutput {
    pub u: f64,
    pub z: f64,
    pub dq: f64,
}

/// PI square error z = ½y² + λq.
pub fn pi_error(y: f64, q: f64, lambda: f64) -> f64 {
    0.5 * y * y + lambda * q
}

pub fn npi_control(y: f64, q: f64, lambda: f64, gain: &GainSpec) -> PiOutput {
    let z = pi_error(y, q, lambda);
    PiOutput {
        u: gain.eval(z) * y,
        z,
        dq: y * y,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZDotCheck {
    pub ok: bool,
    /// Number of samples found near some z_k.
    pub crossings: usize,
    /// Largest value of (ż − bound) seen at those samples.
    pub worst_excess: f64,
}

/// Verifies ż ≤ [max(|α1|,|α2|) + λ − |b|α0(2kπ)]y² at samples where z is
/// within `z_tol` of some z_k, using central differences of the sampled z.
pub fn z_dot_bound_check(
    tr: &Trajectory,
    lambda: f64,
    gain: &GainSpec,
    plant: &PlantConfig,
    z_tol: f64,
    slack: f64,
) -> Result<ZDotCheck, ControlError> {
    if plant.kind != PlantKind::Unperturbed {
        return Err(ControlError::PerturbedPlant);
    }
    if !gain.has_envelope() {
        return Err(ControlError::NoEnvelope(gain.id().to_string()));
    }
    if !tr.has_q() {
        return Err(ControlError::NotPi);
    }
    let amax = plant.f.alpha1().abs().max(plant.f.alpha2().abs());
    let b = plant.b;
    let mut crossings = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    let s = &tr.samples;
    for i in 1..s.len().saturating_sub(1) {
        let z = s[i].w;
        if z < 0.0 {
            continue;
        }
        // nearest k with z_k close to z; z_k spacing is 2π
        let shift = if b > 0.0 { 1.0 } else { 0.0 };
        let k = ((z / (std::f64::consts::PI / 2.0) - 1.0 - shift) / 4.0).round();
        if k < 0.0 {
            continue;
        }
        let k = k as u64;
        if (z - zk(k, b)).abs() > z_tol {
            continue;
        }
        crossings += 1;
        let alpha0 = gain.envelope(2.0 * k as f64 * std::f64::consts::PI).unwrap();
        let y = s[i].y;
        let bound = (amax + lambda - b.abs() * alpha0) * y * y;
        let zdot = (s[i + 1].w - s[i - 1].w) / (s[i + 1].t - s[i - 1].t);
        let excess = zdot - bound;
        worst = worst.max(excess);
        if excess > slack * (1.0 + bound.abs()) {
            ok = false;
        }
    }
    Ok(ZDotCheck {
        ok,
        crossings,
        worst_excess: worst,
    })
}
