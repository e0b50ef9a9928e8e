//! PI gain functions κ(z), their integrals, and a finite-horizon scan for the
//! Nussbaum property.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{self, ParseError, PolyTrig};
use crate::quadrature::{adaptive_simpson, QuadratureConfig, QuadratureError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainClass {
    Nussbaum,
    Relaxed,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GainError {
    #[error("integral of gain {id:?} up to z = {z}: {source}")]
    Quadrature {
        id: String,
        z: f64,
        #[source]
        source: QuadratureError,
    },
    #[error("unknown gain {0:?}")]
    Unknown(String),
    #[error("bad gain expression: {0}")]
    Parse(#[from] ParseError),
    #[error("scan needs z_max > 0 and samples >= 100 (got z_max = {z_max}, samples = {samples})")]
    ScanArgs { z_max: f64, samples: usize },
}

#[derive(Clone)]
enum Kind {
    ZCosZ,
    Z2CosZ,
    Z2SinZ,
    Expr(PolyTrig),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A nonlinear PI gain κ(z).
///
/// Built-in gains carry exact antiderivatives. Gains parsed from an
/// expression, or wrapped from a closure, are integrated numerically.
#[derive(Clone)]
pub struct GainSpec {
    id: String,
    kind: Kind,
    claimed_class: GainClass,
}

impl fmt::Debug for GainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GainSpec")
            .field("id", &self.id)
            .field("claimed_class", &self.claimed_class)
            .finish()
    }
}

/// Ids accepted by [`GainSpec::builtin`].
pub const BUILTIN_IDS: [&str; 4] = ["z_cos_z", "z2_cos_z", "z2_sin_z", "zeta2_cos_zeta"];

impl GainSpec {
    pub fn builtin(id: &str) -> Option<Self> {
        let (kind, claimed_class) = match id {
            // integral z sin z + cos z - 1 is unbounded both ways, its average is not
            "z_cos_z" => (Kind::ZCosZ, GainClass::Relaxed),
            "z2_cos_z" | "zeta2_cos_zeta" => (Kind::Z2CosZ, GainClass::Nussbaum),
            "z2_sin_z" => (Kind::Z2SinZ, GainClass::Nussbaum),
            _ => return None,
        };
        Some(Self {
            id: id.to_string(),
            kind,
            claimed_class,
        })
    }

    pub fn z_cos_z() -> Self {
        Self::builtin("z_cos_z").unwrap()
    }

    pub fn z2_cos_z() -> Self {
        Self::builtin("z2_cos_z").unwrap()
    }

    pub fn z2_sin_z() -> Self {
        Self::builtin("z2_sin_z").unwrap()
    }

    /// Gain from the coefficient-list grammar in [`crate::expr`].
    pub fn from_expr(src: &str) -> Result<Self, GainError> {
        let parsed = expr::parse_gain_expr(src)?;
        Ok(Self {
            id: parsed.render(),
            kind: Kind::Expr(parsed),
            claimed_class: GainClass::Neither,
        })
    }

    /// Resolves a built-in id, falling back to the expression grammar.
    pub fn parse(src: &str) -> Result<Self, GainError> {
        let trimmed = src.trim();
        if let Some(g) = Self::builtin(trimmed) {
            return Ok(g);
        }
        if trimmed.starts_with('[') {
            return Self::from_expr(trimmed);
        }
        Err(GainError::Unknown(trimmed.to_string()))
    }

    pub fn custom<F>(id: impl Into<String>, kappa: F, claimed_class: GainClass) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            id: id.into(),
            kind: Kind::Custom(Arc::new(kappa)),
            claimed_class,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn claimed_class(&self) -> GainClass {
        self.claimed_class
    }

    /// κ(z).
    pub fn eval(&self, z: f64) -> f64 {
        match &self.kind {
            Kind::ZCosZ => z * z.cos(),
            Kind::Z2CosZ => z * z * z.cos(),
            Kind::Z2SinZ => z * z * z.sin(),
            Kind::Expr(p) => p.eval(z),
            Kind::Custom(f) => f(z),
        }
    }

    /// Closed-form ∫₀ᶻ κ(s) ds, when one is known.
    pub fn closed_form_integral(&self, z: f64) -> Option<f64> {
        let (s, c) = z.sin_cos();
        match &self.kind {
            Kind::ZCosZ => Some(z * s + c - 1.0),
            Kind::Z2CosZ => Some(z * z * s + 2.0 * z * c - 2.0 * s),
            Kind::Z2SinZ => Some(-z * z * c + 2.0 * z * s + 2.0 * c - 2.0),
            Kind::Expr(_) | Kind::Custom(_) => None,
        }
    }

    pub fn has_closed_form(&self) -> bool {
        self.closed_form_integral(0.0).is_some()
    }

    /// ∫₀ᶻ κ(s) ds by adaptive Simpson, regardless of any closed form.
    pub fn quadrature_integral(&self, z: f64, cfg: QuadratureConfig) -> Result<f64, GainError> {
        adaptive_simpson(&|s| self.eval(s), 0.0, z, cfg).map_err(|source| GainError::Quadrature {
            id: self.id.clone(),
            z,
            source,
        })
    }

    /// ∫₀ᶻ κ(s) ds: closed form when available, quadrature otherwise.
    pub fn integral(&self, z: f64) -> Result<f64, GainError> {
        match self.closed_form_integral(z) {
            Some(v) => Ok(v),
            None => self.quadrature_integral(z, QuadratureConfig::default()),
        }
    }

    /// ∫ₐᵇ κ(s) ds, used to extend a running integral one grid step.
    fn integral_between(&self, a: f64, b: f64) -> Result<f64, GainError> {
        match (self.closed_form_integral(a), self.closed_form_integral(b)) {
            (Some(fa), Some(fb)) => Ok(fb - fa),
            _ => adaptive_simpson(&|s| self.eval(s), a, b, QuadratureConfig::default()).map_err(
                |source| GainError::Quadrature {
                    id: self.id.clone(),
                    z: b,
                    source,
                },
            ),
        }
    }

    /// α0 for the decomposition κ(z) = α0(z) cos(z), if this gain has one.
    pub fn envelope(&self, z: f64) -> Option<f64> {
        match &self.kind {
            Kind::ZCosZ => Some(z),
            Kind::Z2CosZ => Some(z * z),
            _ => None,
        }
    }

    /// α0⁻¹ on [0, ∞).
    pub fn envelope_inverse(&self, x: f64) -> Option<f64> {
        match &self.kind {
            Kind::ZCosZ => Some(x),
            Kind::Z2CosZ => Some(x.sqrt()),
            _ => None,
        }
    }

    pub fn has_envelope(&self) -> bool {
        self.envelope_inverse(1.0).is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanVerdict {
    ConsistentWithNussbaum,
    ConsistentWithRelaxedOnly,
    BoundedAverage,
    /// None of the above patterns showed up within the horizon.
    Inconclusive,
}

impl ScanVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ConsistentWithNussbaum => "consistent_with_nussbaum",
            Self::ConsistentWithRelaxedOnly => "consistent_with_relaxed_only",
            Self::BoundedAverage => "bounded_average",
            Self::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for ScanVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanThresholds {
    /// The running average must exceed +V and fall below -V.
    pub divergence: f64,
    /// |average| below B everywhere counts as bounded.
    pub bounded: f64,
}

impl Default for ScanThresholds {
    fn default() -> Self {
        Self {
            divergence: 10.0,
            bounded: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NussbaumScanReport {
    pub z_max: f64,
    pub samples: usize,
    pub sup_avg: f64,
    pub inf_avg: f64,
    /// Extremes of the unscaled integral, for the relaxed property.
    pub sup_integral: f64,
    pub inf_integral: f64,
    pub verdict: ScanVerdict,
}

impl NussbaumScanReport {
    /// Whether ∫₀ᶻκ itself swung past both ±V.
    pub fn relaxed_property_seen(&self, thresholds: ScanThresholds) -> bool {
        self.sup_integral > thresholds.divergence && self.inf_integral < -thresholds.divergence
    }
}

/// Grid of running averages a(zᵢ) = (1/zᵢ)∫₀^zᵢ κ, zᵢ = i·z_max/samples.
pub fn running_averages(g: &GainSpec, z_max: f64, samples: usize) -> Result<Vec<(f64, f64, f64)>, GainError> {
    let step = z_max / samples as f64;
    let mut out = Vec::with_capacity(samples);
    let mut acc = 0.0;
    let mut prev = 0.0;
    for i in 1..=samples {
        let z = step * i as f64;
        acc = match g.closed_form_integral(z) {
            Some(v) => v,
            None => acc + g.integral_between(prev, z)?,
        };
        out.push((z, acc, acc / z));
        prev = z;
    }
    Ok(out)
}

pub fn nussbaum_scan(g: &GainSpec, z_max: f64, samples: usize) -> Result<NussbaumScanReport, GainError> {
    nussbaum_scan_with(g, z_max, samples, ScanThresholds::default())
}

pub fn nussbaum_scan_with(
    g: &GainSpec,
    z_max: f64,
    samples: usize,
    thresholds: ScanThresholds,
) -> Result<NussbaumScanReport, GainError> {
    if !(z_max > 0.0 && z_max.is_finite()) || samples < 100 {
        return Err(GainError::ScanArgs { z_max, samples });
    }
    let grid = running_averages(g, z_max, samples)?;
    let mut sup_avg = f64::NEG_INFINITY;
    let mut inf_avg = f64::INFINITY;
    let mut sup_integral = 0.0f64;
    let mut inf_integral = 0.0f64;
    for &(_, integral, avg) in &grid {
        sup_avg = sup_avg.max(avg);
        inf_avg = inf_avg.min(avg);
        sup_integral = sup_integral.max(integral);
        inf_integral = inf_integral.min(integral);
    }
    let v = thresholds.divergence;
    let verdict = if sup_avg > v && inf_avg < -v {
        ScanVerdict::ConsistentWithNussbaum
    } else if sup_avg.abs() < thresholds.bounded && inf_avg.abs() < thresholds.bounded {
        ScanVerdict::BoundedAverage
    } else if sup_integral > v && inf_integral < -v {
        ScanVerdict::ConsistentWithRelaxedOnly
    } else {
        ScanVerdict::Inconclusive
    };
    Ok(NussbaumScanReport {
        z_max,
        samples,
        sup_avg,
        inf_avg,
        sup_integral,
        inf_integral,
        verdict,
    })
}
