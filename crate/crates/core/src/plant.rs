//! First-order plants ẏ = f(y) + bu and their perturbed versions with the
//! parasitic filter between the plant state x and the measured output y.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{self, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("bad nonlinearity: {0}")]
    Parse(#[from] ParseError),
    #[error("unknown nonlinearity family {0:?}")]
    UnknownFamily(String),
    #[error("nonlinearity {name} expects {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("sector bounds must satisfy alpha1 <= alpha2 (got {0}, {1})")]
    BadSector(f64, f64),
    #[error("control coefficient b must be nonzero and finite")]
    ZeroGain,
    #[error("epsilon must be positive and finite for a perturbed plant (got {0})")]
    BadEpsilon(f64),
}

#[derive(Clone)]
enum Family {
    /// α(x) = a
    Linear(f64),
    /// α(x) = a + k sin²(x)
    SinSquared(f64, f64),
    /// f(x) = a x + k atan(x), i.e. α(x) = a + k atan(x)/x
    Atan(f64, f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A nonlinearity f(x) = α(x)x with declared sector bounds α1 ≤ α(x) ≤ α2.
#[derive(Clone)]
pub struct SectorNonlinearity {
    family: Family,
    alpha1: f64,
    alpha2: f64,
    label: String,
}

impl fmt::Debug for SectorNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SectorNonlinearity")
            .field("label", &self.label)
            .field("alpha1", &self.alpha1)
            .field("alpha2", &self.alpha2)
            .finish()
    }
}

impl SectorNonlinearity {
    /// f ≡ 0: the pure integrator.
    pub fn zero() -> Self {
        Self {
            family: Family::Linear(0.0),
            alpha1: 0.0,
            alpha2: 0.0,
            label: "zero".into(),
        }
    }

    pub fn linear(alpha: f64) -> Self {
        Self {
            family: Family::Linear(alpha),
            alpha1: alpha,
            alpha2: alpha,
            label: format!("linear({alpha:?})"),
        }
    }

    /// f(x) = (a + k sin²x) x, sector [min(a, a+k), max(a, a+k)].
    pub fn sin_squared(a: f64, k: f64) -> Self {
        Self {
            family: Family::SinSquared(a, k),
            alpha1: a.min(a + k),
            alpha2: a.max(a + k),
            label: format!("sin2({a:?}, {k:?})"),
        }
    }

    /// f(x) = a x + k atan(x). atan(x)/x lies in (0, 1].
    pub fn atan(a: f64, k: f64) -> Self {
        Self {
            family: Family::Atan(a, k),
            alpha1: a.min(a + k),
            alpha2: a.max(a + k),
            label: format!("atan({a:?}, {k:?})"),
        }
    }

    /// Arbitrary f with claimed bounds; nothing checks the claim until
    /// [`verify_sector`] is run.
    pub fn custom<F>(label: impl Into<String>, f: F, alpha1: f64, alpha2: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            family: Family::Custom(Arc::new(f)),
            alpha1,
            alpha2,
            label: label.into(),
        }
    }

    /// Parses `zero`, `linear(a)`, `sin2(a, k)` or `atan(a, k)`.
    pub fn parse(src: &str) -> Result<Self, PlantError> {
        let call = expr::parse_named_call(src)?;
        let want = |n: usize| -> Result<(), PlantError> {
            if call.args.len() == n {
                Ok(())
            } else {
                Err(PlantError::Arity {
                    name: call.name.clone(),
                    expected: n,
                    got: call.args.len(),
                })
            }
        };
        match call.name.as_str() {
            "zero" => {
                want(0)?;
                Ok(Self::zero())
            }
            "linear" => {
                want(1)?;
                Ok(Self::linear(call.args[0]))
            }
            "sin2" => {
                want(2)?;
                Ok(Self::sin_squared(call.args[0], call.args[1]))
            }
            "atan" => {
                want(2)?;
                Ok(Self::atan(call.args[0], call.args[1]))
            }
            other => Err(PlantError::UnknownFamily(other.to_string())),
        }
    }

    /// Replaces the declared bounds, e.g. with looser ones from a config.
    pub fn with_bounds(mut self, alpha1: f64, alpha2: f64) -> Result<Self, PlantError> {
        if !(alpha1 <= alpha2) {
            return Err(PlantError::BadSector(alpha1, alpha2));
        }
        self.alpha1 = alpha1;
        self.alpha2 = alpha2;
        Ok(self)
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.family {
            Family::Linear(a) => a * x,
            Family::SinSquared(a, k) => {
                let s = x.sin();
                (a + k * s * s) * x
            }
            Family::Atan(a, k) => a * x + k * x.atan(),
            Family::Custom(f) => f(x),
        }
    }

    /// α(x) = f(x)/x, with the limit at the origin for the built-in families.
    pub fn alpha(&self, x: f64) -> f64 {
        match &self.family {
            Family::Linear(a) => *a,
            Family::SinSquared(a, k) => {
                let s = x.sin();
                a + k * s * s
            }
            Family::Atan(a, k) if x == 0.0 => a + k,
            Family::Atan(a, k) => a + k * x.atan() / x,
            Family::Custom(f) => f(x) / x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorCheck {
    pub pass: bool,
    /// Distance of the extreme sampled ratio to the nearer bound; negative
    /// when some ratio fell outside [α1, α2].
    pub worst_margin: f64,
}

/// Samples f(x)/x on `n` grid points over `[x_min, x_max]`.
///
/// Grid points within one step of the origin are replaced by the two-sided
/// difference quotients (f(±h) - f(0)) / ±h.
pub fn verify_sector(s: &SectorNonlinearity, x_min: f64, x_max: f64, n: usize) -> SectorCheck {
    assert!(x_min < x_max && n >= 2, "verify_sector needs x_min < x_max and n >= 2");
    let step = (x_max - x_min) / (n - 1) as f64;
    let f0 = s.eval(0.0);
    let mut worst = f64::INFINITY;
    let mut pass = f0 == 0.0;
    let mut visit = |ratio: f64| {
        let margin = (ratio - s.alpha1).min(s.alpha2 - ratio);
        if !(margin >= 0.0) {
            pass = false;
        }
        // NaN margins count as failures and as the worst value
        worst = if margin.is_nan() { f64::NEG_INFINITY } else { worst.min(margin) };
    };
    for i in 0..n {
        let x = x_min + step * i as f64;
        if x.abs() < step {
            let h = step;
            visit((s.eval(h) - f0) / h);
            visit((s.eval(-h) - f0) / -h);
        } else {
            visit(s.eval(x) / x);
        }
    }
    SectorCheck {
        pass,
        worst_margin: worst,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantKind {
    Unperturbed,
    Perturbed,
}

#[derive(Debug, Clone)]
pub struct PlantConfig {
    pub kind: PlantKind,
    pub f: SectorNonlinearity,
    pub b: f64,
    /// ε = 1/M; ignored for unperturbed plants.
    pub epsilon: f64,
}

impl PlantConfig {
    pub fn perturbed(f: SectorNonlinearity, b: f64, epsilon: f64) -> Result<Self, PlantError> {
        let p = Self {
            kind: PlantKind::Perturbed,
            f,
            b,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn unperturbed(f: SectorNonlinearity, b: f64) -> Result<Self, PlantError> {
        let p = Self {
            kind: PlantKind::Unperturbed,
            f,
            b,
            epsilon: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        if self.b == 0.0 || !self.b.is_finite() {
            return Err(PlantError::ZeroGain);
        }
        if self.kind == PlantKind::Perturbed && !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(PlantError::BadEpsilon(self.epsilon));
        }
        if !(self.f.alpha1 <= self.f.alpha2) {
            return Err(PlantError::BadSector(self.f.alpha1, self.f.alpha2));
        }
        Ok(())
    }

    /// M = 1/ε.
    pub fn m(&self) -> f64 {
        1.0 / self.epsilon
    }

    /// Right-hand side (ẋ, ẏ). For unperturbed plants the x slot is unused
    /// and ẋ = 0.
    pub fn rates(&self, x: f64, y: f64, u: f64) -> (f64, f64) {
        match self.kind {
            PlantKind::Perturbed => (self.f.eval(x) + self.b * u, (x - y) / self.epsilon),
            PlantKind::Unperturbed => (0.0, self.f.eval(y) + self.b * u),
        }
    }
}
