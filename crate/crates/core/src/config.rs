//! Scenario and sweep files.
//!
//! Both are TOML. A scenario file looks like
//!
//! ```toml
//! id = "fig2"
//!
//! [plant]
//! kind = "perturbed"
//! f = "sin2(3, 3)"
//! b = 1.0
//! epsilon = 0.1
//!
//! [controller]
//! kind = "nonlinear_pi"
//! lambda = 2.5
//! gain = "z2_sin_z"
//!
//! [initial]
//! x0 = 4.0
//! y0 = 4.0
//!
//! [run]
//! t_end = 20.0
//! dt = 1e-3
//! ```
//!
//! A sweep file embeds a scenario under `[base]` and lists the axes under
//! `[grid]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::ControllerConfig;
use crate::gains::{GainError, GainSpec};
use crate::plant::{PlantConfig, PlantError, PlantKind, SectorNonlinearity};
use crate::sim::{Monitors, Scenario, SimError, DEFAULT_GUARD};

/// Upper bound on sweep size unless the file raises it.
pub const DEFAULT_MAX_CELLS: usize = 10_000;
/// Hard ceiling regardless of the file.
pub const HARD_MAX_CELLS: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("plant: {0}")]
    Plant(#[from] PlantError),
    #[error("controller: {0}")]
    Gain(#[from] GainError),
    #[error("scenario: {0}")]
    Scenario(#[from] SimError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantKindFile {
    Unperturbed,
    Perturbed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub kind: PlantKindFile,
    /// Nonlinearity: `zero`, `linear(a)`, `sin2(a, k)` or `atan(a, k)`.
    pub f: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKindFile {
    NussbaumGain,
    NonlinearPi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub kind: ControllerKindFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Built-in gain id or a coefficient-list expression.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub x0: f64,
    pub y0: f64,
}

fn default_t_end() -> f64 {
    50.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_stride() -> usize {
    1
}
fn default_guard() -> f64 {
    DEFAULT_GUARD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
    #[serde(default = "default_guard")]
    pub divergence_guard: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            t_end: default_t_end(),
            dt: default_dt(),
            sample_stride: default_stride(),
            divergence_guard: default_guard(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSection {
    #[serde(default)]
    pub s_monitor: bool,
    #[serde(default)]
    pub z_bound_monitor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub id: String,
    pub plant: PlantSection,
    pub controller: ControllerSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub monitors: MonitorSection,
}

impl ScenarioFile {
    pub fn from_toml_str(src: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(src)?)
    }

    /// Rendering with every default spelled out, in a fixed key order.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("scenario files always serialize")
    }

    pub fn plant(&self) -> Result<PlantConfig, ConfigError> {
        let p = &self.plant;
        let mut f = SectorNonlinearity::parse(&p.f)?;
        if p.alpha1.is_some() || p.alpha2.is_some() {
            let a1 = p.alpha1.unwrap_or(f.alpha1());
            let a2 = p.alpha2.unwrap_or(f.alpha2());
            f = f.with_bounds(a1, a2)?;
        }
        Ok(match p.kind {
            PlantKindFile::Perturbed => {
                let eps = p
                    .epsilon
                    .ok_or_else(|| ConfigError::Invalid("perturbed plant needs epsilon".into()))?;
                PlantConfig::perturbed(f, p.b, eps)?
            }
            PlantKindFile::Unperturbed => PlantConfig::unperturbed(f, p.b)?,
        })
    }

    pub fn controller(&self) -> Result<ControllerConfig, ConfigError> {
        let c = &self.controller;
        Ok(match c.kind {
            ControllerKindFile::NussbaumGain => ControllerConfig::NussbaumGain {
                zeta0: c.zeta0.unwrap_or(0.0),
            },
            ControllerKindFile::NonlinearPi => {
                let lambda = c
                    .lambda
                    .ok_or_else(|| ConfigError::Invalid("nonlinear_pi needs lambda".into()))?;
                let gain = c
                    .gain
                    .as_deref()
                    .ok_or_else(|| ConfigError::Invalid("nonlinear_pi needs gain".into()))?;
                let c = ControllerConfig::NonlinearPi {
                    lambda,
                    gain: GainSpec::parse(gain)?,
                };
                c.validate().map_err(SimError::from)?;
                c
            }
        })
    }

    pub fn to_scenario(&self) -> Result<Scenario, ConfigError> {
        let plant = self.plant()?;
        let controller = self.controller()?;
        let sc = Scenario {
            id: self.id.clone(),
            plant,
            controller,
            x0: self.initial.x0,
            y0: self.initial.y0,
            t_end: self.run.t_end,
            dt: self.run.dt,
            sample_stride: self.run.sample_stride,
            divergence_guard: self.run.divergence_guard,
            monitors: Monitors {
                s_monitor: self.monitors.s_monitor,
                z_bound_monitor: self.monitors.z_bound_monitor,
            },
        };
        sc.validate()?;
        if sc.monitors.z_bound_monitor && sc.plant.kind != PlantKind::Unperturbed {
            return Err(ConfigError::Invalid("z_bound_monitor needs an unperturbed plant".into()));
        }
        Ok(sc)
    }
}

/// Parses and validates a scenario file in one go.
pub fn parse_scenario(src: &str) -> Result<Scenario, ConfigError> {
    ScenarioFile::from_toml_str(src)?.to_scenario()
}

/// An axis: either explicit values or an evenly spaced range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Axis {
    pub fn len(&self) -> usize {
        match self {
            Self::Values(v) => v.len(),
            Self::Range { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::Values(v) => v.clone(),
            Self::Range { start, stop, count } => match count {
                0 => vec![],
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                    .collect(),
            },
        }
    }
}

/// Uniform random cells instead of a Cartesian grid; the seed comes from the
/// file or the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomGrid {
    pub cells: usize,
    pub epsilon: [f64; 2],
    pub lambda: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_true() -> bool {
    true
}
fn default_workers() -> usize {
    4
}
fn default_max_cells() -> usize {
    DEFAULT_MAX_CELLS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomGrid>,
    /// Simulate each cell as well as certifying it.
    #[serde(default = "default_true")]
    pub simulate: bool,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_max_cells")]
    pub max_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub base: ScenarioFile,
    pub grid: GridSection,
}

impl SweepFile {
    pub fn from_toml_str(src: &str) -> Result<Self, ConfigError> {
        let file: Self = toml::from_str(src)?;
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        if g.max_cells > HARD_MAX_CELLS {
            return Err(ConfigError::Invalid(format!("max_cells may not exceed {HARD_MAX_CELLS}")));
        }
        if g.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        if g.random.is_some() && (g.epsilon.is_some() || g.lambda.is_some()) {
            return Err(ConfigError::Invalid("random grids replace the epsilon and lambda axes".into()));
        }
        if let Some(r) = &g.random {
            let ok = |r: &[f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
            if !ok(&r.epsilon) || !ok(&r.lambda) {
                return Err(ConfigError::Invalid("random ranges must be finite with lo <= hi".into()));
            }
        }
        for axis in [&g.epsilon, &g.lambda].into_iter().flatten() {
            if axis.len() > g.max_cells {
                return Err(ConfigError::Invalid("axis longer than max_cells".into()));
            }
            if axis.values().iter().any(|v| !v.is_finite()) {
                return Err(ConfigError::Invalid("axis values must be finite".into()));
            }
        }
        if g.random.as_ref().is_some_and(|r| r.cells > g.max_cells) {
            return Err(ConfigError::Invalid("random cells exceed max_cells".into()));
        }
        let cells = self.cell_count();
        if cells > g.max_cells {
            return Err(ConfigError::Invalid(format!(
                "grid has {cells} cells, more than max_cells = {}",
                g.max_cells
            )));
        }
        if let Some(gains) = &g.gain {
            for id in gains {
                GainSpec::parse(id)?;
            }
        }
        Ok(())
    }

    /// Number of cells, saturating on overflow.
    pub fn cell_count(&self) -> usize {
        let g = &self.grid;
        let gains = g.gain.as_ref().map_or(1, Vec::len);
        match &g.random {
            Some(r) => r.cells.saturating_mul(gains),
            None => {
                let e = g.epsilon.as_ref().map_or(1, Axis::len);
                let l = g.lambda.as_ref().map_or(1, Axis::len);
                e.saturating_mul(l).saturating_mul(gains)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str = r#"
id = "fig2"

[plant]
kind = "perturbed"
f = "sin2(3, 3)"
b = 1.0
epsilon = 0.1

[controller]
kind = "nonlinear_pi"
lambda = 2.5
gain = "z2_sin_z"

[initial]
x0 = 4.0
y0 = 4.0

[run]
t_end = 20.0
dt = 1e-3

[monitors]
s_monitor = true
"#;

    #[test]
    fn parses_fig2() {
        let sc = parse_scenario(FIG2).unwrap();
        assert_eq!(sc.id, "fig2");
        assert_eq!(sc.plant.epsilon, 0.1);
        assert_eq!(sc.plant.f.alpha2(), 6.0);
        assert_eq!(sc.controller.lambda(), Some(2.5));
        assert_eq!(sc.t_end, 20.0);
        assert_eq!(sc.sample_stride, 1);
        assert!(sc.monitors.s_monitor);
    }

    #[test]
    fn canonical_form_is_stable() {
        let a = ScenarioFile::from_toml_str(FIG2).unwrap();
        let reordered = FIG2.replace("b = 1.0\nepsilon = 0.1", "epsilon = 0.1\nb = 1.0");
        let b = ScenarioFile::from_toml_str(&reordered).unwrap();
        assert_eq!(a.canonical(), b.canonical());
        let back = ScenarioFile::from_toml_str(&a.canonical()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(parse_scenario("id = 3"), Err(ConfigError::Toml(_))));
        let unknown = FIG2.replace("b = 1.0", "b = 1.0\nbogus = 2");
        assert!(matches!(parse_scenario(&unknown), Err(ConfigError::Toml(_))));
        let zero_b = FIG2.replace("b = 1.0", "b = 0.0");
        assert!(matches!(parse_scenario(&zero_b), Err(ConfigError::Plant(PlantError::ZeroGain))));
        let no_eps = FIG2.replace("epsilon = 0.1\n", "");
        assert!(matches!(parse_scenario(&no_eps), Err(ConfigError::Invalid(_))));
        let bad_gain = FIG2.replace("z2_sin_z", "tanh");
        assert!(matches!(parse_scenario(&bad_gain), Err(ConfigError::Gain(_))));
        let neg_lambda = FIG2.replace("lambda = 2.5", "lambda = -1");
        assert!(matches!(parse_scenario(&neg_lambda), Err(ConfigError::Scenario(_))));
        let coarse = FIG2.replace("dt = 1e-3", "dt = 0.5");
        assert!(matches!(parse_scenario(&coarse), Err(ConfigError::Scenario(_))));
        let zb = FIG2.replace("s_monitor = true", "z_bound_monitor = true");
        assert!(matches!(parse_scenario(&zb), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn bound_override() {
        let loose = FIG2.replace("b = 1.0", "alpha1 = 2.0\nb = 1.0");
        let sc = parse_scenario(&loose).unwrap();
        assert_eq!((sc.plant.f.alpha1(), sc.plant.f.alpha2()), (2.0, 6.0));
        let crossed = FIG2.replace("b = 1.0", "alpha1 = 7.0\nb = 1.0");
        assert!(parse_scenario(&crossed).is_err());
    }

    fn sweep(grid: &str) -> String {
        let base = FIG2.replace("id = \"fig2\"", "").replace("\n[", "\n[base.");
        format!("[base]\nid = \"sweep\"\n{base}\n[grid]\n{grid}")
    }

    #[test]
    fn sweep_files() {
        let s = SweepFile::from_toml_str(&sweep("epsilon = [0.05, 0.1]\nlambda = { start = 1.0, stop = 3.0, count = 3 }\ngain = [\"z2_sin_z\", \"z2_cos_z\"]")).unwrap();
        assert_eq!(s.cell_count(), 12);
        assert_eq!(s.grid.lambda.as_ref().unwrap().values(), vec![1.0, 2.0, 3.0]);
        assert!(s.grid.simulate);

        let s = SweepFile::from_toml_str(&sweep("epsilon = []")).unwrap();
        assert_eq!(s.cell_count(), 0);

        let too_big = sweep("epsilon = { start = 0.0, stop = 1.0, count = 200 }\nlambda = { start = 0.0, stop = 1.0, count = 200 }");
        assert!(matches!(SweepFile::from_toml_str(&too_big), Err(ConfigError::Invalid(_))));

        let r = SweepFile::from_toml_str(&sweep("random = { cells = 10, epsilon = [0.01, 0.3], lambda = [1.0, 4.0] }")).unwrap();
        assert_eq!(r.cell_count(), 10);
        assert!(SweepFile::from_toml_str(&sweep("random = { cells = 10, epsilon = [0.3, 0.01], lambda = [1.0, 4.0] }")).is_err());
        assert!(SweepFile::from_toml_str(&sweep("gain = [\"nope\"]")).is_err());
        assert!(SweepFile::from_toml_str(&sweep("workers = 0")).is_err());
    }
}
