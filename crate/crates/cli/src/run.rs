//! Single runs and figure reproduction: simulate, certify when the certificate
//! applies, and write CSV / SVG / manifest files.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use nussbaum_pi::certify::CertifyError;
use nussbaum_pi::config::ConfigError;
use nussbaum_pi::sim::{RunReport, SimError};
use nussbaum_pi::{certify, CertificateReport, CertifyOptions, ControllerConfig, PlantKind, Scenario, ScenarioFile};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::csv_out;
use crate::presets;
use crate::svg::{self, LineChart};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error("{0}")]
    Other(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Command-line overrides applied to a scenario file before it is hashed,
/// so the manifest describes what actually ran.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, file: &mut ScenarioFile) {
        if let Some(dt) = self.dt {
            file.run.dt = dt;
        }
        if let Some(t) = self.t_end {
            file.run.t_end = t;
        }
    }
}

/// sha256 over the canonical rendering, as lowercase hex.
pub fn config_hash(file: &ScenarioFile) -> String {
    let digest = Sha256::digest(file.canonical().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateSummary {
    pub feasible: bool,
    pub cond_i: bool,
    pub cond_ii: bool,
    pub cond_ii_slack: Option<f64>,
    pub cond_iii: String,
    pub sector_ok: bool,
    pub minors_positive: bool,
    pub c_selected: Option<f64>,
}

impl From<&CertificateReport> for CertificateSummary {
    fn from(r: &CertificateReport) -> Self {
        Self {
            feasible: r.feasible(),
            cond_i: r.cond_i,
            cond_ii: matches!(r.cond_ii, Some((true, _))),
            cond_ii_slack: r.cond_ii.map(|(_, s)| s),
            cond_iii: r.cond_iii.verdict.to_string(),
            sector_ok: r.sector.pass,
            minors_positive: r.minors_positive(),
            c_selected: r.c_selected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SMonitorSummary {
    pub c: f64,
    pub max_forward_difference: f64,
    pub max_abs: f64,
    pub nonincreasing: bool,
    pub bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZBoundSummary {
    pub k_prime: u64,
    pub z_bound: f64,
    pub z_max: f64,
    pub ok: bool,
    pub zdot_ok: bool,
    pub zdot_crossings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeSummary {
    pub verdict: String,
    pub raw_verdict: String,
    /// null when the run diverged.
    pub tail_max: f64,
    pub sup_abs_y: f64,
    pub guard_tripped_at: Option<f64>,
    pub halving_ok: Option<bool>,
    pub halving_difference: Option<f64>,
    pub s_monitor: Option<SMonitorSummary>,
    pub z_bound: Option<ZBoundSummary>,
}

impl From<&RunReport> for OutcomeSummary {
    fn from(r: &RunReport) -> Self {
        Self {
            verdict: r.outcome.verdict.to_string(),
            raw_verdict: r.raw_verdict.to_string(),
            tail_max: r.outcome.tail_max,
            sup_abs_y: r.outcome.sup_abs_y,
            guard_tripped_at: r.trajectory.guard_tripped_at,
            halving_ok: r.halving.map(|h| h.ok),
            halving_difference: r.halving.map(|h| h.difference),
            s_monitor: r.s_monitor.as_ref().map(|(c, s)| SMonitorSummary {
                c: *c,
                max_forward_difference: s.max_forward_difference,
                max_abs: s.max_abs,
                nonincreasing: s.nonincreasing(nussbaum_pi::sim::S_MONITOR_TOL),
                bound_holds: s.bound_holds(),
            }),
            z_bound: r.z_bound.as_ref().map(|(b, d)| ZBoundSummary {
                k_prime: b.k_prime,
                z_bound: b.z_bound,
                z_max: b.z_max,
                ok: b.ok,
                zdot_ok: d.ok,
                zdot_crossings: d.crossings,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub scenario_id: String,
    pub config_hash: String,
    pub csv: PathBuf,
    pub svg: Option<PathBuf>,
    pub certificate: Option<CertificateSummary>,
    pub outcome: OutcomeSummary,
}

pub struct RunOutput {
    pub file: ScenarioFile,
    pub scenario: Scenario,
    pub report: RunReport,
    pub certificate: Option<CertificateReport>,
    pub manifest: RunManifest,
}

/// Whether the sufficient-condition certificate is defined for a scenario.
pub fn certificate_applies(sc: &Scenario) -> bool {
    sc.plant.kind == PlantKind::Perturbed && matches!(sc.controller, ControllerConfig::NonlinearPi { .. })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(path))
}

fn write_csv(path: &Path, report: &RunReport) -> Result<(), CliError> {
    let f = File::create(path).map_err(io_err(path))?;
    csv_out::write_trajectory(BufWriter::new(f), &report.trajectory).map_err(io_err(path))
}

/// States and input on separate panels; u is usually orders larger.
fn state_chart(id: &str, report: &RunReport) -> String {
    let s = &report.trajectory.samples;
    let mut states = LineChart::new(format!("{id}: states"), "t", "x, y");
    states.add("x", s.iter().map(|p| (p.t, p.x)).collect());
    states.add("y", s.iter().map(|p| (p.t, p.y)).collect());
    let mut input = LineChart::new(format!("{id}: control input"), "t", "u");
    input.add("u", s.iter().map(|p| (p.t, p.u)).collect());
    svg::render_panels(&[states, input])
}

/// Runs one scenario file and writes `<id>.csv`, `<id>.manifest.json` and,
/// with `svg`, `<id>.svg` into `out_dir`.
pub fn run_file(mut file: ScenarioFile, overrides: Overrides, out_dir: &Path, svg: bool) -> Result<RunOutput, CliError> {
    overrides.apply(&mut file);
    let scenario = file.to_scenario()?;
    let report = nussbaum_pi::run_scenario(&scenario)?;
    let certificate = if certificate_applies(&scenario) {
        Some(certify(&scenario.plant, &scenario.controller, &CertifyOptions::default())?)
    } else {
        None
    };

    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let csv = out_dir.join(format!("{}.csv", file.id));
    write_csv(&csv, &report)?;
    let svg_path = if svg {
        let p = out_dir.join(format!("{}.svg", file.id));
        write_text(&p, &state_chart(&file.id, &report))?;
        Some(p)
    } else {
        None
    };
    let manifest = RunManifest {
        scenario_id: file.id.clone(),
        config_hash: config_hash(&file),
        csv,
        svg: svg_path,
        certificate: certificate.as_ref().map(CertificateSummary::from),
        outcome: OutcomeSummary::from(&report),
    };
    let mpath = out_dir.join(format!("{}.manifest.json", file.id));
    write_text(&mpath, &to_json(&manifest)?)?;
    Ok(RunOutput {
        file,
        scenario,
        report,
        certificate,
        manifest,
    })
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Other(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig1,
    Fig2,
}

/// Runs a figure's preset scenarios. fig1 overlays y(t) per plant, fig2
/// plots x, y, u. A combined `<fig>_manifest.json` lists every run.
pub fn reproduce(fig: Figure, overrides: Overrides, out_dir: &Path, svg: bool) -> Result<Vec<RunOutput>, CliError> {
    let (name, files) = match fig {
        Figure::Fig1 => ("fig1", presets::fig1()?),
        Figure::Fig2 => ("fig2", vec![presets::fig2()?]),
    };
    let mut runs = Vec::with_capacity(files.len());
    for f in files {
        // per-run SVGs only for fig2; fig1 gets overlays below
        runs.push(run_file(f, overrides, out_dir, svg && fig == Figure::Fig2)?);
    }
    if svg && fig == Figure::Fig1 {
        for (plant, title) in [("pint", "integrator plant"), ("pls", "unstable linear plant")] {
            let group: Vec<&RunOutput> = runs.iter().filter(|r| r.file.id.contains(&format!("_{plant}_"))).collect();
            let path = out_dir.join(format!("fig1_{plant}.svg"));
            write_text(&path, &overlay_y(&format!("y(t), {title}"), &group).render())?;
        }
    }
    let manifests: Vec<&RunManifest> = runs.iter().map(|r| &r.manifest).collect();
    write_text(&out_dir.join(format!("{name}_manifest.json")), &to_json(&manifests)?)?;
    Ok(runs)
}

/// y(t) of several runs on one chart. Diverged runs are clipped to the range
/// of the others so they do not flatten everything else.
fn overlay_y(title: &str, runs: &[&RunOutput]) -> LineChart {
    let mut chart = LineChart::new(title, "t", "y");
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in runs.iter().filter(|r| !r.report.trajectory.diverged()) {
        for s in &r.report.trajectory.samples {
            lo = lo.min(s.y);
            hi = hi.max(s.y);
        }
    }
    if lo < hi {
        let pad = 0.05 * (hi - lo);
        chart.y_range = Some((lo - pad, hi + pad));
    }
    for r in runs {
        let mut label = r.scenario.controller.label();
        if let Some(t) = r.report.trajectory.guard_tripped_at {
            label.push_str(&format!(" (diverged t={t:.2})"));
        }
        chart.add(label, r.report.trajectory.samples.iter().map(|s| (s.t, s.y)).collect());
    }
    chart
}
