//! Parameter sweeps over (ε, λ, gain): certificate per cell, optionally a
//! simulation, collected into a table in grid order.

use std::collections::BTreeMap;
use std::io::{self, Write};

use nussbaum_pi::certify::certify_parameters;
use nussbaum_pi::gains::{nussbaum_scan_with, NussbaumScanReport};
use nussbaum_pi::plant::{verify_sector, SectorCheck};
use nussbaum_pi::{run_scenario, CertifyOptions, GainSpec, ScenarioFile, SweepFile, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::csv_out::{fmt17, text_field};
use crate::run::{certificate_applies, CliError};

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub epsilon: f64,
    pub lambda: f64,
    pub gain: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellCertificate {
    pub cond_i: bool,
    pub cond_ii: bool,
    pub cond_ii_slack: Option<f64>,
    pub gain_ok: bool,
    pub minors_positive: bool,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRun {
    pub verdict: Verdict,
    pub tail_max: f64,
    pub halving_ok: Option<bool>,
}

/// One table row. Failures are kept as text in `error` and leave the other
/// columns empty; they never stop the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cell: Cell,
    pub certificate: Option<CellCertificate>,
    pub run: Option<CellRun>,
    pub error: Option<String>,
}

pub const TABLE_HEADER: &str =
    "index,epsilon,lambda,gain,cond_i,cond_ii,cond_ii_slack,gain_ok,minors_positive,certified,verdict,tail_max,halving_ok,error";

fn base_value(v: Option<f64>, what: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Other(format!("sweep base scenario has no {what}")))
}

/// Cells in deterministic order: ε outermost, then λ, then gain. Random
/// grids draw (ε, λ) pairs from `seed` (falling back to the file's seed, then 0).
pub fn cells(file: &SweepFile, seed: Option<u64>) -> Result<Vec<Cell>, CliError> {
    let g = &file.grid;
    let base = &file.base;
    let gains = match &g.gain {
        Some(list) => list.clone(),
        None => vec![base.controller.gain.clone().unwrap_or_default()],
    };
    let pairs: Vec<(f64, f64)> = match &g.random {
        Some(r) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.or(r.seed).unwrap_or(0));
            let mut draw = |[lo, hi]: [f64; 2]| lo + (hi - lo) * rng.gen::<f64>();
            (0..r.cells).map(|_| (draw(r.epsilon), draw(r.lambda))).collect()
        }
        None => {
            let eps = match &g.epsilon {
                Some(a) => a.values(),
                None => vec![base_value(base.plant.epsilon, "epsilon")?],
            };
            let lams = match &g.lambda {
                Some(a) => a.values(),
                None => vec![base_value(base.controller.lambda, "lambda")?],
            };
            eps.iter().flat_map(|&e| lams.iter().map(move |&l| (e, l))).collect()
        }
    };
    let mut out = Vec::with_capacity(pairs.len() * gains.len());
    for (epsilon, lambda) in pairs {
        for gain in &gains {
            out.push(Cell {
                index: out.len(),
                epsilon,
                lambda,
                gain: gain.clone(),
            });
        }
    }
    Ok(out)
}

fn cell_file(base: &ScenarioFile, cell: &Cell) -> ScenarioFile {
    let mut f = base.clone();
    f.id = format!("{}_{}", base.id, cell.index);
    f.plant.epsilon = Some(cell.epsilon);
    f.controller.lambda = Some(cell.lambda);
    f.controller.gain = Some(cell.gain.clone());
    f
}

/// Work shared by all cells: one scan per distinct gain, one sector check.
struct Shared {
    scans: BTreeMap<String, Result<NussbaumScanReport, String>>,
    sector: Result<SectorCheck, String>,
    opts: CertifyOptions,
}

impl Shared {
    fn new(file: &SweepFile, cells: &[Cell], opts: CertifyOptions) -> Self {
        let mut scans = BTreeMap::new();
        for c in cells {
            scans.entry(c.gain.clone()).or_insert_with(|| {
                GainSpec::parse(&c.gain)
                    .and_then(|g| nussbaum_scan_with(&g, opts.scan_z_max, opts.scan_samples, opts.thresholds))
                    .map_err(|e| e.to_string())
            });
        }
        let sector = file
            .base
            .plant()
            .map(|p| verify_sector(&p.f, -opts.sector_range, opts.sector_range, opts.sector_samples))
            .map_err(|e| e.to_string());
        Self { scans, sector, opts }
    }
}

fn certify_cell(file: &ScenarioFile, shared: &Shared) -> Result<CellCertificate, String> {
    let sc = file.to_scenario().map_err(|e| e.to_string())?;
    if !certificate_applies(&sc) {
        return Err("certificate needs a perturbed plant under nonlinear PI control".into());
    }
    let gain = file.controller.gain.as_deref().unwrap_or_default();
    let scan = shared.scans.get(gain).cloned().ok_or("gain not scanned")??;
    let sector = shared.sector.clone()?;
    let f = &sc.plant.f;
    let lambda = sc.controller.lambda().unwrap_or(f64::NAN);
    let r = certify_parameters(sc.plant.epsilon, lambda, f.alpha1(), f.alpha2(), sector, scan, &shared.opts);
    Ok(CellCertificate {
        cond_i: r.cond_i,
        cond_ii: matches!(r.cond_ii, Some((true, _))),
        cond_ii_slack: r.cond_ii.map(|(_, s)| s),
        gain_ok: r.gain_ok(),
        minors_positive: r.minors_positive(),
        certified: r.feasible(),
    })
}

fn simulate_cell(file: &ScenarioFile) -> Result<CellRun, String> {
    let sc = file.to_scenario().map_err(|e| e.to_string())?;
    let r = run_scenario(&sc).map_err(|e| e.to_string())?;
    Ok(CellRun {
        verdict: r.outcome.verdict,
        tail_max: r.outcome.tail_max,
        halving_ok: r.halving.map(|h| h.ok),
    })
}

fn run_cell(base: &ScenarioFile, cell: &Cell, shared: &Shared, simulate: bool) -> SweepRow {
    let file = cell_file(base, cell);
    let mut errors = Vec::new();
    let certificate = certify_cell(&file, shared).map_err(|e| errors.push(e)).ok();
    let run = if simulate {
        simulate_cell(&file).map_err(|e| errors.push(e)).ok()
    } else {
        None
    };
    SweepRow {
        cell: cell.clone(),
        certificate,
        run,
        error: (!errors.is_empty()).then(|| errors.join("; ")),
    }
}

/// Runs every cell on a pool of `grid.workers` threads. Rows come back in
/// grid order whatever the completion order.
pub fn run_sweep(file: &SweepFile, seed: Option<u64>) -> Result<Vec<SweepRow>, CliError> {
    file.validate()?;
    let cells = cells(file, seed)?;
    if cells.is_empty() {
        return Ok(Vec::new());
    }
    let shared = Shared::new(file, &cells, CertifyOptions::default());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(file.grid.workers)
        .build()
        .map_err(|e| CliError::Other(e.to_string()))?;
    let simulate = file.grid.simulate;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|c| run_cell(&file.base, c, &shared, simulate))
            .collect()
    }))
}

pub fn write_table<W: Write>(mut w: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(w, "{TABLE_HEADER}")?;
    let b = |v: Option<bool>| v.map_or(String::new(), |x| x.to_string());
    let f = |v: Option<f64>| v.map_or(String::new(), fmt17);
    for r in rows {
        let c = r.certificate.as_ref();
        let run = r.run.as_ref();
        let fields = [
            r.cell.index.to_string(),
            fmt17(r.cell.epsilon),
            fmt17(r.cell.lambda),
            text_field(&r.cell.gain),
            b(c.map(|c| c.cond_i)),
            b(c.map(|c| c.cond_ii)),
            f(c.and_then(|c| c.cond_ii_slack)),
            b(c.map(|c| c.gain_ok)),
            b(c.map(|c| c.minors_positive)),
            b(c.map(|c| c.certified)),
            run.map_or(String::new(), |r| r.verdict.to_string()),
            f(run.map(|r| r.tail_max)),
            b(run.and_then(|r| r.halving_ok)),
            text_field(r.error.as_deref().unwrap_or("")),
        ];
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepSummary {
    pub cells: usize,
    pub certified: usize,
    pub simulated: usize,
    pub converged: usize,
    pub certified_not_converged: usize,
    pub errors: usize,
}

pub fn summarize(rows: &[SweepRow]) -> SweepSummary {
    let mut s = SweepSummary {
        cells: rows.len(),
        ..Default::default()
    };
    for r in rows {
        let certified = r.certificate.as_ref().is_some_and(|c| c.certified);
        s.certified += certified as usize;
        if let Some(run) = &r.run {
            s.simulated += 1;
            let conv = run.verdict == Verdict::Converged;
            s.converged += conv as usize;
            s.certified_not_converged += (certified && !conv) as usize;
        }
        s.errors += r.error.is_some() as usize;
    }
    s
}
