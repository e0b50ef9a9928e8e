use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use npi_cli::run::certificate_applies;
use npi_cli::sweep::{summarize, write_table};
use npi_cli::{reproduce, run_file, run_sweep, Figure, Overrides, RunOutput};
use nussbaum_pi::gains::ScanThresholds;
use nussbaum_pi::{certify, nussbaum_scan, CertifyOptions, GainSpec, ScenarioFile, SweepFile};

/// Nonlinear PI / Nussbaum-gain control: simulation, certificates, sweeps.
#[derive(Parser)]
#[command(name = "npi", version)]
struct Cli {
    /// Directory for CSV, SVG and manifest files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    svg: bool,
    /// Override the integration step.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Override the simulation horizon.
    #[arg(long, global = true)]
    t_end: Option<f64>,
    /// Seed for randomized sweep grids.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario file.
    Simulate { config: PathBuf },
    /// Check the sufficient conditions for a scenario; exit 1 if infeasible.
    Certify { config: PathBuf },
    /// Rerun the preset scenarios behind a figure.
    Reproduce {
        #[arg(value_enum)]
        figure: FigureArg,
    },
    /// Certify (and optionally simulate) every cell of a grid.
    Sweep { grid: PathBuf },
    /// Finite-horizon scan of a gain's running average.
    NussbaumScan {
        gain_id: String,
        #[arg(long, default_value_t = 200.0 * std::f64::consts::PI)]
        zmax: f64,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureArg {
    Fig1,
    Fig2,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn print_run(r: &RunOutput) {
    let m = &r.manifest;
    let o = &m.outcome;
    println!("id={}", m.scenario_id);
    println!("config_hash={}", m.config_hash);
    println!("verdict={}", o.verdict);
    println!("raw_verdict={}", o.raw_verdict);
    println!("tail_max={:e}", o.tail_max);
    println!("sup_abs_y={:e}", o.sup_abs_y);
    if let Some(t) = o.guard_tripped_at {
        println!("guard_tripped_at={t}");
    }
    if let (Some(ok), Some(d)) = (o.halving_ok, o.halving_difference) {
        println!("halving_ok={ok}");
        println!("halving_difference={d:e}");
    }
    if let Some(s) = &o.s_monitor {
        println!("s_c={}", s.c);
        println!("s_nonincreasing={}", s.nonincreasing);
        println!("s_bound_holds={}", s.bound_holds);
    }
    if let Some(z) = &o.z_bound {
        println!("z_bound={} (k'={})", z.z_bound, z.k_prime);
        println!("z_max={}", z.z_max);
        println!("z_bound_ok={}", z.ok && z.zdot_ok);
    }
    if let Some(c) = &m.certificate {
        println!("certificate_feasible={}", c.feasible);
    }
    println!("csv={}", m.csv.display());
    if let Some(p) = &m.svg {
        println!("svg={}", p.display());
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let overrides = Overrides {
        dt: cli.dt,
        t_end: cli.t_end,
    };
    match cli.command {
        Command::Simulate { config } => {
            let file = ScenarioFile::from_toml_str(&read(&config)?)
                .with_context(|| format!("parsing {}", config.display()))?;
            let out = run_file(file, overrides, &cli.out_dir, cli.svg)?;
            print_run(&out);
        }
        Command::Certify { config } => {
            let mut file = ScenarioFile::from_toml_str(&read(&config)?)
                .with_context(|| format!("parsing {}", config.display()))?;
            overrides.apply(&mut file);
            let sc = file.to_scenario()?;
            if !certificate_applies(&sc) {
                bail!("certificate needs a perturbed plant under nonlinear PI control");
            }
            let report = certify(&sc.plant, &sc.controller, &CertifyOptions::default())?;
            print!("{}", report.render());
            if !report.feasible() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Reproduce { figure } => {
            let fig = match figure {
                FigureArg::Fig1 => Figure::Fig1,
                FigureArg::Fig2 => Figure::Fig2,
            };
            for r in reproduce(fig, overrides, &cli.out_dir, cli.svg)? {
                let o = &r.manifest.outcome;
                let cert = r.manifest.certificate.as_ref().map_or("n/a".to_string(), |c| c.feasible.to_string());
                println!(
                    "{:<16} verdict={:<22} tail_max={:<10.3e} halving_ok={:<5} certified={}",
                    r.manifest.scenario_id,
                    o.verdict,
                    o.tail_max,
                    o.halving_ok.map_or("n/a".to_string(), |b| b.to_string()),
                    cert
                );
            }
        }
        Command::Sweep { grid } => {
            let file = SweepFile::from_toml_str(&read(&grid)?).with_context(|| format!("parsing {}", grid.display()))?;
            let mut file = file;
            overrides.apply(&mut file.base);
            let rows = run_sweep(&file, cli.seed)?;
            fs::create_dir_all(&cli.out_dir).with_context(|| format!("creating {}", cli.out_dir.display()))?;
            let path = cli.out_dir.join(format!("{}_sweep.csv", file.base.id));
            let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_table(BufWriter::new(f), &rows).with_context(|| format!("writing {}", path.display()))?;
            let s = summarize(&rows);
            println!("table={}", path.display());
            println!("cells={}", s.cells);
            println!("certified={}", s.certified);
            println!("simulated={}", s.simulated);
            println!("converged={}", s.converged);
            println!("certified_not_converged={}", s.certified_not_converged);
            println!("cell_errors={}", s.errors);
        }
        Command::NussbaumScan { gain_id, zmax, samples } => {
            let g = GainSpec::parse(&gain_id)?;
            let r = nussbaum_scan(&g, zmax, samples)?;
            println!("gain={}", g.id());
            println!("claimed_class={:?}", g.claimed_class());
            println!("z_max={zmax}");
            println!("samples={samples}");
            println!("sup_avg={:e}", r.sup_avg);
            println!("inf_avg={:e}", r.inf_avg);
            println!("sup_integral={:e}", r.sup_integral);
            println!("inf_integral={:e}", r.inf_integral);
            println!("relaxed_property_seen={}", r.relaxed_property_seen(ScanThresholds::default()));
            println!("verdict={}", r.verdict);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
