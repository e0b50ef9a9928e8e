//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::f64::consts::PI;
use std::process::ExitCode;

use nalgebra::{Matrix2, SymmetricEigen};
use npi_cli::presets;
use nussbaum_pi::certify::{
    check_condition_i, check_condition_ii, k_prime, lambda_matrix, lambda_minors, root_c2, select_c, zk,
};
use nussbaum_pi::gains::{running_averages, GainClass};
use nussbaum_pi::sim::{RunReport, S_MONITOR_TOL};
use nussbaum_pi::{
    certify, nussbaum_scan, run_scenario, simulate, CertifyOptions, GainSpec, Scenario, ScenarioFile, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn scenario(file: &ScenarioFile) -> Result<Scenario, String> {
    file.to_scenario().map_err(|e| format!("{}: {e}", file.id))
}

fn run(sc: &Scenario) -> Result<RunReport, String> {
    run_scenario(sc).map_err(|e| format!("{}: {e}", sc.id))
}

struct Runs {
    fig1: Vec<(Scenario, RunReport)>,
    fig2: (Scenario, RunReport),
}

fn load_runs() -> Result<Runs, String> {
    let mut fig1 = Vec::new();
    for f in presets::fig1().map_err(|e| e.to_string())? {
        let sc = scenario(&f)?;
        let r = run(&sc)?;
        fig1.push((sc, r));
    }
    let sc = scenario(&presets::fig2().map_err(|e| e.to_string())?)?;
    let r = run(&sc)?;
    Ok(Runs { fig1, fig2: (sc, r) })
}

fn fig1_run<'a>(runs: &'a Runs, id: &str) -> &'a (Scenario, RunReport) {
    runs.fig1.iter().find(|(s, _)| s.id == id).expect("preset present")
}

fn criterion_1(runs: &Runs) -> Check {
    for (sc, _) in &runs.fig1 {
        let eps = sc.plant.epsilon;
        ensure(
            eps == 0.25 && sc.plant.b == 0.5 && sc.x0 == 4.0 && sc.y0 == 4.0 && sc.t_end == 50.0 && sc.dt == 1e-3,
            format!("{} does not use the fig1 preset parameters", sc.id),
        )?;
        if let Some(l) = sc.controller.lambda() {
            ensure(l == 2.5, format!("{}: lambda {l}", sc.id))?;
        }
    }
    let (_, ng) = fig1_run(runs, "fig1_pint_ng");
    ensure(ng.trajectory.diverged(), "P-INT+NG did not trip the guard")?;
    let (_, a) = fig1_run(runs, "fig1_pint_npi");
    ensure(a.outcome.tail_max < 1e-2, format!("P-INT+nPI tail_max {:e}", a.outcome.tail_max))?;
    let (_, b) = fig1_run(runs, "fig1_pls_npi");
    ensure(b.outcome.verdict != Verdict::Converged, "P-LS+nPI classified converged")?;
    let (_, c) = fig1_run(runs, "fig1_pls_npin");
    ensure(c.outcome.tail_max < 1e-2, format!("P-LS+nPI-N tail_max {:e}", c.outcome.tail_max))?;
    Ok(format!(
        "P-INT+NG guard at t={:.3}; P-INT+nPI tail {:.1e}; P-LS+nPI {} (raw {}); P-LS+nPI-N tail {:.1e}",
        ng.trajectory.guard_tripped_at.unwrap(),
        a.outcome.tail_max,
        b.outcome.verdict,
        b.raw_verdict,
        c.outcome.tail_max
    ))
}

fn criterion_2(runs: &Runs) -> Check {
    let (sc, r) = &runs.fig2;
    ensure(r.outcome.verdict == Verdict::Converged, format!("verdict {}", r.outcome.verdict))?;
    ensure(r.outcome.tail_max < 1e-2, format!("tail_max {:e}", r.outcome.tail_max))?;
    let cert = certify(&sc.plant, &sc.controller, &CertifyOptions::default()).map_err(|e| e.to_string())?;
    ensure(cert.cond_i, "condition (i) fails")?;
    let (ok, slack) = cert.cond_ii.ok_or("condition (ii) undefined")?;
    ensure(ok, "condition (ii) fails")?;
    ensure((slack - 3.11).abs() <= 0.01, format!("slack {slack}"))?;
    let lhs = cert.alpha2 - cert.alpha1;
    let rhs = slack + lhs;
    ensure((rhs - 6.109).abs() <= 1e-3 && lhs == 3.0, format!("rhs {rhs}, lhs {lhs}"))?;
    Ok(format!("tail {:.1e}; slack {slack:.4} (rhs {rhs:.4}, lhs {lhs})", r.outcome.tail_max))
}

fn criterion_3(runs: &Runs) -> Check {
    let (_, r) = &runs.fig2;
    let (c, s) = r.s_monitor.as_ref().ok_or("S monitor not enabled on the fig2 preset")?;
    ensure((c + 77.39).abs() <= 0.01, format!("c = {c}"))?;
    ensure(
        s.max_forward_difference <= S_MONITOR_TOL * s.max_abs,
        format!("max dS/dt {:e} vs 1e-3·max|S| = {:e}", s.max_forward_difference, S_MONITOR_TOL * s.max_abs),
    )?;
    ensure(s.bound_holds(), format!("bound excess {:e}", s.max_bound_excess))?;
    Ok(format!(
        "c = {c:.4}; max forward difference {:.1e} (limit {:.1e}); bound excess {:.1e} over {} samples",
        s.max_forward_difference,
        S_MONITOR_TOL * s.max_abs,
        s.max_bound_excess,
        s.values.len()
    ))
}

/// −4Δ2 as a quadratic in c, coefficients expanded directly from Λ.
fn discriminant_direct(alpha: f64, eps: f64, lambda: f64) -> f64 {
    let base = 1.0 - eps * lambda;
    let d1 = 1.0 - eps * (lambda + alpha);
    let e2 = eps * eps;
    let k = base * (2.0 - eps * alpha);
    let a = e2 * e2;
    let b = 2.0 * k * e2 - 4.0 * d1 * base * e2;
    let g = k * k - 4.0 * d1 * base;
    b * b - 4.0 * a * g
}

fn discriminant_closed(alpha: f64, eps: f64, lambda: f64) -> f64 {
    16.0 * eps.powi(6) * lambda * lambda * (1.0 - eps * lambda) * (1.0 - eps * (lambda + alpha))
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut n = 0;
    let mut worst: f64 = 0.0;
    while n < 10_000 {
        let (alpha, eps, lambda) = (rng.gen_range(-20.0..20.0), rng.gen_range(0.001..1.0), rng.gen_range(0.01..10.0));
        if !check_condition_i(eps, lambda, alpha) {
            continue;
        }
        n += 1;
        let closed = discriminant_closed(alpha, eps, lambda);
        let err = (discriminant_direct(alpha, eps, lambda) - closed).abs() / (1.0 + closed.abs());
        worst = worst.max(err);
    }
    ensure(worst <= 1e-12, format!("worst scaled difference {worst:e}"))?;
    let (d, c) = (discriminant_direct(3.0, 0.1, 2.5), discriminant_closed(3.0, 0.1, 2.5));
    ensure((d - 3.375e-5).abs() < 1e-15 && (c - 3.375e-5).abs() < 1e-15, format!("spot {d:e} / {c:e}"))?;
    Ok(format!("10000 samples, worst {worst:.1e}; spot value {c:e} both ways"))
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut tuples, mut failures) = (0, 0);
    while tuples < 1000 {
        let eps = rng.gen_range(0.005..0.4);
        let lambda = rng.gen_range(0.1..6.0);
        let alpha1 = rng.gen_range(-5.0..10.0);
        let alpha2 = alpha1 + rng.gen_range(0.0..6.0);
        if !check_condition_i(eps, lambda, alpha2)
            || !matches!(check_condition_ii(eps, lambda, alpha1, alpha2), Ok((true, _)))
        {
            continue;
        }
        tuples += 1;
        let c = select_c(eps, lambda, alpha1, alpha2, 0.5).map_err(|e| e.to_string())?;
        let mut bad = false;
        for i in 0..=1000 {
            let alpha = alpha1 + (alpha2 - alpha1) * i as f64 / 1000.0;
            let (d1, d2) = lambda_minors(alpha, c, eps, lambda);
            let m = lambda_matrix(alpha, c, eps, lambda);
            let eig = SymmetricEigen::new(Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])).eigenvalues;
            let minors_pd = d1 > 0.0 && d2 > 0.0;
            let eig_pd = eig.min() > 0.0;
            // the oracle must agree wherever it is not within rounding of zero
            let scale = m[0][0].abs().max(m[1][1].abs()).max(m[0][1].abs());
            if !minors_pd || (!eig_pd && eig.min() < -1e-12 * scale) {
                bad = true;
            }
        }
        failures += bad as usize;
    }
    ensure(failures == 0, format!("{failures} of 1000 tuples fail"))?;
    Ok("1000 tuples x 1001 alpha points, minors and eigenvalues positive; failure rate 0".into())
}

fn criterion_6() -> Check {
    let (eps, lambda) = (0.1, 2.5);
    for i in 0..=400 {
        let alpha2 = -2.0 + 4.0 * i as f64 / 400.0;
        let c2 = root_c2(alpha2, eps, lambda).map_err(|e| e.to_string())?;
        ensure((c2 >= 0.0) == (alpha2 <= 0.0), format!("alpha2 = {alpha2}: c2 = {c2}"))?;
    }
    let c0 = root_c2(0.0, eps, lambda).map_err(|e| e.to_string())?;
    ensure(c0.abs() <= 1e-12, format!("c2(0) = {c0:e}"))?;
    Ok(format!("401 points in [-2, 2] at eps={eps}, lambda={lambda}; c2(0) = {c0:e}"))
}

fn criterion_7() -> Check {
    let zmax = 200.0 * PI;
    let n = nussbaum_scan(&GainSpec::z2_cos_z(), zmax, 20_000).map_err(|e| e.to_string())?;
    ensure(n.sup_avg > 10.0 && n.inf_avg < -10.0, format!("z²cos z range [{}, {}]", n.inf_avg, n.sup_avg))?;
    let g = GainSpec::z_cos_z();
    let grid = running_averages(&g, zmax, 20_000).map_err(|e| e.to_string())?;
    let quad = GainSpec::custom("z_cos_z_quadrature", |z| z * z.cos(), GainClass::Relaxed);
    let grid_q = running_averages(&quad, zmax, 20_000).map_err(|e| e.to_string())?;
    let mut max_avg: f64 = 0.0;
    let mut max_diff: f64 = 0.0;
    for (&(z, _, avg), &(_, _, avg_q)) in grid.iter().zip(&grid_q) {
        max_avg = max_avg.max(avg.abs());
        let oracle = (z * z.sin() + z.cos() - 1.0) / z;
        max_diff = max_diff.max((avg_q - oracle).abs()).max((avg - oracle).abs());
    }
    ensure(max_avg <= 3.0, format!("z cos z |avg| reaches {max_avg}"))?;
    ensure(max_diff <= 1e-6, format!("closed-form disagreement {max_diff:e}"))?;
    Ok(format!(
        "z²cos z avg in [{:.1}, {:.1}]; z cos z max |avg| {max_avg:.3}; oracle diff {max_diff:.1e}",
        n.inf_avg, n.sup_avg
    ))
}

fn criterion_8() -> Check {
    let file = ScenarioFile::from_toml_str(presets::UNPERTURBED_ZBOUND).map_err(|e| e.to_string())?;
    let sc = scenario(&file)?;
    ensure(
        sc.plant.f.alpha1() == 3.0 && sc.plant.f.alpha2() == 6.0 && sc.plant.b == 1.0 && sc.y0 == 4.0,
        "preset does not match the criterion",
    )?;
    let r = run(&sc)?;
    let (bound, _) = r.z_bound.ok_or("z-bound monitor not enabled")?;
    let want = 1u64.max((16.0 / (4.0 * PI)).ceil() as u64);
    ensure(bound.k_prime == want, format!("k' = {} (expected {want})", bound.k_prime))?;
    ensure(bound.k_prime == k_prime(1, 4.0), "k' disagrees with k_prime()")?;
    let zb = zk(want, 1.0);
    let worst = r.trajectory.samples.iter().map(|s| s.w).fold(f64::NEG_INFINITY, f64::max);
    ensure(r.trajectory.samples.iter().all(|s| s.w <= zb), format!("z reaches {worst} > {zb}"))?;
    Ok(format!("k' = {want}, z_k' = {zb:.4}, max z = {worst:.4}"))
}

fn sign_flip_error(sc: &Scenario) -> Result<f64, String> {
    let a = simulate(sc).map_err(|e| e.to_string())?;
    let mut f = sc.clone();
    f.x0 = -sc.x0;
    f.y0 = -sc.y0;
    let b = simulate(&f).map_err(|e| e.to_string())?;
    if a.samples.len() != b.samples.len() {
        return Ok(f64::INFINITY);
    }
    let rel = |p: f64, q: f64| (p - q).abs() / (1.0 + p.abs().max(q.abs()));
    let mut worst: f64 = 0.0;
    for (p, q) in a.samples.iter().zip(&b.samples) {
        for e in [
            rel(p.x, -q.x),
            rel(p.y, -q.y),
            rel(p.u, -q.u),
            rel(p.w, q.w),
            rel(p.q.unwrap_or(0.0), q.q.unwrap_or(0.0)),
        ] {
            worst = worst.max(e);
        }
    }
    Ok(worst)
}

fn criterion_9(runs: &Runs) -> Check {
    let all: Vec<&(Scenario, RunReport)> = runs.fig1.iter().chain(std::iter::once(&runs.fig2)).collect();
    let mut failures = Vec::new();
    let mut checked = 0;
    for (sc, r) in &all {
        if r.trajectory.diverged() {
            continue;
        }
        checked += 1;
        match r.halving {
            Some(h) if h.ok => {}
            Some(h) => failures.push(format!("{} differs by {:.3e} (tol {:.1e})", sc.id, h.difference, h.tolerance)),
            None => failures.push(format!("{}: half-step rerun diverged", sc.id)),
        }
    }
    let mut flip: f64 = 0.0;
    for (sc, _) in &all {
        flip = flip.max(sign_flip_error(sc)?);
    }
    if flip > 1e-12 {
        failures.push(format!("sign flip error {flip:e}"));
    }
    ensure(failures.is_empty(), format!("halving: {}", failures.join("; ")))?;
    Ok(format!("{checked} non-diverged runs agree at half step; sign-flip error {flip:.1e}"))
}

fn main() -> ExitCode {
    let runs = match load_runs() {
        Ok(r) => Some(r),
        Err(e) => {
            println!("could not run the figure presets: {e}");
            None
        }
    };
    let with_runs = |f: fn(&Runs) -> Check| match &runs {
        Some(r) => f(r),
        None => Err("figure runs unavailable".into()),
    };
    let results: Vec<(&str, Check)> = vec![
        ("fig1 reproduction", with_runs(criterion_1)),
        ("fig2 reproduction and certificate", with_runs(criterion_2)),
        ("Lyapunov monitor", with_runs(criterion_3)),
        ("discriminant identity", criterion_4()),
        ("positive-definiteness certificate", criterion_5()),
        ("relaxed-gain boundary", criterion_6()),
        ("Nussbaum scanner", criterion_7()),
        ("unperturbed z bound", criterion_8()),
        ("numerical hygiene", with_runs(criterion_9)),
    ];
    let mut failed = 0;
    for (i, (name, res)) in results.iter().enumerate() {
        match res {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1)
            }
        }
    }
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
