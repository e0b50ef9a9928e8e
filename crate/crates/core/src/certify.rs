//! Sufficient conditions for global boundedness and attractivity of the
//! perturbed loop under nonlinear PI control, checked numerically.
//!
//! The Lyapunov-like function behind the certificate is
//!
//! ```text
//! S = (λ/2)x² + ½M(1−ελ)(x−y)² + εcz − b∫₀ᶻκ
//! ```
//!
//! whose derivative along solutions is −M²[x y]Λ(x)[x y]ᵀ. The certificate
//! picks a constant c for which Λ is positive definite over the whole sector,
//! and checks the Nussbaum property of κ with a finite-horizon scan.

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

use crate::control::ControllerConfig;
use crate::gains::{nussbaum_scan_with, GainError, GainSpec, NussbaumScanReport, ScanThresholds, ScanVerdict};
use crate::plant::{verify_sector, PlantConfig, PlantKind, SectorCheck};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifyError {
    #[error("condition (i) prerequisite violated: negative radicand")]
    NegativeRadicand,
    #[error("condition (ii) infeasible: c1(alpha1) = {c1} >= c2(alpha2) = {c2}")]
    Infeasible { c1: f64, c2: f64 },
    #[error("epsilon0 must lie in (0, 1), got {0}")]
    BadBlend(f64),
    #[error("gain {0:?} has no envelope inverse")]
    NoEnvelope(String),
    #[error("control coefficient b must be nonzero")]
    ZeroGain,
    #[error("certificate needs a perturbed plant under nonlinear PI control")]
    NotApplicable,
    #[error(transparent)]
    Gain(#[from] GainError),
}

/// Stability condition (i): ελ < 1 and ε(λ+α2) < 1.
pub fn check_condition_i(epsilon: f64, lambda: f64, alpha2: f64) -> bool {
    epsilon * lambda < 1.0 && epsilon * (lambda + alpha2) < 1.0
}

/// Stability condition (ii). Returns (holds, slack) with
/// slack = 2λ/√(1−ελ)·[√(1−ε(λ+α1)) + √(1−ε(λ+α2))] − (α2 − α1).
pub fn check_condition_ii(epsilon: f64, lambda: f64, alpha1: f64, alpha2: f64) -> Result<(bool, f64), CertifyError> {
    let base = 1.0 - epsilon * lambda;
    let r1 = 1.0 - epsilon * (lambda + alpha1);
    let r2 = 1.0 - epsilon * (lambda + alpha2);
    if !(base > 0.0 && r1 >= 0.0 && r2 >= 0.0) {
        return Err(CertifyError::NegativeRadicand);
    }
    let rhs = 2.0 * lambda / base.sqrt() * (r1.sqrt() + r2.sqrt());
    let slack = rhs - (alpha2 - alpha1);
    Ok((slack >= 0.0, slack))
}

/// The two terms of the roots: c1,2 = −M(A ± B).
fn root_terms(alpha: f64, epsilon: f64, lambda: f64) -> Result<(f64, f64, f64), CertifyError> {
    let base = 1.0 - epsilon * lambda;
    let radicand = base * (1.0 - epsilon * (lambda + alpha));
    if !(base > 0.0 && radicand >= 0.0) {
        return Err(CertifyError::NegativeRadicand);
    }
    let a = base * (2.0 * lambda + alpha);
    let b = 2.0 * lambda * radicand.sqrt();
    // A² − B², expanded so it carries no cancellation
    let prod = base * alpha * (4.0 * lambda + base * alpha);
    Ok((a, b, prod))
}

/// Smaller root of Δ2 as a quadratic in c.
pub fn root_c1(alpha: f64, epsilon: f64, lambda: f64) -> Result<f64, CertifyError> {
    let (a, b, prod) = root_terms(alpha, epsilon, lambda)?;
    let m = 1.0 / epsilon;
    if a >= 0.0 {
        Ok(-m * (a + b))
    } else {
        Ok(-m * prod / (a - b))
    }
}

/// Larger root of Δ2 as a quadratic in c.
pub fn root_c2(alpha: f64, epsilon: f64, lambda: f64) -> Result<f64, CertifyError> {
    let (a, b, prod) = root_terms(alpha, epsilon, lambda)?;
    let m = 1.0 / epsilon;
    if a < 0.0 {
        Ok(-m * (a - b))
    } else if a + b == 0.0 {
        Ok(0.0)
    } else {
        Ok(-m * prod / (a + b))
    }
}

/// Turning point of c1(·): c1 decreases below it and increases above it.
pub fn c1_turning_point(epsilon: f64, lambda: f64) -> f64 {
    (1.0 - epsilon * lambda / (1.0 - epsilon * lambda)) / epsilon
}

/// Lower end of the admissible c interval: the largest c1(α) over the
/// sector. c1 is unimodal with an interior minimum, so the maximum sits at an
/// endpoint.
pub fn c_lower(epsilon: f64, lambda: f64, alpha1: f64, alpha2: f64) -> Result<f64, CertifyError> {
    Ok(root_c1(alpha1, epsilon, lambda)?.max(root_c1(alpha2, epsilon, lambda)?))
}

/// c = ε0·c_lo + (1−ε0)·c2(α2), with c_lo = max(c1(α1), c1(α2)).
///
/// When c1(α1) ≥ c1(α2) this is the textbook blend of c1(α1) and c2(α2).
pub fn select_c(epsilon: f64, lambda: f64, alpha1: f64, alpha2: f64, epsilon0: f64) -> Result<f64, CertifyError> {
    if !(epsilon0 > 0.0 && epsilon0 < 1.0) {
        return Err(CertifyError::BadBlend(epsilon0));
    }
    if !check_condition_i(epsilon, lambda, alpha2) {
        return Err(CertifyError::NegativeRadicand);
    }
    let c1 = root_c1(alpha1, epsilon, lambda)?;
    let c2 = root_c2(alpha2, epsilon, lambda)?;
    if c1 >= c2 {
        return Err(CertifyError::Infeasible { c1, c2 });
    }
    let lo = c_lower(epsilon, lambda, alpha1, alpha2)?;
    if lo >= c2 {
        return Err(CertifyError::Infeasible { c1: lo, c2 });
    }
    Ok(epsilon0 * lo + (1.0 - epsilon0) * c2)
}

/// The symmetric matrix Λ for a frozen value α of α(x).
pub fn lambda_matrix(alpha: f64, c: f64, epsilon: f64, lambda: f64) -> [[f64; 2]; 2] {
    let base = 1.0 - epsilon * lambda;
    let ce2 = c * epsilon * epsilon;
    let off = -0.5 * (ce2 + base * (2.0 - epsilon * alpha));
    [[1.0 - epsilon * (lambda + alpha), off], [off, base * (ce2 + 1.0)]]
}

/// Leading principal minors (Δ1, Δ2) of Λ.
pub fn lambda_minors(alpha: f64, c: f64, epsilon: f64, lambda: f64) -> (f64, f64) {
    let base = 1.0 - epsilon * lambda;
    let d1 = 1.0 - epsilon * (lambda + alpha);
    let ce2 = c * epsilon * epsilon;
    let t = ce2 + base * (2.0 - epsilon * alpha);
    (d1, d1 * base * (ce2 + 1.0) - 0.25 * t * t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminantCheck {
    /// B_c² − 4A_cΓ_c, evaluated term by term.
    pub lhs: f64,
    /// 16ε⁶λ²(1−ελ)[1−ε(λ+α)].
    pub rhs: f64,
    pub ok: bool,
}

/// Compares the discriminant of Δ2 (as a quadratic in c) against its
/// factored form. The relative difference is measured against the size of
/// the two terms being subtracted.
pub fn discriminant_identity_check(alpha: f64, epsilon: f64, lambda: f64) -> DiscriminantCheck {
    let base = 1.0 - epsilon * lambda;
    let e2 = epsilon * epsilon;
    let ac = e2 * e2;
    let bc = 2.0 * e2 * epsilon * base * (alpha + 2.0 * lambda);
    let gc = e2 * base * alpha * (4.0 * lambda + base * alpha);
    let bsq = bc * bc;
    let four_ag = 4.0 * ac * gc;
    let lhs = bsq - four_ag;
    let rhs = 16.0 * e2 * e2 * e2 * lambda * lambda * base * (1.0 - epsilon * (lambda + alpha));
    let scale = bsq.abs().max(four_ag.abs()).max(rhs.abs());
    let ok = (lhs - rhs).abs() <= 1e-12 * scale || lhs == rhs;
    DiscriminantCheck { lhs, rhs, ok }
}

/// z_k = (π/2)[4k + 1 + sgn(b)].
pub fn zk(k: u64, b: f64) -> f64 {
    let sgn = if b > 0.0 { 1.0 } else if b < 0.0 { -1.0 } else { 0.0 };
    PI / 2.0 * (4.0 * k as f64 + 1.0 + sgn)
}

/// Smallest k0 such that |b|α0(2k0π) ≥ max(|α1|,|α2|) + λ.
pub fn k0_bound(g: &GainSpec, b: f64, alpha1: f64, alpha2: f64, lambda: f64) -> Result<u64, CertifyError> {
    if b == 0.0 {
        return Err(CertifyError::ZeroGain);
    }
    let threshold = (alpha1.abs().max(alpha2.abs()) + lambda) / b.abs();
    let inv = g
        .envelope_inverse(threshold)
        .ok_or_else(|| CertifyError::NoEnvelope(g.id().to_string()))?;
    Ok((inv / (2.0 * PI)).ceil().max(0.0) as u64)
}

/// k' = max(k0, ⌈y0²/4π⌉); z stays below z_{k'} on unperturbed runs.
pub fn k_prime(k0: u64, y0: f64) -> u64 {
    k0.max((y0 * y0 / (4.0 * PI)).ceil() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub epsilon0: f64,
    /// Points on the α grid over [α1, α2] where the minors are checked.
    pub alpha_grid: usize,
    pub scan_z_max: f64,
    pub scan_samples: usize,
    pub thresholds: ScanThresholds,
    /// Half-width of the x range over which the sector claim is sampled.
    pub sector_range: f64,
    pub sector_samples: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            epsilon0: 0.5,
            alpha_grid: 1001,
            scan_z_max: 200.0 * PI,
            scan_samples: 20_000,
            thresholds: ScanThresholds::default(),
            sector_range: 50.0,
            sector_samples: 10_001,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub epsilon: f64,
    pub lambda: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub sector: SectorCheck,
    pub cond_i: bool,
    /// (holds, slack); absent when condition (i) already rules out the radicals.
    pub cond_ii: Option<(bool, f64)>,
    pub cond_iii: NussbaumScanReport,
    pub relaxed_property_seen: bool,
    pub c1_at_alpha1: Option<f64>,
    pub c2_at_alpha2: Option<f64>,
    pub c_lower: Option<f64>,
    pub c_selected: Option<f64>,
    pub min_delta1: Option<f64>,
    pub min_delta2: Option<f64>,
    /// c2(α2) ≥ 0: the gain only needs the relaxed Nussbaum property.
    pub relaxed_applicable: bool,
}

impl CertificateReport {
    pub fn gain_ok(&self) -> bool {
        self.cond_iii.verdict == ScanVerdict::ConsistentWithNussbaum
            || (self.relaxed_applicable && self.relaxed_property_seen)
    }

    pub fn minors_positive(&self) -> bool {
        matches!((self.min_delta1, self.min_delta2), (Some(d1), Some(d2)) if d1 > 0.0 && d2 > 0.0)
    }

    pub fn feasible(&self) -> bool {
        self.sector.pass
            && self.cond_i
            && matches!(self.cond_ii, Some((true, _)))
            && self.c_selected.is_some()
            && self.minors_positive()
            && self.gain_ok()
    }

    /// `key=value` lines in a fixed order.
    pub fn render(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map_or_else(|| "none".to_string(), |x| format!("{x:.17e}"))
        }
        let mut s = String::new();
        let (ii, slack) = match self.cond_ii {
            Some((ok, slack)) => (ok.to_string(), format!("{slack:.17e}")),
            None => ("false".to_string(), "none".to_string()),
        };
        let _ = writeln!(s, "epsilon={:.17e}", self.epsilon);
        let _ = writeln!(s, "lambda={:.17e}", self.lambda);
        let _ = writeln!(s, "alpha1={:.17e}", self.alpha1);
        let _ = writeln!(s, "alpha2={:.17e}", self.alpha2);
        let _ = writeln!(s, "sector_ok={}", self.sector.pass);
        let _ = writeln!(s, "sector_margin={:.17e}", self.sector.worst_margin);
        let _ = writeln!(s, "cond_i={}", self.cond_i);
        let _ = writeln!(s, "cond_ii={ii}");
        let _ = writeln!(s, "cond_ii_slack={slack}");
        let _ = writeln!(s, "cond_iii={}", self.cond_iii.verdict);
        let _ = writeln!(s, "scan_sup_avg={:.17e}", self.cond_iii.sup_avg);
        let _ = writeln!(s, "scan_inf_avg={:.17e}", self.cond_iii.inf_avg);
        let _ = writeln!(s, "relaxed_property_seen={}", self.relaxed_property_seen);
        let _ = writeln!(s, "relaxed_applicable={}", self.relaxed_applicable);
        let _ = writeln!(s, "c1_at_alpha1={}", opt(self.c1_at_alpha1));
        let _ = writeln!(s, "c2_at_alpha2={}", opt(self.c2_at_alpha2));
        let _ = writeln!(s, "c_lower={}", opt(self.c_lower));
        let _ = writeln!(s, "c_selected={}", opt(self.c_selected));
        let _ = writeln!(s, "min_delta1={}", opt(self.min_delta1));
        let _ = writeln!(s, "min_delta2={}", opt(self.min_delta2));
        let _ = writeln!(s, "feasible={}", self.feasible());
        s
    }
}

/// Minima of (Δ1, Δ2) over `n` evenly spaced α in [α1, α2].
pub fn grid_minors(c: f64, epsilon: f64, lambda: f64, alpha1: f64, alpha2: f64, n: usize) -> (f64, f64) {
    let n = n.max(2);
    let mut m1 = f64::INFINITY;
    let mut m2 = f64::INFINITY;
    for i in 0..n {
        let alpha = alpha1 + (alpha2 - alpha1) * i as f64 / (n - 1) as f64;
        let (d1, d2) = lambda_minors(alpha, c, epsilon, lambda);
        m1 = m1.min(d1);
        m2 = m2.min(d2);
    }
    (m1, m2)
}

/// Certificate from raw parameters; the gain scan is supplied by the caller
/// so sweeps can share it across cells.
pub fn certify_parameters(
    epsilon: f64,
    lambda: f64,
    alpha1: f64,
    alpha2: f64,
    sector: SectorCheck,
    scan: NussbaumScanReport,
    opts: &CertifyOptions,
) -> CertificateReport {
    let cond_i = check_condition_i(epsilon, lambda, alpha2);
    let cond_ii = check_condition_ii(epsilon, lambda, alpha1, alpha2).ok();
    let c1 = root_c1(alpha1, epsilon, lambda).ok();
    let c2 = root_c2(alpha2, epsilon, lambda).ok();
    let lo = c_lower(epsilon, lambda, alpha1, alpha2).ok();
    let c_selected = if matches!(cond_ii, Some((true, _))) {
        select_c(epsilon, lambda, alpha1, alpha2, opts.epsilon0).ok()
    } else {
        None
    };
    let (min_delta1, min_delta2) = match c_selected {
        Some(c) => {
            let (a, b) = grid_minors(c, epsilon, lambda, alpha1, alpha2, opts.alpha_grid);
            (Some(a), Some(b))
        }
        None => (None, None),
    };
    let relaxed_property_seen = scan.relaxed_property_seen(opts.thresholds);
    CertificateReport {
        epsilon,
        lambda,
        alpha1,
        alpha2,
        sector,
        cond_i,
        cond_ii,
        cond_iii: scan,
        relaxed_property_seen,
        c1_at_alpha1: c1,
        c2_at_alpha2: c2,
        c_lower: lo,
        c_selected,
        min_delta1,
        min_delta2,
        relaxed_applicable: c2.is_some_and(|v| v >= 0.0),
    }
}

pub fn certify(plant: &PlantConfig, controller: &ControllerConfig, opts: &CertifyOptions) -> Result<CertificateReport, CertifyError> {
    let (lambda, gain) = match controller {
        ControllerConfig::NonlinearPi { lambda, gain } if plant.kind == PlantKind::Perturbed => (*lambda, gain),
        _ => return Err(CertifyError::NotApplicable),
    };
    let scan = nussbaum_scan_with(gain, opts.scan_z_max, opts.scan_samples, opts.thresholds)?;
    let sector = verify_sector(&plant.f, -opts.sector_range, opts.sector_range, opts.sector_samples);
    Ok(certify_parameters(
        plant.epsilon,
        lambda,
        plant.f.alpha1(),
        plant.f.alpha2(),
        sector,
        scan,
        opts,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::SectorNonlinearity;
    use approx::assert_relative_eq;

    #[test]
    fn condition_i_examples() {
        assert!(check_condition_i(0.25, 2.5, 1.0));
        assert!(check_condition_i(0.1, 2.5, 6.0));
        assert!(!check_condition_i(0.5, 2.5, 0.0));
    }

    #[test]
    fn condition_ii_examples() {
        let (ok, slack) = check_condition_ii(0.1, 2.5, 3.0, 6.0).unwrap();
        // oracle: (5/√0.75)(√0.45 + √0.15) − 3
        let rhs = 5.0 / 0.75f64.sqrt() * (0.45f64.sqrt() + 0.15f64.sqrt());
        assert!(ok);
        assert_relative_eq!(slack, rhs - 3.0, max_relative = 1e-14);
        assert!((slack - 3.109).abs() < 1e-3);

        let (_, slack) = check_condition_ii(1e-9, 2.5, -5.0, 5.0).unwrap();
        assert!(slack.abs() < 1e-7, "{slack}");

        let (ok, slack) = check_condition_ii(0.1, 2.5, 0.0, 0.0).unwrap();
        assert!(ok && slack > 0.0);

        assert_eq!(check_condition_ii(0.5, 2.5, 0.0, 0.0), Err(CertifyError::NegativeRadicand));
    }

    #[test]
    fn root_examples() {
        assert_eq!(root_c2(0.0, 0.25, 2.5).unwrap(), 0.0);
        assert_eq!(root_c2(0.0, 0.1, 1.0).unwrap(), 0.0);
        let c1 = root_c1(3.0, 0.1, 2.5).unwrap();
        assert_relative_eq!(c1, -10.0 * (6.0 + 5.0 * 0.3375f64.sqrt()), max_relative = 1e-14);
        assert!((c1 + 89.05).abs() < 5e-3);
        let c2 = root_c2(6.0, 0.1, 2.5).unwrap();
        assert_relative_eq!(c2, -10.0 * (8.25 - 5.0 * 0.1125f64.sqrt()), max_relative = 1e-13);
        assert!((c2 + 65.73).abs() < 5e-3);
        assert_eq!(root_c1(8.0, 0.1, 2.5), Err(CertifyError::NegativeRadicand));
        assert_eq!(root_c2(0.0, 0.5, 2.5), Err(CertifyError::NegativeRadicand));
    }

    #[test]
    fn roots_agree_with_naive_formula() {
        for &(alpha, eps, lam) in &[(3.0, 0.1, 2.5), (-7.0, 0.2, 1.0), (-30.0, 0.05, 0.5), (1.0, 0.25, 2.5)] {
            let m = 1.0 / eps;
            let base: f64 = 1.0 - eps * lam;
            let rad = (base * (1.0 - eps * (lam + alpha))).sqrt();
            let n1 = -m * (base * (2.0 * lam + alpha) + 2.0 * lam * rad);
            let n2 = -m * (base * (2.0 * lam + alpha) - 2.0 * lam * rad);
            let c1 = root_c1(alpha, eps, lam).unwrap();
            let c2 = root_c2(alpha, eps, lam).unwrap();
            assert!((c1 - n1).abs() <= 1e-10 * (1.0 + n1.abs()));
            assert!((c2 - n2).abs() <= 1e-10 * (1.0 + n2.abs()));
            // both are roots of Δ2
            assert!(lambda_minors(alpha, c1, eps, lam).1.abs() < 1e-9);
            assert!(lambda_minors(alpha, c2, eps, lam).1.abs() < 1e-9);
        }
    }

    #[test]
    fn select_c_examples() {
        let c = select_c(0.1, 2.5, 3.0, 6.0, 0.5).unwrap();
        let mid = 0.5 * (root_c1(3.0, 0.1, 2.5).unwrap() + root_c2(6.0, 0.1, 2.5).unwrap());
        assert_relative_eq!(c, mid, max_relative = 1e-14);
        assert!((c + 77.39).abs() < 5e-3);

        let c = select_c(0.1, 2.5, 3.0, 6.0, 1e-6).unwrap();
        assert!((c - root_c2(6.0, 0.1, 2.5).unwrap()).abs() < 1e-3);

        let c = select_c(0.25, 2.5, 1.0, 1.0, 0.5).unwrap();
        assert!(c.is_finite());
        let (d1, d2) = lambda_minors(1.0, c, 0.25, 2.5);
        assert!(d1 > 0.0 && d2 > 0.0);

        assert!(matches!(select_c(0.1, 2.5, -20.0, 6.0, 0.5), Err(CertifyError::Infeasible { .. })));
        assert_eq!(select_c(0.1, 2.5, 3.0, 6.0, 1.0), Err(CertifyError::BadBlend(1.0)));
        assert_eq!(select_c(0.5, 2.5, 0.0, 0.0, 0.5), Err(CertifyError::NegativeRadicand));
    }

    #[test]
    fn blend_from_c1_at_alpha1_alone_can_fail() {
        // α2 on the rising branch of c1: c1(α2) > c1(α1)
        let (eps, lam, a1, a2) = (0.1, 2.5, 20.0 / 3.0, 7.49);
        assert!(check_condition_i(eps, lam, a2));
        assert!(check_condition_ii(eps, lam, a1, a2).unwrap().0);
        let c1a = root_c1(a1, eps, lam).unwrap();
        let c1b = root_c1(a2, eps, lam).unwrap();
        let c2b = root_c2(a2, eps, lam).unwrap();
        assert!(c1b > c1a);
        let textbook = 0.5 * c1a + 0.5 * c2b;
        assert!(lambda_minors(a2, textbook, eps, lam).1 < 0.0);

        let c = select_c(eps, lam, a1, a2, 0.5).unwrap();
        let (m1, m2) = grid_minors(c, eps, lam, a1, a2, 1001);
        assert!(m1 > 0.0 && m2 > 0.0);
    }

    #[test]
    fn minors_examples() {
        let (d1, d2) = lambda_minors(6.0, -77.39, 0.1, 2.5);
        assert_relative_eq!(d1, 0.15, max_relative = 1e-12);
        assert!(d2 > 0.0);
        let c1 = root_c1(3.0, 0.1, 2.5).unwrap();
        assert!(lambda_minors(3.0, c1, 0.1, 2.5).1.abs() < 1e-9);
        let (d1, d2) = lambda_minors(0.0, 0.0, 0.25, 2.5);
        assert_eq!(d1, 0.375);
        assert_eq!(d2, 0.0);
    }

    #[test]
    fn matrix_matches_expanded_derivative() {
        // Ṡ = λαx² − M²(1−ελ)(x−y)² + M(1−ελ)αx(x−y) + cxy − c(1−ελ)y² = −M²[x y]Λ[x y]ᵀ
        let (eps, lam) = (0.2, 1.7);
        let m = 1.0 / eps;
        let base = 1.0 - eps * lam;
        for &(x, y, alpha, c) in &[(1.0f64, 2.0f64, 0.5, -3.0), (-0.3, 4.0, -2.0, 7.0), (2.5, -1.5, 1.1, -20.0)] {
            let direct = lam * alpha * x * x - m * m * base * (x - y).powi(2)
                + m * base * alpha * x * (x - y)
                + c * x * y
                - c * base * y * y;
            let l = lambda_matrix(alpha, c, eps, lam);
            let quad = l[0][0] * x * x + 2.0 * l[0][1] * x * y + l[1][1] * y * y;
            assert_relative_eq!(direct, -m * m * quad, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn discriminant_examples() {
        let d = discriminant_identity_check(3.0, 0.1, 2.5);
        assert!(d.ok);
        assert_relative_eq!(d.lhs, 3.375e-5, max_relative = 1e-12);
        assert_relative_eq!(d.rhs, 3.375e-5, max_relative = 1e-12);
        // B = 0.012, 4AΓ = 1.1025e-4
        let (eps, lam, alpha) = (0.1f64, 2.5, 3.0);
        let b = 2.0 * eps.powi(3) * 0.75 * (alpha + 2.0 * lam);
        assert_relative_eq!(b, 0.012, max_relative = 1e-12);

        let alpha = 1.0 / 0.1 - 2.5;
        let d = discriminant_identity_check(alpha, 0.1, 2.5);
        assert!(d.ok);
        assert!(d.rhs.abs() < 1e-20 && d.lhs.abs() < 1e-18);

        let d = discriminant_identity_check(3.0, 0.1, 1e-12);
        assert!(d.ok);
        assert!(d.lhs.abs() < 1e-20 && d.rhs.abs() < 1e-20);
    }

    #[test]
    fn k0_and_zk_examples() {
        assert_eq!(k0_bound(&GainSpec::z2_cos_z(), 1.0, 3.0, 6.0, 2.5).unwrap(), 1);
        assert_eq!(zk(0, 1.0), PI);
        assert_eq!(zk(0, -1.0), 0.0);
        assert_eq!(zk(1, 1.0), 3.0 * PI);
        assert_eq!(zk(1, -2.0), 2.0 * PI);
        assert_eq!(k_prime(1, 4.0), 2);
        assert!(matches!(
            k0_bound(&GainSpec::z2_sin_z(), 1.0, 3.0, 6.0, 2.5),
            Err(CertifyError::NoEnvelope(_))
        ));
        assert_eq!(k0_bound(&GainSpec::z2_cos_z(), 0.0, 3.0, 6.0, 2.5), Err(CertifyError::ZeroGain));
    }

    #[test]
    fn k0_meets_the_threshold_and_is_minimal() {
        for &(b, a1, a2, lam) in &[(1.0, 3.0, 6.0, 2.5), (-0.5, -4.0, 1.0, 10.0), (0.1, 0.0, 0.0, 0.3)] {
            for g in [GainSpec::z_cos_z(), GainSpec::z2_cos_z()] {
                let k0 = k0_bound(&g, b, a1, a2, lam).unwrap();
                let threshold = (f64::max(a1.abs(), a2.abs()) + lam) / f64::abs(b);
                let at = |k: u64| f64::abs(b) * g.envelope(2.0 * k as f64 * PI).unwrap();
                assert!(at(k0) * f64::abs(b).recip() >= threshold * (1.0 - 1e-12));
                if k0 > 0 {
                    assert!(at(k0 - 1) / f64::abs(b) < threshold);
                }
            }
        }
    }

    #[test]
    fn fig2_certificate() {
        let plant = PlantConfig::perturbed(SectorNonlinearity::sin_squared(3.0, 3.0), 1.0, 0.1).unwrap();
        let ctrl = ControllerConfig::nonlinear_pi(2.5, GainSpec::z2_sin_z()).unwrap();
        let r = certify(&plant, &ctrl, &CertifyOptions::default()).unwrap();
        assert!(r.cond_i);
        let (ok, slack) = r.cond_ii.unwrap();
        assert!(ok && (slack - 3.11).abs() < 0.01);
        assert_eq!(r.cond_iii.verdict, ScanVerdict::ConsistentWithNussbaum);
        assert!((r.c_selected.unwrap() + 77.39).abs() < 0.01);
        assert!(!r.relaxed_applicable);
        assert!(r.feasible());
        let text = r.render();
        assert!(text.contains("feasible=true\n"));
        assert!(text.contains("cond_iii=consistent_with_nussbaum\n"));
    }

    #[test]
    fn fig1_certificates() {
        let opts = CertifyOptions::default();
        let pint = PlantConfig::perturbed(SectorNonlinearity::zero(), 0.5, 0.25).unwrap();
        let pls = PlantConfig::perturbed(SectorNonlinearity::linear(1.0), 0.5, 0.25).unwrap();
        let npi = ControllerConfig::nonlinear_pi(2.5, GainSpec::z_cos_z()).unwrap();
        let npin = ControllerConfig::nonlinear_pi(2.5, GainSpec::z2_cos_z()).unwrap();
        // stable integrator: relaxed property is enough for z cos z
        let r = certify(&pint, &npi, &opts).unwrap();
        assert!(r.relaxed_applicable && r.feasible());
        // unstable plant: z cos z is not a Nussbaum gain
        let r = certify(&pls, &npi, &opts).unwrap();
        assert!(r.cond_i && !r.relaxed_applicable && !r.feasible());
        assert!(certify(&pls, &npin, &opts).unwrap().feasible());
        assert_eq!(
            certify(&pint, &ControllerConfig::nussbaum_gain(), &opts),
            Err(CertifyError::NotApplicable)
        );
    }

    #[test]
    fn bad_sector_claim_blocks_the_certificate() {
        let f = SectorNonlinearity::sin_squared(3.0, 3.0).with_bounds(3.0, 5.0).unwrap();
        let plant = PlantConfig::perturbed(f, 1.0, 0.1).unwrap();
        let ctrl = ControllerConfig::nonlinear_pi(2.5, GainSpec::z2_sin_z()).unwrap();
        let r = certify(&plant, &ctrl, &CertifyOptions::default()).unwrap();
        assert!(!r.sector.pass && !r.feasible());
    }
}
