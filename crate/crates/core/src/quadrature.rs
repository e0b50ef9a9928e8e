//! Adaptive Simpson quadrature.
//!
//! Used for gains that carry no closed-form antiderivative. The interval is
//! first cut into unit-width panels so oscillatory integrands cannot fool the
//! first error estimate, then each panel is refined recursively with the
//! usual Richardson-corrected Simpson rule.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Absolute error target over the whole interval.
    pub abs_tol: f64,
    /// Relative error target, scaled by a coarse estimate of the integral.
    pub rel_tol: f64,
    /// Maximum bisection depth inside one panel.
    pub max_depth: u32,
    /// Hard cap on integrand evaluations per call.
    pub max_evals: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_depth: 48,
            max_evals: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("integrand is not finite at s = {at}")]
    NonFinite { at: f64 },
    #[error("adaptive Simpson did not converge on [{a}, {b}] (error estimate {estimate:e})")]
    NoConvergence { a: f64, b: f64, estimate: f64 },
    #[error("evaluation budget of {0} exhausted")]
    Budget(usize),
}

struct Ctx<'f, F: Fn(f64) -> f64> {
    f: &'f F,
    cfg: QuadratureConfig,
    evals: usize,
}

impl<F: Fn(f64) -> f64> Ctx<'_, F> {
    fn eval(&mut self, s: f64) -> Result<f64, QuadratureError> {
        self.evals += 1;
        if self.evals > self.cfg.max_evals {
            return Err(QuadratureError::Budget(self.cfg.max_evals));
        }
        let v = (self.f)(s);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite { at: s })
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64, QuadratureError> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let h = b - a;
        let left = h / 12.0 * (fa + 4.0 * flm + fm);
        let right = h / 12.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        // below this the difference is rounding noise, not truncation error:
        // value rounding plus abscissa rounding times the local slope
        let slope = (fm - fa).abs().max((fb - fm).abs()) / (0.5 * h);
        let floor = 16.0 * f64::EPSILON * (left.abs() + right.abs() + h * m.abs() * slope);
        // an interval a few hundred ulps wide cannot be split meaningfully;
        // abscissa rounding dominates there
        let unresolvable = h <= 512.0 * f64::EPSILON * a.abs().max(b.abs());
        if delta.abs() <= 15.0 * tol.max(floor) || unresolvable {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 || m <= a || m >= b {
            return Err(QuadratureError::NoConvergence {
                a,
                b,
                estimate: delta.abs() / 15.0,
            });
        }
        let l = self.refine(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
        let r = self.refine(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
        Ok(l + r)
    }
}

fn simpson(h: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

/// Integrates `f` over `[a, b]`. Reversed bounds flip the sign, as usual.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, cfg: QuadratureConfig) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return adaptive_simpson(f, b, a, cfg).map(|v| -v);
    }
    let panels = ((b - a).ceil() as usize).clamp(1, 1 << 20);
    let width = (b - a) / panels as f64;
    let mut ctx = Ctx { f, cfg, evals: 0 };

    // coarse pass: per-panel Simpson values and a scale for the relative target
    let mut nodes = Vec::with_capacity(panels);
    let mut coarse = 0.0;
    let mut l1 = 0.0;
    let mut fa = ctx.eval(a)?;
    for i in 0..panels {
        let lo = a + width * i as f64;
        let hi = if i + 1 == panels { b } else { a + width * (i + 1) as f64 };
        let fm = ctx.eval(0.5 * (lo + hi))?;
        let fb = ctx.eval(hi)?;
        let whole = simpson(hi - lo, fa, fm, fb);
        coarse += whole;
        l1 += whole.abs();
        nodes.push((lo, hi, fa, fm, fb, whole));
        fa = fb;
    }
    // Relative to the integral itself, floored at what rounding in a sum of
    // terms of size ∫|f| can resolve.
    let target = cfg
        .abs_tol
        .max(cfg.rel_tol * coarse.abs())
        .max(64.0 * f64::EPSILON * l1);

    let mut total = 0.0;
    for (lo, hi, fa, fm, fb, whole) in nodes {
        let tol = target * (hi - lo) / (b - a);
        total += ctx.refine(lo, hi, fa, fm, fb, whole, tol, cfg.max_depth)?;
    }
    Ok(total)
}
