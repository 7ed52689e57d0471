//! From a busy-period tail transform back to the service tail, and a
//! checker for the conditions under which that reconstruction is a tail.
//!
//! With H̄(s) the transform of H(t) = 1 − B(t), write
//! f = L⁻¹[1/(λH̄(s) + 1)] = κδ + f_c, where κ = lim_{s→∞} 1/(λH̄(s) + 1).
//! The service tail is then
//!
//! ```text
//! 1 − G(t) = λ⁻¹ |f_c(t)| / (κ + ∫₀ᵗ f_c(v) dv).
//! ```
//!
//! The running integral of f_c is obtained by inverting F_c(s)/s rather than
//! by quadrature on the output grid, so its accuracy does not depend on the
//! grid spacing.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::distributions::RealFn;
use crate::error::{Error, Result};
use crate::laplace_inversion::{invert, InversionConfig, OverS, TransformFn};

/// Points at which 1/(λH̄(s) + 1) is sampled to extrapolate κ.
const KAPPA_PROBES: [f64; 3] = [1e3, 1e4, 1e5];

/// Slack on the [0, 1] range and on monotonicity before output is rejected.
pub const TAIL_TOLERANCE: f64 = 1e-4;

pub struct TailTransform {
    hbar: Arc<dyn TransformFn>,
    lambda: f64,
    rho: f64,
    kappa: f64,
}

impl fmt::Debug for TailTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TailTransform")
            .field("lambda", &self.lambda)
            .field("rho", &self.rho)
            .field("kappa", &self.kappa)
            .finish_non_exhaustive()
    }
}

impl TailTransform {
    pub fn new(hbar: Arc<dyn TransformFn>, lambda: f64, rho: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(
                "INVALID_PARAMETER",
                "/lambda",
                format!("λ must be positive, got {lambda}"),
            ));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid(
                "INVALID_PARAMETER",
                "/rho",
                format!("ρ must be positive, got {rho}"),
            ));
        }
        let mut tt = TailTransform {
            hbar,
            lambda,
            rho,
            kappa: 0.0,
        };
        let v: Vec<f64> = KAPPA_PROBES
            .iter()
            .map(|&s| Ok(tt.reciprocal(Complex64::new(s, 0.0))?.re))
            .collect::<Result<_>>()?;
        // v(s) ≈ κ + c₁/s + c₂/s² on a decade ladder.
        let r1 = (10.0 * v[1] - v[0]) / 9.0;
        let r2 = (10.0 * v[2] - v[1]) / 9.0;
        tt.kappa = (100.0 * r2 - r1) / 99.0;
        Ok(tt)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// κ = lim_{s→∞} 1/(λH̄(s) + 1).
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    fn reciprocal(&self, s: Complex64) -> Result<Complex64> {
        Ok(1.0 / (self.lambda * self.hbar.eval(s)? + 1.0))
    }
}

/// F_c(s) = 1/(λH̄(s) + 1) − κ.
struct ContinuousPart<'a>(&'a TailTransform);

impl TransformFn for ContinuousPart<'_> {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.0.reciprocal(s)? - self.0.kappa)
    }

    fn complex_capable(&self) -> bool {
        self.0.hbar.complex_capable()
    }
}

/// Service tail values on a positive grid. Fails with a non-tail error when
/// the reconstruction leaves [0, 1] or increases.
pub fn recover_service_tail(tt: &TailTransform, grid: &[f64], cfg: &InversionConfig) -> Result<Vec<f64>> {
    if let Some(&t) = grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::Domain(format!("tail grid must be positive, got {t}")));
    }
    let part = ContinuousPart(tt);
    let running = OverS(ContinuousPart(tt));
    let mut out = Vec::with_capacity(grid.len());
    let mut largest_fc = 0.0f64;
    for &t in grid {
        let fc = invert(&part, t, cfg)?;
        let integral = invert(&running, t, cfg)?;
        let den = tt.kappa + integral;
        if !(den > 0.0) {
            return Err(Error::NonTail(format!("κ + ∫₀ᵗf_c = {den} is not positive at t = {t}")));
        }
        largest_fc = largest_fc.max(fc.abs());
        out.push(fc.abs() / (tt.lambda * den));
    }
    if largest_fc < 1e-12 {
        return Err(Error::NonTail(
            "the inverse has no continuous part: the busy period is degenerate at 0".into(),
        ));
    }
    for (i, &v) in out.iter().enumerate() {
        if !(-TAIL_TOLERANCE..=1.0 + TAIL_TOLERANCE).contains(&v) {
            return Err(Error::NonTail(format!(
                "value {v} at t = {} is outside [0, 1]",
                grid[i]
            )));
        }
    }
    let increasing = grid.windows(2).all(|w| w[1] > w[0]);
    if increasing {
        for i in 1..out.len() {
            if out[i] > out[i - 1] + TAIL_TOLERANCE {
                return Err(Error::NonTail(format!(
                    "reconstruction increases from {} to {} between t = {} and t = {}",
                    out[i - 1],
                    out[i],
                    grid[i - 1],
                    grid[i]
                )));
            }
        }
    }
    Ok(out.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
}

#[derive(Clone)]
pub struct FeasibilityProbe {
    pub a: RealFn,
    pub rho: f64,
    pub grid: Vec<f64>,
    /// Finite-difference step relative to t.
    pub relative_step: f64,
    /// |lim a| allowed, relative to max |a| on the grid.
    pub limit_tolerance: f64,
}

impl fmt::Debug for FeasibilityProbe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FeasibilityProbe")
            .field("rho", &self.rho)
            .field("grid", &self.grid)
            .field("relative_step", &self.relative_step)
            .finish_non_exhaustive()
    }
}

impl FeasibilityProbe {
    pub fn new(a: RealFn, rho: f64, grid: Vec<f64>) -> Self {
        FeasibilityProbe {
            a,
            rho,
            grid,
            relative_step: 1e-4,
            limit_tolerance: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbePoint {
    pub t: f64,
    pub a: f64,
    /// [a″(a + k) − 2a′²]/(a − k), k = 1/(e^ρ − 1).
    pub expression: f64,
}

impl ProbePoint {
    pub fn positive(&self) -> bool {
        self.expression > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub points: Vec<ProbePoint>,
    pub limit_estimate: f64,
    pub limit_ok: bool,
    pub verdict: Verdict,
}

impl FeasibilityReport {
    /// First probe point where the derivative condition fails.
    pub fn first_failure(&self) -> Option<f64> {
        self.points.iter().find(|p| !p.positive()).map(|p| p.t)
    }
}

const SINGULAR_DISTANCE: f64 = 1e-9;

pub fn check_feasibility(probe: &FeasibilityProbe) -> Result<FeasibilityReport> {
    let grid = &probe.grid;
    if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "probe grid must be positive and strictly increasing".into(),
        ));
    }
    if !(probe.rho > 0.0 && probe.rho.is_finite()) {
        return Err(Error::invalid(
            "INVALID_PARAMETER",
            "/rho",
            format!("ρ must be positive, got {}", probe.rho),
        ));
    }
    let k = 1.0 / probe.rho.exp_m1();
    let a = &probe.a;
    let mut points = Vec::with_capacity(grid.len());
    for &t in grid {
        let h = probe.relative_step * t;
        if !(h > 0.0) || t + h == t || t - h == t {
            return Err(Error::StepUnderflow(format!("step {h} at t = {t}")));
        }
        let (lo, mid, hi) = (a(t - h), a(t), a(t + h));
        if !(lo.is_finite() && mid.is_finite() && hi.is_finite()) {
            return Err(Error::Domain(format!("a(t) is not finite near t = {t}")));
        }
        // Guard the value in the displayed condition and its negative, which
        // is how the exclusion is printed in the lemma statement.
        for excluded in [k, -k] {
            let distance = (mid - excluded).abs();
            if distance < SINGULAR_DISTANCE {
                return Err(Error::NearSingular {
                    t,
                    value: mid,
                    excluded,
                    distance,
                });
            }
        }
        let d1 = (hi - lo) / (2.0 * h);
        let d2 = (hi - 2.0 * mid + lo) / (h * h);
        points.push(ProbePoint {
            t,
            a: mid,
            expression: (d2 * (mid + k) - 2.0 * d1 * d1) / (mid - k),
        });
    }

    let limit_estimate = limit_estimate(a, *grid.last().unwrap());
    let scale = points
        .iter()
        .fold(0.0f64, |m, p| m.max(p.a.abs()))
        .max(f64::MIN_POSITIVE);
    let limit_ok = limit_estimate.abs() <= probe.limit_tolerance * scale;
    let verdict = if limit_ok && points.iter().all(ProbePoint::positive) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(FeasibilityReport {
        points,
        limit_estimate,
        limit_ok,
        verdict,
    })
}

/// lim a(t) from the last decade before `t_end`, by Aitken's Δ² on three
/// log-spaced samples.
fn limit_estimate(a: &RealFn, t_end: f64) -> f64 {
    let ts = [t_end / 10.0, t_end / 10f64.sqrt(), t_end];
    let [a1, a2, a3] = ts.map(|t| a(t));
    let (d1, d2) = (a2 - a1, a3 - a2);
    let curvature = d2 - d1;
    if curvature.abs() <= 1e-14 * (a1.abs() + a2.abs() + a3.abs()) || d1 * d2 <= 0.0 {
        return a3;
    }
    let est = a3 - d2 * d2 / curvature;
    if a1.abs() >= a2.abs() && a2.abs() >= a3.abs() {
        // A shrinking sequence has its limit between 0 and its last value;
        // Aitken overshoots there for faster-than-power decay.
        est.clamp(a3.min(0.0), a3.max(0.0))
    } else {
        est
    }
}
