//! Service-time laws for the infinite-server queue, the queue model built on
//! them, and a grid representation of laws with a point mass at the origin.
//!
//! Supported laws:
//!
//! * constant service `α`;
//! * exponential service with a given rate;
//! * the constant-β family
//!   `G(t) = 1 − (1−e^{−ρ})(λ+β) / (λe^{−ρ}(e^{(λ+β)t} − 1) + λ)`,
//!   admissible for `−λ ≤ β ≤ λ/(e^ρ−1)`;
//! * the general β(·) family, built from `E(t) = exp(−λt − ∫₀ᵗβ)`:
//!   `1 − G(t) = (1−e^{−ρ}) E(t) / (λ (Z − (1−e^{−ρ}) ∫₀ᵗE))`, `Z = ∫₀^∞ E`;
//! * a user-supplied d.f. with an explicit atom at zero.
//!
//! Both β families have mean ρ/λ whatever β is; ρ is a free parameter of the
//! family, not something derived from G.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::numeric::log_space;
use crate::quadrature::{gk15, Quadrature};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Tail level that defines the truncation point of a service law.
pub const TRUNCATION_TAIL: f64 = 1e-12;
/// Upper bound on the truncation point, in multiples of the mean.
pub const TRUNCATION_CAP: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceKind {
    Constant,
    Exponential,
    BetaConst,
    BetaGeneral,
    Empirical,
}

impl fmt::Display for ServiceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ServiceKind::Constant => "constant",
            ServiceKind::Exponential => "exponential",
            ServiceKind::BetaConst => "beta-const",
            ServiceKind::BetaGeneral => "beta-general",
            ServiceKind::Empirical => "empirical",
        })
    }
}

/// The constant-β member of the β family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaConst {
    pub lambda: f64,
    pub rho: f64,
    pub beta: f64,
}

impl BetaConst {
    /// Upper end of the admissible β range, λ/(e^ρ − 1).
    pub fn beta_max(lambda: f64, rho: f64) -> f64 {
        lambda / rho.exp_m1()
    }

    fn decay(&self) -> f64 {
        self.lambda + self.beta
    }

    fn k(&self) -> f64 {
        -(-self.rho).exp_m1()
    }

    pub fn tail(&self, t: f64) -> f64 {
        beta_const_tail(self.lambda, self.rho, self.beta, t)
    }

    pub fn atom0(&self) -> f64 {
        1.0 - self.k() * self.decay() / self.lambda
    }

    fn density(&self, t: f64) -> f64 {
        let c = self.decay();
        let e = (-c * t).exp();
        let q = (-self.rho).exp();
        let den = self.lambda * q * (1.0 - e) + self.lambda * e;
        self.k() * c * c * self.lambda * q * e / (den * den)
    }

    /// ∫₀ᵗ(1 − G) = −ln(e^{−ρ} + (1−e^{−ρ})e^{−(λ+β)t}) / λ.
    fn integrated_tail(&self, t: f64) -> f64 {
        let e = (-self.decay() * t).exp();
        -((-self.rho).exp() + self.k() * e).ln() / self.lambda
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v = 1.0 - rng.random::<f64>(); // (0, 1]
        let c = self.decay();
        let tail0 = self.k() * c / self.lambda;
        if v >= tail0 {
            return 0.0;
        }
        // Solve k c / (λ (e^{−ρ}(e^{ct} − 1) + 1)) = v for t.
        let x = (self.k() * c / (self.lambda * v) - 1.0) * self.rho.exp();
        x.ln_1p() / c
    }

    fn truncation_point(&self) -> f64 {
        let c = self.decay();
        let x = (self.k() * c / (self.lambda * TRUNCATION_TAIL) - 1.0) * self.rho.exp();
        if x <= 0.0 {
            0.0
        } else {
            x.ln_1p() / c
        }
    }
}

/// Closed-form d.f. of the constant-β family, evaluated as a formula: β = −λ
/// gives G ≡ 1 here even though such a law is rejected as a service model.
pub fn beta_const_df(lambda: f64, rho: f64, beta: f64, t: f64) -> f64 {
    1.0 - beta_const_tail(lambda, rho, beta, t)
}

pub fn beta_const_tail(lambda: f64, rho: f64, beta: f64, t: f64) -> f64 {
    let c = lambda + beta;
    let k = -(-rho).exp_m1();
    let den = lambda * (-rho).exp() * (c * t).exp_m1() + lambda;
    k * c / den
}

/// Construction options for the general β family.
#[derive(Debug, Clone, Copy)]
pub struct BetaGeneralOptions {
    /// Number of log-spaced points on which the admissible range is checked.
    pub range_points: usize,
    /// The range check runs up to `range_span` mean service times.
    pub range_span: f64,
    /// Cells per mean service time in the cumulative-integral table.
    pub cells_per_mean: usize,
}

impl Default for BetaGeneralOptions {
    fn default() -> Self {
        BetaGeneralOptions {
            range_points: 64,
            range_span: 20.0,
            cells_per_mean: 64,
        }
    }
}

/// The general β(·) family. Holds a cumulative table of ∫β and ∫E so that
/// each evaluation only integrates within one cell.
pub struct BetaGeneral {
    lambda: f64,
    rho: f64,
    beta: RealFn,
    k: f64,
    z: f64,
    step: f64,
    ibeta: Vec<f64>,
    ecum: Vec<f64>,
    quad: Quadrature,
}

impl fmt::Debug for BetaGeneral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BetaGeneral")
            .field("lambda", &self.lambda)
            .field("rho", &self.rho)
            .field("z", &self.z)
            .finish_non_exhaustive()
    }
}

const EXPONENT_HORIZON: f64 = 50.0;

impl BetaGeneral {
    fn new(lambda: f64, rho: f64, beta: RealFn, opts: BetaGeneralOptions) -> Result<Self> {
        check_positive("/lambda", lambda)?;
        check_positive("/rho", rho)?;
        let quad = Quadrature::new(1e-10, 1e-8);
        let alpha = rho / lambda;
        let upper = BetaConst::beta_max(lambda, rho);
        let slack = 1e-9 * lambda.max(1.0);
        for t in log_space(alpha * 1e-3, opts.range_span * alpha, opts.range_points.max(1)) {
            let ratio = quad.integrate(|u| beta(u), 0.0, t)?.value / t;
            if !ratio.is_finite() || ratio < -lambda - slack || ratio > upper + slack {
                return Err(Error::invalid(
                    "BETA_RANGE",
                    "/beta",
                    format!("(1/t)∫₀ᵗβ = {ratio} at t = {t} is outside [{}, {upper}]", -lambda),
                ));
            }
        }

        let step = alpha / opts.cells_per_mean.max(1) as f64;
        let cap = TRUNCATION_CAP * alpha;
        let mut ibeta = vec![0.0];
        let mut ecum = vec![0.0];
        let mut t = 0.0;
        loop {
            let (ib0, ec0) = (*ibeta.last().unwrap(), *ecum.last().unwrap());
            if lambda * t + ib0 > EXPONENT_HORIZON || t >= cap {
                break;
            }
            let t1 = t + step;
            let ib1 = ib0 + quad.integrate(|u| beta(u), t, t1)?.value;
            let e_cell = quad.integrate(
                |w| {
                    let mut b = |u: f64| beta(u);
                    (-lambda * w - ib0 - gk15(&mut b, t, w).0).exp()
                },
                t,
                t1,
            )?;
            ibeta.push(ib1);
            ecum.push(ec0 + e_cell.value);
            t = t1;
        }
        let mut model = BetaGeneral {
            lambda,
            rho,
            beta,
            k: -(-rho).exp_m1(),
            z: 0.0,
            step,
            ibeta,
            ecum,
            quad,
        };
        let last = model.ibeta.len() - 1;
        let t_end = last as f64 * step;
        let mut z = model.ecum[last];
        if lambda * t_end + model.ibeta[last] <= EXPONENT_HORIZON {
            let rest = quad
                .with_limit(200)
                .integrate_to_infinity(|w| model.exp_term(w).unwrap_or(f64::NAN), t_end)
                .map_err(|_| {
                    Error::invalid(
                        "BETA_DEGENERATE",
                        "/beta",
                        "∫₀^∞ exp(−λt − ∫₀ᵗβ) dt diverges: the law is degenerate (G ≡ 1)",
                    )
                })?;
            z += rest.value;
        }
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::invalid(
                "BETA_DEGENERATE",
                "/beta",
                "normalizing integral is not finite",
            ));
        }
        model.z = z;
        Ok(model)
    }

    fn cell(&self, t: f64) -> usize {
        ((t / self.step).floor() as usize).min(self.ibeta.len() - 1)
    }

    /// ∫₀ᵗ β(u) du.
    pub fn integrated_beta(&self, t: f64) -> Result<f64> {
        let i = self.cell(t);
        let t0 = i as f64 * self.step;
        Ok(self.ibeta[i] + self.quad.integrate(|u| (self.beta)(u), t0, t)?.value)
    }

    /// E(t) = exp(−λt − ∫₀ᵗβ).
    pub fn exp_term(&self, t: f64) -> Result<f64> {
        Ok((-self.lambda * t - self.integrated_beta(t)?).exp())
    }

    /// ∫₀ᵗ E(w) dw.
    pub fn cumulative_exp(&self, t: f64) -> Result<f64> {
        let i = self.cell(t);
        let t0 = i as f64 * self.step;
        let ib0 = self.ibeta[i];
        let lambda = self.lambda;
        let beta = &self.beta;
        let within_table = t - t0 <= self.step;
        let extra = self.quad.integrate(
            |w| {
                let ib = if within_table {
                    let mut b = |u: f64| beta(u);
                    ib0 + gk15(&mut b, t0, w).0
                } else {
                    self.integrated_beta(w).unwrap_or(f64::NAN)
                };
                (-lambda * w - ib).exp()
            },
            t0,
            t,
        )?;
        Ok(self.ecum[i] + extra.value)
    }

    pub fn normalizer(&self) -> f64 {
        self.z
    }

    pub fn beta(&self) -> &RealFn {
        &self.beta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn family_lambda(&self) -> f64 {
        self.lambda
    }

    fn tail(&self, t: f64) -> Result<f64> {
        let e = self.exp_term(t)?;
        let d = self.z - self.k * self.cumulative_exp(t)?;
        Ok(self.k * e / (self.lambda * d))
    }

    fn density(&self, t: f64) -> Result<f64> {
        let e = self.exp_term(t)?;
        let d = self.z - self.k * self.cumulative_exp(t)?;
        let b = (self.beta)(t);
        Ok(self.k / self.lambda * e * ((self.lambda + b) * d - self.k * e) / (d * d))
    }

    fn integrated_tail(&self, t: f64) -> Result<f64> {
        let f = self.cumulative_exp(t)?;
        Ok(-(-self.k * f / self.z).ln_1p() / self.lambda)
    }
}

/// A user-supplied d.f. with an explicit weight at zero.
pub struct Empirical {
    df: RealFn,
    atom0: f64,
    mean: f64,
    quad: Quadrature,
}

impl fmt::Debug for Empirical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Empirical")
            .field("atom0", &self.atom0)
            .field("mean", &self.mean)
            .finish_non_exhaustive()
    }
}

impl Empirical {
    fn new(df: RealFn, atom0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&atom0) {
            return Err(Error::invalid(
                "INVALID_PARAMETER",
                "/atom0",
                "atom0 must lie in [0, 1]",
            ));
        }
        let g0 = df(0.0);
        if (g0 - atom0).abs() > 1e-9 {
            return Err(Error::invalid(
                "ATOM_MISMATCH",
                "/atom0",
                format!("d.f. at 0 is {g0} but atom0 is {atom0}"),
            ));
        }
        let quad = Quadrature::new(1e-10, 1e-8);
        let mean = quad
            .with_limit(200)
            .integrate_to_infinity(|t| 1.0 - df(t), 0.0)
            .map_err(|_| Error::Divergent("∫₀^∞(1 − G) does not converge; heavy-tailed service".into()))?
            .value;
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::invalid(
                "NONPOSITIVE_MEAN",
                "/df",
                format!("service mean {mean} must be positive and finite"),
            ));
        }
        Ok(Empirical { df, atom0, mean, quad })
    }
}

#[derive(Clone)]
enum Law {
    Constant { alpha: f64 },
    Exponential { rate: f64 },
    BetaConst(BetaConst),
    BetaGeneral(Arc<BetaGeneral>),
    Empirical(Arc<Empirical>),
}

/// A validated service-time law.
#[derive(Clone)]
pub struct ServiceModel {
    law: Law,
}

impl fmt::Debug for ServiceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.law {
            Law::Constant { alpha } => write!(f, "Constant(α={alpha})"),
            Law::Exponential { rate } => write!(f, "Exponential(rate={rate})"),
            Law::BetaConst(b) => write!(f, "BetaConst(λ={}, ρ={}, β={})", b.lambda, b.rho, b.beta),
            Law::BetaGeneral(b) => write!(f, "BetaGeneral(λ={}, ρ={})", b.lambda, b.rho),
            Law::Empirical(e) => write!(f, "Empirical(α={}, atom0={})", e.mean, e.atom0),
        }
    }
}

fn check_positive(path: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "INVALID_PARAMETER",
            path,
            format!("must be positive and finite, got {x}"),
        ))
    }
}

impl ServiceModel {
    pub fn constant(alpha: f64) -> Result<Self> {
        check_positive("/alpha", alpha)?;
        Ok(ServiceModel {
            law: Law::Constant { alpha },
        })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        check_positive("/rate", rate)?;
        Ok(ServiceModel {
            law: Law::Exponential { rate },
        })
    }

    /// Constant-β law; rejects β outside [−λ, λ/(e^ρ−1)] and the zero-mean
    /// endpoint β = −λ.
    pub fn beta_const(lambda: f64, rho: f64, beta: f64) -> Result<Self> {
        check_positive("/lambda", lambda)?;
        check_positive("/rho", rho)?;
        let upper = BetaConst::beta_max(lambda, rho);
        if !beta.is_finite() || beta < -lambda || beta > upper * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "BETA_RANGE",
                "/beta",
                format!("β = {beta} is outside [{}, {upper}]", -lambda),
            ));
        }
        if beta == -lambda {
            return Err(Error::invalid(
                "BETA_DEGENERATE",
                "/beta",
                "β = −λ gives G ≡ 1 (zero mean); not a usable service law",
            ));
        }
        Ok(ServiceModel {
            law: Law::BetaConst(BetaConst { lambda, rho, beta }),
        })
    }

    pub fn beta_general(lambda: f64, rho: f64, beta: RealFn) -> Result<Self> {
        Self::beta_general_with(lambda, rho, beta, BetaGeneralOptions::default())
    }

    pub fn beta_general_with(lambda: f64, rho: f64, beta: RealFn, opts: BetaGeneralOptions) -> Result<Self> {
        Ok(ServiceModel {
            law: Law::BetaGeneral(Arc::new(BetaGeneral::new(lambda, rho, beta, opts)?)),
        })
    }

    pub fn empirical(df: RealFn, atom0: f64) -> Result<Self> {
        Ok(ServiceModel {
            law: Law::Empirical(Arc::new(Empirical::new(df, atom0)?)),
        })
    }

    /// Piecewise-linear d.f. through `(t, G)` points; G = 1 past the last point
    /// and G = G(first point) before it.
    pub fn piecewise_linear(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("DF_RANGE", "/points", "at least one point is required"));
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) || w[1].1 < w[0].1 {
                return Err(Error::invalid(
                    "DF_RANGE",
                    format!("/points/{}", i + 1),
                    "times must increase and d.f. values must not decrease",
                ));
            }
        }
        for (i, &(t, g)) in points.iter().enumerate() {
            if t < 0.0 || !(0.0..=1.0).contains(&g) {
                return Err(Error::invalid(
                    "DF_RANGE",
                    format!("/points/{i}"),
                    "need t >= 0 and 0 <= G <= 1",
                ));
            }
        }
        let atom0 = if points[0].0 == 0.0 { points[0].1 } else { 0.0 };
        let pts = points.clone();
        let df: RealFn = Arc::new(move |t: f64| {
            if t < 0.0 {
                return 0.0;
            }
            let first = pts[0];
            if t < first.0 {
                return first.1 * t / first.0;
            }
            match pts.iter().position(|p| p.0 > t) {
                None => 1.0,
                Some(j) => {
                    let (a, b) = (pts[j - 1], pts[j]);
                    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
                }
            }
        });
        Self::empirical(df, atom0)
    }

    pub fn kind(&self) -> ServiceKind {
        match self.law {
            Law::Constant { .. } => ServiceKind::Constant,
            Law::Exponential { .. } => ServiceKind::Exponential,
            Law::BetaConst(_) => ServiceKind::BetaConst,
            Law::BetaGeneral(_) => ServiceKind::BetaGeneral,
            Law::Empirical(_) => ServiceKind::Empirical,
        }
    }

    /// (λ, ρ, β) of a constant-β law.
    pub fn beta_const_params(&self) -> Option<BetaConst> {
        match self.law {
            Law::BetaConst(b) => Some(b),
            _ => None,
        }
    }

    /// The λ a β-family law was built for.
    pub fn family_lambda(&self) -> Option<f64> {
        match &self.law {
            Law::BetaConst(b) => Some(b.lambda),
            Law::BetaGeneral(b) => Some(b.lambda),
            _ => None,
        }
    }

    pub fn beta_general_parts(&self) -> Option<&BetaGeneral> {
        match &self.law {
            Law::BetaGeneral(b) => Some(b),
            _ => None,
        }
    }

    /// Mean service time α.
    pub fn mean(&self) -> f64 {
        match &self.law {
            Law::Constant { alpha } => *alpha,
            Law::Exponential { rate } => 1.0 / rate,
            Law::BetaConst(b) => b.rho / b.lambda,
            Law::BetaGeneral(b) => b.rho / b.lambda,
            Law::Empirical(e) => e.mean,
        }
    }

    /// Weight of the atom at zero, G(0).
    pub fn atom0(&self) -> f64 {
        match &self.law {
            Law::Constant { .. } | Law::Exponential { .. } => 0.0,
            Law::BetaConst(b) => b.atom0(),
            Law::BetaGeneral(b) => 1.0 - b.k / (b.lambda * b.z),
            Law::Empirical(e) => e.atom0,
        }
    }

    /// G(t).
    pub fn df(&self, t: f64) -> Result<f64> {
        Ok(1.0 - self.tail(t)?)
    }

    /// 1 − G(t), computed without cancellation where possible.
    pub fn tail(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("service d.f. needs t >= 0, got {t}")));
        }
        Ok(match &self.law {
            Law::Constant { alpha } => {
                if t >= *alpha {
                    0.0
                } else {
                    1.0
                }
            }
            Law::Exponential { rate } => (-rate * t).exp(),
            Law::BetaConst(b) => b.tail(t),
            Law::BetaGeneral(b) => b.tail(t)?.clamp(0.0, 1.0),
            Law::Empirical(e) => (1.0 - (e.df)(t)).clamp(0.0, 1.0),
        })
    }

    /// Density of the continuous part on t > 0.
    pub fn density(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("service density needs t > 0, got {t}")));
        }
        match &self.law {
            Law::Constant { alpha } => Err(Error::NoDensity(format!("constant service α = {alpha}"))),
            Law::Exponential { rate } => Ok(rate * (-rate * t).exp()),
            Law::BetaConst(b) => Ok(b.density(t)),
            Law::BetaGeneral(b) => b.density(t),
            Law::Empirical(e) => {
                let h = 1e-5 * e.mean;
                let lo = (t - h).max(0.0);
                let d = ((e.df)(t + h) - (e.df)(lo)) / (t + h - lo);
                Ok(d.max(0.0))
            }
        }
    }

    /// True when the law has a closed-form ∫₀ᵗ(1−G).
    pub fn has_exact_integrated_tail(&self) -> bool {
        !matches!(self.law, Law::Empirical(_))
    }

    /// Φ(t) = ∫₀ᵗ (1 − G(v)) dv.
    pub fn integrated_tail(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("integrated tail needs t >= 0, got {t}")));
        }
        match &self.law {
            Law::Constant { alpha } => Ok(t.min(*alpha)),
            Law::Exponential { rate } => Ok(-(-rate * t).exp_m1() / rate),
            Law::BetaConst(b) => Ok(b.integrated_tail(t)),
            Law::BetaGeneral(b) => b.integrated_tail(t),
            Law::Empirical(e) => Ok(e.quad.integrate(|v| 1.0 - (e.df)(v), 0.0, t)?.value),
        }
    }

    /// Smallest t with 1 − G(t) < 1e-12, capped at 1000 mean service times.
    pub fn truncation_point(&self) -> Result<f64> {
        let cap = TRUNCATION_CAP * self.mean();
        let t = match &self.law {
            Law::Constant { alpha } => *alpha,
            Law::Exponential { rate } => (1.0 / TRUNCATION_TAIL).ln() / rate,
            Law::BetaConst(b) => b.truncation_point(),
            _ => {
                let mut hi = self.mean();
                while self.tail(hi)? >= TRUNCATION_TAIL && hi < cap {
                    hi *= 2.0;
                }
                if hi >= cap {
                    cap
                } else {
                    let mut lo = 0.0;
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if self.tail(mid)? < TRUNCATION_TAIL {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    hi
                }
            }
        };
        Ok(t.min(cap))
    }

    /// One draw with d.f. G.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.law {
            Law::Constant { alpha } => *alpha,
            Law::Exponential { rate } => Exp::new(*rate).expect("validated rate").sample(rng),
            Law::BetaConst(b) => b.sample(rng),
            _ => {
                let u: f64 = rng.random();
                self.quantile(u).unwrap_or(f64::NAN)
            }
        }
    }

    /// Generalized inverse inf{t : G(t) ≥ u}, by bracketing and bisection.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if u <= self.atom0() {
            return Ok(0.0);
        }
        let target_tail = 1.0 - u;
        let cap = TRUNCATION_CAP * self.mean();
        let (mut lo, mut hi) = (0.0, self.mean());
        while self.tail(hi)? > target_tail {
            lo = hi;
            hi *= 2.0;
            if hi > cap {
                return Ok(cap);
            }
        }
        // Illinois false position: keeps the bracket, converges superlinearly.
        let (mut flo, mut fhi) = (self.tail(lo)? - target_tail, self.tail(hi)? - target_tail);
        let mut side = 0i8;
        for _ in 0..200 {
            if hi - lo <= 1e-13 * (1.0 + hi) {
                break;
            }
            let mut mid = if fhi != flo {
                hi - fhi * (hi - lo) / (fhi - flo)
            } else {
                0.5 * (lo + hi)
            };
            if !(mid > lo && mid < hi) {
                mid = 0.5 * (lo + hi);
            }
            let fm = self.tail(mid)? - target_tail;
            if fm == 0.0 {
                return Ok(mid);
            }
            if fm > 0.0 {
                lo = mid;
                flo = fm;
                if side == 1 {
                    fhi *= 0.5;
                }
                side = 1;
            } else {
                hi = mid;
                fhi = fm;
                if side == -1 {
                    flo *= 0.5;
                }
                side = -1;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// True when [`ServiceModel::transform`] extends to the whole plane.
    pub fn transform_is_entire(&self) -> bool {
        matches!(self.law, Law::Constant { .. } | Law::Exponential { .. })
    }

    /// Laplace–Stieltjes transform ∫e^{−st} dG(t). Closed form for constant and
    /// exponential laws; otherwise 1 − s∫₀^∞e^{−st}(1−G) by quadrature (Re s ≥ 0).
    pub fn transform(&self, s: Complex64) -> Result<Complex64> {
        match &self.law {
            Law::Constant { alpha } => Ok((-s * *alpha).exp()),
            Law::Exponential { rate } => Ok(*rate / (s + *rate)),
            _ => {
                if s.re < 0.0 {
                    return Err(Error::Domain(format!(
                        "service transform by quadrature needs Re s >= 0, got {s}"
                    )));
                }
                if s.norm() == 0.0 {
                    return Ok(Complex64::new(1.0, 0.0));
                }
                let t_end = self.truncation_point()?;
                let q = Quadrature::new(1e-12, 1e-10).with_limit(1000);
                let body = q.integrate(|t: f64| (-s * t).exp() * self.tail(t).unwrap_or(f64::NAN), 0.0, t_end)?;
                Ok(Complex64::new(1.0, 0.0) - s * body.value)
            }
        }
    }
}

/// Arrival rate plus service law; ρ = λα.
#[derive(Debug, Clone)]
pub struct QueueModel {
    lambda: f64,
    service: ServiceModel,
}

impl QueueModel {
    pub fn new(lambda: f64, service: ServiceModel) -> Result<Self> {
        check_positive("/lambda", lambda)?;
        let rho = lambda * service.mean();
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::invalid(
                "INVALID_PARAMETER",
                "/service",
                format!("traffic intensity ρ = {rho} must be positive and finite"),
            ));
        }
        Ok(QueueModel { lambda, service })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn service(&self) -> &ServiceModel {
        &self.service
    }

    pub fn rho(&self) -> f64 {
        self.lambda * self.service.mean()
    }

    /// True when the service is a constant-β law built for this queue's λ,
    /// which is when the closed-form busy-period law applies.
    pub fn is_matched_beta_const(&self) -> bool {
        self.service
            .beta_const_params()
            .is_some_and(|b| (b.lambda - self.lambda).abs() <= 1e-12 * self.lambda)
    }
}

/// A law on [0, ∞) stored as a point mass at 0 plus a density sampled on a
/// uniform grid t_i = i·step, i = 0..n.
#[derive(Debug, Clone)]
pub struct AtomicLaw {
    atom0: f64,
    density: Vec<f64>,
    step: f64,
    cumulative: Vec<f64>,
}

impl AtomicLaw {
    /// Tiny negative densities from round-off are zeroed; larger ones are an error.
    pub fn new(atom0: f64, mut density: Vec<f64>, step: f64) -> Result<Self> {
        if !(step > 0.0) || density.len() < 2 {
            return Err(Error::Domain(
                "an atomic law needs step > 0 and at least two grid points".into(),
            ));
        }
        if !(0.0..=1.0 + 1e-12).contains(&atom0) {
            return Err(Error::Domain(format!("atom weight {atom0} outside [0, 1]")));
        }
        let scale = density.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        for d in density.iter_mut() {
            if *d < 0.0 {
                if *d < -1e-9 * scale.max(1.0) {
                    return Err(Error::Domain(format!("negative density value {d}")));
                }
                *d = 0.0;
            }
        }
        let mut cumulative = Vec::with_capacity(density.len());
        cumulative.push(0.0);
        for w in density.windows(2) {
            let last = *cumulative.last().unwrap();
            cumulative.push(last + 0.5 * step * (w[0] + w[1]));
        }
        Ok(AtomicLaw {
            atom0,
            density,
            step,
            cumulative,
        })
    }

    pub fn atom0(&self) -> f64 {
        self.atom0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        self.step * (self.density.len() - 1) as f64
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.density.len()).map(move |i| i as f64 * self.step)
    }

    pub fn continuous_mass(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn total_mass(&self) -> f64 {
        self.atom0 + self.continuous_mass()
    }

    /// Mass missing from the grid (beyond the horizon or lost to discretization).
    pub fn mass_deficit(&self) -> f64 {
        1.0 - self.total_mass()
    }

    /// D.f. at t, linear within grid cells; atom included for t ≥ 0.
    pub fn df(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let pos = t / self.step;
        let n = self.density.len();
        if pos >= (n - 1) as f64 {
            return self.total_mass();
        }
        let i = pos.floor() as usize;
        let u = pos - i as f64;
        // Exact trapezoid integral of the linear interpolant on the partial cell.
        let h = u * self.step;
        let d0 = self.density[i];
        let d1 = self.density[i + 1];
        let du = d0 + (d1 - d0) * u;
        self.atom0 + self.cumulative[i] + 0.5 * h * (d0 + du)
    }

    pub fn mean(&self) -> f64 {
        let n = self.density.len();
        let mut acc = 0.0;
        for (i, d) in self.density.iter().enumerate() {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc += w * i as f64 * self.step * d;
        }
        acc * self.step
    }

    /// ∫e^{−st} dLaw(t) on the grid (trapezoid), for real s ≥ 0.
    pub fn transform(&self, s: f64) -> f64 {
        let n = self.density.len();
        let mut acc = 0.0;
        for (i, d) in self.density.iter().enumerate() {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc += w * (-s * i as f64 * self.step).exp() * d;
        }
        self.atom0 + acc * self.step
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const E_INV: f64 = 0.367_879_441_171_442_33;

    #[test]
    fn constant_df_is_a_step() {
        let g = ServiceModel::constant(1.0).unwrap();
        assert_eq!(g.df(0.5).unwrap(), 0.0);
        assert_eq!(g.df(1.5).unwrap(), 1.0);
        assert_eq!(g.df(1.0).unwrap(), 1.0);
        assert!(matches!(g.df(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn beta_const_df_values() {
        let g = ServiceModel::beta_const(1.0, 1.0, 0.0).unwrap();
        // 1 − (1−e⁻¹)/(2 − e⁻¹)
        let want = 1.0 - (1.0 - E_INV) / (2.0 - E_INV);
        assert!((g.df(1.0).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.612_699).abs() < 1e-6);
        assert!((g.df(0.0).unwrap() - E_INV).abs() < 1e-15);
        assert!((g.atom0() - E_INV).abs() < 1e-15);
    }

    #[test]
    fn beta_const_formula_handles_degenerate_endpoint() {
        for t in [0.0, 0.3, 5.0] {
            assert_eq!(beta_const_df(2.0, 0.7, -2.0, t), 1.0);
        }
        assert!(ServiceModel::beta_const(2.0, 0.7, -2.0).is_err());
        assert!(ServiceModel::beta_const(1.0, 1.0, 0.6).is_err());
        let upper = BetaConst::beta_max(1.0, 1.0);
        let top = ServiceModel::beta_const(1.0, 1.0, upper).unwrap();
        assert!(top.atom0().abs() < 1e-15);
    }

    #[test]
    fn means() {
        assert_eq!(ServiceModel::constant(2.0).unwrap().mean(), 2.0);
        assert_eq!(ServiceModel::beta_const(2.0, 1.0, 0.1).unwrap().mean(), 0.5);
        let e = ServiceModel::empirical(Arc::new(|t: f64| 1.0 - (-t).exp()), 0.0).unwrap();
        assert!((e.mean() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn heavy_tail_empirical_is_rejected() {
        let r = ServiceModel::empirical(Arc::new(|t: f64| t / (1.0 + t)), 0.0);
        assert!(matches!(r, Err(Error::Divergent(_))));
    }

    #[test]
    fn beta_const_integrated_tail_matches_quadrature() {
        let q = Quadrature::new(1e-13, 1e-12);
        for (lambda, rho, beta) in [(1.0, 1.0, 0.0), (2.0, 0.5, -1.5), (0.5, 2.0, 0.07)] {
            let g = ServiceModel::beta_const(lambda, rho, beta).unwrap();
            for t in [0.1, 1.0, 7.0] {
                let quad = q.integrate(|v| g.tail(v).unwrap(), 0.0, t).unwrap().value;
                assert!((g.integrated_tail(t).unwrap() - quad).abs() < 1e-11);
            }
            let tail_mass = q.integrate_to_infinity(|v| g.tail(v).unwrap(), 0.0).unwrap().value;
            assert!((tail_mass - rho / lambda).abs() < 1e-6 * rho / lambda);
        }
    }

    #[test]
    fn beta_general_with_zero_beta_matches_constant_family() {
        let g = ServiceModel::beta_general(1.0, 1.0, Arc::new(|_| 0.0)).unwrap();
        let c = ServiceModel::beta_const(1.0, 1.0, 0.0).unwrap();
        for t in [0.0, 0.2, 1.0, 3.3, 12.0] {
            assert!((g.df(t).unwrap() - c.df(t).unwrap()).abs() < 1e-9, "t = {t}");
            assert!((g.integrated_tail(t).unwrap() - c.integrated_tail(t).unwrap()).abs() < 1e-9);
        }
        for t in [0.2, 2.0] {
            assert!((g.density(t).unwrap() - c.density(t).unwrap()).abs() < 1e-9);
        }
        assert!((g.atom0() - E_INV).abs() < 1e-9);
    }

    #[test]
    fn beta_general_range_is_enforced() {
        // Upper bound for λ = ρ = 1 is 1/(e − 1) ≈ 0.582.
        assert!(ServiceModel::beta_general(1.0, 1.0, Arc::new(|_| 0.7)).is_err());
        assert!(ServiceModel::beta_general(1.0, 1.0, Arc::new(|u| 0.3 * (-u).exp())).is_ok());
    }

    #[test]
    fn density_matches_df_slope() {
        let g = ServiceModel::beta_const(1.5, 0.8, 0.2).unwrap();
        let h = 1e-6;
        for t in [0.1, 0.9, 4.0] {
            let fd = (g.df(t + h).unwrap() - g.df(t - h).unwrap()) / (2.0 * h);
            assert!((fd - g.density(t).unwrap()).abs() < 1e-7);
        }
        assert!(matches!(
            ServiceModel::constant(1.0).unwrap().density(0.5),
            Err(Error::NoDensity(_))
        ));
    }

    #[test]
    fn sampling_means_and_df() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = ServiceModel::constant(1.0).unwrap();
        assert!((0..10).all(|_| c.sample(&mut rng) == 1.0));
        let e = ServiceModel::exponential(1.0).unwrap();
        let n = 100_000;
        let mean = (0..n).map(|_| e.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01);
        let b = ServiceModel::beta_const(1.0, 1.0, 0.0).unwrap();
        let below = (0..n).filter(|_| b.sample(&mut rng) <= 1.0).count() as f64 / n as f64;
        assert!((below - 0.6127).abs() < 0.005);
    }

    #[test]
    fn quantile_inverts_df() {
        let g = ServiceModel::piecewise_linear(vec![(0.0, 0.1), (1.0, 0.5), (3.0, 1.0)]).unwrap();
        assert_eq!(g.quantile(0.05).unwrap(), 0.0);
        assert!((g.quantile(0.3).unwrap() - 0.5).abs() < 1e-10);
        assert!((g.quantile(0.75).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn truncation_points() {
        let b = ServiceModel::beta_const(1.0, 1.0, 0.0).unwrap();
        let t = b.truncation_point().unwrap();
        assert!((b.tail(t).unwrap() - TRUNCATION_TAIL).abs() < 1e-15);
        let e = ServiceModel::piecewise_linear(vec![(0.0, 0.0), (2.0, 1.0)]).unwrap();
        let t = e.truncation_point().unwrap();
        assert!(t <= 2.0 && t > 1.99);
    }

    #[test]
    fn transforms() {
        let s = Complex64::new(0.7, 0.4);
        let e = ServiceModel::exponential(2.0).unwrap();
        assert!((e.transform(s).unwrap() - 2.0 / (s + 2.0)).norm() < 1e-15);
        let emp = ServiceModel::empirical(Arc::new(|t: f64| 1.0 - (-2.0 * t).exp()), 0.0).unwrap();
        assert!((emp.transform(s).unwrap() - 2.0 / (s + 2.0)).norm() < 1e-9);
    }

    #[test]
    fn atomic_law_accounting() {
        // Atom 0.25 plus 0.75·Exp(1) density on [0, 40].
        let step = 0.01;
        let dens: Vec<f64> = (0..=4000).map(|i| 0.75 * (-(i as f64) * step).exp()).collect();
        let law = AtomicLaw::new(0.25, dens, step).unwrap();
        assert!((law.total_mass() - 1.0).abs() < 1e-5);
        assert!((law.mean() - 0.75).abs() < 1e-4);
        assert!((law.df(0.0) - 0.25).abs() < 1e-15);
        assert!((law.df(1.0) - (0.25 + 0.75 * (1.0 - E_INV))).abs() < 1e-5);
        assert!((law.transform(1.0) - (0.25 + 0.375)).abs() < 5e-5);
        assert!(AtomicLaw::new(0.0, vec![1.0, -0.5, 1.0], 0.1).is_err());
    }
}
