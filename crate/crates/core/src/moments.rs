//! Busy-period moments E[Bⁿ].
//!
//! With C(s) = ∫₀^∞ e^{−st} e^{−λΦ(t)} λ(1−G(t)) dt the busy transform
//! satisfies (B̄(s) − 1)(C(s) − 1) = sC(s)/λ. Differentiating n times at
//! s = 0 gives
//!
//! ```text
//! E[Bⁿ] = (−1)ⁿ⁺¹ { (e^ρ/λ) n C⁽ⁿ⁻¹⁾(0) − e^ρ Σ_{p=1}^{n−1} (−1)^{n−p} C(n,p) E[B^{n−p}] C⁽ᵖ⁾(0) }.
//! ```

use std::fmt;
use std::str::FromStr;

use crate::busy_transform::{BusyTransform, TransformMethod};
use crate::distributions::{BetaConst, QueueModel, ServiceKind, ServiceModel};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::quadrature::Quadrature;

pub const DEFAULT_MOMENT_CAP: usize = 10;

/// Digits lost to cancellation beyond which a warning is recorded.
pub const CANCELLATION_DIGITS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMethod {
    /// Closed form when the service is a matched constant-β law, recursion otherwise.
    Auto,
    Recursion,
    Closed,
}

impl FromStr for MomentMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(MomentMethod::Auto),
            "recursion" => Ok(MomentMethod::Recursion),
            "closed" => Ok(MomentMethod::Closed),
            other => Err(Error::Domain(format!(
                "unknown moment method {other:?} (expected auto, recursion or closed)"
            ))),
        }
    }
}

/// Where a value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentSource {
    ClosedForm,
    /// The exact recursion for C⁽ⁿ⁾(0) under constant service.
    ConstantRecursion,
    Quadrature,
}

impl fmt::Display for MomentSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MomentSource::ClosedForm => "closed-form",
            MomentSource::ConstantRecursion => "constant-recursion",
            MomentSource::Quadrature => "quadrature",
        })
    }
}

/// Derivatives C⁽⁰⁾(0)…C⁽ᴺ⁾(0) with their provenance.
#[derive(Debug, Clone)]
pub struct CDerivatives {
    pub values: Vec<f64>,
    pub source: MomentSource,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct MomentWorkspace {
    pub queue: QueueModel,
    /// C⁽⁰⁾(0)…C⁽ᴺ⁻¹⁾(0); empty when the closed form was used.
    pub cvals: Vec<f64>,
    /// E[B¹]…E[Bᴺ].
    pub moments: Vec<f64>,
    pub sources: Vec<MomentSource>,
    pub warnings: Vec<String>,
}

impl MomentWorkspace {
    pub fn variance(&self) -> Option<f64> {
        match self.moments.as_slice() {
            [m1, m2, ..] => Some(m2 - m1 * m1),
            _ => None,
        }
    }
}

fn check_order(n_max: usize, cap: usize) -> Result<()> {
    if n_max > cap {
        return Err(Error::MomentCap { requested: n_max, cap });
    }
    Ok(())
}

fn exp_rho(queue: &QueueModel) -> Result<f64> {
    let rho = queue.rho();
    if rho > 700.0 {
        return Err(Error::Overflow(format!("e^ρ overflows for ρ = {rho}")));
    }
    Ok(rho.exp())
}

/// C⁽ⁿ⁾(0) for n = 0..=n_max: the exact recursion for constant service,
/// quadrature otherwise.
pub fn c_derivatives(queue: &QueueModel, n_max: usize) -> Result<CDerivatives> {
    c_derivatives_capped(queue, n_max, DEFAULT_MOMENT_CAP)
}

pub fn c_derivatives_capped(queue: &QueueModel, n_max: usize, cap: usize) -> Result<CDerivatives> {
    check_order(n_max, cap)?;
    if queue.service().kind() == ServiceKind::Constant {
        Ok(constant_c_derivatives(queue.lambda(), queue.service().mean(), n_max))
    } else {
        c_derivatives_by_quadrature(queue, n_max)
    }
}

/// C⁽ⁿ⁾(0) = −e^{−ρ}(−α)ⁿ − nC⁽ⁿ⁻¹⁾(0)/λ, seeded by C⁽⁰⁾(0) = 1 − e^{−ρ}.
pub fn constant_c_derivatives(lambda: f64, alpha: f64, n_max: usize) -> CDerivatives {
    let rho = lambda * alpha;
    let decay = (-rho).exp();
    let mut values = vec![-(-rho).exp_m1()];
    let mut warnings = Vec::new();
    for n in 1..=n_max {
        let mut sum = CompensatedSum::new();
        sum.add(-decay * (-alpha).powi(n as i32));
        sum.add(-(n as f64) * values[n - 1] / lambda);
        if sum.digits_lost() > CANCELLATION_DIGITS {
            warnings.push(format!(
                "C^({n})(0): recursion lost {:.1} digits to cancellation",
                sum.digits_lost()
            ));
        }
        values.push(sum.value());
    }
    CDerivatives {
        values,
        source: MomentSource::ConstantRecursion,
        warnings,
    }
}

/// C⁽ⁿ⁾(0) = ∫₀^∞ (−t)ⁿ e^{−λΦ(t)} λ(1 − G(t)) dt by adaptive quadrature.
pub fn c_derivatives_by_quadrature(queue: &QueueModel, n_max: usize) -> Result<CDerivatives> {
    let bt = BusyTransform::with_method(queue.clone(), TransformMethod::Quadrature)?;
    let lambda = queue.lambda();
    let service = queue.service();
    let t_end = bt.truncation_point();
    let bounded = service.kind() == ServiceKind::Constant;
    let mut values = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let q = Quadrature::new(1e-12 / (n + 1) as f64, 1e-11).with_limit(2000);
        let integrand = |t: f64| {
            let phi = bt.phi(t).unwrap_or(f64::NAN);
            let tail = service.tail(t).unwrap_or(f64::NAN);
            (-t).powi(n as i32) * (-lambda * phi).exp() * lambda * tail
        };
        let mut v = q.integrate(integrand, 0.0, t_end)?.value;
        if !bounded {
            v += q.integrate_to_infinity(integrand, t_end)?.value;
        }
        values.push(v);
    }
    Ok(CDerivatives {
        values,
        source: MomentSource::Quadrature,
        warnings: Vec::new(),
    })
}

/// E[B¹..Bⁿ] with the default method and cap.
pub fn busy_moments(queue: &QueueModel, n_max: usize) -> Result<Vec<f64>> {
    Ok(busy_moments_with(queue, n_max, MomentMethod::Auto, DEFAULT_MOMENT_CAP)?.moments)
}

pub fn busy_moments_with(
    queue: &QueueModel,
    n_max: usize,
    method: MomentMethod,
    cap: usize,
) -> Result<MomentWorkspace> {
    check_order(n_max, cap)?;
    if n_max == 0 {
        return Err(Error::Domain("moment order must be at least 1".into()));
    }
    let closed = match method {
        MomentMethod::Closed => {
            if !queue.is_matched_beta_const() {
                return Err(Error::Domain(format!(
                    "closed-form moments need a constant-β service built for λ = {}",
                    queue.lambda()
                )));
            }
            true
        }
        MomentMethod::Auto => queue.is_matched_beta_const(),
        MomentMethod::Recursion => false,
    };
    if closed {
        let b: BetaConst = queue.service().beta_const_params().expect("matched constant-β law");
        let moments = beta_moments(b.lambda, b.rho, b.beta, n_max)?;
        return Ok(MomentWorkspace {
            queue: queue.clone(),
            cvals: Vec::new(),
            sources: vec![MomentSource::ClosedForm; moments.len()],
            moments,
            warnings: Vec::new(),
        });
    }

    let lambda = queue.lambda();
    let e_rho = exp_rho(queue)?;
    let c = c_derivatives_capped(queue, n_max - 1, cap)?;
    let mut warnings = c.warnings.clone();
    let mut moments: Vec<f64> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut sum = CompensatedSum::new();
        sum.add(e_rho / lambda * n as f64 * c.values[n - 1]);
        for p in 1..n {
            let sign = if (n - p) % 2 == 0 { 1.0 } else { -1.0 };
            sum.add(-e_rho * sign * binomial(n, p) * moments[n - p - 1] * c.values[p]);
        }
        if sum.digits_lost() > CANCELLATION_DIGITS {
            warnings.push(format!(
                "E[B^{n}]: alternating sum lost {:.1} digits to cancellation",
                sum.digits_lost()
            ));
        }
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        moments.push(sign * sum.value());
    }
    Ok(MomentWorkspace {
        queue: queue.clone(),
        cvals: c.values,
        sources: vec![c.source; n_max],
        moments,
        warnings,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Moments of the constant-β busy law: an atom at 0 plus an exponential
/// part of weight w = ((λ+β)/λ)(1 − e^{−ρ}) and rate r = e^{−ρ}(λ+β), so
/// E[Bⁿ] = w·n!/rⁿ.
pub fn beta_moments(lambda: f64, rho: f64, beta: f64, n_max: usize) -> Result<Vec<f64>> {
    ServiceModel::beta_const(lambda, rho, beta)?;
    let c = lambda + beta;
    let weight = c / lambda * -(-rho).exp_m1();
    let rate = (-rho).exp() * c;
    let mut out = Vec::with_capacity(n_max);
    let mut factor = weight;
    for n in 1..=n_max {
        factor *= n as f64 / rate;
        out.push(factor);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::ServiceModel;
    use std::f64::consts::E;

    fn queue(lambda: f64, service: ServiceModel) -> QueueModel {
        QueueModel::new(lambda, service).unwrap()
    }

    #[test]
    fn constant_service_c_values() {
        let c = constant_c_derivatives(1.0, 1.0, 6);
        let e1 = (-1.0f64).exp();
        assert!((c.values[0] - (1.0 - e1)).abs() < 1e-15);
        assert!((c.values[1] - (2.0 * e1 - 1.0)).abs() < 1e-15);
        let q = c_derivatives_by_quadrature(&queue(1.0, ServiceModel::constant(1.0).unwrap()), 6).unwrap();
        for (a, b) in c.values.iter().zip(&q.values) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn first_moment_is_the_mean_busy_period() {
        for service in [
            ServiceModel::constant(1.0).unwrap(),
            ServiceModel::exponential(1.0).unwrap(),
            ServiceModel::beta_const(1.0, 1.0, 0.0).unwrap(),
        ] {
            let ws = busy_moments_with(&queue(1.0, service), 3, MomentMethod::Recursion, 10).unwrap();
            assert!((ws.moments[0] / (E - 1.0) - 1.0).abs() < 1e-6, "{:?}", ws.moments);
            assert!(ws.variance().unwrap() >= 0.0);
        }
    }

    #[test]
    fn beta_closed_form_values() {
        let m = beta_moments(1.0, 1.0, 0.0, 3).unwrap();
        let k = 1.0 - (-1.0f64).exp();
        assert!((m[0] - (E - 1.0)).abs() < 1e-13);
        assert!((m[1] - 2.0 * k * E * E).abs() < 1e-12);
        assert!((m[1] - 9.34156).abs() < 5e-5);
        assert!((m[2] - 6.0 * k * E.powi(3)).abs() < 1e-11);
        assert!((m[2] - 76.1788).abs() < 1e-3);

        let rho: f64 = 1.3;
        let lambda = 2.0;
        let m = beta_moments(lambda, rho, lambda / rho.exp_m1(), 1).unwrap();
        assert!((m[0] - rho.exp_m1() / lambda).abs() < 1e-13);
    }

    #[test]
    fn recursion_agrees_with_closed_form() {
        let q = queue(1.0, ServiceModel::beta_const(1.0, 1.0, 0.0).unwrap());
        let rec = busy_moments_with(&q, 5, MomentMethod::Recursion, 10).unwrap();
        let closed = busy_moments_with(&q, 5, MomentMethod::Closed, 10).unwrap();
        for (a, b) in rec.moments.iter().zip(&closed.moments) {
            assert!((a / b - 1.0).abs() < 1e-6, "{a} vs {b}");
        }
        assert_eq!(closed.sources[0], MomentSource::ClosedForm);
        assert_eq!(rec.sources[0], MomentSource::Quadrature);
    }

    #[test]
    fn lyapunov_ordering_for_constant_service() {
        let ws = busy_moments_with(
            &queue(1.0, ServiceModel::constant(1.0).unwrap()),
            6,
            MomentMethod::Auto,
            10,
        )
        .unwrap();
        let roots: Vec<f64> = ws
            .moments
            .iter()
            .enumerate()
            .map(|(i, m)| m.powf(1.0 / (i + 1) as f64))
            .collect();
        assert!(roots.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)), "{roots:?}");
    }

    #[test]
    fn exponential_second_moment_matches_transform_curvature() {
        // Oracle: second central difference of the busy transform at 0.
        let q = queue(1.0, ServiceModel::exponential(1.0).unwrap());
        let m = busy_moments(&q, 2).unwrap();
        let bt = BusyTransform::new(q).unwrap();
        let h = 1e-3;
        let (f0, f1, f2) = (
            bt.eval_real(0.0).unwrap(),
            bt.eval_real(h).unwrap(),
            bt.eval_real(2.0 * h).unwrap(),
        );
        let f3 = bt.eval_real(3.0 * h).unwrap();
        // Third-order forward difference for the second derivative.
        let d2 = (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) / (h * h);
        assert!((d2 / m[1] - 1.0).abs() < 1e-3, "{d2} vs {}", m[1]);
    }

    #[test]
    fn cap_and_method_errors() {
        let q = queue(1.0, ServiceModel::constant(1.0).unwrap());
        assert!(matches!(
            busy_moments_with(&q, 11, MomentMethod::Auto, 10),
            Err(Error::MomentCap { .. })
        ));
        assert!(busy_moments_with(&q, 2, MomentMethod::Closed, 10).is_err());
        assert_eq!("closed".parse::<MomentMethod>().unwrap(), MomentMethod::Closed);
    }
}
