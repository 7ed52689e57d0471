//! The busy-period Laplace transform of the M|G|∞ queue,
//!
//! ```text
//! B̄(s) = 1 + (s − 1/∫₀^∞ e^{−st − λΦ(t)} dt) / λ,     Φ(t) = ∫₀ᵗ(1 − G(v)) dv.
//! ```
//!
//! Splitting the integral at a truncation point T past which 1 − G is
//! negligible gives s·∫₀^∞… = e^{−λΦ(T)} + s·J(s) with
//! J(s) = ∫₀ᵀ (e^{−λΦ(t)} − e^{−λΦ(T)}) e^{−st} dt, so
//!
//! ```text
//! B̄(s) = 1 + s (1 − 1/(e^{−λΦ(T)} + s J(s))) / λ,
//! ```
//!
//! which is finite at s = 0 and exact there.

use num_complex::Complex64;

use crate::distributions::{QueueModel, ServiceKind};
use crate::error::{Error, Result};
use crate::laplace_inversion::TransformFn;
use crate::numeric::{one_minus_exp_over, MonotoneCubic};
use crate::quadrature::Quadrature;

/// Grid size of the memoized Φ table. Nodes carry exact slopes Φ′ = 1 − G,
/// so the Hermite interpolant is fourth-order accurate.
pub const PHI_GRID_POINTS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformMethod {
    /// Exact expressions: the constant-β busy law, or constant service.
    ClosedForm,
    /// Adaptive quadrature of the integral above.
    Quadrature,
}

#[derive(Debug, Clone)]
enum Phi {
    Exact,
    Table(MonotoneCubic),
}

#[derive(Debug, Clone)]
pub struct BusyTransform {
    queue: QueueModel,
    method: TransformMethod,
    phi: Phi,
    truncation: f64,
    exp_phi_end: f64,
    quad: Quadrature,
}

impl BusyTransform {
    /// Picks the closed form when one exists, quadrature otherwise.
    pub fn new(queue: QueueModel) -> Result<Self> {
        let method = if Self::closed_form_available(&queue) {
            TransformMethod::ClosedForm
        } else {
            TransformMethod::Quadrature
        };
        Self::with_method(queue, method)
    }

    pub fn closed_form_available(queue: &QueueModel) -> bool {
        queue.is_matched_beta_const() || queue.service().kind() == ServiceKind::Constant
    }

    pub fn with_method(queue: QueueModel, method: TransformMethod) -> Result<Self> {
        if method == TransformMethod::ClosedForm && !Self::closed_form_available(&queue) {
            return Err(Error::Domain(format!(
                "no closed-form busy transform for {:?} at λ = {}",
                queue.service(),
                queue.lambda()
            )));
        }
        let service = queue.service();
        let truncation = service.truncation_point()?;
        let exact_phi = service.has_exact_integrated_tail() && service.kind() != ServiceKind::BetaGeneral;
        let phi = if exact_phi {
            Phi::Exact
        } else {
            let step = truncation / (PHI_GRID_POINTS - 1) as f64;
            let q = Quadrature::new(1e-13, 1e-11);
            let mut values = Vec::with_capacity(PHI_GRID_POINTS);
            let mut slopes = Vec::with_capacity(PHI_GRID_POINTS);
            values.push(0.0);
            slopes.push(service.tail(0.0)?);
            for i in 1..PHI_GRID_POINTS {
                let t = i as f64 * step;
                let v = if service.has_exact_integrated_tail() {
                    service.integrated_tail(t)?
                } else {
                    let prev: f64 = *values.last().unwrap();
                    prev + q.integrate(|v| service.tail(v).unwrap_or(f64::NAN), t - step, t)?.value
                };
                values.push(v);
                slopes.push(service.tail(t)?);
            }
            Phi::Table(MonotoneCubic::with_slopes(0.0, step, values, slopes))
        };
        let mut bt = BusyTransform {
            queue,
            method,
            phi,
            truncation,
            exp_phi_end: 0.0,
            quad: Quadrature::new(1e-13, 1e-11).with_limit(2000),
        };
        bt.exp_phi_end = (-bt.queue.lambda() * bt.phi(truncation)?).exp();
        Ok(bt)
    }

    pub fn queue(&self) -> &QueueModel {
        &self.queue
    }

    pub fn method(&self) -> TransformMethod {
        self.method
    }

    pub fn truncation_point(&self) -> f64 {
        self.truncation
    }

    /// Φ(t) = ∫₀ᵗ(1 − G), memoized for laws without a closed form.
    pub fn phi(&self, t: f64) -> Result<f64> {
        match &self.phi {
            Phi::Exact => self.queue.service().integrated_tail(t),
            // Past the truncation point the tail is below 1e-12, so Φ is flat
            // to that accuracy.
            Phi::Table(p) => Ok(p.eval(t)),
        }
    }

    /// B̄(s) for Re s ≥ 0 (and anywhere the closed form is defined).
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        if s.norm() == 0.0 {
            return Ok(one);
        }
        let lambda = self.queue.lambda();
        if self.method == TransformMethod::ClosedForm {
            if let Some(b) = self.queue.service().beta_const_params() {
                let atom = b.atom0();
                let rate = (-b.rho).exp() * (b.lambda + b.beta);
                return Ok(atom + (1.0 - atom) * rate / (s + rate));
            }
        }
        if s.re < 0.0 && self.method == TransformMethod::Quadrature {
            return Err(Error::Domain(format!(
                "busy transform by quadrature needs Re s >= 0, got {s}"
            )));
        }
        let j = self.tail_integral(s)?;
        let den = self.exp_phi_end + s * j;
        if den.norm() < 1e-300 {
            return Err(Error::Overflow(format!("busy transform has a pole near s = {s}")));
        }
        Ok(one + s * (one - one / den) / lambda)
    }

    /// J(s) = ∫₀ᵀ (e^{−λΦ(t)} − e^{−λΦ(T)}) e^{−st} dt.
    fn tail_integral(&self, s: Complex64) -> Result<Complex64> {
        let lambda = self.queue.lambda();
        let service = self.queue.service();
        if self.method == TransformMethod::ClosedForm && service.kind() == ServiceKind::Constant {
            let alpha = service.mean();
            let lead = one_minus_exp_over((s + lambda) * alpha);
            let base = one_minus_exp_over(s * alpha);
            return Ok(alpha * (lead - self.exp_phi_end * base));
        }
        let end = self.exp_phi_end;
        let body = self.quad.integrate(
            |t: f64| {
                let phi = self.phi(t).unwrap_or(f64::NAN);
                ((-lambda * phi).exp() - end) * (-s * t).exp()
            },
            0.0,
            self.truncation,
        )?;
        Ok(body.value)
    }

    /// B̄ on the real axis.
    pub fn eval_real(&self, s: f64) -> Result<f64> {
        Ok(self.eval(Complex64::new(s, 0.0))?.re)
    }
}

impl TransformFn for BusyTransform {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        BusyTransform::eval(self, s)
    }

    fn complex_capable(&self) -> bool {
        self.method == TransformMethod::ClosedForm
    }
}

/// Transform of the busy-period tail, H̄(s) = (1 − B̄(s))/s.
pub struct BusyTailTransform(pub BusyTransform);

impl TransformFn for BusyTailTransform {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        if s.norm() == 0.0 {
            return Ok(Complex64::new(mean_busy(self.0.queue())?, 0.0));
        }
        Ok((Complex64::new(1.0, 0.0) - self.0.eval(s)?) / s)
    }

    fn complex_capable(&self) -> bool {
        self.0.complex_capable()
    }
}

/// E[B] = (e^ρ − 1)/λ, whatever the service law.
pub fn mean_busy(queue: &QueueModel) -> Result<f64> {
    let rho = queue.rho();
    if rho > 700.0 {
        return Err(Error::Overflow(format!("e^ρ overflows for ρ = {rho}")));
    }
    Ok(rho.exp_m1() / queue.lambda())
}
