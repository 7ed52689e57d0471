//! Recovering the service tail 1 − G from the busy-tail transform H̄(s),
//! first from a rational transform and then from a computed one.

use std::sync::Arc;

use busyq::busy_transform::{BusyTailTransform, BusyTransform};
use busyq::distributions::{beta_const_tail, QueueModel, ServiceModel};
use busyq::expr::RationalTransform;
use busyq::laplace_inversion::InversionConfig;
use busyq::tail_analysis::{recover_service_tail, TailTransform};

fn main() -> busyq::Result<()> {
    let cfg = InversionConfig::talbot(32);
    let times = [0.25, 0.5, 1.0, 2.0, 4.0];

    // H̄(s) = (1 − e⁻¹)/(s + e⁻¹) is the busy tail for λ = ρ = 1, β = 0.
    let e1 = (-1f64).exp();
    let hbar = RationalTransform::parse(&format!("rational:{}/({} + s)", 1.0 - e1, e1))?;
    let recovered = recover_service_tail(&TailTransform::new(Arc::new(hbar), 1.0, 1.0)?, &times, &cfg)?;
    println!("t      recovered    exact");
    for (t, v) in times.iter().zip(&recovered) {
        println!("{t:<6} {v:.8}   {:.8}", beta_const_tail(1.0, 1.0, 0.0, *t));
    }

    let (lambda, rho, beta) = (2.0, 0.8, -0.5);
    let queue = QueueModel::new(lambda, ServiceModel::beta_const(lambda, rho, beta)?)?;
    let tt = TailTransform::new(Arc::new(BusyTailTransform(BusyTransform::new(queue)?)), lambda, rho)?;
    let recovered = recover_service_tail(&tt, &times, &cfg)?;
    let worst = times
        .iter()
        .zip(&recovered)
        .map(|(t, v)| (v - beta_const_tail(lambda, rho, beta, *t)).abs())
        .fold(0.0, f64::max);
    println!("\nλ=2, ρ=0.8, β=−0.5: κ = {:.10}, max error {worst:.2e}", tt.kappa());
    Ok(())
}
