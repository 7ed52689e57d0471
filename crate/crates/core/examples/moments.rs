//! Busy-period moments from the transform-derivative recursion, compared
//! with the closed form available for constant-β service.

use busyq::distributions::{QueueModel, ServiceModel};
use busyq::moments::{beta_moments, busy_moments_with, MomentMethod};

fn main() -> busyq::Result<()> {
    let (lambda, rho, beta) = (1.0, 1.0, 0.1);
    let queue = QueueModel::new(lambda, ServiceModel::beta_const(lambda, rho, beta)?)?;
    let rec = busy_moments_with(&queue, 5, MomentMethod::Recursion, 10)?;
    let closed = beta_moments(lambda, rho, beta, 5)?;
    println!("n  recursion          closed form        source");
    for (n, ((r, c), source)) in rec.moments.iter().zip(&closed).zip(&rec.sources).enumerate() {
        println!("{}  {r:<18.12} {c:<18.12} {source}", n + 1);
    }
    println!("variance {:.10}", rec.variance().unwrap_or(f64::NAN));

    let constant = QueueModel::new(1.0, ServiceModel::constant(1.0)?)?;
    let m = busy_moments_with(&constant, 4, MomentMethod::Auto, 10)?;
    println!("\nconstant service α=1, λ=1: {:?}", m.moments);
    for w in &m.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
