//! The busy-period transform B̄(s) for each kind of service law, with the
//! closed form checked against quadrature where both exist.

use std::sync::Arc;

use busyq::busy_transform::{mean_busy, BusyTransform, TransformMethod};
use busyq::distributions::{QueueModel, ServiceModel};

fn main() -> busyq::Result<()> {
    let services = [
        ("constant α=1", ServiceModel::constant(1.0)?),
        ("exponential rate 1", ServiceModel::exponential(1.0)?),
        ("beta-const ρ=1 β=0", ServiceModel::beta_const(1.0, 1.0, 0.0)?),
        (
            "beta-general β=0.2/(1+u)",
            ServiceModel::beta_general(1.0, 1.0, Arc::new(|u: f64| 0.2 / (1.0 + u)))?,
        ),
    ];
    println!(
        "{:<26} {:>10} {:>10} {:>10} {:>10}",
        "service", "s=0.5", "s=1", "s=2", "E[B]"
    );
    for (name, service) in services {
        let queue = QueueModel::new(1.0, service)?;
        let bt = BusyTransform::new(queue.clone())?;
        let row: Vec<String> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&s| bt.eval_real(s).map(|v| format!("{v:>10.6}")))
            .collect::<busyq::Result<_>>()?;
        println!("{name:<26} {} {:>10.6}", row.join(" "), mean_busy(&queue)?);
    }

    let queue = QueueModel::new(1.0, ServiceModel::beta_const(1.0, 1.0, 0.0)?)?;
    let closed = BusyTransform::with_method(queue.clone(), TransformMethod::ClosedForm)?;
    let quad = BusyTransform::with_method(queue, TransformMethod::Quadrature)?;
    println!(
        "\nbeta-const at s=1: closed {:.10}, quadrature {:.10}",
        closed.eval_real(1.0)?,
        quad.eval_real(1.0)?
    );
    Ok(())
}
