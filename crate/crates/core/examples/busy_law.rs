//! The busy-period d.f. three ways: closed form, renewal series on a grid,
//! and numerical inversion of B̄(s)/s.

use busyq::busy_law::{busy_df, LawMethod};
use busyq::distributions::{QueueModel, ServiceModel};

fn main() -> busyq::Result<()> {
    let queue = QueueModel::new(1.0, ServiceModel::beta_const(1.0, 1.0, 0.0)?)?;
    let times = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
    let closed = busy_df(&queue, &times, LawMethod::Closed, None)?;
    let series = busy_df(&queue, &times, LawMethod::Series, None)?;
    let inverted = busy_df(&queue, &times, LawMethod::Inversion, None)?;
    println!("t      closed       series       inversion");
    for i in 0..times.len() {
        println!(
            "{:<6} {:.8}   {:.8}   {:.8}",
            times[i], closed[i], series[i], inverted[i]
        );
    }

    // Constant service: α plus a geometric sum of truncated exponentials.
    let constant = QueueModel::new(1.0, ServiceModel::constant(1.0)?)?;
    let series = busy_df(&constant, &[1.0, 1.5, 3.0, 6.0], LawMethod::Series, None)?;
    println!("\nconstant α=1, λ=1 at t = 1, 1.5, 3, 6: {series:.6?}");
    Ok(())
}
