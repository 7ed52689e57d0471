//! Simulated busy periods and sojourn times against the analytic results.

use busyq::busy_law::beta_busy_df;
use busyq::busy_transform::mean_busy;
use busyq::distributions::{QueueModel, ServiceModel};
use busyq::network::NetworkModel;
use busyq::simulator::{ks_critical_95, ks_distance, simulate_network, simulate_queue, SimConfig};

fn main() -> busyq::Result<()> {
    let queue = QueueModel::new(1.0, ServiceModel::beta_const(1.0, 1.0, 0.0)?)?;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let sample = simulate_queue(&queue, &SimConfig::periods(42, 100_000).with_threads(threads))?;
    println!(
        "busy periods: mean {:.5} ± {:.5}, analytic {:.5}",
        sample.mean(),
        sample.std_error(),
        mean_busy(&queue)?
    );
    let ks = ks_distance(&sample.durations, |t| beta_busy_df(1.0, 1.0, 0.0, t).unwrap_or(0.0))?;
    println!(
        "KS vs closed-form busy d.f.: {ks:.5} (95% critical {:.5})",
        ks_critical_95(sample.periods())
    );

    let expo = || ServiceModel::exponential(1.0);
    let tandem = NetworkModel::new(
        vec![1.0, 0.0],
        vec![vec![0.0, 1.0], vec![0.0, 0.0]],
        vec![expo()?, expo()?],
    )?;
    let sojourns = simulate_network(&tandem, 100_000, &SimConfig::periods(7, 1).with_threads(threads))?;
    let ks = ks_distance(&sojourns, |t| if t <= 0.0 { 0.0 } else { 1.0 - (1.0 + t) * (-t).exp() })?;
    println!(
        "tandem sojourn: mean {:.4}, KS vs Erlang-2 {ks:.5}",
        sojourns.iter().sum::<f64>() / sojourns.len() as f64
    );
    Ok(())
}
