//! A quick cross-module self-check: analytic results against each other and
//! against simulation, at sizes that run in seconds.

use std::f64::consts::E;
use std::sync::Arc;

use crate::busy_law::{beta_busy_df, general_busy_density, LawGrid};
use crate::busy_transform::{mean_busy, BusyTailTransform, BusyTransform};
use crate::distributions::{beta_const_tail, QueueModel, ServiceModel};
use crate::error::Result;
use crate::laplace_inversion::{invert_df, InversionConfig, OverS};
use crate::moments::{
    beta_moments, busy_moments_with, c_derivatives_by_quadrature, constant_c_derivatives, MomentMethod,
};
use crate::network::{solve_traffic, NetworkModel, SojournMethod, SojournTransform};
use crate::simulator::{ks_distance, simulate_network, simulate_queue, SimConfig};
use crate::tail_analysis::{check_feasibility, recover_service_tail, FeasibilityProbe, TailTransform, Verdict};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    /// Observed deviation (or statistic).
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    fn below(name: &'static str, value: f64, limit: f64) -> Self {
        Check {
            name,
            value,
            limit,
            pass: value < limit,
        }
    }

    fn from_result(name: &'static str, limit: f64, r: Result<f64>) -> Self {
        r.map(|v| Check::below(name, v, limit)).unwrap_or(Check {
            name,
            value: f64::NAN,
            limit,
            pass: false,
        })
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn max_gap(a: &[f64], b: impl Fn(usize) -> f64) -> f64 {
    a.iter().enumerate().map(|(i, v)| (v - b(i)).abs()).fold(0.0, f64::max)
}

fn beta_queue(lambda: f64, rho: f64, beta: f64) -> Result<QueueModel> {
    QueueModel::new(lambda, ServiceModel::beta_const(lambda, rho, beta)?)
}

fn simulated_mean(seed: u64, threads: usize) -> Result<f64> {
    let q = QueueModel::new(1.0, ServiceModel::exponential(1.0)?)?;
    let s = simulate_queue(&q, &SimConfig::periods(seed, 20_000).with_threads(threads))?;
    Ok((s.mean() - (E - 1.0)).abs() / s.std_error())
}

fn moment_recursion() -> Result<f64> {
    let q = beta_queue(1.0, 1.0, 0.1)?;
    let rec = busy_moments_with(&q, 5, MomentMethod::Recursion, 10)?.moments;
    let closed = beta_moments(1.0, 1.0, 0.1, 5)?;
    Ok(max_gap(&rec, |i| closed[i]) / closed[4])
}

fn constant_recursion() -> Result<f64> {
    let q = QueueModel::new(1.0, ServiceModel::constant(1.0)?)?;
    let quad = c_derivatives_by_quadrature(&q, 6)?.values;
    let rec = constant_c_derivatives(1.0, 1.0, 6).values;
    Ok(max_gap(&rec, |i| quad[i]))
}

fn transform_mean() -> Result<f64> {
    let q = QueueModel::new(1.0, ServiceModel::exponential(1.0)?)?;
    let bt = BusyTransform::new(q.clone())?;
    let h = 1e-5;
    let fd = (bt.eval_real(0.0)? - bt.eval_real(h)?) / h;
    Ok((fd / mean_busy(&q)? - 1.0).abs().max((bt.eval_real(0.0)? - 1.0).abs()))
}

fn inversion_round_trip() -> Result<f64> {
    let ts = grid(0.05, 10.0, 60);
    let bt = BusyTransform::new(beta_queue(1.0, 1.0, 0.0)?)?;
    let inv = invert_df(&OverS(bt), &ts, &InversionConfig::talbot(32))?;
    let mut worst = 0.0f64;
    for (t, v) in ts.iter().zip(&inv.values) {
        worst = worst.max((v - beta_busy_df(1.0, 1.0, 0.0, *t)?).abs());
    }
    Ok(worst)
}

fn density_series() -> Result<f64> {
    let q = beta_queue(1.0, 1.0, 0.0)?;
    let law = general_busy_density(&q, LawGrid::default_for(&q)?)?;
    let mut worst = 0.0f64;
    for t in grid(0.0, 10.0, 41) {
        worst = worst.max((law.df(t) - beta_busy_df(1.0, 1.0, 0.0, t)?).abs());
    }
    Ok(worst)
}

fn tail_round_trip() -> Result<f64> {
    let (lambda, rho, beta) = (1.0, 1.0, 0.2);
    let h = BusyTailTransform(BusyTransform::new(beta_queue(lambda, rho, beta)?)?);
    let tt = TailTransform::new(Arc::new(h), lambda, rho)?;
    let ts = grid(0.25, 8.0, 32);
    let out = recover_service_tail(&tt, &ts, &InversionConfig::talbot(32))?;
    Ok(max_gap(&out, |i| beta_const_tail(lambda, rho, beta, ts[i])))
}

fn feasibility_oracle() -> Result<f64> {
    let probe = FeasibilityProbe::new(Arc::new(|t: f64| 3.0 * (-t).exp()), 1.0, grid(0.1, 10.0, 50));
    let report = check_feasibility(&probe)?;
    Ok(
        if report.verdict == Verdict::Fail && report.points.iter().all(|p| !p.positive()) {
            0.0
        } else {
            1.0
        },
    )
}

fn tandem() -> Result<NetworkModel> {
    let expo = || ServiceModel::exponential(1.0);
    NetworkModel::new(
        vec![1.0, 0.0],
        vec![vec![0.0, 1.0], vec![0.0, 0.0]],
        vec![expo()?, expo()?],
    )
}

fn tandem_inversion() -> Result<f64> {
    let ts = grid(0.1, 10.0, 50);
    let st = SojournTransform::new(tandem()?);
    let inv = invert_df(&OverS(st), &ts, &InversionConfig::talbot(32))?;
    Ok(max_gap(&inv.values, |i| 1.0 - (1.0 + ts[i]) * (-ts[i]).exp()))
}

fn neumann_agreement() -> Result<f64> {
    let services = vec![
        ServiceModel::exponential(1.0)?,
        ServiceModel::constant(0.5)?,
        ServiceModel::beta_const(1.0, 1.0, 0.1)?,
    ];
    let routing = vec![vec![0.1, 0.4, 0.2], vec![0.3, 0.0, 0.3], vec![0.2, 0.2, 0.1]];
    let net = NetworkModel::new(vec![1.0, 0.5, 0.0], routing, services)?;
    let lu = SojournTransform::with_method(net.clone(), SojournMethod::LinearSolve);
    let neumann = SojournTransform::with_method(net, SojournMethod::NeumannSeries);
    let mut worst = (lu.eval_real(0.0)? - 1.0).abs();
    for s in [0.1, 0.5, 1.0, 3.0] {
        worst = worst.max((lu.eval_real(s)? - neumann.eval_real(s)?).abs());
    }
    Ok(worst)
}

fn traffic_example() -> Result<f64> {
    let expo = || ServiceModel::exponential(1.0);
    let net = NetworkModel::new(
        vec![1.0, 0.0],
        vec![vec![0.0, 0.5], vec![0.0, 0.0]],
        vec![expo()?, expo()?],
    )?;
    let g = solve_traffic(&net)?;
    Ok((g[0] - 1.0).abs().max((g[1] - 0.5).abs()))
}

fn tandem_ks() -> Result<f64> {
    let samples = simulate_network(&tandem()?, 20_000, &SimConfig::periods(7, 1))?;
    let ks = ks_distance(&samples, |t| if t <= 0.0 { 0.0 } else { 1.0 - (1.0 + t) * (-t).exp() })?;
    Ok(ks * (samples.len() as f64).sqrt())
}

/// Runs every check; `threads` is used by the simulation checks.
pub fn run_checks(threads: usize) -> Vec<Check> {
    vec![
        Check::from_result(
            "simulated busy mean vs (e^ρ−1)/λ [std errors]",
            3.0,
            simulated_mean(1, threads),
        ),
        Check::from_result("moment recursion vs closed form [rel]", 1e-6, moment_recursion()),
        Check::from_result(
            "constant-service C⁽ⁿ⁾(0) recursion vs quadrature",
            1e-8,
            constant_recursion(),
        ),
        Check::from_result("transform normalization and mean [rel]", 1e-3, transform_mean()),
        Check::from_result("inverted busy d.f. vs closed form", 1e-4, inversion_round_trip()),
        Check::from_result("density series vs closed form", 5e-3, density_series()),
        Check::from_result("service tail recovery round trip", 1e-3, tail_round_trip()),
        Check::from_result("feasibility oracle c·e^{−t} fails", 0.5, feasibility_oracle()),
        Check::from_result("tandem sojourn d.f. vs Erlang-2", 1e-5, tandem_inversion()),
        Check::from_result("network transform: Ḡ(0) and Neumann vs LU", 1e-10, neumann_agreement()),
        Check::from_result("traffic equations, two-node example", 1e-12, traffic_example()),
        Check::from_result("simulated tandem sojourn KS·√n", 1.36, tandem_ks()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_checks(2) {
            assert!(c.pass, "{c:?}");
        }
    }
}
