//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the test
//! harness so the lines are always printed; exits non-zero on any failure.

use std::sync::Arc;
use std::time::Instant;

use busyq::busy_law::{beta_busy_df, general_busy_density, ConstantBusyLaw, LawGrid};
use busyq::busy_transform::{mean_busy, BusyTailTransform, BusyTransform};
use busyq::distributions::{beta_const_tail, BetaConst, QueueModel, RealFn, ServiceModel};
use busyq::laplace_inversion::{invert_df, InversionConfig, OverS};
use busyq::moments::{
    beta_moments, busy_moments_with, c_derivatives_by_quadrature, constant_c_derivatives, MomentMethod,
};
use busyq::network::{solve_traffic, NetworkModel, SojournMethod, SojournTransform};
use busyq::simulator::{ks_critical_95, ks_distance, simulate_network, simulate_queue, SimConfig};
use busyq::tail_analysis::{
    check_feasibility, recover_service_tail, FeasibilityProbe, FeasibilityReport, TailTransform, Verdict,
};
use busyq::Result;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn beta_grid_value(lambda: f64, rho: f64, which: usize) -> f64 {
    match which {
        0 => -0.5 * lambda,
        1 => 0.0,
        _ => 0.5 * BetaConst::beta_max(lambda, rho),
    }
}

fn busy_mean_simulation() -> Result<Outcome> {
    let combos: Vec<(f64, ServiceModel)> = vec![
        (1.0, ServiceModel::constant(1.0)?),
        (0.5, ServiceModel::constant(2.0)?),
        (1.0, ServiceModel::exponential(1.0)?),
        (0.5, ServiceModel::exponential(0.5)?),
        (1.0, ServiceModel::beta_const(1.0, 1.0, 0.0)?),
        (0.5, ServiceModel::beta_const(0.5, 1.5, 0.1)?),
    ];
    let mut worst = 0.0f64;
    for (i, (lambda, service)) in combos.into_iter().enumerate() {
        let q = QueueModel::new(lambda, service)?;
        let cfg = SimConfig::periods(1000 + i as u64, 100_000).with_threads(threads());
        let s = simulate_queue(&q, &cfg)?;
        worst = worst.max((s.mean() - mean_busy(&q)?).abs() / s.std_error());
    }
    outcome(
        worst < 3.0,
        format!("worst |mean − (e^ρ−1)/λ| = {worst:.2} standard errors (limit 3)"),
    )
}

fn moment_recursion_vs_closed() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for &lambda in &[0.5, 1.0, 2.0] {
        for &rho in &[0.5, 1.0, 2.0] {
            for which in 0..3 {
                let beta = beta_grid_value(lambda, rho, which);
                let q = QueueModel::new(lambda, ServiceModel::beta_const(lambda, rho, beta)?)?;
                let rec = busy_moments_with(&q, 5, MomentMethod::Recursion, 10)?.moments;
                let closed = beta_moments(lambda, rho, beta, 5)?;
                for (r, c) in rec.iter().zip(&closed) {
                    worst = worst.max((r / c - 1.0).abs());
                }
            }
        }
    }
    outcome(
        worst < 1e-6,
        format!("max relative error {worst:.2e} over 27 models, n = 1..5 (limit 1e-6)"),
    )
}

fn constant_c_recursion() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for &(lambda, alpha) in &[(1.0, 1.0), (0.5, 2.0), (2.0, 0.5), (1.0, 0.3)] {
        let q = QueueModel::new(lambda, ServiceModel::constant(alpha)?)?;
        let quad = c_derivatives_by_quadrature(&q, 6)?.values;
        let rec = constant_c_derivatives(lambda, alpha, 6).values;
        for (a, b) in rec.iter().zip(&quad) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(
        worst < 1e-8,
        format!("max |recursion − quadrature| = {worst:.2e}, n ≤ 6 (limit 1e-8)"),
    )
}

fn transform_normalization() -> Result<Outcome> {
    let beta_fn: RealFn = Arc::new(|u: f64| 0.2 / (1.0 + u));
    let services = vec![
        ("constant", 1.0, ServiceModel::constant(1.0)?),
        ("exponential", 1.0, ServiceModel::exponential(2.0)?),
        ("beta-const", 1.0, ServiceModel::beta_const(1.0, 1.0, 0.2)?),
        ("beta-general", 1.0, ServiceModel::beta_general(1.0, 1.0, beta_fn)?),
        (
            "empirical",
            0.8,
            ServiceModel::empirical(Arc::new(|t: f64| 1.0 - (1.0 + t) * (-t).exp()), 0.0)?,
        ),
    ];
    let (mut norm, mut mean_err) = (0.0f64, 0.0f64);
    for (_, lambda, service) in services {
        let q = QueueModel::new(lambda, service)?;
        let bt = BusyTransform::new(q.clone())?;
        let expected = mean_busy(&q)?;
        norm = norm.max((bt.eval_real(0.0)? - 1.0).abs());
        // Richardson on one-sided differences: error O(h²).
        let h = 1e-3 / expected;
        let d1 = (1.0 - bt.eval_real(h)?) / h;
        let d2 = (1.0 - bt.eval_real(h / 2.0)?) / (h / 2.0);
        mean_err = mean_err.max(((2.0 * d2 - d1) / expected - 1.0).abs());
    }
    outcome(
        norm < 1e-8 && mean_err < 1e-3,
        format!("max |B̄(0) − 1| = {norm:.1e} (limit 1e-8), max relative mean error {mean_err:.1e} (limit 1e-3), 5 service kinds"),
    )
}

fn inversion_round_trip() -> Result<Outcome> {
    let ts = grid(0.05, 10.0, 200);
    let cfg = InversionConfig::talbot(32);
    let mut worst = 0.0f64;
    for &(lambda, rho, beta) in &[(1.0, 1.0, 0.0), (2.0, 0.5, -1.0), (0.5, 2.0, 0.05)] {
        let bt = BusyTransform::new(QueueModel::new(lambda, ServiceModel::beta_const(lambda, rho, beta)?)?)?;
        let inv = invert_df(&OverS(bt), &ts, &cfg)?;
        for (t, v) in ts.iter().zip(&inv.values) {
            worst = worst.max((v - beta_busy_df(lambda, rho, beta, *t)?).abs());
        }
    }
    let mut expo = 0.0f64;
    for &(lambda, rho) in &[(1.0, 1.0), (2.0, 0.5)] {
        let beta = BetaConst::beta_max(lambda, rho);
        let bt = BusyTransform::new(QueueModel::new(lambda, ServiceModel::beta_const(lambda, rho, beta)?)?)?;
        let inv = invert_df(&OverS(bt), &ts, &cfg)?;
        let rate = lambda / rho.exp_m1();
        for (t, v) in ts.iter().zip(&inv.values) {
            expo = expo.max((v - (1.0 - (-rate * t).exp())).abs());
        }
    }
    outcome(
        worst < 1e-4 && expo < 1e-5,
        format!("constant-β max error {worst:.1e} (limit 1e-4); exponential case {expo:.1e} (limit 1e-5)"),
    )
}

fn density_series_and_constant_law() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for &(lambda, rho, beta) in &[(1.0, 1.0, 0.0), (1.0, 0.5, 0.3), (2.0, 1.5, -1.0)] {
        let q = QueueModel::new(lambda, ServiceModel::beta_const(lambda, rho, beta)?)?;
        let law = general_busy_density(&q, LawGrid::default_for(&q)?)?;
        for t in grid(0.0, 10.0, 201) {
            worst = worst.max((law.df(t) - beta_busy_df(lambda, rho, beta, t)?).abs());
        }
    }
    let mut mean_err = 0.0f64;
    for &(lambda, alpha) in &[(1.0, 1.0), (0.5, 3.0)] {
        let law = ConstantBusyLaw::new(lambda, alpha)?;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = (0..100_000).map(|_| law.sample(&mut rng)).sum::<f64>() / 1e5;
        mean_err = mean_err.max((m / law.mean() - 1.0).abs());
    }
    outcome(
        worst < 5e-3 && mean_err < 0.01,
        format!(
            "series d.f. max error {worst:.1e} (limit 5e-3); constant-service sample mean off by {:.2}% (limit 1%)",
            100.0 * mean_err
        ),
    )
}

fn tail_recovery() -> Result<Outcome> {
    let ts = grid(0.1, 10.0, 34);
    let cfg = InversionConfig::talbot(32);
    let mut worst = 0.0f64;
    for &lambda in &[0.5, 1.0, 2.0] {
        for &rho in &[0.5, 1.0, 2.0] {
            for which in 0..3 {
                let beta = beta_grid_value(lambda, rho, which);
                let q = QueueModel::new(lambda, ServiceModel::beta_const(lambda, rho, beta)?)?;
                let tt = TailTransform::new(Arc::new(BusyTailTransform(BusyTransform::new(q)?)), lambda, rho)?;
                let out = recover_service_tail(&tt, &ts, &cfg)?;
                for (t, v) in ts.iter().zip(&out) {
                    worst = worst.max((v - beta_const_tail(lambda, rho, beta, *t)).abs());
                }
            }
        }
    }
    outcome(
        worst < 1e-3,
        format!("max tail error {worst:.1e} over 27 models (limit 1e-3)"),
    )
}

fn probe(a: impl Fn(f64) -> f64 + Send + Sync + 'static, rho: f64, ts: Vec<f64>) -> Result<FeasibilityReport> {
    check_feasibility(&FeasibilityProbe::new(Arc::new(a), rho, ts))
}

fn feasibility_oracles() -> Result<Outcome> {
    let mut ok = true;
    // c·e^{−t}: the expression is −a(t) < 0 at every t.
    for &(c, rho) in &[(1.0, 1.0), (10.0, 2f64.ln()), (0.3, 2.0)] {
        for step in [0.5, 0.25, 0.125] {
            let ts: Vec<f64> = (1..=(8.0 / step) as usize).map(|i| i as f64 * step + 0.01).collect();
            let r = probe(move |t| c * (-t).exp(), rho, ts)?;
            ok &= r.verdict == Verdict::Fail && r.points.iter().all(|p| !p.positive());
        }
    }
    // c/(1+t): positive before t = c/k − 1 and negative after.
    for &(c, rho) in &[(10.0, 2f64.ln()), (3.0, 1.0), (5.0, 0.5)] {
        let k = 1.0 / f64::exp_m1(rho);
        let switch = c / k - 1.0;
        for step in [0.5, 0.25, 0.125] {
            let ts: Vec<f64> = (0..(2.0 * switch / step) as usize)
                .map(|i| 0.1 + step * i as f64 + step / 3.0)
                .collect();
            let r = probe(move |t| c / (1.0 + t), rho, ts)?;
            ok &= r.verdict == Verdict::Fail;
            ok &= r.points.iter().all(|p| p.positive() == (p.t < switch));
        }
    }
    outcome(
        ok,
        "c·e^{−t} fails at every point; c/(1+t) switches sign at c/k − 1; verdicts identical on 3 grid refinements",
    )
}

fn random_net(rng: &mut ChaCha8Rng, max_nodes: usize, dag: bool) -> Result<NetworkModel> {
    let n = rng.random_range(1..=max_nodes);
    let mut lambdas: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
    lambdas[0] += 0.1;
    let routing = (0..n)
        .map(|j| {
            let row: Vec<f64> = (0..n)
                .map(|l| if dag && l <= j { 0.0 } else { rng.random_range(0.0..1.0) })
                .collect();
            let cap = rng.random_range(0.3..0.99);
            let total: f64 = row.iter().sum();
            let scale = if total > cap { cap / total } else { 1.0 };
            row.iter().map(|x| x * scale).collect()
        })
        .collect();
    let services = (0..n)
        .map(|_| match rng.random_range(0..3) {
            0 => ServiceModel::exponential(rng.random_range(0.3..3.0)),
            1 => ServiceModel::constant(rng.random_range(0.3..3.0)),
            _ => ServiceModel::beta_const(1.0, rng.random_range(0.3..2.0), 0.0),
        })
        .collect::<Result<Vec<_>>>()?;
    NetworkModel::new(lambdas, routing, services)
}

fn path_sum(net: &NetworkModel, s: Complex64) -> Result<Complex64> {
    fn from(net: &NetworkModel, node: usize, s: Complex64, exits: &[f64]) -> Result<Complex64> {
        let mut onward = Complex64::new(exits[node], 0.0);
        for (l, &p) in net.routing()[node].iter().enumerate() {
            if p > 0.0 {
                onward += p * from(net, l, s, exits)?;
            }
        }
        Ok(net.services()[node].transform(s)? * onward)
    }
    let exits = net.exit_probabilities();
    let mut total = Complex64::new(0.0, 0.0);
    for (j, &l) in net.lambdas().iter().enumerate() {
        if l > 0.0 {
            total += l / net.total_rate() * from(net, j, s, &exits)?;
        }
    }
    Ok(total)
}

fn two_expo_net(routing: Vec<Vec<f64>>, lambdas: Vec<f64>) -> Result<NetworkModel> {
    let services = lambdas
        .iter()
        .map(|_| ServiceModel::exponential(1.0))
        .collect::<Result<Vec<_>>>()?;
    NetworkModel::new(lambdas, routing, services)
}

fn sojourn_ks(net: NetworkModel, seed: u64) -> Result<f64> {
    let samples = simulate_network(&net, 100_000, &SimConfig::periods(seed, 1).with_threads(threads()))?;
    let t_max = samples.iter().cloned().fold(0.0, f64::max);
    let step = 0.005;
    let ts: Vec<f64> = (1..=(t_max / step).ceil() as usize + 1)
        .map(|i| i as f64 * step)
        .collect();
    let inv = invert_df(&OverS(SojournTransform::new(net)), &ts, &InversionConfig::talbot(32))?;
    let df = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let x = t / step;
        let i = (x.floor() as usize).clamp(1, ts.len() - 1);
        let w = x - i as f64;
        let lo = inv.values[i - 1];
        let hi = inv.values.get(i).copied().unwrap_or(1.0);
        if i == 1 && x < 1.0 {
            return lo * x;
        }
        lo + (hi - lo) * w
    };
    ks_distance(&samples, df)
}

fn network_transform() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut norm, mut neumann, mut paths) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let net = random_net(&mut rng, 6, false)?;
        let lu = SojournTransform::with_method(net.clone(), SojournMethod::LinearSolve);
        let series = SojournTransform::with_method(net, SojournMethod::NeumannSeries);
        norm = norm.max((lu.eval_real(0.0)? - 1.0).abs());
        for s in [
            Complex64::new(0.2, 0.0),
            Complex64::new(1.0, 2.0),
            Complex64::new(4.0, -1.0),
        ] {
            neumann = neumann.max((lu.eval(s)? - series.eval(s)?).norm());
        }
    }
    for _ in 0..50 {
        let net = random_net(&mut rng, 4, true)?;
        let st = SojournTransform::new(net.clone());
        for s in [Complex64::new(0.3, 0.0), Complex64::new(1.0, 1.5)] {
            paths = paths.max((st.eval(s)? - path_sum(&net, s)?).norm());
        }
    }
    let tandem = two_expo_net(vec![vec![0.0, 1.0], vec![0.0, 0.0]], vec![1.0, 0.0])?;
    let ts = grid(0.05, 10.0, 200);
    let inv = invert_df(
        &OverS(SojournTransform::new(tandem.clone())),
        &ts,
        &InversionConfig::talbot(32),
    )?;
    let erlang = ts
        .iter()
        .zip(&inv.values)
        .map(|(t, v)| (v - (1.0 - (1.0 + t) * (-t).exp())).abs())
        .fold(0.0, f64::max);
    let feedback = two_expo_net(vec![vec![0.5]], vec![1.0])?;
    let ks_tandem = sojourn_ks(tandem, 41)?;
    let ks_feedback = sojourn_ks(feedback, 42)?;
    let critical = ks_critical_95(100_000);
    let pass = norm < 1e-12
        && neumann < 1e-10
        && paths < 1e-10
        && erlang < 1e-5
        && ks_tandem < critical
        && ks_feedback < critical;
    outcome(
        pass,
        format!(
            "(a) |Ḡ(0)−1| {norm:.1e}; (b) Neumann vs LU {neumann:.1e}; (c) paths {paths:.1e}; (d) Erlang-2 {erlang:.1e}; (e) KS tandem {ks_tandem:.4}, feedback {ks_feedback:.4} (limit {critical:.4})"
        ),
    )
}

fn traffic_equations() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let net = random_net(&mut rng, 8, false)?;
        let gamma = solve_traffic(&net)?;
        let scale = gamma.iter().map(|g| g * g).sum::<f64>().sqrt();
        for l in 0..net.nodes() {
            let inflow: f64 = (0..net.nodes()).map(|j| gamma[j] * net.routing()[j][l]).sum();
            worst = worst.max((gamma[l] - net.lambdas()[l] - inflow).abs() / scale);
        }
    }
    let hand = two_expo_net(vec![vec![0.0, 0.5], vec![0.0, 0.0]], vec![1.0, 0.0])?;
    let exact = solve_traffic(&hand)? == vec![1.0, 0.5];
    outcome(
        worst < 1e-10 && exact,
        format!("max relative residual {worst:.1e} (limit 1e-10); two-node example Γ = (1, 0.5) exact: {exact}"),
    )
}

type Criterion = fn() -> Result<Outcome>;

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("1 simulated busy-period mean", busy_mean_simulation),
        ("2 moment recursion vs closed form", moment_recursion_vs_closed),
        ("3 constant-service C⁽ⁿ⁾(0) recursion", constant_c_recursion),
        ("4 transform normalization and mean", transform_normalization),
        ("5 inversion round trip", inversion_round_trip),
        (
            "6 density series and constant-service law",
            density_series_and_constant_law,
        ),
        ("7 service tail recovery", tail_recovery),
        ("8 feasibility checker oracles", feasibility_oracles),
        ("9 network sojourn transform", network_transform),
        ("10 traffic equations", traffic_equations),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error {}: {e}", e.code())),
        };
        failures += usize::from(!pass);
        println!(
            "{} criterion {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of 10 criteria pass", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
