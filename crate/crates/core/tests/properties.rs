use busyq::busy_law::beta_busy_df;
use busyq::busy_transform::BusyTransform;
use busyq::distributions::{BetaConst, QueueModel, ServiceModel};
use busyq::moments::{beta_moments, busy_moments_with, MomentMethod};
use busyq::network::{solve_traffic, NetworkModel, SojournMethod, SojournTransform};
use num_complex::Complex64;
use proptest::prelude::*;

fn service(kind: u8, param: f64) -> ServiceModel {
    match kind % 3 {
        0 => ServiceModel::exponential(param).unwrap(),
        1 => ServiceModel::constant(param).unwrap(),
        _ => ServiceModel::beta_const(1.0, param, 0.0).unwrap(),
    }
}

/// Random substochastic routing with every row sum at most 0.9.
fn network_strategy(max_nodes: usize, dag: bool) -> impl Strategy<Value = NetworkModel> {
    (1..=max_nodes).prop_flat_map(move |n| {
        (
            prop::collection::vec(0.0..2.0f64, n),
            prop::collection::vec(prop::collection::vec(0.0..1.0f64, n), n),
            prop::collection::vec((any::<u8>(), 0.3..3.0f64), n),
        )
            .prop_map(move |(mut lambdas, raw, kinds)| {
                lambdas[0] += 0.1;
                let routing: Vec<Vec<f64>> = raw
                    .iter()
                    .enumerate()
                    .map(|(j, row)| {
                        let row: Vec<f64> = row
                            .iter()
                            .enumerate()
                            .map(|(l, &x)| if dag && l <= j { 0.0 } else { x })
                            .collect();
                        let total: f64 = row.iter().sum();
                        let scale = if total > 0.9 { 0.9 / total } else { 1.0 };
                        row.iter().map(|x| x * scale).collect()
                    })
                    .collect();
                let services = kinds.iter().map(|&(k, p)| service(k, p)).collect();
                NetworkModel::new(lambdas, routing, services).unwrap()
            })
    })
}

/// Ḡ(s) as a sum over every path through a DAG network.
fn path_sum(net: &NetworkModel, s: Complex64) -> Complex64 {
    fn from(net: &NetworkModel, node: usize, s: Complex64, exits: &[f64]) -> Complex64 {
        let here = net.services()[node].transform(s).unwrap();
        let onward: Complex64 = net.routing()[node]
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(l, &p)| p * from(net, l, s, exits))
            .sum();
        here * (exits[node] + onward)
    }
    let exits = net.exit_probabilities();
    let total = net.total_rate();
    net.lambdas()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0.0)
        .map(|(j, &l)| l / total * from(net, j, s, &exits))
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sojourn_transform_is_normalized(net in network_strategy(6, false)) {
        let g0 = SojournTransform::new(net).eval_real(0.0).unwrap();
        prop_assert!((g0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn neumann_series_matches_linear_solve(net in network_strategy(6, false), s in 0.01..5.0f64, im in -3.0..3.0f64) {
        let lu = SojournTransform::with_method(net.clone(), SojournMethod::LinearSolve);
        let series = SojournTransform::with_method(net, SojournMethod::NeumannSeries);
        let z = Complex64::new(s, im);
        prop_assert!((lu.eval(z).unwrap() - series.eval(z).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn dag_paths_match_transform(net in network_strategy(4, true), s in 0.01..5.0f64, im in -3.0..3.0f64) {
        let z = Complex64::new(s, im);
        let direct = SojournTransform::new(net.clone()).eval(z).unwrap();
        prop_assert!((direct - path_sum(&net, z)).norm() < 1e-10);
    }

    #[test]
    fn traffic_equations_balance(net in network_strategy(6, false)) {
        let gamma = solve_traffic(&net).unwrap();
        let scale = gamma.iter().map(|g| g * g).sum::<f64>().sqrt();
        for l in 0..net.nodes() {
            let inflow: f64 = (0..net.nodes()).map(|j| gamma[j] * net.routing()[j][l]).sum();
            prop_assert!((gamma[l] - net.lambdas()[l] - inflow).abs() < 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn beta_const_service_law_is_a_df(lambda in 0.2..3.0f64, rho in 0.2..3.0f64, frac in -0.99..1.0f64, t in 0.0..20.0f64) {
        let beta = if frac < 0.0 { frac * lambda } else { frac * BetaConst::beta_max(lambda, rho) };
        let sm = ServiceModel::beta_const(lambda, rho, beta).unwrap();
        let (g1, g2) = (sm.df(t).unwrap(), sm.df(t + 0.1).unwrap());
        prop_assert!((0.0..=1.0).contains(&g1) && g2 >= g1 - 1e-15);
        prop_assert!((sm.mean() - rho / lambda).abs() < 1e-12);
    }

    #[test]
    fn busy_df_is_monotone_with_atom(lambda in 0.2..3.0f64, rho in 0.2..3.0f64, frac in -0.99..1.0f64, t in 0.0..20.0f64) {
        let beta = if frac < 0.0 { frac * lambda } else { frac * BetaConst::beta_max(lambda, rho) };
        let b0 = beta_busy_df(lambda, rho, beta, 0.0).unwrap();
        let sm = ServiceModel::beta_const(lambda, rho, beta).unwrap();
        prop_assert!((b0 - sm.df(0.0).unwrap()).abs() < 1e-12);
        let (b1, b2) = (beta_busy_df(lambda, rho, beta, t).unwrap(), beta_busy_df(lambda, rho, beta, t + 0.1).unwrap());
        prop_assert!((0.0..=1.0).contains(&b1) && b2 >= b1 - 1e-15);
    }

    #[test]
    fn busy_transform_decreases(kind in any::<u8>(), param in 0.3..3.0f64, lambda in 0.3..2.0f64, s in 0.0..5.0f64) {
        let q = QueueModel::new(lambda, service(kind, param)).unwrap();
        let bt = BusyTransform::new(q).unwrap();
        let (a, b) = (bt.eval_real(s).unwrap(), bt.eval_real(s + 0.5).unwrap());
        prop_assert!(a <= 1.0 + 1e-12 && b < a && b > 0.0);
    }

    #[test]
    fn moment_recursion_matches_closed_form(lambda in 0.3..3.0f64, rho in 0.3..2.5f64, frac in 0.0..1.0f64) {
        let beta = frac * BetaConst::beta_max(lambda, rho);
        let q = QueueModel::new(lambda, ServiceModel::beta_const(lambda, rho, beta).unwrap()).unwrap();
        let rec = busy_moments_with(&q, 4, MomentMethod::Recursion, 10).unwrap().moments;
        let closed = beta_moments(lambda, rho, beta, 4).unwrap();
        for (r, c) in rec.iter().zip(&closed) {
            prop_assert!((r / c - 1.0).abs() < 1e-6, "{r} vs {c}");
        }
    }
}
