//! Open networks of infinite-server nodes.
//!
//! Customers arrive at node j at exogenous rate λ_j, are served there with
//! law G_j, then move to node l with probability p_{jl} or leave with
//! probability q_j = 1 − Σ_l p_{jl}. The sojourn transform of a customer is
//!
//! ```text
//! Ḡ(s) = λ⁻¹ Λ(s)ᵀ (I − P(s))⁻¹ (I − P) 𝟙,   Λ(s)_j = λ_j Ḡ_j(s),   P(s)_{jl} = p_{jl} Ḡ_l(s),
//! ```
//!
//! i.e. the mixture over routing paths of the product of the service
//! transforms met along the path.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::distributions::ServiceModel;
use crate::error::{Error, Result};
use crate::laplace_inversion::TransformFn;

const ROW_SUM_SLACK: f64 = 1e-12;
const POWER_TOLERANCE: f64 = 1e-10;
const POWER_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone)]
pub struct NetworkModel {
    lambdas: Vec<f64>,
    routing: Vec<Vec<f64>>,
    services: Vec<ServiceModel>,
}

impl NetworkModel {
    pub fn new(lambdas: Vec<f64>, routing: Vec<Vec<f64>>, services: Vec<ServiceModel>) -> Result<Self> {
        let nodes = lambdas.len();
        if nodes == 0 {
            return Err(Error::invalid(
                "EMPTY_NETWORK",
                "/nodes",
                "a network needs at least one node",
            ));
        }
        if services.len() != nodes {
            return Err(Error::invalid(
                "DIMENSION_MISMATCH",
                "/nodes",
                format!("{} rates but {} service laws", nodes, services.len()),
            ));
        }
        if routing.len() != nodes {
            return Err(Error::invalid(
                "DIMENSION_MISMATCH",
                "/routing",
                format!("routing has {} rows, expected {nodes}", routing.len()),
            ));
        }
        for (j, &rate) in lambdas.iter().enumerate() {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(Error::invalid(
                    "INVALID_PARAMETER",
                    format!("/nodes/{j}/lambda"),
                    format!("exogenous rate must be finite and >= 0, got {rate}"),
                ));
            }
        }
        if lambdas.iter().sum::<f64>() <= 0.0 {
            return Err(Error::invalid(
                "ZERO_ARRIVALS",
                "/nodes",
                "total exogenous rate must be positive",
            ));
        }
        for (j, row) in routing.iter().enumerate() {
            if row.len() != nodes {
                return Err(Error::invalid(
                    "DIMENSION_MISMATCH",
                    format!("/routing/{j}"),
                    format!("row has {} entries, expected {nodes}", row.len()),
                ));
            }
            for (l, &p) in row.iter().enumerate() {
                if !(p >= 0.0 && p.is_finite()) {
                    return Err(Error::invalid(
                        "ROUTING_ENTRY",
                        format!("/routing/{j}/{l}"),
                        format!("routing probability must be nonnegative, got {p}"),
                    ));
                }
            }
            let total: f64 = row.iter().sum();
            if total > 1.0 + ROW_SUM_SLACK {
                return Err(Error::invalid(
                    "ROUTING_ROW_SUM",
                    format!("/routing/{j}"),
                    format!("row sums to {total} > 1"),
                ));
            }
        }
        let net = NetworkModel {
            lambdas,
            routing,
            services,
        };
        if !net.routing_drains() {
            return Err(Error::invalid(
                "UNSTABLE_ROUTING",
                "/routing",
                "routing matrix has spectral radius 1: some customers never leave",
            ));
        }
        Ok(net)
    }

    /// True when ‖Pᵏ‖∞ drops below 1 within the iteration cap, which holds
    /// exactly when the spectral radius of P is below 1.
    fn routing_drains(&self) -> bool {
        let n = self.nodes();
        let mut v = vec![1.0; n];
        for _ in 0..POWER_ITERATIONS {
            let next: Vec<f64> = (0..n)
                .map(|j| (0..n).map(|l| self.routing[j][l] * v[l]).sum())
                .collect();
            v = next;
            let norm = v.iter().cloned().fold(0.0, f64::max);
            if norm <= 1.0 - POWER_TOLERANCE {
                return true;
            }
        }
        false
    }

    pub fn nodes(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn routing(&self) -> &[Vec<f64>] {
        &self.routing
    }

    pub fn services(&self) -> &[ServiceModel] {
        &self.services
    }

    /// λ = Σ_j λ_j.
    pub fn total_rate(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// q_j = 1 − Σ_l p_{jl}.
    pub fn exit_probabilities(&self) -> Vec<f64> {
        self.routing
            .iter()
            .map(|row| (1.0 - row.iter().sum::<f64>()).max(0.0))
            .collect()
    }

    fn identity_minus_routing(&self) -> DMatrix<f64> {
        let n = self.nodes();
        DMatrix::from_fn(n, n, |j, l| if j == l { 1.0 } else { 0.0 } - self.routing[j][l])
    }
}

/// Total arrival rates Γ solving Γᵀ = Λᵀ + ΓᵀP.
pub fn solve_traffic(net: &NetworkModel) -> Result<Vec<f64>> {
    let a = net.identity_minus_routing().transpose();
    let rhs = DVector::from_column_slice(net.lambdas());
    let gamma = a
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("I − P is singular: routing does not drain".into()))?;
    let residual = (&a * &gamma - &rhs).amax();
    let scale = gamma.amax().max(f64::MIN_POSITIVE);
    if !(residual < 1e-10 * scale) {
        return Err(Error::Singular(format!(
            "traffic equations solved with residual {residual:e} (‖Γ‖∞ = {scale})"
        )));
    }
    Ok(gamma.iter().copied().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SojournMethod {
    LinearSolve,
    NeumannSeries,
}

#[derive(Debug, Clone)]
pub struct SojournTransform {
    net: NetworkModel,
    method: SojournMethod,
}

impl SojournTransform {
    pub fn new(net: NetworkModel) -> Self {
        Self::with_method(net, SojournMethod::LinearSolve)
    }

    pub fn with_method(net: NetworkModel, method: SojournMethod) -> Self {
        SojournTransform { net, method }
    }

    pub fn network(&self) -> &NetworkModel {
        &self.net
    }

    pub fn method(&self) -> SojournMethod {
        self.method
    }

    fn node_transforms(&self, s: Complex64) -> Result<Vec<Complex64>> {
        self.net.services.iter().map(|g| g.transform(s)).collect()
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        if s.norm() == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let g = self.node_transforms(s)?;
        let n = self.net.nodes();
        let entry: Vec<Complex64> = (0..n).map(|j| self.net.lambdas[j] * g[j]).collect();
        let exits = self.net.exit_probabilities();
        let routed = |j: usize, l: usize| self.net.routing[j][l] * g[l];
        let total = match self.method {
            SojournMethod::LinearSolve => {
                let a = DMatrix::from_fn(n, n, |j, l| {
                    let id = if j == l { 1.0 } else { 0.0 };
                    Complex64::new(id, 0.0) - routed(j, l)
                })
                .transpose();
                let x = a
                    .lu()
                    .solve(&DVector::from_vec(entry))
                    .ok_or_else(|| Error::Singular(format!("I − P(s) is singular at s = {s}")))?;
                x.iter().zip(&exits).map(|(xj, q)| xj * q).sum::<Complex64>()
            }
            SojournMethod::NeumannSeries => {
                let mut term = entry;
                let mut sum = Complex64::new(0.0, 0.0);
                let mut converged = false;
                for _ in 0..1_000_000 {
                    sum += term.iter().zip(&exits).map(|(t, q)| t * q).sum::<Complex64>();
                    let next: Vec<Complex64> = (0..n).map(|l| (0..n).map(|j| term[j] * routed(j, l)).sum()).collect();
                    term = next;
                    if term.iter().map(|t| t.norm()).sum::<f64>() < 1e-12 * self.net.total_rate() {
                        converged = true;
                        break;
                    }
                }
                if !converged {
                    return Err(Error::SeriesDivergence(format!("path series at s = {s}")));
                }
                sum
            }
        };
        Ok(total / self.net.total_rate())
    }

    pub fn eval_real(&self, s: f64) -> Result<f64> {
        Ok(self.eval(Complex64::new(s, 0.0))?.re)
    }
}

impl TransformFn for SojournTransform {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        SojournTransform::eval(self, s)
    }

    fn complex_capable(&self) -> bool {
        self.net.services.iter().all(ServiceModel::transform_is_entire)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SojournMoments {
    /// E[S] from the transform.
    pub mean: f64,
    /// E[S²] from the transform, when requested.
    pub second: Option<f64>,
    /// E[S] = Σ_j (γ_j/λ) α_j from the traffic equations.
    pub visits_mean: f64,
}

/// Largest relative gap tolerated between the two mean computations.
pub const MEAN_AGREEMENT: f64 = 1e-4;

/// E[S] (and E[S²] for `order = 2`) by one-sided differences of Ḡ at 0 with
/// Richardson extrapolation, checked against the expected-visits mean.
pub fn sojourn_moments(st: &SojournTransform, order: usize) -> Result<SojournMoments> {
    if order == 0 || order > 2 {
        return Err(Error::MomentCap {
            requested: order,
            cap: 2,
        });
    }
    let net = st.network();
    let gamma = solve_traffic(net)?;
    let visits_mean = gamma
        .iter()
        .zip(net.services())
        .map(|(g, svc)| g * svc.mean())
        .sum::<f64>()
        / net.total_rate();
    let h = 1e-2 / visits_mean;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::StepUnderflow(format!("step {h} for mean {visits_mean}")));
    }
    let f = |s: f64| st.eval_real(s);

    let slope = |h: f64| -> Result<f64> {
        let d = 1.0 - f(h)?;
        if d == 0.0 {
            return Err(Error::StepUnderflow(format!("Ḡ({h}) rounds to 1")));
        }
        Ok(d / h)
    };
    let mean = richardson([slope(h)?, slope(h / 2.0)?, slope(h / 4.0)?]);
    let gap = (mean - visits_mean).abs() / visits_mean;
    if gap > MEAN_AGREEMENT {
        return Err(Error::Accuracy {
            what: "sojourn mean from the transform disagrees with the expected-visits mean",
            violation: gap,
            limit: MEAN_AGREEMENT,
        });
    }
    let second = if order == 2 {
        let curvature = |h: f64| -> Result<f64> { Ok((1.0 - 2.0 * f(h)? + f(2.0 * h)?) / (h * h)) };
        Some(richardson([curvature(h)?, curvature(h / 2.0)?, curvature(h / 4.0)?]))
    } else {
        None
    };
    Ok(SojournMoments {
        mean,
        second,
        visits_mean,
    })
}

/// Removes O(h) and O(h²) error terms from estimates at h, h/2, h/4.
fn richardson(d: [f64; 3]) -> f64 {
    let r1 = 2.0 * d[1] - d[0];
    let r2 = 2.0 * d[2] - d[1];
    (4.0 * r2 - r1) / 3.0
}
