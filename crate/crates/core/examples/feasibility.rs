//! Checking whether a(t) = (1/t)∫₀ᵗβ can come from some service law.

use std::sync::Arc;

use busyq::tail_analysis::{check_feasibility, FeasibilityProbe};

type Candidate = fn(f64) -> f64;

fn main() -> busyq::Result<()> {
    let rho = 2f64.ln();
    let grid: Vec<f64> = (0..40).map(|i| 0.25 + 0.5 * i as f64).collect();
    let candidates: [(&str, Candidate); 3] = [
        ("10·e^{−t}", |t| 10.0 * (-t).exp()),
        ("10/(1+t)", |t| 10.0 / (1.0 + t)),
        ("−0.5/(1+t)", |t| -0.5 / (1.0 + t)),
    ];
    for (name, a) in candidates {
        let report = check_feasibility(&FeasibilityProbe::new(Arc::new(a), rho, grid.clone()))?;
        println!(
            "{name:<12} verdict {}  limit estimate {:+.3e}  first failure {}",
            report.verdict,
            report.limit_estimate,
            report.first_failure().map_or("none".to_string(), |t| t.to_string())
        );
    }
    Ok(())
}
