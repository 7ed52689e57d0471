//! Loading queue and network models from JSON, and what validation errors
//! look like.

use busyq::busy_transform::mean_busy;
use busyq::schema::{parse_network, parse_queue};
use serde_json::json;

fn main() -> busyq::Result<()> {
    for text in [
        include_str!("models/mm1inf.json"),
        include_str!("models/beta_const.json"),
        include_str!("models/beta_general.json"),
        include_str!("models/empirical.json"),
    ] {
        let queue = parse_queue(&serde_json::from_str(text).expect("valid JSON"))?;
        println!(
            "{:<12} ρ = {:.4}, E[B] = {:.6}",
            queue.service().kind().to_string(),
            queue.rho(),
            mean_busy(&queue)?
        );
    }

    let bad = [
        json!({"lambda": 1.0, "service": {"kind": "beta-const", "lambda": 1.0, "rho": 1.0, "beta": 2.0}}),
        json!({"lambda": 1.0, "service": {"kind": "weibull"}}),
    ];
    for v in &bad {
        let e = parse_queue(v).unwrap_err();
        println!("{} at {}: {e}", e.code(), e.path().unwrap_or("-"));
    }
    let e = parse_network(&json!({
        "nodes": [{"lambda": 1.0, "service": {"kind": "exponential", "rate": 1.0}}],
        "routing": [[1.2]]
    }))
    .unwrap_err();
    println!("{} at {}: {e}", e.code(), e.path().unwrap_or("-"));
    Ok(())
}
