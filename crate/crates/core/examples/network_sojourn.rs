//! Sojourn time in an open network of infinite-server nodes: traffic rates,
//! the transform Ḡ(s), its moments and its d.f.

use busyq::laplace_inversion::{invert_df, InversionConfig, OverS};
use busyq::network::{sojourn_moments, solve_traffic, NetworkModel, SojournMethod, SojournTransform};
use busyq::schema::parse_network;

fn main() -> busyq::Result<()> {
    let text = include_str!("models/three_node.json");
    let net: NetworkModel = parse_network(&serde_json::from_str(text).expect("valid JSON"))?;
    println!("traffic rates: {:.6?}", solve_traffic(&net)?);

    let lu = SojournTransform::new(net.clone());
    let neumann = SojournTransform::with_method(net, SojournMethod::NeumannSeries);
    for s in [0.0, 0.5, 2.0] {
        println!(
            "Ḡ({s}) = {:.12} (Neumann {:.12})",
            lu.eval_real(s)?,
            neumann.eval_real(s)?
        );
    }
    let m = sojourn_moments(&lu, 2)?;
    println!(
        "E[S] = {:.8} (expected visits: {:.8}), E[S²] = {:.6}",
        m.mean,
        m.visits_mean,
        m.second.unwrap_or(f64::NAN)
    );

    let times = [0.5, 1.0, 2.0, 4.0, 8.0];
    let df = invert_df(&OverS(lu), &times, &InversionConfig::gaver_stehfest(14))?;
    println!("P(S ≤ t) at {times:?}: {:.6?}", df.values);
    Ok(())
}
