//! Gaver–Stehfest and Talbot inversion on known transform pairs.

use busyq::laplace_inversion::{invert, FnTransform, InversionConfig};
use num_complex::Complex64;

fn main() -> busyq::Result<()> {
    let erlang2 = FnTransform::complex(|s: Complex64| 1.0 / (s * (1.0 + s) * (1.0 + s)));
    let methods = [
        ("gaver-stehfest 14", InversionConfig::gaver_stehfest(14)),
        ("talbot 16", InversionConfig::talbot(16)),
        ("talbot 32", InversionConfig::talbot(32)),
    ];
    println!("Erlang-2 d.f. 1 − (1 + t)e^{{−t}}");
    for (name, cfg) in methods {
        let worst = (1..=20)
            .map(|i| {
                let t = 0.5 * i as f64;
                invert(&erlang2, t, &cfg).map(|v| (v - (1.0 - (1.0 + t) * (-t).exp())).abs())
            })
            .try_fold(0.0f64, |acc, e| e.map(|e| acc.max(e)))?;
        println!("  {name:<18} max error {worst:.2e}");
    }

    // Real-axis-only transforms can only use Gaver–Stehfest.
    let real_only = FnTransform::real_only(|s: Complex64| 1.0 / (s + 1.0));
    println!(
        "real-only e^(-t) at t=1: {:.8}; talbot gives {:?}",
        invert(&real_only, 1.0, &InversionConfig::gaver_stehfest(14))?,
        invert(&real_only, 1.0, &InversionConfig::talbot(32)).map_err(|e| e.code())
    );
    Ok(())
}
