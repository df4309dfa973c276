//! Compute the critical shooting constants for one problem instance and
//! print the regime of a small c-grid around them.
//!
//!   cargo run --release --example regime_map -- 1.0 0.0 2.0

use mcbl_core::classifier::classify;
use mcbl_core::shooting::{find_c_star, find_c_upper};
use mcbl_core::*;

fn main() {
    let mut args = std::env::args().skip(1);
    let beta: f64 = args.next().as_deref().unwrap_or("1.0").parse().expect("beta");
    let a: f64 = args.next().as_deref().unwrap_or("0.0").parse().expect("a");
    let b: f64 = args.next().as_deref().unwrap_or("2.0").parse().expect("b");

    let params = ProblemParams::new(beta, a, b, TargetLimit::One).expect("valid parameters");
    let controls = IntegratorControls::default();

    let c_star = find_c_star(&params, &controls, 1e-10).expect("c*");
    println!("c*  = {:+.12}   ({} iterations)", c_star.value, c_star.iterations);
    match find_c_upper(&params, &controls, 1e-10) {
        Ok(c_upper) => println!("c** = {:+.12}   ({} iterations)", c_upper.value, c_upper.iterations),
        Err(e) => println!("c** unavailable: {e}"),
    }

    println!("\n{:>10}  {:<10} {:<16} {:<8} termination", "c", "family", "shape", "limit");
    for k in 0..=12 {
        let c = (c_star.value - 1.5) + 0.35 * k as f64;
        let traj = integrate(&params, c, &controls).expect("integration");
        let label = classify(&traj).expect("classification");
        println!(
            "{c:>+10.4}  {:<10} {:<16} {:<8} {:?}",
            format!("{:?}", label.family),
            format!("{:?}", label.shape),
            format!("{:?}", label.limit),
            traj.termination
        );
    }
}
