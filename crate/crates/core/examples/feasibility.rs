//! Sweep a demand vector along a ray and watch the conditional eigenvalue
//! cross 1 exactly where the fixed point stops being a valid load.

use cellload::*;

fn main() -> Result<()> {
    let params = ScenarioParams { seed: 0, ..Default::default() };
    let scenario = generate_scenario(&params)?;
    let base = RateVector::new(vec![1e6; params.num_tp])?;

    println!("{:>6} {:>10} {:>9} {:>9}", "scale", "lambda*", "verdict", "max load");
    for step in 1..=12 {
        let scale = 0.5 * step as f64;
        let rates = base.scaled(scale)?;
        let verdict = is_feasible(&scenario, &rates, 1e-9)?;
        let fp = solve_fixed_point(&scenario, &rates, 1e-10, 10_000)?;
        let max_load = if fp.converged {
            format!("{:.4}", fp.load.iter().cloned().fold(0.0, f64::max))
        } else {
            "diverged".into()
        };
        println!(
            "{scale:6.1} {:10.4} {:>9} {max_load:>9}",
            verdict.eigval,
            if verdict.feasible { "feasible" } else { "no" }
        );
    }

    // scaling by 1 / lambda* lands on the boundary
    let lambda = is_feasible(&scenario, &base, 1e-9)?.eigval;
    let edge = is_feasible(&scenario, &base.scaled(1.0 / lambda)?, 1e-9)?;
    println!("lambda*(r / lambda*(r)) = {:.12}", edge.eigval);
    Ok(())
}
