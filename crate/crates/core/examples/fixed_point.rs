//! Solve the load-coupling fixed point for one random demand vector.
//!
//! cargo run --example fixed_point -- [seed]

use cellload::*;
use rand::{Rng, SeedableRng};

fn main() -> Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let params = ScenarioParams { seed, ..Default::default() };
    let scenario = generate_scenario(&params)?;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let rates = RateVector::new((0..params.num_tp).map(|_| rng.random_range(1e6..3e6)).collect())?;

    let fp = solve_fixed_point(&scenario, &rates, 1e-10, 10_000)?;
    println!("converged={} feasible={} after {} iterations, residual {:.2e}", fp.converged, fp.feasible, fp.iterations, fp.residual);
    for (i, load) in fp.load.iter().enumerate() {
        println!("  BS {i:2}: {:2} TPs  load {load:.4}", scenario.served_by(i).count());
    }

    // the SINR of a TP towards its serving BS under the solved loads
    let bs = scenario.assignment()[0];
    println!("SINR of TP 0 at BS {bs}: {:.2} dB", 10.0 * sinr(&scenario, &fp.load, bs, 0)?.log10());
    Ok(())
}
