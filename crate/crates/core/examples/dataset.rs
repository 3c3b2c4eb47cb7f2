//! Generate a noisy training set and print it as CSV.
//!
//! cargo run --example dataset -- [k] [eps] > train.csv

use cellload::*;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let k: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let eps: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.05);

    let params = ScenarioParams { num_bs: 3, num_tp: 6, rate_max: 4e6, seed: 1, ..Default::default() };
    let scenario = generate_scenario(&params)?;
    let data = generate_dataset(&scenario, &params, k, eps, params.seed)?;
    data.write_csv(std::io::stdout().lock())?;
    eprintln!("{} samples, {} rates -> {} loads, noise bound {eps}", data.len(), data.input_dim(), data.output_dim());
    Ok(())
}
