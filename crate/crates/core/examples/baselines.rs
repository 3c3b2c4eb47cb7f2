//! Kernel regression and 2-NN against the minimax learner on one scenario:
//! accuracy and how often each breaks monotonicity.

use cellload::bench::{count_monotonicity_violations, pearson, rmse};
use cellload::scenario::sample_feasible;
use cellload::*;
use rand::SeedableRng;

fn main() -> Result<()> {
    let params = ScenarioParams { seed: 0, ..Default::default() };
    let scenario = generate_scenario(&params)?;
    let data = generate_dataset(&scenario, &params, 100, 0.05, 0)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let (queries, truth) = sample_feasible(&scenario, &params, 2000, &mut rng)?;

    let minimax = fit(&data, 0.05)?;
    let kernel = kernel_fit(&data)?;
    let knn = knn_fit(&data, 2)?;
    println!("kernel bandwidth (median pairwise distance): {:.3e}", kernel.bandwidth);

    let bs = 0;
    let t: Vec<f64> = truth.iter().map(|v| v[bs]).collect();
    let models: [(&str, &dyn LoadPredictor); 3] = [("minimax", &minimax), ("kernel", &kernel), ("2-nn", &knn)];
    println!("{:>8} {:>8} {:>8} {:>10}", "method", "rmse", "pearson", "mono viol");
    for (name, model) in models {
        let p: Vec<f64> = queries.iter().map(|x| model.predict_vec(x)[bs]).collect();
        let mono = count_monotonicity_violations(model, params.rate_min, params.rate_max, 1000, 1);
        println!(
            "{name:>8} {:8.4} {:8.3} {:10}",
            rmse(&p, &t)?,
            pearson(&p, &t).unwrap_or(f64::NAN),
            mono.pairs
        );
    }
    Ok(())
}
