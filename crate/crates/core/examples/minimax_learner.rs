//! Train the minimax learner on noisy data from the load model and compare
//! its predictions and bounds with the exact loads.

use cellload::scenario::sample_feasible;
use cellload::*;
use rand::SeedableRng;

fn main() -> Result<()> {
    let params = ScenarioParams { seed: 0, ..Default::default() };
    let scenario = generate_scenario(&params)?;
    let data = generate_dataset(&scenario, &params, 200, 0.05, 0)?;

    let model = fit(&data, 0.05)?;
    println!("Lipschitz constants (load per bit/s):");
    for (i, l) in model.lipschitz().iter().enumerate() {
        println!("  BS {i}: {l:.3e}");
    }
    println!("compatibility violation after smoothing: {:.1e}", model.compatibility_violation());

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let (queries, truth) = sample_feasible(&scenario, &params, 3, &mut rng)?;
    for (x, t) in queries.iter().zip(&truth) {
        let env = model.envelope(x)?;
        let g = model.predict(x)?;
        println!("query:");
        for i in 0..model.num_bs() {
            println!("  BS {i}: true {:.3}  predicted {:.3}  bounds [{:.3}, {:.3}]", t[i], g[i], env.lower[i], env.upper[i]);
        }
    }

    // models are plain JSON
    let text = model.to_json()?;
    assert_eq!(LearnerModel::from_json(&text)?, model);
    println!("model JSON: {} bytes", text.len());
    Ok(())
}
