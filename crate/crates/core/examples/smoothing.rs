//! Monotone smoothing on a tiny 1-D example: noisy observations that no
//! monotone Lipschitz function could produce are minimally adjusted.

use cellload::learner::{estimate_lipschitz, smooth_monotone, smoothing_objective};
use cellload::*;

fn main() -> Result<()> {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let y = [0.10, 0.35, 0.30, 0.55, 0.50, 0.80];
    let data = TrainingSet::new(x.iter().map(|&v| vec![v]).collect(), y.iter().map(|&v| vec![v]).collect(), 0.05)?;

    let lipschitz = estimate_lipschitz(&data, 0.05)?;
    let smoothed = smooth_monotone(&data, &lipschitz)?;
    let (_, total_change) = smoothing_objective(&data, 0, lipschitz[0])?;

    println!("L = {:.3}", lipschitz[0]);
    println!("{:>4} {:>8} {:>8}", "x", "y", "smoothed");
    for k in 0..x.len() {
        println!("{:4} {:8.3} {:8.3}", x[k], y[k], smoothed.outputs[k][0]);
    }
    println!("sum |q| = {total_change:.4}");

    // the textbook case: two points in the wrong order and L = 0
    let two = TrainingSet::new(vec![vec![1.0], vec![2.0]], vec![vec![0.6], vec![0.5]], 0.0)?;
    let s = smooth_monotone(&two, &[0.0])?;
    println!("{{0.6, 0.5}} with L = 0 -> {{{}, {}}}", s.outputs[0][0], s.outputs[1][0]);
    Ok(())
}
