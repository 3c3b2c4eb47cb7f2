//! Accuracy versus training-set size for the three methods.
//!
//! Defaults to a quick run; `cargo run --release --example bench_trend -- full`
//! runs the full grid (10 seeds, 10 000 test queries, K up to 600).

use cellload::*;

fn main() -> Result<()> {
    let full = std::env::args().nth(1).as_deref() == Some("full");
    let config = if full {
        BenchConfig::default()
    } else {
        BenchConfig { k_grid: vec![25, 50, 100, 200], num_test: 1000, num_seeds: 2, ..Default::default() }
    };
    let report = run_benchmark(&config)?;

    println!("{:>5} {:>8} {:>16} {:>16} {:>6}", "K", "method", "rmse", "pearson", "mono");
    for s in report.summary() {
        println!(
            "{:5} {:>8} {:.4} ± {:.4}  {:.3} ± {:.3}  {:6}",
            s.k,
            s.method.name(),
            s.rmse_mean,
            s.rmse_std,
            s.pearson_mean,
            s.pearson_std,
            s.mono_violations_total
        );
    }
    Ok(())
}
