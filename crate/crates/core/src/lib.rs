//! Load-coupled cellular network model and a shape-preserving load learner.
//!
//! The crate is organised around four pieces:
//!
//! * [`load_model`]: SINR, the load map, its fixed point, and the
//!   conditional eigenvalue feasibility test.
//! * [`scenario`]: random deployments and noisy training data.
//! * [`learner`]: the minimax (central) monotone Lipschitz interpolant, with
//!   an LP smoothing step that makes noisy data compatible with the class.
//! * [`baselines`] and [`bench`]: kernel / nearest-neighbor references and
//!   the harness that compares all three.
//!
//! ```
//! use cellload::{fit, LoadPredictor, TrainingSet};
//!
//! let data = TrainingSet::new(
//!     vec![vec![1.0], vec![2.0], vec![3.0]],
//!     vec![vec![0.1], vec![0.3], vec![0.4]],
//!     0.0,
//! )?;
//! let model = fit(&data, 0.0)?;
//! let load = model.predict(&[2.0])?;
//! assert!((load[0] - 0.3).abs() < 1e-12);
//! assert_eq!(model.output_dim(), 1);
//! # Ok::<(), cellload::Error>(())
//! ```

pub mod baselines;
pub mod bench;
pub mod cli;
pub mod error;
pub mod learner;
pub mod load_model;
pub mod predictor;
pub mod scenario;

pub use baselines::{kernel_fit, knn_fit, BaselineModel, KernelModel, KnnModel};
pub use bench::{run_benchmark, BenchConfig, BenchReport, BenchRow, Method};
pub use error::{Error, Result};
pub use learner::{fit, Envelope, LearnerModel};
pub use load_model::{
    is_feasible, load_map, sinr, solve_conditional_eigen, solve_fixed_point, FeasibilityVerdict,
    FixedPointResult, LoadVector, NetworkScenario, RateVector,
};
pub use predictor::LoadPredictor;
pub use scenario::{generate_dataset, generate_scenario, ScenarioParams, TrainingSet};
