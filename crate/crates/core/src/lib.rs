//! Asynchronous variance-reduced block proximal stochastic gradient method.
//!
//! The crate is organised bottom-up:
//!
//! * [`partition`] splits a vector into contiguous blocks,
//! * [`regularizers`] holds the block-separable nonsmooth terms and their proxes,
//! * [`problems`] builds LASSO, sigmoid least-squares and PL quadratic instances,
//! * [`oracles`] draws mini-batch block gradients,
//! * [`schedules`] and [`selection`] decide batch sizes and which block moves,
//! * [`solver`] runs the method and the reference solve,
//! * [`metrics`] and [`harness`] turn trajectories into CSV series.
//!
//! ```
//! use rand::SeedableRng;
//! use vrblock::problems::{gen_lasso, LassoSpec};
//! use vrblock::solver::{run, Budget, SolverConfig};
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let problem = gen_lasso(&LassoSpec::new(50, 10, 2), &mut rng).unwrap();
//! let mut config = SolverConfig::new(Budget::Iterations(100));
//! config.schedule = "geometric:0.9".parse().unwrap();
//! let record = run(&problem, &config).unwrap();
//! assert!(record.final_row().objective < record.rows[0].objective);
//! ```

pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod oracles;
pub mod par;
pub mod partition;
pub mod problems;
pub mod regularizers;
pub mod schedules;
pub mod selection;
pub mod solver;

pub use error::{Error, Result};
