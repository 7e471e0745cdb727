//! Batch sequential adaptive designs for expensive black-box minimization.
//!
//! The crate provides an ordinary-Kriging surrogate, the expected-improvement
//! criterion and three sequential loops built on top of them:
//!
//! * serial EGO, adding the expected-improvement maximizer one point per stage,
//! * accelerated EGO, which adds the maximizer plus `q - 1` points resampled
//!   from a randomly shifted Sobol pool with EI-proportional weights,
//! * Constant Liar (CL) with a lie equal to the current minimum response.
//!
//! All modeling happens in unit-scaled coordinates; user-facing points are in
//! the coordinates of the [`Domain`].
//!
//! ```
//! use aego::{testfns, Design, Objective, SeededRng, StopRule};
//! use aego::strategies::{run_accelerated_ego, StrategyOptions};
//! use aego::qmc::{lhs_initial_design, sobol_pool};
//!
//! let f = testfns::lookup("branin").unwrap();
//! let objective = f.objective();
//! let domain = f.domain.clone();
//! let mut rng = SeededRng::new(7);
//! let init = lhs_initial_design(21, &domain, &mut rng.split(0)).unwrap();
//! let design = Design::evaluate(&domain, init.points(), &objective).unwrap();
//! let pool = sobol_pool(100, &domain).unwrap();
//! let stop = StopRule::new().max_stages(2);
//! let run = run_accelerated_ego(&objective, &design, &pool, 4, &stop, &StrategyOptions::default(), &rng)
//!     .unwrap();
//! assert_eq!(run.totals.evaluations, 21 + 2 * 4);
//! ```

pub mod acquisition;
pub mod design;
pub mod domain;
pub mod error;
pub mod kriging;
pub mod objective;
pub mod qmc;
pub mod rng;
pub mod simplex;
pub mod sir;
pub mod strategies;
pub mod testfns;

pub use design::{Design, Origin};
pub use domain::{Domain, Point, DUPLICATE_TOLERANCE};
pub use error::{Error, Result};
pub use objective::{EvalError, Objective};
pub use rng::SeededRng;
pub use strategies::{RunRecord, StopRule};
