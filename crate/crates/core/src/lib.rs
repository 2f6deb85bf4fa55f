//! Saddlepoint tail approximations for self-normalized sums X̄/V̄ₙ and the
//! Student t-statistic, with Normal, Edgeworth, large-deviation and Monte
//! Carlo comparators.
//!
//! ```no_run
//! use selfnorm::{make_builtin, saddle_upper_tail, QuadratureConfig};
//!
//! let cauchy = make_builtin("cauchy").unwrap();
//! let p = saddle_upper_tail(&cauchy, 5, 0.85, &QuadratureConfig::default()).unwrap();
//! println!("{}", p.probability);
//! ```

pub mod approximations;
pub mod distributions;
pub mod error;
pub mod expr;
pub mod montecarlo;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod saddlepoint;
pub mod special;
pub mod table;
pub mod tilted_cgf;
pub mod verify;

pub use approximations::{
    b_of_t, edgeworth_tail, large_deviation_tail, normal_tail, saddle_upper_tail, student_t_upper_tail, t_of_b,
    upper_tail, Method, TailEstimate, TailOptions, Warning,
};
pub use distributions::{make_builtin, sample, Builtin, DistributionModel, Interval, Moments, SupportSpec};
pub use error::{Error, Result};
pub use montecarlo::{estimate_student_t_tail, estimate_tail, estimate_tail_grid, McConfig, McEstimate};
pub use saddlepoint::{
    feasibility_window, hessian_quantities, inner_max_t, is_feasible, outer_min_a, solve, solve_with,
    FeasibilityWindow, InnerMax, SaddleSolution, SolveOptions,
};
pub use table::{build_table, TableRow};
pub use tilted_cgf::{cgf, g_dt, g_dtt, g_value, CgfValue, GValue, QuadratureConfig, TiltPoint};
