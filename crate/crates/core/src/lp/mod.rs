//! Dense linear programming and the restricted master problem.

mod master;
mod simplex;

pub use master::{build_rmp, MasterLayout};
pub use simplex::{solve_lp, DenseLP, LpSolution, LpStatus, RowSense};
