//! Segregation scores from absorbing random-walk theory.
//!
//! Neutral nodes are absorbing and harmful nodes transient. With `M_hh` the
//! harmful-to-harmful transition block, the fundamental matrix is
//! `F = (I - M_hh)^{-1}` and the segregation vector is `z = F 1`, the expected
//! number of steps a walk from each harmful node takes before it is absorbed.
//!
//! `F` is never materialized. Columns are solved on demand and cached, and a
//! rewiring `o = (u, v, w)` with `w` neutral changes row `u` of `M_hh` by
//! `-p_o e_v^T`, so Sherman-Morrison gives
//!
//! ```text
//! z'      = z      - f_u * z_v        / (1/p_o + f_vu)
//! f'_x    = f_x    - f_u * p_o * f_vx / (1 + p_o * f_vu)
//! ```
//!
//! where `f_x` is column `x` of `F`. Both updates only need the cached column
//! itself, column `u`, and scalars.

mod oracle;
mod solver;
mod state;
mod view;

pub use oracle::{
    dense_fundamental, dense_oracle_z, monte_carlo_hitting, HittingEstimate, DEFAULT_DENSE_GUARD,
    DEFAULT_STEP_CAP,
};
pub use solver::SolverConfig;
pub use state::{
    delta_from_entries, fundamental_column, fundamental_row, graph_segregation, segregation_vector, Segregation,
    SegregationState,
};
pub use view::{absorbing_view, AbsorbingView};
