//! Competitive equilibria for housing markets and Rainbow-KKM points in the
//! black-box model.
//!
//! The library works with oracle-backed instances of five total search
//! problems — housing markets in the preference-set model, families of KKM
//! coverings of the simplex (the Rainbow-KKM problem), single KKM coverings
//! of a scaled triangle, envy-free cake cutting, and Sperner colorings of
//! triangulated triangles and cubes — and with the constructive reductions
//! connecting them. Every oracle call is metered by a [`ledger::QueryLedger`],
//! so the cost of a solve can be compared against the analytic budgets.
//!
//! The terminal solvers are deliberately elementary: bisection on the
//! segment for two coverings, and a lexicographic brute-force scan of a
//! Kuhn triangulation everywhere else. Everything interesting happens in
//! the reductions that route a problem to those two endpoints and map
//! solutions back, with per-query cost guarantees.

pub mod error;
pub mod geometry;
pub mod ledger;
pub mod oracles;
pub mod reductions;
pub mod solution;
pub mod solvers;
pub mod triangulation;
pub mod verify;

pub mod formats;

pub use error::{Error, Result};
pub use geometry::{l1_distance, phi, phi_inverse, sort_permutation, Permutation, PriceVector, SimplexPoint};
pub use ledger::{LedgerCtx, OracleId, OracleKind, OracleTable, QueryLedger};
pub use oracles::{
    make_piecewise_cake, make_quasilinear_market, make_weighted_argmax_covering,
    make_weighted_argmax_rkkm, CakeInstance, DensitySegment, HousingInstance, Instance,
    KkmInstance, RkkmInstance, SpernerInstance, SpernerVariant,
};
pub use solution::{PanchromaticCell, ProblemSolution, Solution, SolutionPoint, TrichromaticCell};
