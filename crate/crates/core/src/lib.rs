//! Certified polynomial separation of compact basic semialgebraic sets.
//!
//! Given `A = {g_i >= 0}` and `B = {h_j >= 0}` inside `[-1, 1]^n`, the
//! [`separator`] module searches a hierarchy of sum-of-squares programs for a
//! polynomial `p` with `p >= 1` on `A` and `p <= 0` on `B`, returning Putinar
//! certificates for both inequalities. The [`bounds`] module evaluates the
//! closed-form degree bounds guaranteeing such a `p` exists.

pub mod bounds;
pub mod grid;
pub mod poly;
pub mod sdp;
pub mod semialg;
pub mod separator;
pub mod sos;

pub use grid::{BoxGrid, GridError};
pub use poly::{Monomial, PolyError, Polynomial};
pub use sdp::{SdpProblem, SdpSolution, SdpStatus, SolverOptions};
pub use semialg::{SampleCloud, SemialgError, SemialgebraicSet};
