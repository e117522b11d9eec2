//! TT-GMRES over Kronecker-sum operators and the cookie model problem.

pub mod cookie;
pub mod gmres;
pub mod kronecker;

pub use cookie::{build_cookie_problem, CookieProblem};
pub use gmres::{relative_residual, tt_gmres, GmresConfig, GmresResult, RoundingStrategy};
pub use kronecker::{KroneckerSumOperator, ModeFactor};
