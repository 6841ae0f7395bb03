//! Lower bounds on tensor irreversibility and the matrix multiplication
//! barriers they imply.
//!
//! * [`tensor`]: exact sparse 3-tensors and the standard families.
//! * [`linalg`]: exact flattening ranks.
//! * [`entropy`]: the fixed-basis upper support functional.
//! * [`diagonal`]: free-diagonal search for monomial subrank lower bounds.
//! * [`barriers`]: irreversibility bounds, barrier formulas and tables.
//! * [`io`]: the JSON tensor file format.

pub mod barriers;
pub mod diagonal;
pub mod entropy;
pub mod error;
pub mod format;
pub mod io;
pub mod linalg;
pub mod tensor;

pub use barriers::{BarrierReport, RankMode, Table, TableKind, TableRow, ThetaChoice};
pub use diagonal::{Diagonal, DiagonalSearch, PowerDiagonal};
pub use entropy::{RhoOptions, RhoResult, SupportDistribution, Theta};
pub use error::{Error, Result};
pub use linalg::ExactMatrix;
pub use tensor::{Point, Rational, Support, Tensor};
