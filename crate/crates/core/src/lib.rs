//! Classical simulation of quantum-walk linear algebra.
//!
//! The crate models, at desk scale, a pipeline of quantum routines over a
//! streamed matrix store:
//!
//! * [`store`]: per-row binary sampling trees that prepare normalized row
//!   states, plus the weighted variant used for least squares.
//! * [`sve`]: singular value estimation through the walk operator
//!   `W = (2P̃P̃ᵀ − I)(2Q̃Q̃ᵀ − I)`, in analytic, full-circuit and oracle modes.
//! * [`solvers`]: matrix multiplication, linear systems, affine updates and
//!   spectral norm estimation built on top of SVE.
//! * [`qgd`]: the history-state gradient descent and its error ledger.
//! * [`apps`]: positive semidefinite systems, weighted least squares and
//!   cyclic stochastic gradient descent.
//!
//! Every quantity the quantum routines produce is checked against a direct
//! classical computation; see the `acceptance` integration test.

pub mod apps;
pub mod error;
pub mod gen;
pub mod io;
pub mod matvec;
pub mod qgd;
pub mod solvers;
pub mod state;
pub mod store;
pub mod sve;

pub use error::{Error, Result};
pub use matvec::{DenseMatrix, FactorPair, FactorScheme, SpectralData};
pub use store::{CoordEntry, MatrixStore, WeightedStore};
pub use sve::{SimContext, StoredMatrix, SveConfig, SveMode};
