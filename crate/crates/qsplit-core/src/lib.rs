//! Canonical, Wold and Levan decompositions of q-commuting and Q-commuting
//! families of Hilbert-space contractions, realized on finite-dimensional
//! complex matrices plus a small structured model for unilateral shifts.
//!
//! Module map:
//! - [`numkit`]: dense complex linear-algebra kernels (null spaces, PSD
//!   square roots, subspace arithmetic, compressions) with explicit
//!   tolerance semantics.
//! - [`opmodel`]: operator and tuple data model, commutation-relation
//!   verification, defect operators, atom classification.
//! - [`decomp`]: the decomposition algorithms, built around one fixed-point
//!   kernel (largest joint reducing subspace inside a given subspace).
//! - [`genlab`]: deterministic generators for families with known ground
//!   truth (clock/shift pairs, planted block tuples, seeded random
//!   contractions and unitaries).
//!
//! ```
//! use qsplit_core::{genlab, decomp, opmodel, Tolerance};
//!
//! let tol = Tolerance::default();
//! let pair = genlab::clock_shift(3)?;
//! assert!(opmodel::verify_doubly(&pair, tol)?);
//!
//! // both members are unitary, so everything lands in the "uu" part
//! let result = decomp::tuple_decomposition(&pair, tol)?;
//! assert_eq!(result.dim("uu"), 3);
//! assert_eq!(result.dim("cc"), 0);
//! # Ok::<(), qsplit_core::Error>(())
//! ```

pub mod error;
pub mod numkit;
pub mod opmodel;
pub mod decomp;
pub mod genlab;

pub use error::{Error, Result};
pub use numkit::{CMatrix, RMatrix, Subspace, Tolerance};
pub use num_complex::Complex64;
