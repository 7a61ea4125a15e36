//! Classical surrogates for parametrized quantum circuits.
//!
//! The crate classifies a circuit by the resources that make it classically
//! tractable and extracts an explicit function of the input `x` from it:
//!
//! * [`tensor`]: shallow circuits, as a tensor train over `(1, cos πx, sin πx)`.
//! * [`backprop`]: Clifford circuits with few non-Clifford gates, as sparse
//!   Fourier or trigonometric expansions.
//! * [`fermion`]: matchgate circuits, through rotations of Majorana modes.
//!
//! [`oracle`] is the dense statevector reference every engine is tested
//! against, [`erm`] fits linear models over surrogate features, and
//! [`harness`] runs configured experiments end to end.

pub mod backprop;
pub mod circuit;
pub mod erm;
pub mod error;
pub mod fermion;
pub mod harness;
pub mod io;
pub mod oracle;
pub mod pauli;
pub mod surrogate;
pub mod tensor;

pub use error::{Error, Result};
