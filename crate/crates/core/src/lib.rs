//! Computational toolkit for finite systems of complex matrices viewed as
//! points of matrix towers.
//!
//! * [`linalg`]: dense complex kernels (direct sums, Haar sampling, kernels,
//!   Hermitian spectra).
//! * [`tuple`]: matrix tuples with direct sum, unitary action and `n ⊙ X`.
//! * [`commutant`]: commutants, intertwiners, bicommutants, stabilizers.
//! * [`decompose`]: prime decomposition and the relations `≡`, `⊥`, `≼`.
//! * [`funcalg`]: compatible matrix-valued functions on sampled towers.
//! * [`tower`]: combinatorial tower presentations and their tail,
//!   vanishing and closedness algorithms.
//! * [`io`]: JSON file formats.
//! * [`selfcheck`]: seeded property suites.
//!
//! ```
//! use mtower::{decompose, linalg::Rng, MatrixTuple, Tolerances};
//!
//! let tol = Tolerances::default();
//! let mut rng = Rng::new(7);
//! let a = MatrixTuple::random(2, 2, &mut rng);
//! let x = a.times(2).oplus(&MatrixTuple::random(1, 2, &mut rng))?;
//! let dec = decompose::decompose(&x, &mut rng, &tol)?;
//! assert_eq!(dec.signature(), vec![(1, 1), (2, 2)]);
//! # Ok::<(), mtower::Error>(())
//! ```

pub mod commutant;
pub mod decompose;
pub mod error;
pub mod funcalg;
pub mod io;
pub mod linalg;
pub mod selfcheck;
pub mod tower;
pub mod tuple;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Rng, Tolerances};
pub use tuple::MatrixTuple;
