//! Functions of third-order tensors under the t-product.
//!
//! The t-product gives third-order tensors a matrix-like algebra: products,
//! transposes, an identity element, eigendecompositions, and — through the
//! block circulant expansion — functions of a tensor acting on another,
//!
//! ```text
//! f(A) * B = fold(f(bcirc(A)) . unfold(B)).
//! ```
//!
//! This crate provides three evaluation routes for that action, in increasing
//! order of scalability, together holding each other to account:
//!
//! * a dense oracle that materializes `bcirc(A)` and calls a dense matrix
//!   function ([`tfunc`] with the dense backend),
//! * a facewise method that diagonalizes the block circulant by FFT along
//!   tubes and applies the matrix function face by face ([`spectral`]),
//! * restarted block Krylov methods (classical and global inner products)
//!   with adaptive contour quadrature for the restart correction
//!   ([`krylov`], [`bfomfom`]),
//!
//! plus a demonstrator application: communicability and centrality of
//! multilayer/temporal networks through the tensor exponential ([`netcomm`]),
//! and a plain-text tensor file format ([`io`]).

pub mod bfomfom;
pub mod error;
pub mod io;
pub mod krylov;
pub mod linalg;
pub mod matfun;
pub mod netcomm;
pub mod spectral;
pub mod tensor;
pub mod tfunc;

pub use error::{Error, Result};
pub use linalg::{C64, CMat, CVec};
pub use tensor::{BlockVector, FDiagonalTensor, Tensor3, block_unit_vector, fold, identity_tensor};
