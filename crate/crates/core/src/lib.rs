//! Convolution-dominated operators over tiled groups.
//!
//! A group `G` is split into translates `rep(ḣ)·U` of a tile `U`, indexed by a
//! discrete index group `D`. Operators on `L²(G) = ⊕ L²(U)` then become
//! matrices of kernels on `U × U`, stored by side diagonal. This crate
//! provides
//!
//! * [`group`]: the shipped tiled groups, windows, overlap counting and
//!   Følner sets,
//! * [`kernel`]: discretized kernels with convolution, involution and norms,
//! * [`cd`]: the algebra of kernel-valued matrices with its diagonal-sup norm,
//! * [`twisted`]: the twisted ℓ¹ algebra and its representation onto [`cd`],
//! * [`lab`]: finite-section and series inversion, spectral radius estimators
//!   and decay-profile stability reports,
//! * [`dense`]: the small dense linear algebra used as oracle and solver.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cd;
pub mod dense;
mod error;
pub mod group;
pub mod kernel;
pub mod lab;
pub(crate) mod math;
pub mod twisted;

pub use cd::{BlockVector, CdMatrix, DecayProfile};
pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use group::{Elem, GroupKind, Label, TiledGroup, Transversal, Window, WindowShape};
pub use kernel::{KernelBlock, KernelNorms};
pub use twisted::TwistedElement;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
